#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "stwa/program.hpp"
#include "stwa/term.hpp"

namespace stwa {

class IllegalModeError : public std::runtime_error {
public:
  explicit IllegalModeError(const std::string &msg)
      : std::runtime_error(msg) {}
};

/// An argument order, 1-based positions.
struct Permutation {
  std::vector<int> order;
  /// "1234" style suffix used for generated predicate names.
  std::string suffix() const;
  friend bool operator==(const Permutation &, const Permutation &) = default;
};

struct DispatchEntry {
  std::size_t spec;  // first declared index routed here
  std::size_t perm;  // permutation id
  int test_position; // argument tested with nonvar/1
};

struct IndexPlan {
  PredKey pred;
  std::vector<IndexSpec> specs;
  std::vector<int> bound;   // ascending
  bool has_none = false;    // `0` declared
  std::vector<Permutation> permutations;
  std::vector<int> assignment; // per spec; -1 for the `0` marker
  std::vector<DispatchEntry> dispatch;

  /// Permutation id serving this call, or IllegalModeError.
  std::size_t route(const Term &goal) const;
  std::string illegal_mode_message() const;
};

std::vector<int> bound_positions(const std::vector<IndexSpec> &specs);

/// Minimum chain cover of the declared index sets as argument orders.
/// `assignment`, when given, receives the permutation of each spec.
std::vector<Permutation> permutation_cover(const std::vector<IndexSpec> &specs,
                                           int arity,
                                           std::vector<int> *assignment = nullptr);

std::vector<DispatchEntry>
build_dispatch(const std::vector<IndexSpec> &specs,
               const std::vector<Permutation> &cover,
               const std::vector<int> &assignment);

IndexPlan compile_index(PredKey pred, const std::vector<IndexSpec> &specs);
IndexPlan compile_index(const Directive &d);

struct Abstraction {
  Term abstracted;
  Substitution residual; // fresh variable -> original argument
};

/// Name given to the fresh variable replacing argument `position`.
Symbol abstraction_var_name(int position);

/// Replaces every argument outside the bound positions with a fresh
/// variable. Raises IllegalModeError when a bound position is unbound or no
/// permutation serves the call.
Abstraction abstract_call(const Term &goal, const IndexPlan &plan,
                          VarSource &fresh);

/// Source text of the transformation for one plan. `base_clauses` are the
/// original clauses of the predicate.
std::string emit_transformed(const IndexPlan &plan,
                             const std::vector<Clause> &base_clauses);

/// Rewrites every table_index predicate of a program and keeps the rest.
/// Throws std::invalid_argument when there is nothing to transform.
std::string transform_program(const Program &p);

/// Names of the generated predicates.
std::string permutation_pred_name(PredKey pred, const Permutation &perm);
std::string base_pred_name(PredKey pred);

} // namespace stwa
