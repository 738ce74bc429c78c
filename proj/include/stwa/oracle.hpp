#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "stwa/engine.hpp"
#include "stwa/program.hpp"
#include "stwa/term.hpp"

namespace stwa {

/// Raised for programs outside the oracle's fragment.
class OracleError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// How a fact was first derived: the rule and its ground body instance.
struct Derivation {
  std::size_t rule = 0; // index into the clause list; facts use their own
  std::vector<Term> body;
};

/// Ground facts tagged with the iteration that first derived them.
class FactSet {
public:
  /// Adds `f` with tag `iteration` unless present. Returns true if added.
  bool add(const Term &f, int iteration, Derivation why = {});
  bool contains(const Term &f) const { return index_.count(f) != 0; }
  /// Iteration tag of `f`, or -1 when absent.
  int tag(const Term &f) const;
  const Derivation &derivation(const Term &f) const;

  /// Facts in insertion order.
  const std::vector<Term> &facts() const { return facts_; }
  /// Facts first derived at `iteration`, in insertion order.
  std::vector<Term> at(int iteration) const;
  /// Facts of one predicate, in insertion order.
  const std::vector<Term> &of(PredKey k) const;
  /// Highest tag present, or -1 when empty.
  int last_iteration() const { return last_; }
  std::size_t size() const { return facts_.size(); }

private:
  struct Info {
    int tag;
    Derivation why;
  };
  std::vector<Term> facts_;
  std::unordered_map<Term, Info, TermHash> index_;
  std::unordered_map<PredKey, std::vector<Term>, PredKeyHash> by_pred_;
  int last_ = -1;
};

struct OracleOptions {
  std::uint64_t iteration_cap = 100000;
};

/// Horn clauses of `program` checked for the oracle fragment: no builtins
/// other than `true`, ground facts, range-restricted rules. `true` body
/// atoms are dropped.
std::vector<Clause> oracle_rules(const Program &program);

/// Reads `H <- B` facts as propositional (or first-order) Horn clauses
/// `H :- B`; `true` bodies become facts. Other clauses are ignored.
Program arrow_reading(const Program &program);

/// Least Herbrand model by naive iteration.
FactSet least_model(const Program &program, const OracleOptions &opts = {});
/// Least model by semi-naive iteration; same facts and tags as naive.
FactSet least_model_seminaive(const Program &program,
                              const OracleOptions &opts = {});

/// Facts derivable by one rule application using at least one fact of
/// `delta`, minus `total`, in derivation order.
std::vector<Term> seminaive_step(const Program &program, const FactSet &total,
                                 const std::vector<Term> &delta);

/// Iteration log: program facts, then each derived fact with the rule
/// instance that produced it.
std::string iteration_log(const FactSet &model);

struct Theorem1Report {
  bool reachable_ok = true;
  bool bodies_ok = true;
  std::string witness;
  bool ok() const { return reachable_ok && bodies_ok; }
};

/// Checks that every predicate is reachable from `query_pred` in the call
/// graph and that every rule body has a true instance in the least model.
Theorem1Report check_theorem1_conditions(const Program &program,
                                         PredKey query_pred,
                                         const OracleOptions &opts = {});

struct DiffReport {
  bool answers_ok = true;
  std::vector<std::string> expected;  // least-model instances of the query
  std::vector<std::string> actual;    // engine answers
  /// Whether the full-model comparison ran (Theorem 1 conditions held).
  bool model_checked = false;
  bool model_ok = true;
  std::size_t model_size = 0;
  Theorem1Report conditions;
  std::string witness;
  bool ok() const { return answers_ok && model_ok; }
};

/// Compares engine answers for `query` with the least model and, when the
/// Theorem 1 conditions hold, the union of all tables produced under full
/// abstraction with the whole least model.
DiffReport diff_with_engine(const Program &program, const std::string &query,
                            const EngineConfig &config = {},
                            const OracleOptions &opts = {});

} // namespace stwa
