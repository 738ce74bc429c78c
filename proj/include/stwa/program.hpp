#pragma once

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stwa/term.hpp"

namespace stwa {

/// One argument-position set of a table_index list. An empty position list
/// is the `0` (no index) marker.
struct IndexSpec {
  std::vector<int> positions;
  bool none() const { return positions.empty(); }
  friend bool operator==(const IndexSpec &, const IndexSpec &) = default;
};

struct Directive {
  enum class Kind { TableVariant, TableSubsumptive, TableIndex, Op, Other };
  Kind kind = Kind::Other;
  PredKey pred;
  std::vector<IndexSpec> specs;
  Term source;
  int line = 0;
};

struct Clause {
  Term head;
  std::vector<Term> body;
  int line = 0;
};

struct Diagnostic {
  enum class Severity { Error, Warning };
  Severity severity;
  std::string message;
};

class ParseError : public std::runtime_error {
public:
  ParseError(int line, int column, const std::string &msg);
  int line() const { return line_; }
  int column() const { return column_; }

private:
  int line_;
  int column_;
};

class Program {
public:
  std::vector<Clause> clauses;
  std::vector<Directive> directives;
  std::vector<Term> queries;

  void add_clause(Clause c);
  void add_directive(Directive d);
  /// Appends another program (clauses, directives, queries) to this one.
  void merge(const Program &other);

  /// Clause indices of a predicate in source order.
  const std::vector<std::size_t> &clauses_of(PredKey k) const;
  bool defines(PredKey k) const { return by_pred_.count(k) != 0; }
  std::vector<PredKey> predicates() const;

  /// The tabling directive for a predicate, if any.
  const Directive *table_directive(PredKey k) const;

private:
  std::map<PredKey, std::vector<std::size_t>> by_pred_;
  std::vector<PredKey> order_;
};

/// Parses program text. Variable ids are drawn from `vars` so several
/// programs can share one evaluation.
Program parse_program(std::string_view text, VarSource &vars);
Program parse_program(std::string_view text);
Program load_program_file(const std::string &path, VarSource &vars);

/// Parses one term (no terminating '.' required). Named variables are
/// shared through `names` when given.
Term parse_term(std::string_view text, VarSource &vars,
                std::map<std::string, Term> *names = nullptr);

/// Variable naming hook for printing. The default prints the source name,
/// or `_G<id>` for anonymous variables.
using VarNamer = std::function<std::string(const Term &)>;

std::string print_term(const Term &t, const VarNamer &namer = {});
/// Prints a term at a given maximum operator priority (999 for arguments).
std::string print_term(const Term &t, int max_priority,
                       const VarNamer &namer);
std::string print_clause(const Clause &c, const VarNamer &namer = {});
std::string print_directive(const Directive &d);
std::string print_program(const Program &p);
std::string print_index_spec(const IndexSpec &s);

/// Quotes an atom name when it cannot be written bare.
std::string quote_atom(const std::string &name);

/// Predicates implemented by the engine. Clauses for these are rejected.
bool is_builtin(PredKey k);

std::vector<Diagnostic> validate(const Program &p);

/// Flattens a ','/2 chain into its conjuncts.
std::vector<Term> flatten_conjunction(const Term &t);
/// Builds a right-nested ','/2 chain; empty gives `true`.
Term make_conjunction(const std::vector<Term> &goals);

} // namespace stwa
