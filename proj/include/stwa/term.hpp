#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace stwa {

/// Interned name of an atom or functor.
using Symbol = std::uint32_t;

/// Identifier of a logic variable. Ids are allocated monotonically by a
/// VarSource and are unique within one evaluation.
using VarId = std::uint64_t;

/// Process-wide symbol interning. Symbol 0 is the empty name.
Symbol intern(std::string_view name);
const std::string &symbol_name(Symbol s);

enum class TermKind : std::uint8_t { Var, Atom, Int, Compound };

struct TermNode;

/// Immutable first-order term with shared structure. Copying a Term is a
/// reference-count bump.
class Term {
public:
  Term();  // the atom '[]'

  static Term var(VarId id, Symbol name = 0);
  static Term atom(Symbol name);
  static Term atom(std::string_view name) { return atom(intern(name)); }
  static Term integer(std::int64_t value);
  static Term compound(Symbol functor, std::vector<Term> args);
  static Term compound(std::string_view functor, std::vector<Term> args) {
    return compound(intern(functor), std::move(args));
  }
  static Term list(const std::vector<Term> &items, Term tail = Term());

  TermKind kind() const;
  bool is_var() const { return kind() == TermKind::Var; }
  bool is_atom() const { return kind() == TermKind::Atom; }
  bool is_int() const { return kind() == TermKind::Int; }
  bool is_compound() const { return kind() == TermKind::Compound; }
  bool is_atomic() const { return is_atom() || is_int(); }
  bool is_ground() const;

  VarId var_id() const;
  Symbol var_name() const;
  std::int64_t int_value() const;

  /// Functor symbol for atoms and compounds.
  Symbol functor() const;
  std::size_t arity() const;
  const Term &arg(std::size_t i) const;
  std::span<const Term> args() const;

  bool is_atom(std::string_view name) const;
  bool is_functor(std::string_view name, std::size_t n) const;

  /// Structural identity (variables compare by id).
  friend bool operator==(const Term &a, const Term &b);
  std::size_t hash() const;

  const TermNode *node() const { return node_.get(); }

private:
  explicit Term(std::shared_ptr<const TermNode> n) : node_(std::move(n)) {}
  std::shared_ptr<const TermNode> node_;
};

struct TermNode {
  TermKind kind;
  bool ground;
  Symbol sym;          // atom/functor name, or variable display name
  std::uint64_t value; // variable id or integer bits
  std::size_t hash;
  std::vector<Term> args;
};

struct TermHash {
  std::size_t operator()(const Term &t) const { return t.hash(); }
};

/// Predicate indicator name/arity.
struct PredKey {
  Symbol name = 0;
  std::uint32_t arity = 0;
  friend bool operator==(const PredKey &, const PredKey &) = default;
  friend auto operator<=>(const PredKey &, const PredKey &) = default;
};

struct PredKeyHash {
  std::size_t operator()(const PredKey &k) const {
    return (std::size_t(k.name) << 8) ^ k.arity;
  }
};

PredKey pred_of(const Term &t);
std::string to_string(const PredKey &k);

/// Monotonic variable id allocator. Not thread-safe.
class VarSource {
public:
  explicit VarSource(VarId first = 1) : next_(first) {}
  Term fresh(Symbol name = 0) { return Term::var(next_++, name); }
  VarId peek() const { return next_; }

private:
  VarId next_;
};

/// Variable bindings. Kept triangular during unification; `resolve`
/// produces the fully applied term.
class Substitution {
public:
  bool empty() const { return map_.empty(); }
  std::size_t size() const { return map_.size(); }
  const Term *lookup(VarId v) const;
  void bind(VarId v, Term t) { map_.insert_or_assign(v, std::move(t)); }

  /// Follow variable bindings at the top level only.
  Term walk(Term t) const;
  /// Apply bindings everywhere.
  Term resolve(const Term &t) const;

  const std::unordered_map<VarId, Term> &bindings() const { return map_; }

private:
  std::unordered_map<VarId, Term> map_;
};

/// In-place unification with occurs check. On failure `s` may hold partial
/// bindings; callers that need the old state must copy first.
bool unify_into(const Term &a, const Term &b, Substitution &s);

/// Most general unifier extending `s`, or nullopt.
std::optional<Substitution> unify(const Term &a, const Term &b,
                                  const Substitution &s = {});

/// One-sided matching: theta with general*theta == specific. Variables of
/// `specific` are treated as constants.
std::optional<Substitution> subsumes(const Term &general, const Term &specific);

bool is_variant(const Term &a, const Term &b);

/// Copy with all variables replaced by fresh ones (display names kept).
Term rename_apart(const Term &t, VarSource &fresh);
/// Renames several terms consistently (shared variables stay shared).
std::vector<Term> rename_apart(std::span<const Term> ts, VarSource &fresh);

/// Variables of `t` in first-occurrence order.
std::vector<Term> variables_of(const Term &t);
bool occurs_in(VarId v, const Term &t);

/// Hash/equality treating terms up to variable renaming.
std::size_t variant_hash(const Term &t);
struct VariantHash {
  std::size_t operator()(const Term &t) const { return variant_hash(t); }
};
struct VariantEq {
  bool operator()(const Term &a, const Term &b) const {
    return is_variant(a, b);
  }
};

/// Largest variable id occurring in `t` (0 if ground).
VarId max_var(const Term &t);

namespace sym {
// Frequently used symbols, interned at startup.
extern const Symbol nil;     // []
extern const Symbol cons;    // '.'
extern const Symbol comma;   // ','
extern const Symbol arrow;   // '<-'
extern const Symbol neck;    // ':-'
extern const Symbol truth;   // true
extern const Symbol cut;     // !
extern const Symbol semi;    // ;
extern const Symbol ifthen;  // ->
extern const Symbol plus;    // +
extern const Symbol slash;   // /
extern const Symbol query;   // '$query'
} // namespace sym

} // namespace stwa
