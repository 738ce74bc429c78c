#include "stwa/term.hpp"

#include <cassert>
#include <deque>
#include <functional>
#include <mutex>
#include <stdexcept>

namespace stwa {

namespace {

struct SymbolTable {
  std::mutex mu;
  std::deque<std::string> names;
  std::unordered_map<std::string_view, Symbol> index;

  SymbolTable() {
    names.emplace_back();
    index.emplace(names.back(), 0);
  }
};

SymbolTable &symbols() {
  static SymbolTable table;
  return table;
}

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

// Atoms are shared per symbol so building facts does not allocate.
std::shared_ptr<const TermNode> atom_node(Symbol s) {
  static std::mutex mu;
  static std::vector<std::shared_ptr<const TermNode>> cache;
  std::lock_guard lock(mu);
  if (s >= cache.size())
    cache.resize(s + 1);
  if (!cache[s]) {
    auto n = std::make_shared<TermNode>();
    n->kind = TermKind::Atom;
    n->ground = true;
    n->sym = s;
    n->value = 0;
    n->hash = mix(0x41, s);
    cache[s] = std::move(n);
  }
  return cache[s];
}

} // namespace

Symbol intern(std::string_view name) {
  auto &t = symbols();
  std::lock_guard lock(t.mu);
  if (auto it = t.index.find(name); it != t.index.end())
    return it->second;
  t.names.emplace_back(name);
  auto id = static_cast<Symbol>(t.names.size() - 1);
  t.index.emplace(t.names.back(), id);
  return id;
}

const std::string &symbol_name(Symbol s) {
  auto &t = symbols();
  std::lock_guard lock(t.mu);
  return t.names.at(s);
}

namespace sym {
const Symbol nil = intern("[]");
const Symbol cons = intern(".");
const Symbol comma = intern(",");
const Symbol arrow = intern("<-");
const Symbol neck = intern(":-");
const Symbol truth = intern("true");
const Symbol cut = intern("!");
const Symbol semi = intern(";");
const Symbol ifthen = intern("->");
const Symbol plus = intern("+");
const Symbol slash = intern("/");
const Symbol query = intern("$query");
} // namespace sym

Term::Term() : node_(atom_node(sym::nil)) {}

Term Term::var(VarId id, Symbol name) {
  auto n = std::make_shared<TermNode>();
  n->kind = TermKind::Var;
  n->ground = false;
  n->sym = name;
  n->value = id;
  n->hash = mix(0x56, id);
  return Term(std::move(n));
}

Term Term::atom(Symbol name) { return Term(atom_node(name)); }

Term Term::integer(std::int64_t value) {
  auto n = std::make_shared<TermNode>();
  n->kind = TermKind::Int;
  n->ground = true;
  n->sym = 0;
  n->value = static_cast<std::uint64_t>(value);
  n->hash = mix(0x49, n->value);
  return Term(std::move(n));
}

Term Term::compound(Symbol functor, std::vector<Term> args) {
  if (args.empty())
    return atom(functor);
  auto n = std::make_shared<TermNode>();
  n->kind = TermKind::Compound;
  n->sym = functor;
  n->value = 0;
  n->ground = true;
  std::size_t h = mix(mix(0x43, functor), args.size());
  for (const auto &a : args) {
    n->ground = n->ground && a.is_ground();
    h = mix(h, a.hash());
  }
  n->hash = h;
  n->args = std::move(args);
  return Term(std::move(n));
}

Term Term::list(const std::vector<Term> &items, Term tail) {
  Term out = std::move(tail);
  for (auto it = items.rbegin(); it != items.rend(); ++it)
    out = compound(sym::cons, {*it, out});
  return out;
}

TermKind Term::kind() const { return node_->kind; }
bool Term::is_ground() const { return node_->ground; }

VarId Term::var_id() const {
  assert(is_var());
  return node_->value;
}
Symbol Term::var_name() const { return is_var() ? node_->sym : 0; }
std::int64_t Term::int_value() const {
  assert(is_int());
  return static_cast<std::int64_t>(node_->value);
}
Symbol Term::functor() const { return node_->sym; }
std::size_t Term::arity() const { return node_->args.size(); }
const Term &Term::arg(std::size_t i) const { return node_->args[i]; }
std::span<const Term> Term::args() const { return node_->args; }

bool Term::is_atom(std::string_view name) const {
  return is_atom() && symbol_name(functor()) == name;
}

bool Term::is_functor(std::string_view name, std::size_t n) const {
  return (n == 0 ? is_atom() : is_compound()) && arity() == n &&
         symbol_name(functor()) == name;
}

bool operator==(const Term &a, const Term &b) {
  if (a.node_ == b.node_)
    return true;
  const TermNode &x = *a.node_;
  const TermNode &y = *b.node_;
  if (x.kind != y.kind || x.hash != y.hash)
    return false;
  switch (x.kind) {
  case TermKind::Var:
  case TermKind::Int:
    return x.value == y.value;
  case TermKind::Atom:
    return x.sym == y.sym;
  case TermKind::Compound:
    if (x.sym != y.sym || x.args.size() != y.args.size())
      return false;
    for (std::size_t i = 0; i < x.args.size(); ++i)
      if (!(x.args[i] == y.args[i]))
        return false;
    return true;
  }
  return false;
}

std::size_t Term::hash() const { return node_->hash; }

PredKey pred_of(const Term &t) {
  if (t.is_atom() || t.is_compound())
    return {t.functor(), static_cast<std::uint32_t>(t.arity())};
  return {};
}

std::string to_string(const PredKey &k) {
  return symbol_name(k.name) + "/" + std::to_string(k.arity);
}

const Term *Substitution::lookup(VarId v) const {
  auto it = map_.find(v);
  return it == map_.end() ? nullptr : &it->second;
}

Term Substitution::walk(Term t) const {
  while (t.is_var()) {
    const Term *b = lookup(t.var_id());
    if (!b)
      break;
    t = *b;
  }
  return t;
}

Term Substitution::resolve(const Term &t) const {
  if (t.is_ground() || map_.empty())
    return t;
  Term w = walk(t);
  if (!w.is_compound())
    return w;
  if (w.is_ground())
    return w;
  std::vector<Term> args;
  args.reserve(w.arity());
  bool changed = false;
  for (const auto &a : w.args()) {
    args.push_back(resolve(a));
    changed = changed || !(args.back().node() == a.node());
  }
  if (!changed)
    return w;
  return Term::compound(w.functor(), std::move(args));
}

bool occurs_in(VarId v, const Term &t) {
  if (t.is_ground())
    return false;
  if (t.is_var())
    return t.var_id() == v;
  for (const auto &a : t.args())
    if (occurs_in(v, a))
      return true;
  return false;
}

namespace {

bool occurs_walk(VarId v, const Term &t, const Substitution &s) {
  Term w = s.walk(t);
  if (w.is_ground())
    return false;
  if (w.is_var())
    return w.var_id() == v;
  for (const auto &a : w.args())
    if (occurs_walk(v, a, s))
      return true;
  return false;
}

} // namespace

bool unify_into(const Term &a, const Term &b, Substitution &s) {
  Term x = s.walk(a);
  Term y = s.walk(b);
  if (x.node() == y.node())
    return true;
  if (x.is_var() && y.is_var()) {
    if (x.var_id() == y.var_id())
      return true;
    // Newer variables point at older ones so printed states keep the
    // caller's names.
    if (x.var_id() > y.var_id())
      s.bind(x.var_id(), y);
    else
      s.bind(y.var_id(), x);
    return true;
  }
  if (x.is_var()) {
    if (occurs_walk(x.var_id(), y, s))
      return false;
    s.bind(x.var_id(), y);
    return true;
  }
  if (y.is_var()) {
    if (occurs_walk(y.var_id(), x, s))
      return false;
    s.bind(y.var_id(), x);
    return true;
  }
  if (x.kind() != y.kind())
    return false;
  switch (x.kind()) {
  case TermKind::Atom:
    return x.functor() == y.functor();
  case TermKind::Int:
    return x.int_value() == y.int_value();
  case TermKind::Compound:
    if (x.functor() != y.functor() || x.arity() != y.arity())
      return false;
    if (x.is_ground() && y.is_ground())
      return x == y;
    for (std::size_t i = 0; i < x.arity(); ++i)
      if (!unify_into(x.arg(i), y.arg(i), s))
        return false;
    return true;
  case TermKind::Var:
    break;
  }
  return false;
}

std::optional<Substitution> unify(const Term &a, const Term &b,
                                  const Substitution &s) {
  Substitution out = s;
  if (!unify_into(a, b, out))
    return std::nullopt;
  return out;
}

namespace {

bool match(const Term &g, const Term &t, Substitution &theta) {
  if (g.is_var()) {
    if (const Term *b = theta.lookup(g.var_id()))
      return *b == t;
    theta.bind(g.var_id(), t);
    return true;
  }
  if (g.kind() != t.kind())
    return false;
  switch (g.kind()) {
  case TermKind::Atom:
    return g.functor() == t.functor();
  case TermKind::Int:
    return g.int_value() == t.int_value();
  case TermKind::Compound:
    if (g.functor() != t.functor() || g.arity() != t.arity())
      return false;
    if (g.is_ground())
      return g == t;
    for (std::size_t i = 0; i < g.arity(); ++i)
      if (!match(g.arg(i), t.arg(i), theta))
        return false;
    return true;
  case TermKind::Var:
    break;
  }
  return false;
}

bool variant_walk(const Term &a, const Term &b,
                  std::unordered_map<VarId, VarId> &ab,
                  std::unordered_map<VarId, VarId> &ba) {
  if (a.kind() != b.kind())
    return false;
  switch (a.kind()) {
  case TermKind::Var: {
    auto [i, new_a] = ab.try_emplace(a.var_id(), b.var_id());
    auto [j, new_b] = ba.try_emplace(b.var_id(), a.var_id());
    return i->second == b.var_id() && j->second == a.var_id();
  }
  case TermKind::Atom:
    return a.functor() == b.functor();
  case TermKind::Int:
    return a.int_value() == b.int_value();
  case TermKind::Compound:
    if (a.functor() != b.functor() || a.arity() != b.arity())
      return false;
    if (a.is_ground() != b.is_ground())
      return false;
    if (a.is_ground())
      return a == b;
    for (std::size_t i = 0; i < a.arity(); ++i)
      if (!variant_walk(a.arg(i), b.arg(i), ab, ba))
        return false;
    return true;
  }
  return false;
}

Term rename_with(const Term &t, std::unordered_map<VarId, Term> &map,
                 VarSource &fresh) {
  if (t.is_ground())
    return t;
  if (t.is_var()) {
    auto it = map.find(t.var_id());
    if (it == map.end())
      it = map.emplace(t.var_id(), fresh.fresh(t.var_name())).first;
    return it->second;
  }
  std::vector<Term> args;
  args.reserve(t.arity());
  for (const auto &a : t.args())
    args.push_back(rename_with(a, map, fresh));
  return Term::compound(t.functor(), std::move(args));
}

void collect_vars(const Term &t, std::vector<Term> &out,
                  std::unordered_map<VarId, bool> &seen) {
  if (t.is_ground())
    return;
  if (t.is_var()) {
    if (seen.emplace(t.var_id(), true).second)
      out.push_back(t);
    return;
  }
  for (const auto &a : t.args())
    collect_vars(a, out, seen);
}

std::size_t vhash(const Term &t, std::unordered_map<VarId, std::size_t> &seen) {
  if (t.is_ground())
    return t.hash();
  if (t.is_var()) {
    auto [it, _] = seen.try_emplace(t.var_id(), seen.size());
    return mix(0x76, it->second);
  }
  std::size_t h = mix(mix(0x43, t.functor()), t.arity());
  for (const auto &a : t.args())
    h = mix(h, vhash(a, seen));
  return h;
}

} // namespace

std::optional<Substitution> subsumes(const Term &general,
                                     const Term &specific) {
  Substitution theta;
  if (!match(general, specific, theta))
    return std::nullopt;
  return theta;
}

bool is_variant(const Term &a, const Term &b) {
  if (a.is_ground() || b.is_ground())
    return a == b;
  std::unordered_map<VarId, VarId> ab, ba;
  return variant_walk(a, b, ab, ba);
}

Term rename_apart(const Term &t, VarSource &fresh) {
  std::unordered_map<VarId, Term> map;
  return rename_with(t, map, fresh);
}

std::vector<Term> rename_apart(std::span<const Term> ts, VarSource &fresh) {
  std::unordered_map<VarId, Term> map;
  std::vector<Term> out;
  out.reserve(ts.size());
  for (const auto &t : ts)
    out.push_back(rename_with(t, map, fresh));
  return out;
}

std::vector<Term> variables_of(const Term &t) {
  std::vector<Term> out;
  std::unordered_map<VarId, bool> seen;
  collect_vars(t, out, seen);
  return out;
}

std::size_t variant_hash(const Term &t) {
  if (t.is_ground())
    return t.hash();
  std::unordered_map<VarId, std::size_t> seen;
  return vhash(t, seen);
}

VarId max_var(const Term &t) {
  if (t.is_ground())
    return 0;
  if (t.is_var())
    return t.var_id();
  VarId m = 0;
  for (const auto &a : t.args())
    m = std::max(m, max_var(a));
  return m;
}

} // namespace stwa
