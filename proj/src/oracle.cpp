#include "stwa/oracle.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

namespace stwa {

// ---------------------------------------------------------------------------
// FactSet

bool FactSet::add(const Term &f, int iteration, Derivation why) {
  if (!index_.emplace(f, Info{iteration, std::move(why)}).second)
    return false;
  facts_.push_back(f);
  by_pred_[pred_of(f)].push_back(f);
  last_ = std::max(last_, iteration);
  return true;
}

int FactSet::tag(const Term &f) const {
  auto it = index_.find(f);
  return it == index_.end() ? -1 : it->second.tag;
}

const Derivation &FactSet::derivation(const Term &f) const {
  auto it = index_.find(f);
  if (it == index_.end())
    throw std::out_of_range("fact not in set: " + print_term(f));
  return it->second.why;
}

std::vector<Term> FactSet::at(int iteration) const {
  std::vector<Term> out;
  for (const auto &f : facts_)
    if (index_.at(f).tag == iteration)
      out.push_back(f);
  return out;
}

const std::vector<Term> &FactSet::of(PredKey k) const {
  static const std::vector<Term> none;
  auto it = by_pred_.find(k);
  return it == by_pred_.end() ? none : it->second;
}

// ---------------------------------------------------------------------------
// Fragment checks

std::vector<Clause> oracle_rules(const Program &program) {
  std::vector<Clause> out;
  for (const auto &c : program.clauses) {
    Clause r{c.head, {}, c.line};
    for (const auto &b : c.body) {
      if (b.is_atom("true"))
        continue;
      if (b.is_var())
        throw OracleError("line " + std::to_string(c.line) +
                          ": variable body goal");
      if (is_builtin(pred_of(b)))
        throw OracleError("line " + std::to_string(c.line) +
                          ": builtin " + to_string(pred_of(b)) +
                          " not supported");
      r.body.push_back(b);
    }
    std::set<VarId> body_vars;
    for (const auto &b : r.body)
      for (const auto &v : variables_of(b))
        body_vars.insert(v.var_id());
    for (const auto &v : variables_of(r.head))
      if (!body_vars.count(v.var_id()))
        throw OracleError("line " + std::to_string(c.line) +
                          ": rule is not range-restricted: " +
                          print_clause(c));
    out.push_back(std::move(r));
  }
  return out;
}

Program arrow_reading(const Program &program) {
  Program out;
  for (const auto &c : program.clauses) {
    if (!c.body.empty() || !c.head.is_functor("<-", 2))
      continue;
    Clause r{c.head.arg(0), {}, c.line};
    for (const auto &b : flatten_conjunction(c.head.arg(1)))
      if (!b.is_atom("true"))
        r.body.push_back(b);
    out.add_clause(std::move(r));
  }
  return out;
}

namespace {

// Facts visible to one body position: a prefix of a fact list.
struct Source {
  const std::vector<Term> *facts;
  std::size_t limit;
};

using SourceFn = std::function<Source(std::size_t pos, PredKey k)>;
using EmitFn = std::function<void(const Term &head, std::vector<Term> body)>;

void join(const Clause &rule, std::size_t pos, const Substitution &s,
          const SourceFn &source, const EmitFn &emit) {
  if (pos == rule.body.size()) {
    std::vector<Term> inst;
    inst.reserve(rule.body.size());
    for (const auto &b : rule.body)
      inst.push_back(s.resolve(b));
    emit(s.resolve(rule.head), std::move(inst));
    return;
  }
  const Term &atom = rule.body[pos];
  Source src = source(pos, pred_of(atom));
  std::vector<Term> bound(atom.arity());
  for (std::size_t k = 0; k < atom.arity(); ++k)
    bound[k] = s.walk(atom.arg(k));
  for (std::size_t i = 0; i < src.limit; ++i) {
    // Cheap rejection on bound arguments before copying the substitution.
    const Term &fact = (*src.facts)[i];
    bool possible = true;
    for (std::size_t k = 0; k < bound.size() && possible; ++k)
      possible = bound[k].is_var() || !fact.arg(k).is_atomic() ||
                 bound[k] == fact.arg(k);
    if (!possible)
      continue;
    Substitution next = s;
    if (unify_into(atom, (*src.facts)[i], next))
      join(rule, pos + 1, next, source, emit);
  }
}

void check_cap(std::uint64_t iteration, const OracleOptions &opts) {
  if (iteration > opts.iteration_cap)
    throw ResourceError("least model iteration cap " +
                        std::to_string(opts.iteration_cap) + " exceeded");
}

void add_program_facts(const std::vector<Clause> &rules, FactSet &m) {
  for (std::size_t i = 0; i < rules.size(); ++i)
    if (rules[i].body.empty())
      m.add(rules[i].head, 0, {i, {}});
}

} // namespace

FactSet least_model(const Program &program, const OracleOptions &opts) {
  auto rules = oracle_rules(program);
  FactSet m;
  add_program_facts(rules, m);
  for (int it = 1;; ++it) {
    check_cap(static_cast<std::uint64_t>(it), opts);
    // Snapshot per-predicate sizes so only earlier iterations are visible.
    std::map<PredKey, std::size_t> sizes;
    for (const auto &r : rules)
      for (const auto &b : r.body)
        sizes[pred_of(b)] = m.of(pred_of(b)).size();
    std::vector<std::pair<Term, Derivation>> fresh;
    SourceFn src = [&](std::size_t, PredKey k) {
      return Source{&m.of(k), sizes[k]};
    };
    std::unordered_map<Term, bool, TermHash> pending;
    for (std::size_t ri = 0; ri < rules.size(); ++ri) {
      if (rules[ri].body.empty())
        continue;
      join(rules[ri], 0, {}, src, [&](const Term &h, std::vector<Term> body) {
        if (!m.contains(h) && pending.emplace(h, true).second)
          fresh.push_back({h, Derivation{ri, std::move(body)}});
      });
    }
    if (fresh.empty())
      break;
    for (auto &[f, why] : fresh)
      m.add(f, it, std::move(why));
  }
  return m;
}

namespace {

std::vector<std::pair<Term, Derivation>>
seminaive_derive(const std::vector<Clause> &rules, const FactSet &total,
                 const std::vector<Term> &delta) {
  std::unordered_map<PredKey, std::vector<Term>, PredKeyHash> dpred;
  for (const auto &f : delta)
    dpred[pred_of(f)].push_back(f);
  std::vector<std::pair<Term, Derivation>> out;
  std::unordered_map<Term, bool, TermHash> seen;
  for (std::size_t ri = 0; ri < rules.size(); ++ri) {
    const Clause &r = rules[ri];
    for (std::size_t j = 0; j < r.body.size(); ++j) {
      auto it = dpred.find(pred_of(r.body[j]));
      if (it == dpred.end())
        continue;
      SourceFn src = [&](std::size_t pos, PredKey k) {
        if (pos == j)
          return Source{&it->second, it->second.size()};
        const auto &all = total.of(k);
        return Source{&all, all.size()};
      };
      join(r, 0, {}, src, [&](const Term &h, std::vector<Term> body) {
        if (!total.contains(h) && seen.emplace(h, true).second)
          out.push_back({h, Derivation{ri, std::move(body)}});
      });
    }
  }
  return out;
}

} // namespace

std::vector<Term> seminaive_step(const Program &program, const FactSet &total,
                                 const std::vector<Term> &delta) {
  std::vector<Term> out;
  for (auto &[f, _] : seminaive_derive(oracle_rules(program), total, delta))
    out.push_back(f);
  return out;
}

FactSet least_model_seminaive(const Program &program,
                              const OracleOptions &opts) {
  auto rules = oracle_rules(program);
  FactSet m;
  add_program_facts(rules, m);
  std::vector<Term> delta = m.facts();
  for (int it = 1; !delta.empty(); ++it) {
    check_cap(static_cast<std::uint64_t>(it), opts);
    auto fresh = seminaive_derive(rules, m, delta);
    delta.clear();
    for (auto &[f, why] : fresh)
      if (m.add(f, it, std::move(why)))
        delta.push_back(f);
  }
  return m;
}

std::string iteration_log(const FactSet &model) {
  std::string out;
  for (int it = 0; it <= model.last_iteration(); ++it) {
    out += "Iteration " + std::to_string(it) + ":\n";
    auto facts = model.at(it);
    if (it == 0) {
      out += "    ";
      for (std::size_t i = 0; i < facts.size(); ++i)
        out += (i ? ", " : "") + print_term(facts[i], 999, {});
      out += ": program facts\n";
      continue;
    }
    for (const auto &f : facts) {
      const Derivation &d = model.derivation(f);
      std::string body;
      for (std::size_t i = 0; i < d.body.size(); ++i)
        body += (i ? "," : "") + print_term(d.body[i], 999, {});
      out += "    " + print_term(f, 999, {}) + ": from " +
             print_term(f, 999, {}) + " <- " + body + "\n";
    }
  }
  out += "Iteration " + std::to_string(model.last_iteration() + 1) +
         ": nothing new, stop\n";
  return out;
}

// ---------------------------------------------------------------------------
// Theorem 1 conditions

namespace {

Theorem1Report theorem1_with_model(const Program &program, PredKey query_pred,
                                   const FactSet &m) {
  Theorem1Report rep;
  auto rules = oracle_rules(program);
  std::map<PredKey, std::set<PredKey>> calls;
  std::vector<PredKey> preds;
  auto note = [&](PredKey k) {
    if (std::find(preds.begin(), preds.end(), k) == preds.end())
      preds.push_back(k);
  };
  for (const auto &r : rules) {
    note(pred_of(r.head));
    for (const auto &b : r.body) {
      note(pred_of(b));
      calls[pred_of(r.head)].insert(pred_of(b));
    }
  }
  std::set<PredKey> reached{query_pred};
  std::vector<PredKey> work{query_pred};
  while (!work.empty()) {
    PredKey k = work.back();
    work.pop_back();
    for (PredKey c : calls[k])
      if (reached.insert(c).second)
        work.push_back(c);
  }
  for (PredKey k : preds)
    if (!reached.count(k)) {
      rep.reachable_ok = false;
      rep.witness = "unreachable predicate " + to_string(k);
      break;
    }

  SourceFn src = [&](std::size_t, PredKey k) {
    const auto &all = m.of(k);
    return Source{&all, all.size()};
  };
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (rules[i].body.empty())
      continue;
    bool found = false;
    join(rules[i], 0, {}, src,
         [&](const Term &, std::vector<Term>) { found = true; });
    if (!found) {
      rep.bodies_ok = false;
      if (rep.witness.empty())
        rep.witness = "rule body never true: " +
                      print_clause(program.clauses[i]);
      break;
    }
  }
  return rep;
}

} // namespace

Theorem1Report check_theorem1_conditions(const Program &program,
                                         PredKey query_pred,
                                         const OracleOptions &opts) {
  return theorem1_with_model(program, query_pred,
                             least_model_seminaive(program, opts));
}

// ---------------------------------------------------------------------------
// Differential check against the engine

namespace {

std::vector<std::string> sorted(std::set<std::string> s) {
  return {s.begin(), s.end()};
}

std::string first_difference(const std::set<std::string> &want,
                             const std::set<std::string> &got) {
  for (const auto &w : want)
    if (!got.count(w))
      return "missing " + w;
  for (const auto &g : got)
    if (!want.count(g))
      return "unexpected " + g;
  return "";
}

} // namespace

DiffReport diff_with_engine(const Program &program, const std::string &query,
                            const EngineConfig &config,
                            const OracleOptions &opts) {
  DiffReport rep;
  FactSet m = least_model_seminaive(program, opts);
  rep.model_size = m.size();

  Engine engine(program, config);
  Term q = engine.parse_query(query);
  std::set<std::string> want, got;
  for (const auto &f : m.of(pred_of(q)))
    if (subsumes(q, f))
      want.insert(print_term(f));
  for (const auto &s : engine.solve(q))
    got.insert(print_term(s.instance));
  rep.expected = sorted(want);
  rep.actual = sorted(got);
  rep.answers_ok = want == got;
  if (!rep.answers_ok)
    rep.witness = "answers: " + first_difference(want, got);

  rep.conditions = theorem1_with_model(program, pred_of(q), m);
  if (!rep.conditions.ok())
    return rep;
  rep.model_checked = true;

  Program bare;
  for (const auto &c : program.clauses)
    bare.add_clause(c);
  EngineConfig full = config;
  full.stwfa = true;
  full.table_all = false;
  full.trace = TraceMode::Off;
  full.stream = false;
  Engine fe(std::move(bare), full);
  std::vector<Term> args;
  VarSource vs(1);
  for (std::size_t i = 0; i < q.arity(); ++i)
    args.push_back(vs.fresh());
  Term open = q.arity() ? Term::compound(q.functor(), std::move(args))
                        : Term::atom(q.functor());
  fe.solve(open);
  std::set<std::string> model, tabled;
  for (const auto &f : m.facts())
    model.insert(print_term(f));
  for (std::size_t e = 0; e < fe.tables().size(); ++e)
    for (const auto &a : fe.tables().entry(static_cast<EntryId>(e)).answers)
      tabled.insert(print_term(a));
  rep.model_ok = model == tabled;
  if (!rep.model_ok && rep.witness.empty())
    rep.witness = "model: " + first_difference(model, tabled);
  return rep;
}

} // namespace stwa
