#include "stwa/index_plan.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <stdexcept>

namespace stwa {

std::string Permutation::suffix() const {
  bool wide = std::any_of(order.begin(), order.end(),
                          [](int p) { return p > 9; });
  std::string out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (wide && i)
      out += '_';
    out += std::to_string(order[i]);
  }
  return out;
}

std::vector<int> bound_positions(const std::vector<IndexSpec> &specs) {
  std::vector<int> out;
  bool first = true;
  for (const auto &s : specs) {
    if (s.none())
      return {};
    std::vector<int> sorted = s.positions;
    std::sort(sorted.begin(), sorted.end());
    if (first) {
      out = sorted;
      first = false;
      continue;
    }
    std::vector<int> keep;
    std::set_intersection(out.begin(), out.end(), sorted.begin(),
                          sorted.end(), std::back_inserter(keep));
    out = std::move(keep);
  }
  return out;
}

std::vector<Permutation> permutation_cover(const std::vector<IndexSpec> &specs,
                                           int arity,
                                           std::vector<int> *assignment) {
  // Distinct index sets in declaration order.
  std::vector<std::set<int>> sets;
  std::vector<int> spec_set(specs.size(), -1);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].none())
      continue;
    std::set<int> s(specs[i].positions.begin(), specs[i].positions.end());
    auto it = std::find(sets.begin(), sets.end(), s);
    if (it == sets.end()) {
      spec_set[i] = static_cast<int>(sets.size());
      sets.push_back(std::move(s));
    } else {
      spec_set[i] = static_cast<int>(it - sets.begin());
    }
  }

  std::vector<Permutation> out;
  if (sets.empty()) {
    Permutation id;
    for (int p = 1; p <= arity; ++p)
      id.order.push_back(p);
    out.push_back(id);
    if (assignment)
      assignment->assign(specs.size(), -1);
    return out;
  }

  const std::size_t n = sets.size();
  auto strict_subset = [&](std::size_t a, std::size_t b) {
    return sets[a].size() < sets[b].size() &&
           std::includes(sets[b].begin(), sets[b].end(), sets[a].begin(),
                         sets[a].end());
  };

  // Minimum chain cover = n - maximum matching in the comparability graph.
  std::vector<int> match_right(n, -1);
  std::function<bool(std::size_t, std::vector<char> &)> augment =
      [&](std::size_t u, std::vector<char> &seen) {
        for (std::size_t v = 0; v < n; ++v) {
          if (!strict_subset(u, v) || seen[v])
            continue;
          seen[v] = 1;
          if (match_right[v] < 0 ||
              augment(static_cast<std::size_t>(match_right[v]), seen)) {
            match_right[v] = static_cast<int>(u);
            return true;
          }
        }
        return false;
      };
  for (std::size_t u = 0; u < n; ++u) {
    std::vector<char> seen(n, 0);
    augment(u, seen);
  }

  std::vector<int> next(n, -1);
  std::vector<char> has_pred(n, 0);
  for (std::size_t v = 0; v < n; ++v)
    if (match_right[v] >= 0) {
      next[static_cast<std::size_t>(match_right[v])] = static_cast<int>(v);
      has_pred[v] = 1;
    }

  std::vector<std::vector<std::size_t>> chains;
  for (std::size_t u = 0; u < n; ++u) {
    if (has_pred[u])
      continue;
    std::vector<std::size_t> chain;
    for (int c = static_cast<int>(u); c >= 0; c = next[c])
      chain.push_back(static_cast<std::size_t>(c));
    chains.push_back(std::move(chain));
  }
  std::sort(chains.begin(), chains.end(), [](const auto &a, const auto &b) {
    return *std::min_element(a.begin(), a.end()) <
           *std::min_element(b.begin(), b.end());
  });

  std::vector<int> set_perm(n, -1);
  for (std::size_t ci = 0; ci < chains.size(); ++ci) {
    Permutation perm;
    std::set<int> used;
    for (std::size_t s : chains[ci]) {
      for (int p : sets[s])
        if (used.insert(p).second)
          perm.order.push_back(p);
      set_perm[s] = static_cast<int>(ci);
    }
    for (int p = 1; p <= arity; ++p)
      if (!used.count(p))
        perm.order.push_back(p);
    out.push_back(std::move(perm));
  }
  if (assignment) {
    assignment->assign(specs.size(), -1);
    for (std::size_t i = 0; i < specs.size(); ++i)
      if (spec_set[i] >= 0)
        (*assignment)[i] = set_perm[static_cast<std::size_t>(spec_set[i])];
  }
  return out;
}

std::vector<DispatchEntry>
build_dispatch(const std::vector<IndexSpec> &specs,
               const std::vector<Permutation> &cover,
               const std::vector<int> &assignment) {
  std::vector<DispatchEntry> out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (assignment[i] < 0)
      continue;
    auto perm = static_cast<std::size_t>(assignment[i]);
    bool seen = std::any_of(out.begin(), out.end(),
                            [&](const auto &d) { return d.perm == perm; });
    if (!seen)
      out.push_back({i, perm, cover[perm].order.front()});
  }
  return out;
}

IndexPlan compile_index(PredKey pred, const std::vector<IndexSpec> &specs) {
  IndexPlan plan;
  plan.pred = pred;
  plan.specs = specs;
  for (const auto &s : specs) {
    if (s.none())
      plan.has_none = true;
    for (int p : s.positions)
      if (p < 1 || p > static_cast<int>(pred.arity))
        throw std::invalid_argument("table_index(" + to_string(pred) +
                                    "): position out of range");
  }
  plan.bound = bound_positions(specs);
  plan.permutations = permutation_cover(specs, static_cast<int>(pred.arity),
                                        &plan.assignment);
  plan.dispatch = build_dispatch(specs, plan.permutations, plan.assignment);
  return plan;
}

IndexPlan compile_index(const Directive &d) {
  if (d.kind == Directive::Kind::TableIndex)
    return compile_index(d.pred, d.specs);
  return compile_index(d.pred, {IndexSpec{}});
}

std::string IndexPlan::illegal_mode_message() const {
  return "Illegal Mode in call to " + to_string(pred);
}

std::size_t IndexPlan::route(const Term &goal) const {
  for (const auto &d : dispatch)
    if (!goal.arg(static_cast<std::size_t>(d.test_position - 1)).is_var())
      return d.perm;
  if (has_none || dispatch.empty())
    return 0;
  throw IllegalModeError(illegal_mode_message());
}

Symbol abstraction_var_name(int position) {
  static const char *names[] = {"X", "Y", "Z", "W"};
  if (position >= 1 && position <= 4)
    return intern(names[position - 1]);
  return intern("X" + std::to_string(position));
}

Abstraction abstract_call(const Term &goal, const IndexPlan &plan,
                          VarSource &fresh) {
  for (int p : plan.bound)
    if (goal.arg(static_cast<std::size_t>(p - 1)).is_var())
      throw IllegalModeError(plan.illegal_mode_message() + ": argument " +
                             std::to_string(p) + " must be bound");
  plan.route(goal);
  Abstraction out;
  std::vector<Term> args;
  args.reserve(goal.arity());
  for (std::size_t i = 0; i < goal.arity(); ++i) {
    int pos = static_cast<int>(i) + 1;
    if (std::binary_search(plan.bound.begin(), plan.bound.end(), pos)) {
      args.push_back(goal.arg(i));
    } else {
      Term v = fresh.fresh(abstraction_var_name(pos));
      out.residual.bind(v.var_id(), goal.arg(i));
      args.push_back(v);
    }
  }
  out.abstracted = goal.arity() ? Term::compound(goal.functor(), std::move(args))
                                : goal;
  return out;
}

// ---------------------------------------------------------------------------
// Source transformation

std::string permutation_pred_name(PredKey pred, const Permutation &perm) {
  return symbol_name(pred.name) + perm.suffix();
}

std::string base_pred_name(PredKey pred) {
  return symbol_name(pred.name) + "_base";
}

namespace {

std::string vname(std::size_t i) {
  std::string out(1, static_cast<char>('A' + i % 26));
  if (i >= 26)
    out += std::to_string(i / 26);
  return out;
}

std::string call(const std::string &name, const std::vector<std::string> &args) {
  std::string out = quote_atom(name);
  if (args.empty())
    return out;
  out += '(';
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i)
      out += ',';
    out += args[i];
  }
  return out + ')';
}

} // namespace

std::string emit_transformed(const IndexPlan &plan,
                             const std::vector<Clause> &base_clauses) {
  const std::size_t n = plan.pred.arity;
  const std::string name = symbol_name(plan.pred.name);
  const auto &perms = plan.permutations;
  std::string out;

  out += ":- table ";
  for (std::size_t i = 0; i < perms.size(); ++i) {
    if (i)
      out += ", ";
    out += quote_atom(permutation_pred_name(plan.pred, perms[i])) + "/" +
           std::to_string(n);
  }
  out += " as subsumptive.\n";

  std::vector<std::string> orig;
  for (std::size_t i = 0; i < n; ++i)
    orig.push_back(vname(i));
  auto permuted = [&](const Permutation &p) {
    std::vector<std::string> a;
    for (int pos : p.order)
      a.push_back(orig[static_cast<std::size_t>(pos - 1)]);
    return a;
  };

  // Dispatch clause.
  out += call(name, orig) + " :-\n";
  if (plan.dispatch.empty()) {
    out += "    " + call(permutation_pred_name(plan.pred, perms[0]),
                         permuted(perms[0])) +
           ".\n";
  } else {
    for (std::size_t i = 0; i < plan.dispatch.size(); ++i) {
      const auto &d = plan.dispatch[i];
      out += i ? "    ; " : "    ";
      out += "nonvar(" + orig[static_cast<std::size_t>(d.test_position - 1)] +
             ") -> " +
             call(permutation_pred_name(plan.pred, perms[d.perm]),
                  permuted(perms[d.perm])) +
             "\n";
    }
    if (plan.has_none)
      out += "    ; " +
             call(permutation_pred_name(plan.pred, perms[0]), permuted(perms[0])) +
             ".\n";
    else
      out += "    ; table_error(" + quote_atom(plan.illegal_mode_message()) +
             ").\n";
  }

  // One clause per permutation. Local argument k holds original argument
  // order[k].
  for (std::size_t pi = 0; pi < perms.size(); ++pi) {
    const Permutation &p = perms[pi];
    std::vector<std::size_t> local_of(n + 1);
    for (std::size_t k = 0; k < n; ++k)
      local_of[static_cast<std::size_t>(p.order[k])] = k;
    auto is_bound_local = [&](std::size_t k) {
      return std::binary_search(plan.bound.begin(), plan.bound.end(),
                                p.order[k]);
    };

    std::vector<std::string> tests;
    for (std::size_t k = 0; k < n; ++k) {
      auto m = static_cast<std::size_t>(p.order[k] - 1);
      if (!is_bound_local(m))
        tests.push_back("var(" + orig[m] + ")");
    }

    std::string then_call;
    if (pi == 0) {
      std::vector<std::string> a;
      for (std::size_t j = 1; j <= n; ++j)
        a.push_back(orig[local_of[j]]);
      then_call = call(base_pred_name(plan.pred), a);
    } else {
      std::vector<std::string> a;
      for (int pos : perms[0].order)
        a.push_back(orig[local_of[static_cast<std::size_t>(pos)]]);
      then_call = call(permutation_pred_name(plan.pred, perms[0]), a);
    }

    std::vector<std::string> rec_args;
    std::string unify;
    std::size_t next_var = n;
    for (std::size_t k = 0; k < n; ++k) {
      if (is_bound_local(k)) {
        rec_args.push_back(orig[k]);
        continue;
      }
      std::string f = vname(next_var++);
      rec_args.push_back(f);
      unify += "," + f + " = " + orig[k];
    }

    std::string pname = permutation_pred_name(plan.pred, p);
    out += call(pname, orig) + " :-\n";
    if (tests.empty()) {
      out += "    " + then_call + ".\n";
      continue;
    }
    out += "    ";
    for (std::size_t i = 0; i < tests.size(); ++i)
      out += (i ? "," : "") + tests[i];
    out += " -> " + then_call + "\n";
    out += "    ; " + call(pname, rec_args) + unify + ".\n";
  }

  for (const auto &c : base_clauses) {
    Clause b = c;
    std::vector<Term> args(c.head.args().begin(), c.head.args().end());
    b.head = args.empty() ? Term::atom(base_pred_name(plan.pred))
                          : Term::compound(base_pred_name(plan.pred), args);
    out += print_clause(b) + "\n";
  }
  return out;
}

std::string transform_program(const Program &p) {
  std::set<PredKey> indexed;
  for (const auto &d : p.directives)
    if (d.kind == Directive::Kind::TableIndex)
      indexed.insert(d.pred);
  if (indexed.empty())
    throw std::invalid_argument("nothing to transform: no table_index directive");

  std::string out;
  for (const auto &d : p.directives) {
    if (d.kind != Directive::Kind::TableIndex) {
      out += print_directive(d) + "\n";
      continue;
    }
    std::vector<Clause> base;
    for (std::size_t ci : p.clauses_of(d.pred))
      base.push_back(p.clauses[ci]);
    out += emit_transformed(compile_index(d), base);
  }
  for (const auto &c : p.clauses)
    if (!indexed.count(pred_of(c.head)))
      out += print_clause(c) + "\n";
  for (const auto &q : p.queries)
    out += "?- " + print_term(q, 1199, {}) + ".\n";
  return out;
}

} // namespace stwa
