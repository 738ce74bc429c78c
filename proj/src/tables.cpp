#include "stwa/tables.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace stwa {

// ---------------------------------------------------------------------------
// AnswerTrie

AnswerTrie::AnswerTrie(Permutation perm) : perm_(std::move(perm)) {
  nodes_.emplace_back();
}

void AnswerTrie::insert(const Term &answer, Ordinal ord) {
  count_ = std::max(count_, ord + 1);
  int cur = 0;
  for (std::size_t d = 0; d < perm_.order.size(); ++d) {
    const Term &arg = answer.arg(static_cast<std::size_t>(perm_.order[d] - 1));
    if (!arg.is_ground()) {
      wild_.push_back({ord, d});
      return;
    }
    auto it = nodes_[static_cast<std::size_t>(cur)].children.find(arg);
    int next;
    if (it == nodes_[static_cast<std::size_t>(cur)].children.end()) {
      next = static_cast<int>(nodes_.size());
      nodes_[static_cast<std::size_t>(cur)].children.emplace(arg, next);
      nodes_.emplace_back();
    } else {
      next = it->second;
    }
    cur = next;
    nodes_[static_cast<std::size_t>(cur)].ordinals.push_back(ord);
  }
}

int AnswerTrie::descend(const std::vector<Term> &prefix, bool create) {
  int cur = 0;
  for (const auto &arg : prefix) {
    auto &kids = nodes_[static_cast<std::size_t>(cur)].children;
    auto it = kids.find(arg);
    if (it != kids.end()) {
      cur = it->second;
      continue;
    }
    if (!create)
      return -1;
    int next = static_cast<int>(nodes_.size());
    kids.emplace(arg, next);
    nodes_.emplace_back();
    cur = next;
  }
  return cur;
}

std::vector<Term> AnswerTrie::ground_prefix(const Term &goal) const {
  std::vector<Term> out;
  for (int p : perm_.order) {
    const Term &arg = goal.arg(static_cast<std::size_t>(p - 1));
    if (!arg.is_ground())
      break;
    out.push_back(arg);
  }
  return out;
}

std::vector<Ordinal> AnswerTrie::candidates(int node, std::size_t depth,
                                            Ordinal from,
                                            Ordinal total) const {
  std::vector<Ordinal> out;
  if (depth == 0) {
    for (Ordinal o = from; o < total; ++o)
      out.push_back(o);
    return out;
  }
  const auto &ords = nodes_[static_cast<std::size_t>(node)].ordinals;
  auto a = std::lower_bound(ords.begin(), ords.end(), from);
  auto w = std::lower_bound(
      wild_.begin(), wild_.end(), from,
      [](const Wild &x, Ordinal v) { return x.ord < v; });
  while (a != ords.end() || w != wild_.end()) {
    if (w != wild_.end() && w->depth >= depth) {
      ++w;
      continue;
    }
    if (w == wild_.end() || (a != ords.end() && *a < w->ord)) {
      out.push_back(*a++);
    } else {
      out.push_back(w->ord);
      ++w;
    }
  }
  return out;
}

std::vector<Ordinal> AnswerTrie::lookup(const std::vector<Term> &prefix) const {
  int cur = 0;
  for (const auto &arg : prefix) {
    const auto &kids = nodes_[static_cast<std::size_t>(cur)].children;
    auto it = kids.find(arg);
    if (it == kids.end()) {
      cur = -1;
      break;
    }
    cur = it->second;
  }
  if (prefix.empty()) {
    // Every answer passes through the root.
    std::vector<Ordinal> all(count_);
    for (Ordinal o = 0; o < count_; ++o)
      all[o] = o;
    return all;
  }
  std::vector<Ordinal> out;
  if (cur >= 0)
    out = nodes_[static_cast<std::size_t>(cur)].ordinals;
  for (const auto &w : wild_)
    if (w.depth < prefix.size())
      out.push_back(w.ord);
  std::sort(out.begin(), out.end());
  return out;
}

const AnswerTrie &TableEntry::trie_for(const Permutation &p) const {
  for (const auto &t : tries)
    if (t.perm() == p)
      return t;
  throw std::out_of_range("no trie for permutation " + p.suffix());
}

// ---------------------------------------------------------------------------
// TableStore

std::optional<EntryId> TableStore::find(const Term &goal,
                                        TablePolicy policy) const {
  if (auto it = variant_index_.find(goal); it != variant_index_.end())
    return it->second;
  if (policy == TablePolicy::Subsumptive) {
    auto it = by_pred_.find(pred_of(goal));
    if (it != by_pred_.end())
      for (EntryId e : it->second)
        if (subsumes(entries_[e].goal, goal))
          return e;
  }
  return std::nullopt;
}

TableStore::Lookup TableStore::lookup_or_insert(
    const Term &goal, TablePolicy policy,
    const std::vector<Permutation> &perms) {
  if (auto e = find(goal, policy))
    return {*e, false};
  TableEntry entry;
  entry.id = static_cast<EntryId>(entries_.size());
  entry.goal = goal;
  entry.policy = policy;
  Permutation identity;
  for (std::size_t i = 1; i <= goal.arity(); ++i)
    identity.order.push_back(static_cast<int>(i));
  for (const auto &p : perms)
    if (p.order.size() == goal.arity() && !(p == identity))
      entry.tries.emplace_back(p);
  entry.tries.emplace_back(identity);
  entries_.push_back(std::move(entry));
  EntryId id = entries_.back().id;
  by_pred_[pred_of(goal)].push_back(id);
  variant_index_.emplace(goal, id);
  return {id, true};
}

namespace {

void collect_subtree_watchers(const AnswerTrie &t, int node,
                              std::vector<SuspId> &out) {
  std::vector<int> stack{node};
  while (!stack.empty()) {
    int n = stack.back();
    stack.pop_back();
    const auto &nd = t.node(n);
    out.insert(out.end(), nd.watchers.begin(), nd.watchers.end());
    for (const auto &[_, child] : nd.children)
      stack.push_back(child);
  }
}

} // namespace

bool TableStore::insert_answer(EntryId e, const Term &answer,
                               std::vector<SuspId> *woken) {
  TableEntry &entry = entries_[e];
  auto ord = static_cast<Ordinal>(entry.answers.size());
  if (!entry.dedup.emplace(answer, ord).second)
    return false;
  entry.answers.push_back(answer);
  for (auto &trie : entry.tries) {
    trie.insert(answer, ord);
    if (!woken)
      continue;
    // Watchers along the answer's path, or the whole subtree below the
    // point where a non-ground argument stops the descent.
    int cur = 0;
    const auto &order = trie.perm().order;
    std::size_t d = 0;
    for (;; ++d) {
      const auto &nd = trie.node(cur);
      woken->insert(woken->end(), nd.watchers.begin(), nd.watchers.end());
      if (d == order.size())
        break;
      const Term &arg = answer.arg(static_cast<std::size_t>(order[d] - 1));
      if (!arg.is_ground()) {
        for (const auto &[_, child] : nd.children)
          collect_subtree_watchers(trie, child, *woken);
        break;
      }
      auto it = nd.children.find(arg);
      if (it == nd.children.end())
        break;
      cur = it->second;
    }
  }
  return true;
}

SuspId TableStore::register_suspension(EntryId e, const Term &consumer_goal,
                                       std::size_t payload) {
  TableEntry &entry = entries_[e];
  Suspension s;
  s.consumer_goal = consumer_goal;
  s.payload = payload;
  // Key the consumer on the trie giving the longest ground prefix.
  std::size_t best = entry.tries.size() - 1;
  std::vector<Term> best_prefix = entry.tries[best].ground_prefix(consumer_goal);
  for (std::size_t i = 0; i + 1 < entry.tries.size(); ++i) {
    auto p = entry.tries[i].ground_prefix(consumer_goal);
    if (p.size() > best_prefix.size()) {
      best = i;
      best_prefix = std::move(p);
    }
  }
  s.trie = best;
  s.depth = best_prefix.size();
  s.node = entry.tries[best].descend(best_prefix, true);
  auto id = static_cast<SuspId>(susps_.size());
  entry.tries[best].node(s.node).watchers.push_back(id);
  entry.suspensions.push_back(id);
  susps_.push_back(std::move(s));
  susp_entry_.push_back(e);
  return id;
}

bool TableStore::has_unconsumed(SuspId s) const {
  return susps_[s].cursor < entries_[susp_entry_[s]].answers.size();
}

std::vector<std::pair<Ordinal, Term>> TableStore::pending_answers(SuspId sid) {
  Suspension &s = susps_[sid];
  const TableEntry &entry = entries_[susp_entry_[sid]];
  auto total = static_cast<Ordinal>(entry.answers.size());
  std::vector<std::pair<Ordinal, Term>> out;
  if (s.cursor >= total)
    return out;
  const AnswerTrie &trie = entry.tries[s.trie];
  VarSource scratch(max_var(s.consumer_goal) + 1);
  for (Ordinal o : trie.candidates(s.node, s.depth, s.cursor, total)) {
    const Term &ans = entry.answers[o];
    bool ok;
    if (ans.is_ground() || s.consumer_goal.is_ground()) {
      ok = unify(s.consumer_goal, ans).has_value();
    } else {
      Term renamed = rename_apart(ans, scratch);
      ok = unify(s.consumer_goal, renamed).has_value();
    }
    if (ok)
      out.emplace_back(o, ans);
  }
  s.cursor = total;
  return out;
}

std::vector<Ordinal>
TableStore::indexed_lookup(EntryId e, const Permutation &perm,
                           const std::vector<Term> &prefix) const {
  return entries_[e].trie_for(perm).lookup(prefix);
}

std::vector<EntryId> TableStore::entries_of(PredKey k) const {
  auto it = by_pred_.find(k);
  return it == by_pred_.end() ? std::vector<EntryId>{} : it->second;
}

std::size_t TableStore::answer_count() const {
  std::size_t n = 0;
  for (const auto &e : entries_)
    n += e.answers.size();
  return n;
}

void TableStore::clear() {
  entries_.clear();
  susps_.clear();
  susp_entry_.clear();
  by_pred_.clear();
  variant_index_.clear();
}

VarNamer scoped_namer(const std::vector<Term> &forms) {
  std::map<Symbol, std::set<VarId>> by_name;
  for (const auto &f : forms)
    for (const auto &v : variables_of(f))
      if (v.var_name() != 0)
        by_name[v.var_name()].insert(v.var_id());
  return [by_name = std::move(by_name)](const Term &v) -> std::string {
    if (v.var_name() != 0) {
      auto it = by_name.find(v.var_name());
      if (it == by_name.end() || it->second.size() == 1)
        return symbol_name(v.var_name());
    }
    return "_G" + std::to_string(v.var_id());
  };
}

std::string TableStore::dump(const SuspText &susp_text,
                             const std::string &indent) const {
  std::string out;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const TableEntry &e = entries_[i];
    if (i)
      out += "\n" + indent;
    out += print_term(e.goal, 999, scoped_namer({e.goal}));
    out += ":[";
    for (std::size_t a = 0; a < e.answers.size(); ++a) {
      if (a)
        out += ',';
      out += print_term(e.answers[a], 999, scoped_namer({e.answers[a]}));
    }
    out += "],[";
    for (std::size_t k = 0; k < e.suspensions.size(); ++k) {
      const Suspension &s = susps_[e.suspensions[k]];
      if (k)
        out += ", ";
      out += susp_text ? susp_text(s)
                       : print_term(s.consumer_goal, 999,
                                    scoped_namer({s.consumer_goal}));
      out += ":" + std::to_string(s.cursor);
    }
    out += "]";
  }
  return out;
}

} // namespace stwa
