#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "stwa/index_plan.hpp"
#include "stwa/term.hpp"

namespace stwa {

enum class TablePolicy { Variant, Subsumptive };

using EntryId = std::uint32_t;
using SuspId = std::uint32_t;
using Ordinal = std::uint32_t;

/// Trie over argument sequences in one permutation order. Each level
/// consumes one (ground) argument; every node lists the ordinals of the
/// answers passing through it, in insertion order.
class AnswerTrie {
public:
  explicit AnswerTrie(Permutation perm);

  const Permutation &perm() const { return perm_; }

  void insert(const Term &answer, Ordinal ord);
  /// Node reached by a ground prefix, creating missing nodes when asked.
  /// Returns -1 when absent and `create` is false.
  int descend(const std::vector<Term> &prefix, bool create);
  /// Ordinals of answers whose permuted arguments start with `prefix`,
  /// ascending. Answers that are non-ground inside the prefix are included
  /// when they could match.
  std::vector<Ordinal> lookup(const std::vector<Term> &prefix) const;

  /// Leading ground arguments of `goal` in this order.
  std::vector<Term> ground_prefix(const Term &goal) const;

  struct Node {
    std::unordered_map<Term, int, TermHash> children;
    std::vector<Ordinal> ordinals;
    std::vector<SuspId> watchers;
  };
  Node &node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node &node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

  /// Answers whose descent stopped early on a non-ground argument, with
  /// the depth at which they stopped.
  struct Wild {
    Ordinal ord;
    std::size_t depth;
  };
  const std::vector<Wild> &wild() const { return wild_; }

  /// Ordinals passing through `node` (depth `depth`) plus wild answers that
  /// stopped above that depth, at or after `from`, ascending.
  std::vector<Ordinal> candidates(int node, std::size_t depth, Ordinal from,
                                  Ordinal total) const;

private:
  Permutation perm_;
  std::vector<Node> nodes_;
  std::vector<Wild> wild_;
  Ordinal count_ = 0;
};

struct Suspension {
  Term consumer_goal;       // the unabstracted call
  std::size_t payload = 0;  // owner-defined continuation handle
  Ordinal cursor = 0;       // answers already consumed
  std::size_t trie = 0;     // trie used as the consumer key
  int node = 0;             // trie node of the ground prefix
  std::size_t depth = 0;    // prefix length
};

struct TableEntry {
  EntryId id = 0;
  Term goal;
  TablePolicy policy = TablePolicy::Variant;
  std::vector<Term> answers;
  std::vector<AnswerTrie> tries; // declared permutations, identity last
  std::vector<SuspId> suspensions;
  std::unordered_map<Term, Ordinal, VariantHash, VariantEq> dedup;

  const AnswerTrie &trie_for(const Permutation &p) const;
};

class TableStore {
public:
  struct Lookup {
    EntryId id;
    bool is_new;
  };

  /// Variant policy finds a variant of `goal`; subsumptive policy finds an
  /// entry whose goal subsumes `goal`. Creates an entry for `goal` when
  /// none exists. `perms` lists the trie orders for a new entry.
  Lookup lookup_or_insert(const Term &goal, TablePolicy policy,
                          const std::vector<Permutation> &perms = {});

  /// Finds an existing entry without creating one.
  std::optional<EntryId> find(const Term &goal, TablePolicy policy) const;

  /// Appends `answer` unless a variant is present. When appended, the
  /// suspensions that may be interested are added to `woken`.
  bool insert_answer(EntryId e, const Term &answer,
                     std::vector<SuspId> *woken = nullptr);

  SuspId register_suspension(EntryId e, const Term &consumer_goal,
                             std::size_t payload);

  /// Unconsumed answers that unify with the consumer goal, in insertion
  /// order. Moves the cursor to the end of the answer list.
  std::vector<std::pair<Ordinal, Term>> pending_answers(SuspId s);
  /// True when answers were added after the suspension's cursor.
  bool has_unconsumed(SuspId s) const;

  /// Ordinals of the answers whose arguments, read in the order of `perm`,
  /// start with `prefix`.
  std::vector<Ordinal> indexed_lookup(EntryId e, const Permutation &perm,
                                      const std::vector<Term> &prefix) const;

  const TableEntry &entry(EntryId e) const { return entries_[e]; }
  TableEntry &entry(EntryId e) { return entries_[e]; }
  const Suspension &suspension(SuspId s) const { return susps_[s]; }
  EntryId entry_of(SuspId s) const { return susp_entry_[s]; }
  std::size_t size() const { return entries_.size(); }
  std::size_t suspension_count() const { return susps_.size(); }
  std::vector<EntryId> entries_of(PredKey k) const;
  std::size_t answer_count() const;

  /// `goal: [answers], [suspension:cursor, ...]`, one block per entry in
  /// creation order. `susp_text` renders a suspension's continuation;
  /// `namer` names variables of one printed form.
  using SuspText = std::function<std::string(const Suspension &)>;
  std::string dump(const SuspText &susp_text = {},
                   const std::string &indent = "") const;

  void clear();

private:
  std::vector<TableEntry> entries_;
  std::vector<Suspension> susps_;
  std::vector<EntryId> susp_entry_;
  std::unordered_map<PredKey, std::vector<EntryId>, PredKeyHash> by_pred_;
  std::unordered_map<Term, EntryId, VariantHash, VariantEq> variant_index_;
};

/// Names variables of a single printed form: display names when unique
/// within the form, `_G<id>` otherwise.
VarNamer scoped_namer(const std::vector<Term> &forms);

} // namespace stwa
