#include "stwa/engine.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_set>

namespace stwa {

namespace {

constexpr EntryId kQuery = std::numeric_limits<EntryId>::max();
constexpr std::uint32_t kNoCut = std::numeric_limits<std::uint32_t>::max();
constexpr std::uint32_t kNoFrame = std::numeric_limits<std::uint32_t>::max();

using FrameId = std::uint32_t;

struct GoalCell {
  Term goal;
  std::shared_ptr<const GoalCell> next;
};
using Goals = std::shared_ptr<const GoalCell>;

Goals cons_goal(Term g, Goals rest) {
  return std::make_shared<const GoalCell>(GoalCell{std::move(g), std::move(rest)});
}

Goals prepend(const std::vector<Term> &front, Goals rest) {
  for (auto it = front.rbegin(); it != front.rend(); ++it)
    rest = cons_goal(*it, std::move(rest));
  return rest;
}

Goals resolve_goals(const Goals &g, const Substitution &s) {
  std::vector<Term> items;
  for (const GoalCell *c = g.get(); c; c = c->next.get())
    items.push_back(s.resolve(c->goal));
  return prepend(items, nullptr);
}

std::vector<Term> goal_vector(const Goals &g) {
  std::vector<Term> out;
  for (const GoalCell *c = g.get(); c; c = c->next.get())
    out.push_back(c->goal);
  return out;
}

bool binds_below(const Substitution &s, VarId bound) {
  for (const auto &[v, _] : s.bindings())
    if (v < bound)
      return true;
  return false;
}

enum class Origin { Query, Rule, Fact, Answer, Branch, Record };

struct Machine {
  Term head;
  Goals goals;
  EntryId target = kQuery;
  std::uint32_t line = 0;
  std::uint32_t parent_line = 0;
  Origin origin = Origin::Query;
  Term origin_term;
  std::uint32_t origin_n = 0;
  std::uint32_t cut_group = kNoCut;
  std::uint32_t clause_idx = 0;
};

enum class StepKind { None, NewTable, Suspend, Return, Fork, Fail, Collect };

struct Frame {
  FrameId id;
  std::vector<Machine> ms;
  std::size_t next = 0;
};

// First-argument index key.
struct ArgKey {
  TermKind kind;
  Symbol sym;
  std::uint32_t arity;
  std::int64_t ival;
  friend bool operator==(const ArgKey &, const ArgKey &) = default;
};
struct ArgKeyHash {
  std::size_t operator()(const ArgKey &k) const {
    std::size_t h = static_cast<std::size_t>(k.kind);
    h = h * 1000003u ^ k.sym;
    h = h * 1000003u ^ k.arity;
    h = h * 1000003u ^ static_cast<std::size_t>(k.ival);
    return h;
  }
};

std::optional<ArgKey> arg_key(const Term &t) {
  switch (t.kind()) {
  case TermKind::Var:
    return std::nullopt;
  case TermKind::Atom:
    return ArgKey{TermKind::Atom, t.functor(), 0, 0};
  case TermKind::Int:
    return ArgKey{TermKind::Int, 0, 0, t.int_value()};
  case TermKind::Compound:
    return ArgKey{TermKind::Compound, t.functor(),
                  static_cast<std::uint32_t>(t.arity()), 0};
  }
  return std::nullopt;
}

struct CompiledClause {
  Term head;
  std::vector<Term> body;
  std::vector<Term> vars;
  std::optional<VarId> cut_var;
  std::uint32_t index = 0;
};

struct PredCode {
  std::vector<CompiledClause> clauses;
  std::unordered_map<ArgKey, std::vector<std::uint32_t>, ArgKeyHash> by_key;
  std::vector<std::uint32_t> open;
  bool has_cut = false;
};

enum class Mode { Sld, Variant, Subsumptive, Index };

struct PredMode {
  Mode mode = Mode::Sld;
  const IndexPlan *plan = nullptr;
};

std::string ordinal_word(std::uint32_t n) {
  std::string suffix = "th";
  if (n % 100 < 11 || n % 100 > 13) {
    if (n % 10 == 1)
      suffix = "st";
    else if (n % 10 == 2)
      suffix = "nd";
    else if (n % 10 == 3)
      suffix = "rd";
  }
  return std::to_string(n) + suffix;
}

// Value of a variable under a one-sided match. Matches may map a variable
// into terms containing variables of the same domain, so no walking.
Term image(const Substitution &th, const Term &v) {
  const Term *t = th.lookup(v.var_id());
  return t ? *t : v;
}

// Shows compiled cut markers as the `!` they came from.
Term show_cuts(const Term &t) {
  static const Symbol mark = intern("$cut");
  if (t.is_compound() && t.functor() == mark && t.arity() == 1)
    return Term::atom("!");
  if (t.is_functor(",", 2) || t.is_functor(";", 2) || t.is_functor("->", 2))
    return Term::compound(t.functor(),
                          {show_cuts(t.arg(0)), show_cuts(t.arg(1))});
  return t;
}

std::string print_arg(const Term &t, const VarNamer &namer) {
  return print_term(show_cuts(t), 999, namer);
}

VarNamer question_namer() {
  return [](const Term &) { return std::string("?"); };
}

} // namespace

// ---------------------------------------------------------------------------

struct Engine::Impl {
  Program program;
  EngineConfig config;
  VarSource vars;
  TableStore tables;
  EngineStats stats;
  std::uint64_t query_start_steps = 0;
  std::function<void(const Solution &)> solution_cb;
  std::function<void(const TraceEvent &)> observer;

  std::map<PredKey, PredCode> code;
  std::map<PredKey, PredMode> modes;
  std::map<PredKey, IndexPlan> plans;

  // Scheduler state.
  std::vector<Frame> stack;
  std::vector<FrameId> uf;
  std::vector<std::uint32_t> uf_size;
  std::vector<bool> alive;
  std::vector<FrameId> fparent;
  std::vector<std::vector<FrameId>> children;
  std::vector<std::set<SuspId>> dirty;
  std::vector<FrameId> susp_owner;
  std::vector<std::uint32_t> susp_line;
  std::vector<Machine> continuations; // indexed by suspension payload
  std::vector<std::uint32_t> cut_at;
  FrameId b0 = kNoFrame;
  bool final_phase = false;

  // Current solve.
  std::vector<Solution> solutions;
  std::unordered_set<Term, VariantHash, VariantEq> seen_solutions;
  std::vector<Term> query_vars;

  // Tracing.
  std::uint32_t line_counter = 0;
  std::vector<std::uint32_t> line_depth{0};
  StepKind pending = StepKind::None;
  std::string prev_state;

  Symbol s_true, s_fail, s_false, s_eq, s_neq, s_ideq, s_nideq, s_var,
      s_nonvar, s_atom, s_integer, s_atomic, s_call, s_scan, s_data,
      s_table_error, s_cutmark, s_cutgroup, s_read, s_csv;

  Impl(Program p, EngineConfig c) : program(std::move(p)), config(std::move(c)) {
    s_true = intern("true");
    s_fail = intern("fail");
    s_false = intern("false");
    s_eq = intern("=");
    s_neq = intern("\\=");
    s_ideq = intern("==");
    s_nideq = intern("\\==");
    s_var = intern("var");
    s_nonvar = intern("nonvar");
    s_atom = intern("atom");
    s_integer = intern("integer");
    s_atomic = intern("atomic");
    s_call = intern("call");
    s_scan = intern("scan");
    s_data = intern("data_records");
    s_table_error = intern("table_error");
    s_cutmark = intern("$cut");
    s_cutgroup = intern("$cg");
    s_read = intern("read");
    s_csv = intern("csv");

    VarId top = 0;
    for (const auto &c : program.clauses) {
      top = std::max(top, max_var(c.head));
      for (const auto &b : c.body)
        top = std::max(top, max_var(b));
    }
    for (const auto &d : program.directives)
      top = std::max(top, max_var(d.source));
    for (const auto &q : program.queries)
      top = std::max(top, max_var(q));
    vars = VarSource(top + 1);
    compile_clauses();
  }

  // -------------------------------------------------------------------------
  // Clause preparation

  Term rewrite_cut(const Term &g, const Term &cut_var, bool &found) {
    if (g.is_atom("!")) {
      found = true;
      return Term::compound(s_cutmark, {cut_var});
    }
    if (g.is_functor(",", 2) || g.is_functor(";", 2) || g.is_functor("->", 2)) {
      Term a = rewrite_cut(g.arg(0), cut_var, found);
      Term b = rewrite_cut(g.arg(1), cut_var, found);
      return Term::compound(g.functor(), {a, b});
    }
    return g;
  }

  void compile_clauses() {
    for (const auto &c : program.clauses) {
      PredKey k = pred_of(c.head);
      PredCode &pc = code[k];
      CompiledClause cc;
      cc.index = static_cast<std::uint32_t>(pc.clauses.size());
      cc.head = c.head;
      Term cut_var = vars.fresh();
      bool found = false;
      for (const auto &b : c.body)
        cc.body.push_back(rewrite_cut(b, cut_var, found));
      if (found) {
        cc.cut_var = cut_var.var_id();
        pc.has_cut = true;
      }
      std::unordered_set<VarId> seen;
      auto add_vars = [&](const Term &t) {
        for (const auto &v : variables_of(t))
          if (!(found && v.var_id() == cut_var.var_id()) &&
              seen.insert(v.var_id()).second)
            cc.vars.push_back(v);
      };
      add_vars(cc.head);
      for (const auto &b : cc.body)
        add_vars(b);
      std::optional<ArgKey> key;
      if (cc.head.arity() > 0)
        key = arg_key(cc.head.arg(0));
      if (key)
        pc.by_key[*key].push_back(cc.index);
      else
        pc.open.push_back(cc.index);
      pc.clauses.push_back(std::move(cc));
    }
    // Open clauses must also be found under every key.
    for (auto &[_, pc] : code) {
      if (pc.open.empty())
        continue;
      for (auto &[__, list] : pc.by_key) {
        std::vector<std::uint32_t> merged;
        std::merge(list.begin(), list.end(), pc.open.begin(), pc.open.end(),
                   std::back_inserter(merged));
        list = std::move(merged);
      }
    }
  }

  std::vector<std::uint32_t> candidates(const PredCode &pc, const Term &goal) {
    if (goal.arity() > 0) {
      if (auto key = arg_key(goal.arg(0))) {
        auto it = pc.by_key.find(*key);
        return it == pc.by_key.end() ? pc.open : it->second;
      }
    }
    std::vector<std::uint32_t> out(pc.clauses.size());
    for (std::uint32_t i = 0; i < out.size(); ++i)
      out[i] = i;
    return out;
  }

  // -------------------------------------------------------------------------
  // Predicate modes

  PredMode mode_of(PredKey k) {
    if (auto it = modes.find(k); it != modes.end())
      return it->second;
    PredMode m;
    const Directive *d = program.table_directive(k);
    if (d && d->kind == Directive::Kind::TableIndex) {
      auto [it, _] = plans.insert_or_assign(k, compile_index(*d));
      m = {Mode::Index, &it->second};
    } else if (d && d->kind == Directive::Kind::TableVariant) {
      m.mode = Mode::Variant;
    } else if (d && d->kind == Directive::Kind::TableSubsumptive) {
      m.mode = Mode::Subsumptive;
    } else if (config.stwfa && program.defines(k) && !is_builtin(k)) {
      auto [it, _] = plans.insert_or_assign(k, compile_index(k, {IndexSpec{}}));
      m = {Mode::Index, &it->second};
    } else if (config.table_all && program.defines(k) && !is_builtin(k)) {
      m.mode = Mode::Variant;
    }
    modes.emplace(k, m);
    return m;
  }

  // -------------------------------------------------------------------------
  // Frames and wake-up bookkeeping

  FrameId new_frame(FrameId parent) {
    auto id = static_cast<FrameId>(uf.size());
    uf.push_back(id);
    uf_size.push_back(1);
    alive.push_back(true);
    fparent.push_back(parent);
    children.emplace_back();
    dirty.emplace_back();
    if (parent != kNoFrame)
      children[parent].push_back(id);
    return id;
  }

  void push_frame(std::vector<Machine> ms, FrameId parent) {
    FrameId id = new_frame(parent);
    stack.push_back(Frame{id, std::move(ms), 0});
  }

  // Pushes one frame per machine so the first machine runs first.
  void push_each(std::vector<Machine> ms, FrameId parent) {
    for (auto it = ms.rbegin(); it != ms.rend(); ++it) {
      std::vector<Machine> one;
      one.push_back(std::move(*it));
      push_frame(std::move(one), parent);
    }
  }

  FrameId find(FrameId f) {
    while (uf[f] != f) {
      uf[f] = uf[uf[f]];
      f = uf[f];
    }
    return f;
  }

  void unite(FrameId a, FrameId b) {
    a = find(a);
    b = find(b);
    if (a == b)
      return;
    if (uf_size[a] < uf_size[b])
      std::swap(a, b);
    uf[b] = a;
    uf_size[a] += uf_size[b];
    auto &da = dirty[a];
    auto &db = dirty[b];
    if (da.size() < db.size())
      da.swap(db);
    da.insert(db.begin(), db.end());
    db.clear();
  }

  void mark_dirty(SuspId s) { dirty[find(susp_owner[s])].insert(s); }

  std::vector<Machine> collect(FrameId root) {
    std::set<SuspId> ds;
    ds.swap(dirty[root]);
    std::vector<Machine> forks;
    for (SuspId s : ds) {
      ++stats.steps;
      check_limit();
      const Machine &cont = continuations[tables.suspension(s).payload];
      for (auto &[ord, ans] : tables.pending_answers(s))
        answer_fork(cont, ans, forks);
    }
    return forks;
  }

  void answer_fork(const Machine &cont, const Term &answer,
                   std::vector<Machine> &out) {
    const Term &call = cont.goals->goal;
    Term ans = answer.is_ground() ? answer : rename_apart(answer, vars);
    Substitution s;
    if (!unify_into(call, ans, s))
      return;
    Machine m;
    m.head = s.resolve(cont.head);
    m.goals = resolve_goals(cont.goals->next, s);
    m.target = cont.target;
    m.parent_line = cont.line;
    m.origin = Origin::Answer;
    m.origin_term = answer;
    emit(TraceEvent::Kind::ForkAnswer, {call, answer});
    out.push_back(std::move(m));
  }

  void pop_frame(FrameId g) {
    for (FrameId c : children[g])
      unite(g, c);
    if (fparent[g] != kNoFrame && !alive[fparent[g]])
      unite(g, fparent[g]);
    FrameId x = find(g);
    if (dirty[x].empty())
      return;
    auto forks = collect(x);
    if (forks.empty())
      return;
    push_frame(std::move(forks), x);
    on_step(StepKind::Collect);
  }

  // -------------------------------------------------------------------------
  // Events and tracing

  void emit(TraceEvent::Kind k, std::vector<Term> terms) {
    if (observer)
      observer(TraceEvent{k, std::move(terms), stats.steps});
  }

  std::ostream &out() {
    return config.trace_out ? *config.trace_out : std::cout;
  }

  void check_limit() {
    if (stats.steps - query_start_steps > config.step_limit)
      throw ResourceError("step limit of " + std::to_string(config.step_limit) +
                          " exceeded");
  }

  std::string machine_text(const Machine &m) {
    std::vector<Term> forms{m.head};
    for (const GoalCell *c = m.goals.get(); c; c = c->next.get())
      forms.push_back(c->goal);
    VarNamer namer = scoped_namer(forms);
    std::string s;
    if (m.target != kQuery)
      s += print_arg(m.head, namer);
    s += "<-";
    bool first = true;
    for (const GoalCell *c = m.goals.get(); c; c = c->next.get()) {
      if (!first)
        s += ',';
      first = false;
      s += print_arg(c->goal, namer);
    }
    return s;
  }

  std::string state_text() {
    std::string s = "S:";
    bool first = true;
    for (auto it = stack.rbegin(); it != stack.rend(); ++it)
      for (std::size_t i = it->next; i < it->ms.size(); ++i) {
        s += first ? " " : "; ";
        first = false;
        s += machine_text(it->ms[i]);
      }
    s += "\nT:";
    std::string t = tables.dump(
        [this](const Suspension &su) {
          return machine_text(continuations[su.payload]);
        },
        "   ");
    if (!t.empty())
      s += " " + t;
    return s;
  }

  void emit_state(const std::string &s) { out() << s << "\n\n"; }

  void on_step(StepKind k) {
    if (config.trace != TraceMode::Machines || final_phase)
      return;
    std::string cur = state_text();
    if (pending != StepKind::None && pending != k)
      emit_state(prev_state);
    if (k == StepKind::NewTable || k == StepKind::Collect) {
      emit_state(cur);
      pending = StepKind::None;
    } else {
      pending = k;
    }
    prev_state = std::move(cur);
  }

  std::string goals_text(const Machine &m) {
    if (!m.goals) {
      std::string s = "()";
      if (m.target != kQuery) {
        const Term &g = tables.entry(m.target).goal;
        if (auto th = subsumes(g, m.head)) {
          std::string b;
          for (const auto &v : variables_of(g)) {
            if (v.var_name() == 0)
              continue;
            if (!b.empty())
              b += ',';
            b += symbol_name(v.var_name()) + "=" +
                 print_arg(image(*th, v), scoped_namer({m.head}));
          }
          if (!b.empty())
            s += " " + b;
        }
      }
      return s;
    }
    auto goals = goal_vector(m.goals);
    VarNamer namer = scoped_namer(goals);
    std::string s;
    for (std::size_t i = 0; i < goals.size(); ++i) {
      if (i)
        s += ',';
      s += print_arg(goals[i], namer);
    }
    return s;
  }

  std::string origin_text(const Machine &m) {
    std::string k = std::to_string(m.parent_line);
    switch (m.origin) {
    case Origin::Query:
      return "";
    case Origin::Rule:
      return "resolve " + k + " with " + ordinal_word(m.origin_n) + " rule";
    case Origin::Fact:
      return "resolve " + k + " with fact " +
             print_arg(m.origin_term, scoped_namer({m.origin_term}));
    case Origin::Answer:
      return "resolve " + k + " with answer " +
             print_arg(m.origin_term, scoped_namer({m.origin_term})) +
             " from table";
    case Origin::Branch:
      return "branch of " + k;
    case Origin::Record:
      return "resolve " + k + " with record " +
             print_arg(m.origin_term, scoped_namer({m.origin_term}));
    }
    return "";
  }

  void log_line(std::uint32_t line, std::uint32_t depth, const std::string &goals,
                const std::vector<std::string> &parts) {
    std::string s = std::to_string(line) + " " + std::string(2 * depth, ' ') + goals;
    std::string desc;
    for (const auto &p : parts) {
      if (p.empty())
        continue;
      if (!desc.empty())
        desc += ", ";
      desc += p;
    }
    if (!desc.empty()) {
      if (s.size() < 20)
        s.append(20 - s.size(), ' ');
      else
        s += ' ';
      s += desc;
    }
    out() << s << "\n";
  }

  // -------------------------------------------------------------------------
  // Machine execution

  struct RunResult {
    StepKind kind = StepKind::Fail;
    std::string outcome;
  };

  bool logging() const {
    return config.trace == TraceMode::Log && !final_phase;
  }

  void run_machine(Machine m, FrameId fid) {
    ++stats.machines;
    std::string start_text;
    std::uint32_t depth = 0;
    if (logging()) {
      m.line = ++line_counter;
      depth = m.parent_line < line_depth.size() && m.parent_line
                  ? line_depth[m.parent_line] + 1
                  : 0;
      if (line_depth.size() <= m.line)
        line_depth.resize(m.line + 1, 0);
      line_depth[m.line] = depth;
      start_text = goals_text(m);
    }
    std::string origin = logging() ? origin_text(m) : std::string();
    RunResult r = step_machine(m, fid);
    if (logging())
      log_line(m.line, depth, start_text, {origin, r.outcome});
    on_step(r.kind);
  }

  RunResult step_machine(Machine &m, FrameId fid) {
    for (;;) {
      ++stats.steps;
      check_limit();
      if (!m.goals)
        return do_return(m);
      Term goal = m.goals->goal;
      Goals rest = m.goals->next;
      if (goal.is_var())
        throw InstantiationError("instantiation error: unbound goal");
      if (!goal.is_atom() && !goal.is_compound())
        throw EngineError("type error: callable expected, got " + print_term(goal));
      Symbol f = goal.functor();
      std::size_t n = goal.arity();

      if (n == 2 && f == sym::comma) {
        m.goals = cons_goal(goal.arg(0), cons_goal(goal.arg(1), rest));
        continue;
      }
      if (n == 0 && (f == s_true || f == sym::cut)) {
        m.goals = rest;
        continue;
      }
      if (n == 0 && (f == s_fail || f == s_false))
        return {};
      if (n == 1 && f == s_call) {
        m.goals = cons_goal(goal.arg(0), rest);
        continue;
      }
      if (n == 1 && f == s_cutmark) {
        const Term &cg = goal.arg(0);
        if (cg.is_functor("$cg", 2)) {
          auto g = static_cast<std::size_t>(cg.arg(0).int_value());
          auto idx = static_cast<std::uint32_t>(cg.arg(1).int_value());
          cut_at[g] = std::min(cut_at[g], idx);
        }
        m.goals = rest;
        continue;
      }
      if (n == 2 && f == sym::semi) {
        const Term &left = goal.arg(0);
        if (left.is_functor("->", 2)) {
          Substitution s;
          if (inline_test(left.arg(0), s)) {
            apply(m, s, cons_goal(left.arg(1), rest));
          } else {
            m.goals = cons_goal(goal.arg(1), rest);
          }
          continue;
        }
        std::vector<Machine> forks;
        for (int i = 0; i < 2; ++i) {
          Machine b = m;
          b.goals = cons_goal(goal.arg(i), rest);
          b.parent_line = m.line;
          b.origin = Origin::Branch;
          b.cut_group = m.cut_group;
          b.clause_idx = m.clause_idx;
          forks.push_back(std::move(b));
        }
        push_each(std::move(forks), fid);
        return {StepKind::Fork, ""};
      }
      if (n == 2 && f == sym::ifthen) {
        Substitution s;
        if (!inline_test(goal.arg(0), s))
          return {};
        apply(m, s, cons_goal(goal.arg(1), rest));
        continue;
      }
      if (is_inline(f, n)) {
        Substitution s;
        if (!inline_test(goal, s))
          return {};
        apply(m, s, rest);
        continue;
      }
      if (n == 1 && f == s_table_error) {
        const Term &a = goal.arg(0);
        throw TableError(a.is_atom() ? symbol_name(a.functor()) : print_term(a));
      }
      if (n == 2 && f == s_scan) {
        Substitution s;
        if (!run_scan(goal, s))
          return {};
        apply(m, s, rest);
        continue;
      }
      if (n == 3 && f == s_data) {
        run_data_records(m, goal, rest, fid);
        return {StepKind::Fork, ""};
      }
      return call_user(m, goal, rest, fid);
    }
  }

  // Applies a substitution produced by a step to the machine, with `goals`
  // as the new goal list (still unresolved).
  void apply(Machine &m, const Substitution &s, Goals goals) {
    if (s.empty()) {
      m.goals = std::move(goals);
      return;
    }
    m.head = s.resolve(m.head);
    m.goals = resolve_goals(goals, s);
  }

  bool is_inline(Symbol f, std::size_t n) const {
    if (n == 2)
      return f == s_eq || f == s_neq || f == s_ideq || f == s_nideq;
    if (n == 1)
      return f == s_var || f == s_nonvar || f == s_atom || f == s_integer ||
             f == s_atomic;
    return false;
  }

  // Evaluates a condition made of inline builtins.
  bool inline_test(const Term &raw, Substitution &s) {
    Term g = s.resolve(raw);
    if (g.is_var())
      throw InstantiationError("instantiation error in condition");
    Symbol f = g.is_atom() || g.is_compound() ? g.functor() : 0;
    std::size_t n = g.is_compound() ? g.arity() : 0;
    if (n == 2 && f == sym::comma)
      return inline_test(g.arg(0), s) && inline_test(g.arg(1), s);
    if (n == 0 && f == s_true)
      return true;
    if (n == 0 && (f == s_fail || f == s_false))
      return false;
    if (n == 2 && f == s_eq)
      return unify_into(g.arg(0), g.arg(1), s);
    if (n == 2 && f == s_neq)
      return !unify(g.arg(0), g.arg(1)).has_value();
    if (n == 2 && f == s_ideq)
      return g.arg(0) == g.arg(1);
    if (n == 2 && f == s_nideq)
      return !(g.arg(0) == g.arg(1));
    if (n == 1) {
      const Term &a = g.arg(0);
      if (f == s_var)
        return a.is_var();
      if (f == s_nonvar)
        return !a.is_var();
      if (f == s_atom)
        return a.is_atom();
      if (f == s_integer)
        return a.is_int();
      if (f == s_atomic)
        return a.is_atomic();
    }
    throw EngineError("unsupported goal in if-then-else condition: " +
                      print_term(g));
  }

  bool run_scan(const Term &goal, Substitution &s) {
    const Term &a = goal.arg(0);
    if (a.is_var())
      throw InstantiationError("instantiation error: scan/2 needs a bound first argument");
    if (!a.is_atom())
      throw EngineError("type error: scan/2 expects an atom, got " + print_term(a));
    const std::string &text = symbol_name(a.functor());
    ++stats.scans[text];
    std::istringstream in(text);
    std::vector<Term> words;
    std::string w;
    while (in >> w)
      words.push_back(Term::atom(w));
    return unify_into(goal.arg(1), Term::list(words), s);
  }

  std::string resolve_data_path(const std::string &name) {
    std::filesystem::path p(name);
    if (p.is_absolute())
      return name;
    std::string root = config.data_root;
    if (root.empty())
      if (const char *env = std::getenv("STWA_DATA_ROOT"))
        root = env;
    if (root.empty())
      return name;
    return (std::filesystem::path(root) / p).string();
  }

  void run_data_records(Machine &m, const Term &goal, const Goals &rest,
                        FrameId fid) {
    const Term &file = goal.arg(0);
    const Term &format = goal.arg(1);
    if (file.is_var() || format.is_var())
      throw InstantiationError(
          "instantiation error: data_records/3 needs a file name and a format");
    if (!file.is_atom())
      throw EngineError("type error: data_records/3 expects an atom file name");
    std::string path = resolve_data_path(symbol_name(file.functor()));
    ++stats.files_opened;
    emit(TraceEvent::Kind::FileOpen, {Term::atom(path)});
    std::vector<Term> records = read_data_records(path, format, vars);
    std::vector<Machine> forks;
    for (const auto &rec : records) {
      Substitution s;
      if (!unify_into(goal.arg(2), rec, s))
        continue;
      Machine f;
      f.head = s.resolve(m.head);
      f.goals = resolve_goals(rest, s);
      f.target = m.target;
      f.parent_line = m.line;
      f.origin = Origin::Record;
      f.origin_term = rec;
      f.cut_group = m.cut_group;
      f.clause_idx = m.clause_idx;
      forks.push_back(std::move(f));
    }
    push_each(std::move(forks), fid);
  }

  // Renames clause `cc`, unifies its head with `goal` and builds the new
  // machine. Returns false when the head does not unify.
  bool clause_fork(const CompiledClause &cc, const Term &goal, const Term &head,
                   const Goals &rest, EntryId target, std::uint32_t parent_line,
                   std::uint32_t group, Machine &out) {
    VarId fresh_start = vars.peek();
    Term h = cc.head;
    std::vector<Term> body = cc.body;
    if (!cc.vars.empty() || cc.cut_var) {
      Substitution ren;
      for (const auto &v : cc.vars)
        ren.bind(v.var_id(), vars.fresh(v.var_name()));
      if (cc.cut_var)
        ren.bind(*cc.cut_var,
                 Term::compound(s_cutgroup,
                                {Term::integer(static_cast<std::int64_t>(group)),
                                 Term::integer(cc.index)}));
      h = ren.resolve(h);
      for (auto &b : body)
        b = ren.resolve(b);
    }
    Substitution s;
    if (!unify_into(goal, h, s))
      return false;
    bool old = binds_below(s, fresh_start);
    for (auto &b : body)
      b = s.resolve(b);
    out.head = old ? s.resolve(head) : head;
    out.goals = prepend(body, old ? resolve_goals(rest, s) : rest);
    out.target = target;
    out.parent_line = parent_line;
    if (cc.body.empty()) {
      out.origin = Origin::Fact;
      out.origin_term = h;
    } else {
      out.origin = Origin::Rule;
      out.origin_n = cc.index + 1;
    }
    if (group != kNoCut) {
      out.cut_group = group;
      out.clause_idx = cc.index;
    }
    return true;
  }

  std::uint32_t new_cut_group() {
    cut_at.push_back(std::numeric_limits<std::uint32_t>::max());
    return static_cast<std::uint32_t>(cut_at.size() - 1);
  }

  RunResult call_user(Machine &m, const Term &goal, const Goals &rest,
                      FrameId fid) {
    PredKey k = pred_of(goal);
    emit(TraceEvent::Kind::Call, {goal});
    PredMode pm = mode_of(k);
    if (pm.mode == Mode::Sld) {
      auto it = code.find(k);
      if (it == code.end())
        throw ExistenceError("existence error: unknown procedure " + to_string(k));
      const PredCode &pc = it->second;
      std::uint32_t group = pc.has_cut ? new_cut_group() : kNoCut;
      std::vector<Machine> forks;
      for (std::uint32_t i : candidates(pc, goal)) {
        Machine f;
        if (clause_fork(pc.clauses[i], goal, m.head, rest, m.target, m.line,
                        group, f)) {
          emit(TraceEvent::Kind::ForkClause, {goal, pc.clauses[i].head});
          forks.push_back(std::move(f));
        }
      }
      if (forks.empty())
        return {};
      push_each(std::move(forks), fid);
      return {StepKind::Fork, ""};
    }
    return tabled_call(m, goal, k, pm, fid);
  }

  RunResult tabled_call(Machine &m, const Term &goal, PredKey k,
                        const PredMode &pm, FrameId fid) {
    TableStore::Lookup lk{};
    if (pm.mode == Mode::Index) {
      Abstraction ab;
      try {
        ab = abstract_call(goal, *pm.plan, vars);
      } catch (const IllegalModeError &) {
        emit(TraceEvent::Kind::IllegalMode, {goal});
        throw;
      }
      lk = tables.lookup_or_insert(ab.abstracted, TablePolicy::Subsumptive,
                                   pm.plan->permutations);
    } else {
      lk = tables.lookup_or_insert(goal,
                                   pm.mode == Mode::Variant
                                       ? TablePolicy::Variant
                                       : TablePolicy::Subsumptive);
    }
    RunResult r{StepKind::Suspend, ""};
    if (lk.is_new) {
      const Term entry_goal = tables.entry(lk.id).goal;
      ++stats.tables_created[k];
      emit(TraceEvent::Kind::NewTable, {entry_goal, goal});
      r.kind = StepKind::NewTable;
      if (logging())
        r.outcome = std::string(m.target == kQuery && m.origin == Origin::Query
                                    ? "add query "
                                    : "add call ") +
                    print_arg(entry_goal, question_namer()) + " to table";
      std::vector<Machine> producers;
      if (auto it = code.find(k); it != code.end()) {
        const PredCode &pc = it->second;
        std::uint32_t group = pc.has_cut ? new_cut_group() : kNoCut;
        for (std::uint32_t i : candidates(pc, entry_goal)) {
          Machine f;
          if (clause_fork(pc.clauses[i], entry_goal, entry_goal, nullptr,
                          lk.id, m.line, group, f)) {
            ++stats.clause_forks[k];
            emit(TraceEvent::Kind::ForkClause, {entry_goal, pc.clauses[i].head});
            producers.push_back(std::move(f));
          }
        }
      }
      register_consumer(m, goal, lk.id, fid);
      push_each(std::move(producers), fid);
      return r;
    }
    register_consumer(m, goal, lk.id, fid);
    return r;
  }

  void register_consumer(const Machine &m, const Term &goal, EntryId e,
                         FrameId fid) {
    std::size_t payload = continuations.size();
    continuations.push_back(m);
    SuspId s = tables.register_suspension(e, goal, payload);
    if (susp_owner.size() <= s) {
      susp_owner.resize(s + 1, kNoFrame);
      susp_line.resize(s + 1, 0);
    }
    susp_owner[s] = fid;
    susp_line[s] = m.line;
    emit(TraceEvent::Kind::Suspend, {goal});
    if (tables.has_unconsumed(s))
      mark_dirty(s);
  }

  RunResult do_return(Machine &m) {
    if (m.target == kQuery) {
      record_solution(m.head);
      return {StepKind::Return, ""};
    }
    std::vector<SuspId> woken;
    const Term &entry_goal = tables.entry(m.target).goal;
    bool added = tables.insert_answer(m.target, m.head, &woken);
    RunResult r{StepKind::Return, ""};
    std::string ans;
    if (logging())
      ans = print_arg(m.head, scoped_namer({m.head}));
    if (added) {
      emit(TraceEvent::Kind::NewAnswer, {entry_goal, m.head});
      for (SuspId s : woken)
        mark_dirty(s);
      if (logging())
        r.outcome = "add answer " + ans + " to table";
    } else {
      emit(TraceEvent::Kind::DuplicateAnswer, {entry_goal, m.head});
      if (logging())
        r.outcome = ans + " in table, don't add";
    }
    return r;
  }

  void record_solution(const Term &instance) {
    if (!seen_solutions.insert(instance).second)
      return;
    Solution sol;
    sol.instance = instance;
    if (auto th = subsumes(query_template, instance)) {
      for (const auto &v : query_vars) {
        Term val = image(*th, v);
        if (!(val == v))
          sol.bindings.emplace_back(symbol_name(v.var_name()), val);
      }
    }
    solutions.push_back(sol);
    if (solution_cb)
      solution_cb(solutions.back());
  }

  Term query_template;

  // -------------------------------------------------------------------------
  // Solve

  std::vector<Solution> solve(const Term &query) {
    if (!query.is_atom() && !query.is_compound())
      throw InstantiationError("query must be a callable term");
    if (!stack.empty())
      throw EngineError("solve is not reentrant");
    modes.clear();
    solutions.clear();
    seen_solutions.clear();
    query_template = query;
    query_vars.clear();
    for (const auto &v : variables_of(query))
      if (v.var_name() != 0 && symbol_name(v.var_name())[0] != '_')
        query_vars.push_back(v);
    final_phase = false;
    query_start_steps = stats.steps;
    pending = StepKind::None;
    prev_state.clear();

    Machine q;
    q.head = query;
    q.goals = cons_goal(query, nullptr);
    q.target = kQuery;
    q.origin = Origin::Query;
    b0 = new_frame(kNoFrame);
    std::vector<Machine> ms;
    ms.push_back(std::move(q));
    stack.push_back(Frame{b0, std::move(ms), 0});
    if (config.trace == TraceMode::Machines)
      emit_state(state_text());

    try {
      run_loop();
    } catch (...) {
      stack.clear();
      for (auto &d : dirty)
        d.clear();
      throw;
    }
    return solutions;
  }

  bool pruned(const Machine &m) const {
    return m.cut_group != kNoCut && cut_at[m.cut_group] < m.clause_idx;
  }

  void run_loop() {
    while (!stack.empty()) {
      Frame &f = stack.back();
      if (f.next < f.ms.size()) {
        Machine m = std::move(f.ms[f.next++]);
        FrameId fid = f.id;
        if (pruned(m))
          continue;
        run_machine(std::move(m), fid);
        if (config.stream)
          stream_query();
        continue;
      }
      FrameId g = f.id;
      stack.pop_back();
      alive[g] = false;
      if (g == b0) {
        if (config.trace == TraceMode::Machines && pending != StepKind::None)
          emit_state(prev_state);
        pending = StepKind::None;
        final_phase = true;
      }
      pop_frame(g);
    }
  }

  // Hands new query answers over immediately instead of at quiescence.
  void stream_query() {
    FrameId r = find(b0);
    if (r != b0 || dirty[r].empty() || !alive[b0])
      return;
    auto forks = collect(r);
    if (!forks.empty())
      push_frame(std::move(forks), b0);
  }
};

// ---------------------------------------------------------------------------

Engine::Engine(Program program, EngineConfig config)
    : impl_(std::make_unique<Impl>(std::move(program), std::move(config))) {}

Engine::~Engine() = default;

Term Engine::parse_query(std::string_view text) {
  std::string t(text);
  while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back())))
    t.pop_back();
  if (!t.empty() && t.back() == '.')
    t.pop_back();
  std::string_view v(t);
  if (v.substr(0, 2) == "?-")
    v.remove_prefix(2);
  std::map<std::string, Term> names;
  return parse_term(v, impl_->vars, &names);
}

std::vector<Solution> Engine::solve(const Term &query) {
  return impl_->solve(query);
}

std::vector<Solution> Engine::solve(std::string_view query) {
  return impl_->solve(parse_query(query));
}

void Engine::on_solution(std::function<void(const Solution &)> cb) {
  impl_->solution_cb = std::move(cb);
}

void Engine::set_observer(std::function<void(const TraceEvent &)> obs) {
  impl_->observer = std::move(obs);
}

const TableStore &Engine::tables() const { return impl_->tables; }

std::string Engine::dump_tables() const {
  return impl_->tables.dump([this](const Suspension &s) {
    return impl_->machine_text(impl_->continuations[s.payload]);
  });
}

const EngineStats &Engine::stats() const { return impl_->stats; }
const Program &Engine::program() const { return impl_->program; }
EngineConfig &Engine::config() { return impl_->config; }

const IndexPlan *Engine::plan_for(PredKey k) const {
  PredMode m = impl_->mode_of(k);
  return m.plan;
}

// ---------------------------------------------------------------------------
// Data files

namespace {

std::string trim(const std::string &s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a])))
    ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
    --b;
  return s.substr(a, b - a);
}

Term csv_field(const std::string &raw) {
  std::string f = trim(raw);
  if (f.size() >= 2 && f.front() == '"' && f.back() == '"')
    return Term::atom(f.substr(1, f.size() - 2));
  bool digits = !f.empty();
  for (std::size_t i = 0; i < f.size(); ++i) {
    char c = f[i];
    if (!(std::isdigit(static_cast<unsigned char>(c)) ||
          (i == 0 && c == '-' && f.size() > 1)))
      digits = false;
  }
  if (digits) {
    try {
      return Term::integer(std::stoll(f));
    } catch (const std::out_of_range &) {
    }
  }
  return Term::atom(f);
}

} // namespace

std::vector<Term> read_data_records(const std::string &path,
                                    const Term &format, VarSource &vars) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot open data file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  std::vector<Term> out;
  if (format.is_atom("read")) {
    Program p;
    try {
      p = parse_program(text, vars);
    } catch (const ParseError &e) {
      throw InputError("bad record in '" + path + "': " + e.what());
    }
    for (const auto &c : p.clauses) {
      if (c.body.empty())
        out.push_back(c.head);
      else
        out.push_back(Term::compound(sym::neck, {c.head, make_conjunction(c.body)}));
    }
    return out;
  }
  if (format.is_functor("csv", 1) && format.arg(0).is_atom()) {
    Symbol f = format.arg(0).functor();
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      if (trim(line).empty())
        continue;
      std::vector<Term> fields;
      std::string cell;
      std::istringstream cells(line);
      while (std::getline(cells, cell, ','))
        fields.push_back(csv_field(cell));
      if (!line.empty() && line.back() == ',')
        fields.push_back(Term::atom(""));
      out.push_back(Term::compound(f, std::move(fields)));
    }
    return out;
  }
  throw InputError("unknown data_records format " + print_term(format));
}

} // namespace stwa
