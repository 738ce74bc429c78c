// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <unistd.h>

#include "../support/random_programs.hpp"
#include "stwa/bench.hpp"
#include "stwa/engine.hpp"
#include "stwa/index_plan.hpp"
#include "stwa/oracle.hpp"

using namespace stwa;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string programs(const std::string &name) {
  return std::string(STWA_PROGRAMS_DIR) + "/" + name;
}

std::string slurp(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string squeeze(const std::string &s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c)))
      out += c;
  return out;
}

Program load(const std::string &name) {
  VarSource vs;
  return load_program_file(programs(name), vs);
}

std::vector<std::string> instances(Engine &e, const std::string &q) {
  std::vector<std::string> out;
  for (const auto &s : e.solve(std::string_view(q)))
    out.push_back(print_term(s.instance));
  return out;
}

// Splits `a,b,c` at top-level commas.
std::vector<std::string> split_top(const std::string &s) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(' || c == '[')
      ++depth;
    if (c == ')' || c == ']')
      --depth;
    if (c == ',' && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty())
    out.push_back(cur);
  return out;
}

Outcome golden_trace() {
  std::ostringstream out;
  EngineConfig cfg;
  cfg.trace = TraceMode::Machines;
  cfg.trace_out = &out;
  cfg.stwfa = true;
  Engine e(load("join_stwfa.P"), cfg);
  auto answers = instances(e, "p(a,X)");
  std::string golden = slurp(std::string(STWA_GOLDEN_DIR) + "/join_trace.txt");

  std::size_t states = 0;
  std::istringstream lines(golden);
  std::string line;
  while (std::getline(lines, line))
    states += line.rfind("S:", 0) == 0;
  // Reference order of the final p/2 answers, from the last dumped table.
  std::string rest = squeeze(golden.substr(golden.rfind("T: p(X,Y):[") + 11));
  auto ref_order = split_top(rest.substr(0, rest.find(']')));

  std::vector<std::string> table;
  for (const auto &a : e.tables().entry(0).answers)
    table.push_back(print_term(a));

  bool trace_ok = squeeze(out.str()) == squeeze(golden);
  bool table_ok = table == ref_order && table.size() == 13;
  bool answers_ok =
      answers == std::vector<std::string>{"p(a,b)", "p(a,c)"};
  std::ostringstream d;
  d << states << " states " << (trace_ok ? "match" : "differ")
    << ", final table " << table.size() << " answers"
    << (table_ok ? " in order" : " out of order") << ", answers "
    << (answers_ok ? "{X=b,X=c}" : "wrong");
  return {trace_ok && table_ok && answers_ok, d.str()};
}

Outcome graph_logs() {
  std::ostringstream out;
  EngineConfig cfg;
  cfg.trace = TraceMode::Log;
  cfg.trace_out = &out;
  Engine e(load("graph_variant.P"), cfg);
  e.solve(std::string_view("p(a,A)"));
  bool log_ok =
      out.str() == slurp(std::string(STWA_GOLDEN_DIR) + "/graph_log.txt");

  FactSet m = least_model(load("graph_variant.P"));
  const std::vector<std::set<std::string>> expected = {
      {"e(a,b)", "e(b,c)", "e(e,a)", "e(c,b)", "e(d,e)"},
      {"p(a,b)", "p(e,a)", "p(d,e)", "p(b,c)", "p(c,b)"},
      {"p(a,c)", "p(e,b)", "p(d,a)", "p(b,b)", "p(c,c)"},
      {"p(e,c)", "p(d,b)"},
      {"p(d,c)"},
      {}};
  bool iters_ok = true;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    std::set<std::string> got;
    for (const auto &f : m.at(static_cast<int>(i)))
      got.insert(print_term(f));
    iters_ok = iters_ok && got == expected[i];
  }
  std::ostringstream d;
  d << "engine log " << (log_ok ? "matches" : "differs")
    << ", oracle iterations 0-5 " << (iters_ok ? "match" : "differ");
  return {log_ok && iters_ok, d.str()};
}

// A derived clause of the unit-resolution log: `H <- B` or a proved `H`.
struct LogLine {
  std::string clause;
  std::string used;   // proposition resolved away, empty for initial clauses
  std::string parent; // clause it was derived from
};

std::vector<LogLine> reference_prop_log() {
  std::vector<LogLine> out;
  std::istringstream in(slurp(std::string(STWA_GOLDEN_DIR) + "/prop_log.txt"));
  std::string line;
  std::regex from(R"(^(.*\S)\s+from (\w+) and (.*\S)\s*$)");
  std::regex initial(R"(^(.*\S)\s+initial clause\s*$)");
  std::smatch m;
  while (std::getline(in, line)) {
    if (std::regex_match(line, m, from))
      out.push_back({squeeze(m[1]), m[2], squeeze(m[3])});
    else if (std::regex_match(line, m, initial))
      out.push_back({squeeze(m[1]), "", ""});
  }
  return out;
}

Outcome derivation_order() {
  std::vector<std::string> seq;
  Engine e(load("prop_stwa.P"));
  e.set_observer([&](const TraceEvent &ev) {
    if (ev.kind != TraceEvent::Kind::Call)
      return;
    const Term &g = ev.terms[0];
    if (g.is_functor("derived", 2))
      seq.push_back(squeeze(print_term(g.arg(0)) + "<-" +
                            print_term(g.arg(1), 1200, {})));
    else if (g.is_functor("proved", 1))
      seq.push_back(print_term(g.arg(0)));
  });
  e.solve(std::string_view("interpAtom(p)"));
  std::vector<std::string> order;
  for (const auto &a : e.tables().entry(0).answers)
    order.push_back(print_term(a.arg(0)));
  bool order_ok =
      order == std::vector<std::string>{"s", "t", "r", "u", "q", "p"};

  auto ref = reference_prop_log();
  std::vector<std::string> ref_seq;
  for (const auto &l : ref)
    ref_seq.push_back(l.clause);
  auto a = seq, b = ref_seq;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  bool same_set = a == b && seq.size() == ref.size();

  // Every derived clause comes after its parent clause and after the proof
  // of the proposition it resolved away, in both sequences.
  auto respects = [&](const std::vector<std::string> &s) {
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < s.size(); ++i)
      pos.emplace(s[i], i);
    for (const auto &l : ref) {
      if (l.parent.empty())
        continue;
      if (!pos.count(l.clause) || !pos.count(l.parent))
        return false;
      if (pos[l.parent] >= pos[l.clause])
        return false;
      if (l.used != "true" && (!pos.count(l.used) || pos[l.used] >= pos[l.clause]))
        return false;
    }
    return true;
  };
  bool deps_ok = respects(seq) && respects(ref_seq);

  // Order in which propositions become proved.
  auto proofs = [](const std::vector<std::string> &s) {
    std::vector<std::string> p;
    for (const auto &c : s)
      if (c.find("<-") == std::string::npos)
        p.push_back(c);
    return p;
  };
  bool proofs_ok = proofs(seq) == proofs(ref_seq);

  std::size_t prefix = 0;
  while (prefix < seq.size() && prefix < ref_seq.size() &&
         seq[prefix] == ref_seq[prefix])
    ++prefix;

  std::ostringstream d;
  d << "answers " << (order_ok ? "s,t,r,u,q,p" : "out of order") << ", "
    << seq.size() << "/" << ref_seq.size() << " derived clauses"
    << (same_set ? "" : " (sets differ)")
    << (deps_ok ? ", dependency order respected" : ", dependency order broken")
    << (proofs_ok ? ", same proof order" : ", proof order differs")
    << ", identical through reference line " << prefix + 1;
  return {order_ok && same_set && deps_ok && proofs_ok, d.str()};
}

Outcome differential() {
  std::mt19937 rng(20240);
  EngineConfig cfg;
  cfg.table_all = true;
  int programs_run = 0, queries = 0, answer_fail = 0, model_checked = 0,
      model_fail = 0;
  std::string first_witness;
  for (int i = 0; i < 1000; ++i) {
    auto rp = testing::random_program(rng);
    Program p = parse_program(rp.source);
    ++programs_run;
    for (const auto &q : rp.queries) {
      ++queries;
      DiffReport r = diff_with_engine(p, q, cfg);
      if (!r.answers_ok)
        ++answer_fail;
      if (r.model_checked) {
        ++model_checked;
        if (!r.model_ok)
          ++model_fail;
      }
      if (!r.ok() && first_witness.empty())
        first_witness = rp.source + "?- " + q + "\n" + r.witness;
    }
  }
  std::ostringstream d;
  d << programs_run << " programs, " << queries << " queries, "
    << answer_fail << " answer mismatches, " << model_checked
    << " model checks, " << model_fail << " model mismatches";
  if (!first_witness.empty())
    d << "\n" << first_witness;
  return {answer_fail == 0 && model_fail == 0 && model_checked > 0, d.str()};
}

std::string rules_of(const std::string &file, const std::string &fact_prefix) {
  std::istringstream in(slurp(programs(file)));
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind(fact_prefix, 0) != 0)
      out += line + "\n";
  return out;
}

std::string sentence(std::mt19937 &rng, const std::string &tag) {
  std::string s = tag;
  int words = std::uniform_int_distribution<int>(3, 8)(rng);
  for (int w = 0; w < words; ++w)
    s += " w" + std::to_string(rng() % 60);
  return s;
}

Outcome single_entry() {
  std::mt19937 rng(7);
  std::vector<std::string> corpus, inputs;
  for (int i = 0; i < 100; ++i)
    corpus.push_back(sentence(rng, "c" + std::to_string(i)));
  for (int i = 0; i < 20; ++i)
    inputs.push_back(sentence(rng, "in" + std::to_string(i)));

  // Shared corpus, one table for every word.
  std::string src = rules_of("corpus_share.P", "corpus(");
  for (const auto &s : corpus)
    src += "corpus('" + s + "').\n";
  Engine e(parse_program(src));
  std::size_t hits = 0;
  for (const auto &in : inputs)
    hits += e.solve(std::string_view("share('" + in + "',S,W)")).size();
  const auto &scans = e.stats().scans;
  int shared_bad = 0;
  for (const auto &s : corpus) {
    auto it = scans.find(s);
    shared_bad += it == scans.end() || it->second != 1;
  }

  // Corpus by book: five books of twenty sentences; queries cover three.
  std::string books = rules_of("corpus_books.P", "corpus(");
  for (std::size_t i = 0; i < corpus.size(); ++i)
    books += "corpus(isbn" + std::to_string(i / 20) + ",'" + corpus[i] + "').\n";
  Engine b(parse_program(books));
  std::set<std::size_t> queried;
  std::size_t book_hits = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::size_t book = i % 3;
    queried.insert(book);
    book_hits += b.solve(std::string_view("share('" + inputs[i] + "',isbn" +
                                          std::to_string(book) + ",S)"))
                     .size();
  }
  const auto &bscans = b.stats().scans;
  int book_bad = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto it = bscans.find(corpus[i]);
    std::uint64_t n = it == bscans.end() ? 0 : it->second;
    book_bad += n != (queried.count(i / 20) ? 1u : 0u);
  }
  std::ostringstream d;
  d << "shared corpus: " << 100 - shared_bad << "/100 sentences scanned once ("
    << hits << " answers); by book: " << 100 - book_bad
    << "/100 sentences scanned once per queried book, zero otherwise ("
    << book_hits << " answers)";
  return {shared_bad == 0 && book_bad == 0 && hits > 0 && book_hits > 0,
          d.str()};
}

Outcome linearity() {
  BenchReport r = run_triangular_bench({10000, 20000, 100000, 200000, 1000000});
  std::cout << format_bench(r);
  bool ok = r.exponent >= 0.8 && r.exponent <= 1.3;
  std::ostringstream d;
  d << "doubling ratios";
  // Doublings are 1e4->2e4 and 1e5->2e5.
  for (std::size_t i : {std::size_t{0}, std::size_t{2}}) {
    double ratio = r.ratios[i];
    d << " " << ratio;
    ok = ok && ratio >= 1.5 && ratio <= 3.0;
  }
  d << ", exponent " << r.exponent;
  return {ok, d.str()};
}

std::set<std::string> answer_set(Program p, const std::string &q,
                                 const EngineConfig &cfg) {
  Engine e(std::move(p), cfg);
  auto v = instances(e, q);
  return {v.begin(), v.end()};
}

Outcome transform_fidelity() {
  struct Case {
    std::string file;
    std::vector<std::string> queries;
  };
  const std::vector<Case> cases = {
      {"p4_index.P",
       {"p(a,B,C,D)", "p(a,b,C,D)", "p(A,B,C,a)", "p(A,b,c,d)", "p(b,B,C,D)"}},
      {"corpus_share.P",
       {"share('the cat',S,W)", "corpus_word(S,dog)", "corpus_word(S,W)"}},
      {"corpus_books.P",
       {"share('the dog',isbn1,S)", "corpus_word(isbn2,S,W)",
        "corpus_word(isbn1,S,cat)"}},
      {"emp_data.P",
       {"emp_data('emp1.P',1,N,A)", "emp_data('emp1.P',I,N,A)",
        "emp_data('emp2.P',I,N,A)"}},
      {"graph_stwa.P", {"p(a,X)", "p(X,Y)", "p(d,Y)"}},
      {"prop_interp.P", {"interpAtom(P)", "interpAtom(q)", "interpAtom(v)"}},
      {"prop_stwa.P", {"interpAtom(p)", "interpAtom(P)"}},
  };
  EngineConfig cfg;
  cfg.data_root = programs("data");
  int compared = 0, mismatches = 0;
  std::string first;
  for (const auto &c : cases) {
    Program p = load(c.file);
    std::string text = transform_program(p);
    for (const auto &q : c.queries) {
      ++compared;
      auto direct = answer_set(p, q, cfg);
      auto transformed = answer_set(parse_program(text), q, cfg);
      if (direct != transformed || direct.empty() != (q == "interpAtom(v)")) {
        ++mismatches;
        if (first.empty())
          first = c.file + " ?- " + q;
      }
    }
  }
  std::ostringstream d;
  d << compared << " queries over " << cases.size() << " programs, "
    << mismatches << " mismatches";
  if (!first.empty())
    d << " (first: " << first << ")";
  return {mismatches == 0, d.str()};
}

Outcome ingestion() {
  fs::path dir = fs::temp_directory_path() /
                 ("stwa_ingest_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  {
    std::ofstream big(dir / "big.P");
    for (int i = 1; i <= 1000; ++i)
      big << "emp(" << i << ",name" << i << ",'" << i << " main st').\n";
    std::ofstream small(dir / "small.P");
    for (int i = 1; i <= 5; ++i)
      small << "emp(" << i << ",other" << i << ",'" << i << " side st').\n";
  }
  EngineConfig cfg;
  cfg.data_root = dir.string();
  Engine e(load("emp_data.P"), cfg);
  int open_events = 0;
  e.set_observer([&](const TraceEvent &ev) {
    open_events += ev.kind == TraceEvent::Kind::FileOpen;
  });
  auto one = e.solve(std::string_view("emp_data('big.P',7,N,A)"));
  auto all = e.solve(std::string_view("emp_data('big.P',I,N,A)"));
  std::uint64_t opens_big = e.stats().files_opened;
  int events_big = open_events;

  auto small = e.solve(std::string_view("emp_data('small.P',I,N,A)"));
  auto small7 = e.solve(std::string_view("emp_data('small.P',7,N,A)"));
  auto big_again = e.solve(std::string_view("emp_data('big.P',I,N,A)"));
  std::uint64_t opens_total = e.stats().files_opened;
  fs::remove_all(dir);

  bool single = opens_big == 1 && events_big == 1 && one.size() == 1 &&
                all.size() == 1000;
  bool independent = opens_total == 2 && open_events == 2 &&
                     small.size() == 5 && small7.empty() &&
                     big_again.size() == 1000;
  std::ostringstream d;
  d << "two queries on 1000 records: " << opens_big << " open, "
    << all.size() << " answers; second file: " << small.size()
    << " answers, " << opens_total << " opens total";
  return {single && independent, d.str()};
}

} // namespace

// Optional arguments select criteria by number; default runs all.
int main(int argc, char **argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i)
    only.insert(std::atoi(argv[i]));
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria =
      {
          {"golden multiple-machine trace", golden_trace},
          {"top-down log and bottom-up iterations", graph_logs},
          {"propositional derivation order", derivation_order},
          {"differential suite against the least model", differential},
          {"producer single entry", single_entry},
          {"linearity on triangular programs", linearity},
          {"transform fidelity", transform_fidelity},
          {"file ingestion", ingestion},
      };
  int failed = 0;
  int n = 0;
  for (const auto &[name, run] : criteria) {
    ++n;
    if (!only.empty() && !only.count(n))
      continue;
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception &ex) {
      o = {false, std::string("error: ") + ex.what()};
    }
    double secs = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    failed += !o.pass;
    std::printf("%s %d %s: %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", n,
                name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed;
}
