#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "stwa/bench.hpp"
#include "stwa/engine.hpp"
#include "stwa/index_plan.hpp"
#include "stwa/oracle.hpp"
#include "stwa/program.hpp"

using namespace stwa;

namespace {

constexpr int kAnswers = 0;
constexpr int kNoAnswers = 1;
constexpr int kError = 2;

const char *kEmpProgram = R"(:- table_index(emp_data/4,[1+2,1]).
emp_data(FileName,EmpId,Name,Addr) :-
    data_records(FileName,read,emp(EmpId,Name,Addr)).
)";

struct RunOptions {
  std::vector<std::string> files;
  std::string query;
  std::string trace = "off";
  std::uint64_t step_limit = EngineConfig{}.step_limit;
  bool stream = false;
  std::string format = "text";
  bool stwfa = false;
  std::string data_root;
};

Program load_all(const std::vector<std::string> &files, VarSource &vars) {
  Program p;
  for (const auto &f : files)
    p.merge(load_program_file(f, vars));
  for (const auto &d : validate(p))
    if (d.severity == Diagnostic::Severity::Error)
      throw EngineError(d.message);
    else
      std::cerr << "warning: " << d.message << "\n";
  return p;
}

TraceMode trace_mode(const std::string &s) {
  if (s == "log")
    return TraceMode::Log;
  if (s == "machines")
    return TraceMode::Machines;
  return TraceMode::Off;
}

EngineConfig engine_config(const RunOptions &o) {
  EngineConfig c;
  c.step_limit = o.step_limit;
  c.trace = trace_mode(o.trace);
  c.trace_out = &std::cout;
  c.stream = o.stream;
  c.stwfa = o.stwfa;
  c.data_root = o.data_root;
  return c;
}

std::string answer_text(const Solution &s) {
  if (s.bindings.empty())
    return "yes";
  std::string out;
  for (std::size_t i = 0; i < s.bindings.size(); ++i) {
    if (i)
      out += ", ";
    out += s.bindings[i].first + " = " + print_term(s.bindings[i].second);
  }
  return out;
}

void print_answer(const RunOptions &o, const Solution &s, std::size_t ordinal) {
  if (o.format == "records") {
    nlohmann::json rec;
    rec["query"] = o.query;
    rec["answer"] = print_term(s.instance);
    rec["ordinal"] = ordinal;
    nlohmann::json b = nlohmann::json::object();
    for (const auto &[name, value] : s.bindings)
      b[name] = print_term(value);
    rec["bindings"] = b;
    std::cout << rec.dump() << "\n";
  } else {
    std::cout << answer_text(s) << "\n";
  }
}

int cmd_run(const RunOptions &o, bool dump_tables) {
  VarSource vars;
  Program p = load_all(o.files, vars);
  Engine engine(std::move(p), engine_config(o));
  std::size_t count = 0;
  if (o.stream)
    engine.on_solution([&](const Solution &s) { print_answer(o, s, count++); });
  auto sols = engine.solve(std::string_view(o.query));
  if (!o.stream)
    for (const auto &s : sols)
      print_answer(o, s, count++);
  if (o.format == "text")
    std::cout << "no\n";
  if (dump_tables)
    std::cout << engine.dump_tables() << "\n";
  return sols.empty() ? kNoAnswers : kAnswers;
}

int cmd_transform(const std::vector<std::string> &files) {
  VarSource vars;
  Program p = load_all(files, vars);
  std::cout << transform_program(p);
  return kAnswers;
}

int cmd_check(const std::vector<std::string> &files, const std::string &query,
              bool iterations, bool arrow, std::uint64_t step_limit) {
  VarSource vars;
  Program p = load_all(files, vars);
  Program model_src = arrow ? arrow_reading(p) : p;
  if (iterations)
    std::cout << iteration_log(least_model(model_src));
  if (query.empty()) {
    if (!iterations)
      throw EngineError("check needs --query or --iterations");
    return kAnswers;
  }
  if (arrow)
    throw EngineError("--arrow applies to --iterations only");
  EngineConfig cfg;
  cfg.step_limit = step_limit;
  DiffReport r = diff_with_engine(p, query, cfg);
  std::cout << "answers: " << (r.answers_ok ? "PASS" : "FAIL") << " ("
            << r.actual.size() << " engine, " << r.expected.size()
            << " least model)\n";
  if (r.model_checked)
    std::cout << "model: " << (r.model_ok ? "PASS" : "FAIL") << " ("
              << r.model_size << " facts)\n";
  else
    std::cout << "model: SKIP (" << r.conditions.witness << ")\n";
  if (!r.witness.empty())
    std::cout << "witness: " << r.witness << "\n";
  return r.ok() ? kAnswers : kNoAnswers;
}

int cmd_bench(const std::string &sizes_text, int reps) {
  std::vector<std::uint64_t> sizes;
  std::stringstream ss(sizes_text);
  std::string item;
  while (std::getline(ss, item, ','))
    sizes.push_back(std::stoull(item));
  BenchReport r = run_triangular_bench(sizes, reps);
  std::cout << format_bench(r);
  return kAnswers;
}

int cmd_ingest_demo(const std::vector<std::string> &files,
                    const std::string &data_root) {
  VarSource vars;
  Program p = parse_program(kEmpProgram, vars);
  EngineConfig cfg;
  cfg.data_root = data_root;
  Engine engine(std::move(p), cfg);
  std::size_t answers = 0;
  for (const auto &f : files) {
    std::string quoted = quote_atom(f);
    // A keyed lookup, then a scan of the whole file's table.
    for (const std::string q : {"emp_data(" + quoted + ",1,Name,Addr)",
                                "emp_data(" + quoted + ",Id,Name,Addr)"}) {
      std::cout << "?- " << q << ".\n";
      auto sols = engine.solve(std::string_view(q));
      for (const auto &s : sols)
        std::cout << "   " << answer_text(s) << "\n";
      answers += sols.size();
    }
  }
  std::cout << "file opens: " << engine.stats().files_opened << "\n";
  std::cout << "tables: " << engine.tables().size() << "\n";
  return answers ? kAnswers : kNoAnswers;
}

void add_run_flags(CLI::App *cmd, RunOptions &o) {
  cmd->add_option("files", o.files, "Program files")->required()->check(
      CLI::ExistingFile);
  cmd->add_option("-q,--query", o.query, "Query to solve")->required();
  cmd->add_option("--trace", o.trace, "Trace mode")
      ->check(CLI::IsMember({"off", "log", "machines"}));
  cmd->add_option("--step-limit", o.step_limit, "Maximum machine steps");
  cmd->add_flag("--stream", o.stream, "Print answers as they are found");
  cmd->add_option("--format", o.format, "Answer output format")
      ->check(CLI::IsMember({"text", "records"}));
  cmd->add_flag("--stwfa", o.stwfa,
                "Table every predicate with full abstraction");
  cmd->add_option("--data-root", o.data_root,
                  "Directory for relative data file names")
      ->envname("STWA_DATA_ROOT");
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Tabled Horn clause evaluator with bottom-up tabling"};
  app.require_subcommand(1);

  RunOptions run_opts, trace_opts, dump_opts;
  trace_opts.trace = "machines";
  auto *run = app.add_subcommand("run", "Solve a query");
  add_run_flags(run, run_opts);
  auto *trace = app.add_subcommand("trace", "Solve a query with tracing");
  add_run_flags(trace, trace_opts);
  auto *dump = app.add_subcommand("dump-tables",
                                  "Solve a query and print the tables");
  add_run_flags(dump, dump_opts);

  std::vector<std::string> transform_files;
  auto *transform = app.add_subcommand(
      "transform", "Print the table_index transformation of a program");
  transform->add_option("files", transform_files, "Program files")
      ->required()
      ->check(CLI::ExistingFile);

  std::vector<std::string> check_files;
  std::string check_query;
  bool check_iterations = false, check_arrow = false;
  std::uint64_t check_steps = EngineConfig{}.step_limit;
  auto *check = app.add_subcommand(
      "check", "Compare engine answers with the least model");
  check->add_option("files", check_files, "Program files")
      ->required()
      ->check(CLI::ExistingFile);
  check->add_option("-q,--query", check_query, "Query to compare");
  check->add_flag("--iterations", check_iterations,
                  "Print the bottom-up iteration log");
  check->add_flag("--arrow", check_arrow,
                  "Read (H <- B) facts as the clauses to iterate");
  check->add_option("--step-limit", check_steps, "Maximum machine steps");

  std::string bench_sizes = "10000,20000,100000,200000,1000000";
  int bench_reps = 3;
  auto *bench = app.add_subcommand(
      "bench", "Time the meta-interpreter on triangular programs");
  bench->add_option("--sizes", bench_sizes,
                    "Proposition occurrence targets, comma separated");
  bench->add_option("--reps", bench_reps, "Measured repetitions per size")
      ->check(CLI::PositiveNumber);

  std::vector<std::string> ingest_files;
  std::string ingest_root;
  auto *ingest = app.add_subcommand(
      "ingest-demo", "Query emp/3 record files through a tabled loader");
  ingest->add_option("files", ingest_files, "Record files")->required();
  ingest->add_option("--data-root", ingest_root,
                     "Directory for relative data file names")
      ->envname("STWA_DATA_ROOT");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kError;
  }

  try {
    if (*run)
      return cmd_run(run_opts, false);
    if (*trace)
      return cmd_run(trace_opts, false);
    if (*dump)
      return cmd_run(dump_opts, true);
    if (*transform)
      return cmd_transform(transform_files);
    if (*check)
      return cmd_check(check_files, check_query, check_iterations,
                       check_arrow, check_steps);
    if (*bench)
      return cmd_bench(bench_sizes, bench_reps);
    if (*ingest)
      return cmd_ingest_demo(ingest_files, ingest_root);
  } catch (const ParseError &e) {
    std::cerr << "syntax error: " << e.what() << "\n";
    return kError;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
