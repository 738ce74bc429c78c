#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stwa/index_plan.hpp"
#include "stwa/program.hpp"
#include "stwa/tables.hpp"
#include "stwa/term.hpp"

namespace stwa {

class EngineError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};
class ExistenceError : public EngineError {
public:
  using EngineError::EngineError;
};
class InstantiationError : public EngineError {
public:
  using EngineError::EngineError;
};
class ResourceError : public EngineError {
public:
  using EngineError::EngineError;
};
class InputError : public EngineError {
public:
  using EngineError::EngineError;
};
/// Raised by table_error/1.
class TableError : public EngineError {
public:
  using EngineError::EngineError;
};

enum class TraceMode { Off, Log, Machines };

struct EngineConfig {
  /// Steps allowed per solve call.
  std::uint64_t step_limit = 100000000;
  TraceMode trace = TraceMode::Off;
  std::ostream *trace_out = nullptr;
  /// Report query answers as soon as they are added instead of at the end.
  bool stream = false;
  /// Table every user predicate subsumptively with full abstraction.
  bool stwfa = false;
  /// Table every user predicate with variant tabling.
  bool table_all = false;
  /// Directory for relative data_records file names. Empty means the
  /// STWA_DATA_ROOT environment variable, or the working directory.
  std::string data_root;
};

struct TraceEvent {
  enum class Kind {
    NewTable,
    Suspend,
    ForkClause,
    ForkAnswer,
    NewAnswer,
    DuplicateAnswer,
    IllegalMode,
    FileOpen,
    Call,
  };
  Kind kind;
  std::vector<Term> terms;
  std::uint64_t step = 0;
};

struct Solution {
  Term instance;
  std::vector<std::pair<std::string, Term>> bindings;
};

struct EngineStats {
  std::uint64_t steps = 0;
  std::uint64_t machines = 0;
  std::uint64_t files_opened = 0;
  std::map<std::string, std::uint64_t> scans;        // per tokenized atom
  std::map<PredKey, std::uint64_t> clause_forks;     // producer forks per pred
  std::map<PredKey, std::uint64_t> tables_created;   // per pred
};

/// Multiple-machine tabled evaluator. Tables persist across solve calls.
/// Single-threaded by contract.
class Engine {
public:
  explicit Engine(Program program, EngineConfig config = {});
  ~Engine();
  Engine(const Engine &) = delete;
  Engine &operator=(const Engine &) = delete;

  /// Parses a query using this engine's variable numbering.
  Term parse_query(std::string_view text);

  std::vector<Solution> solve(const Term &query);
  std::vector<Solution> solve(std::string_view query);

  /// Called for each query answer when streaming is on.
  void on_solution(std::function<void(const Solution &)> cb);
  /// Receives engine events (see TraceEvent).
  void set_observer(std::function<void(const TraceEvent &)> obs);

  const TableStore &tables() const;
  std::string dump_tables() const;
  const EngineStats &stats() const;
  const Program &program() const;
  EngineConfig &config();

  /// Index plan used for a predicate, or nullptr when it is not tabled
  /// through table_index (or full abstraction).
  const IndexPlan *plan_for(PredKey k) const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Loads `<-`-free records of a data file. Formats: `read` (terms ending
/// in '.') and `csv(F)` (comma separated fields as F(...)).
std::vector<Term> read_data_records(const std::string &path,
                                    const Term &format, VarSource &vars);

} // namespace stwa
