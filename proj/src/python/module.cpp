#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "stwa/engine.hpp"
#include "stwa/index_plan.hpp"
#include "stwa/oracle.hpp"

namespace py = pybind11;
using namespace stwa;

namespace {

// Owns the engine together with the trace buffer it writes to.
class PyEngine {
public:
  PyEngine(const std::string &source, const std::string &trace, bool stwfa,
           std::uint64_t step_limit, const std::string &data_root) {
    EngineConfig c;
    c.trace = trace == "log"        ? TraceMode::Log
              : trace == "machines" ? TraceMode::Machines
                                    : TraceMode::Off;
    c.trace_out = &trace_;
    c.stwfa = stwfa;
    c.step_limit = step_limit;
    c.data_root = data_root;
    engine_ = std::make_unique<Engine>(parse_program(source, vars_), c);
  }

  std::vector<std::map<std::string, std::string>> solve(const std::string &q) {
    std::vector<std::map<std::string, std::string>> out;
    for (const auto &s : engine_->solve(std::string_view(q))) {
      std::map<std::string, std::string> row;
      for (const auto &[name, value] : s.bindings)
        row[name] = print_term(value);
      out.push_back(std::move(row));
    }
    return out;
  }

  std::vector<std::string> instances(const std::string &q) {
    std::vector<std::string> out;
    for (const auto &s : engine_->solve(std::string_view(q)))
      out.push_back(print_term(s.instance));
    return out;
  }

  std::string dump_tables() const { return engine_->dump_tables(); }

  std::string take_trace() {
    std::string t = trace_.str();
    trace_.str("");
    return t;
  }

  py::dict stats() const {
    const EngineStats &s = engine_->stats();
    py::dict d;
    d["steps"] = s.steps;
    d["machines"] = s.machines;
    d["files_opened"] = s.files_opened;
    d["scans"] = s.scans;
    return d;
  }

private:
  VarSource vars_;
  std::ostringstream trace_;
  std::unique_ptr<Engine> engine_;
};

std::map<std::string, int> least_model_tags(const std::string &source,
                                            bool arrow) {
  Program p = parse_program(source);
  FactSet m = least_model(arrow ? arrow_reading(p) : p);
  std::map<std::string, int> out;
  for (const auto &f : m.facts())
    out[print_term(f)] = m.tag(f);
  return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Tabled Horn clause evaluator with bottom-up tabling";

  py::register_exception<EngineError>(m, "EngineError", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<IllegalModeError>(m, "IllegalModeError",
                                           PyExc_RuntimeError);
  py::register_exception<OracleError>(m, "OracleError", PyExc_ValueError);

  py::class_<PyEngine>(m, "Engine")
      .def(py::init<const std::string &, const std::string &, bool,
                    std::uint64_t, const std::string &>(),
           py::arg("source"), py::arg("trace") = "off",
           py::arg("stwfa") = false,
           py::arg("step_limit") = EngineConfig{}.step_limit,
           py::arg("data_root") = "")
      .def("solve", &PyEngine::solve, py::arg("query"),
           "Answers as dicts of variable name to printed value.")
      .def("instances", &PyEngine::instances, py::arg("query"),
           "Answers as printed query instances.")
      .def("dump_tables", &PyEngine::dump_tables)
      .def("take_trace", &PyEngine::take_trace,
           "Returns and clears the trace written so far.")
      .def("stats", &PyEngine::stats);

  m.def("transform", [](const std::string &source) {
    return transform_program(parse_program(source));
  }, py::arg("source"));
  m.def("least_model", &least_model_tags, py::arg("source"),
        py::arg("arrow") = false,
        "Least model facts mapped to the iteration that derived them.");
  m.def("iteration_log", [](const std::string &source, bool arrow) {
    Program p = parse_program(source);
    return iteration_log(least_model(arrow ? arrow_reading(p) : p));
  }, py::arg("source"), py::arg("arrow") = false);
}
