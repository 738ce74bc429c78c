#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stwa/program.hpp"

namespace stwa {

/// Proposition occurrences of the triangular program with `n` propositions:
/// n heads plus (n-1)+...+1 body atoms.
std::uint64_t triangular_occurrences(std::uint64_t n);
/// Largest n whose triangular program has at most `occurrences`.
std::uint64_t triangular_size_for(std::uint64_t occurrences);

/// `p1 <- p2,...,pn.` down to `pn <- true.` as `<-` facts.
Program triangular_program(std::uint64_t n);
std::string triangular_source(std::uint64_t n);

/// The tabled meta-interpreter the benchmark runs over `<-` facts.
std::string meta_interpreter_source();

struct BenchPoint {
  std::uint64_t target = 0;      // requested occurrences
  std::uint64_t n = 0;           // propositions
  std::uint64_t occurrences = 0; // actual occurrences
  double median_seconds = 0;      // process CPU time
  double median_wall_seconds = 0;
  std::vector<double> seconds;   // CPU time per measured repetition
  std::vector<double> wall_seconds;
};

struct BenchReport {
  std::vector<BenchPoint> points;
  /// Time ratios of adjacent sizes.
  std::vector<double> ratios;
  /// Least-squares slope of log(time) against log(occurrences).
  double exponent = 0;
};

/// Times `interp_atom(p1)` over triangular programs of the given sizes.
/// Ratios and the exponent use CPU time, which is steadier than wall time
/// on shared machines.
/// Program generation is excluded from the timings; each size runs one
/// warmup and then at least `reps` measured repetitions, more for small
/// sizes until about a second of CPU time has been measured.
BenchReport run_triangular_bench(const std::vector<std::uint64_t> &sizes,
                                 int reps = 3, int warmups = 1);

double loglog_slope(const std::vector<double> &x, const std::vector<double> &y);
double median(std::vector<double> v);

std::string format_bench(const BenchReport &r);

} // namespace stwa
