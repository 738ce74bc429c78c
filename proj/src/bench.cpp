#include "stwa/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <stdexcept>

#include "stwa/engine.hpp"

namespace stwa {

std::uint64_t triangular_occurrences(std::uint64_t n) {
  return n * (n + 1) / 2;
}

std::uint64_t triangular_size_for(std::uint64_t occurrences) {
  auto n = static_cast<std::uint64_t>(
      (std::sqrt(8.0 * static_cast<double>(occurrences) + 1.0) - 1.0) / 2.0);
  while (triangular_occurrences(n + 1) <= occurrences)
    ++n;
  while (n > 0 && triangular_occurrences(n) > occurrences)
    --n;
  return n;
}

namespace {

Term prop(std::uint64_t i) { return Term::atom("p" + std::to_string(i)); }

} // namespace

Program triangular_program(std::uint64_t n) {
  Program p;
  for (std::uint64_t i = 1; i <= n; ++i) {
    std::vector<Term> body;
    for (std::uint64_t j = i + 1; j <= n; ++j)
      body.push_back(prop(j));
    p.add_clause(
        Clause{Term::compound(sym::arrow, {prop(i), make_conjunction(body)}),
               {},
               static_cast<int>(i)});
  }
  return p;
}

std::string triangular_source(std::uint64_t n) {
  std::string s;
  for (std::uint64_t i = 1; i <= n; ++i) {
    s += "p" + std::to_string(i) + " <- ";
    if (i == n)
      s += "true";
    for (std::uint64_t j = i + 1; j <= n; ++j)
      s += (j > i + 1 ? ",p" : "p") + std::to_string(j);
    s += ".\n";
  }
  return s;
}

std::string meta_interpreter_source() {
  return R"(:- op(1200,xfx,('<-')).
interp_goal(true) :- !.
interp_goal((G1,G2)) :- !, interp_atom(G1), interp_goal(G2).
interp_goal(G) :- interp_atom(G).
:- table interp_atom/1.
interp_atom(G) :- interp_atoms(G).
:- table_index(interp_atoms/1,[0]).
interp_atoms(G) :- (G <- Gs), interp_goal(Gs).
)";
}

double median(std::vector<double> v) {
  if (v.empty())
    return 0;
  std::sort(v.begin(), v.end());
  std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2;
}

double loglog_slope(const std::vector<double> &x,
                    const std::vector<double> &y) {
  std::size_t n = std::min(x.size(), y.size());
  if (n < 2)
    return 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double d = static_cast<double>(n) * sxx - sx * sx;
  return d == 0 ? 0 : (static_cast<double>(n) * sxy - sx * sy) / d;
}

constexpr double kMinMeasuredSeconds = 1.0;
constexpr int kMaxRepetitions = 200;

BenchReport run_triangular_bench(const std::vector<std::uint64_t> &sizes,
                                 int reps, int warmups) {
  if (reps < 1)
    throw std::invalid_argument("repetitions must be positive");
  for (std::size_t i = 0; i < sizes.size(); ++i)
    if (sizes[i] == 0 || (i && sizes[i] <= sizes[i - 1]))
      throw std::invalid_argument("sizes must be positive and increasing");
  BenchReport rep;
  VarSource vars;
  Program interp = parse_program(meta_interpreter_source(), vars);
  for (auto target : sizes) {
    BenchPoint pt;
    pt.target = target;
    pt.n = triangular_size_for(target);
    pt.occurrences = triangular_occurrences(pt.n);
    Program prog = interp;
    prog.merge(triangular_program(pt.n));
    // Small sizes repeat until enough time is measured for a stable median.
    double measured = 0;
    for (int r = 0; r < warmups + reps ||
                    (measured < kMinMeasuredSeconds && r < kMaxRepetitions);
         ++r) {
      Engine engine(prog);
      Term q = engine.parse_query("interp_atom(p1)");
      std::clock_t c0 = std::clock();
      auto t0 = std::chrono::steady_clock::now();
      auto sols = engine.solve(q);
      auto t1 = std::chrono::steady_clock::now();
      std::clock_t c1 = std::clock();
      if (sols.size() != 1)
        throw std::runtime_error("triangular program did not prove p1");
      if (r >= warmups) {
        pt.seconds.push_back(static_cast<double>(c1 - c0) / CLOCKS_PER_SEC);
        measured += pt.seconds.back();
        pt.wall_seconds.push_back(
            std::chrono::duration<double>(t1 - t0).count());
      }
    }
    pt.median_seconds = median(pt.seconds);
    pt.median_wall_seconds = median(pt.wall_seconds);
    rep.points.push_back(std::move(pt));
  }
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < rep.points.size(); ++i) {
    const auto &p = rep.points[i];
    xs.push_back(static_cast<double>(p.occurrences));
    ys.push_back(std::max(p.median_seconds, 1e-9));
    if (i)
      rep.ratios.push_back(p.median_seconds /
                           std::max(rep.points[i - 1].median_seconds, 1e-9));
  }
  rep.exponent = loglog_slope(xs, ys);
  return rep;
}

std::string format_bench(const BenchReport &r) {
  std::string out = "occurrences        n  cpu_med_s wall_med_s    ratio\n";
  char buf[128];
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    const auto &p = r.points[i];
    if (i)
      std::snprintf(buf, sizeof buf, "%11llu %8llu %10.4f %10.4f %8.2f\n",
                    static_cast<unsigned long long>(p.occurrences),
                    static_cast<unsigned long long>(p.n), p.median_seconds,
                    p.median_wall_seconds,
                    r.ratios[i - 1]);
    else
      std::snprintf(buf, sizeof buf, "%11llu %8llu %10.4f %10.4f        -\n",
                    static_cast<unsigned long long>(p.occurrences),
                    static_cast<unsigned long long>(p.n), p.median_seconds,
                    p.median_wall_seconds);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "log-log exponent %.3f\n", r.exponent);
  out += buf;
  return out;
}

} // namespace stwa
