#pragma once

#include "tikopt/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tikopt {

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  long k_lo = 0;
  long k_hi = 0;
  long points = 0;
};

enum class TraceField { FGap, Velocity, GradNorm, DistToXstar };

inline double trace_field(const TraceRecord& r, TraceField f) {
  switch (f) {
    case TraceField::FGap: return r.f_gap;
    case TraceField::Velocity: return r.velocity;
    case TraceField::GradNorm: return r.grad_norm;
    case TraceField::DistToXstar: return r.dist_to_xstar;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

/// Ordinary least squares of log(value) against log(k) over the window,
/// using only records with a positive value. The slope is the empirical decay
/// exponent (negated). Returns nothing when fewer than 10 usable records
/// remain; the caller shrinks the window.
inline std::optional<RateFit> fit_rate(const Trace& trace, long k_lo, long k_hi,
                                       TraceField field = TraceField::FGap) {
  std::vector<double> xs, ys;
  for (const auto& r : trace.records) {
    if (r.k < k_lo || r.k > k_hi) continue;
    double v = trace_field(r, field);
    if (!(v > 0.0) || !std::isfinite(v)) continue;
    xs.push_back(std::log(static_cast<double>(r.k)));
    ys.push_back(std::log(v));
  }
  if (xs.size() < 10) return std::nullopt;

  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double dx = xs[i] - mx;
    double dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  RateFit fit;
  fit.k_lo = k_lo;
  fit.k_hi = k_hi;
  fit.points = static_cast<long>(xs.size());
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  // a spread at rounding level means the sequence is constant
  if (syy <= 1e-20 * n * (1.0 + my * my)) {
    fit.r_squared = 1.0;
    fit.slope = 0.0;
    fit.intercept = my;
  } else {
    double ss_res = syy - sxy * sxy / sxx;
    fit.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  }
  return fit;
}

// ---------------------------------------------------------------------------
// performance profiles

constexpr double kFailureCost = std::numeric_limits<double>::infinity();

/// Right-continuous nondecreasing step function rho(t) on the log2-ratio
/// axis, stored at its breakpoints.
struct ProfileCurve {
  std::vector<double> t;    // sorted breakpoints (log2 ratios)
  std::vector<double> rho;  // value from t[i] onward

  double at(double query) const {
    double value = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] <= query) value = rho[i];
      else break;
    }
    return value;
  }
};

struct PerformanceProfile {
  std::vector<std::string> solvers;
  std::vector<std::string> problems;          // retained problems
  std::vector<std::string> dropped_problems;  // every solver failed there
  Matrix ratios;                              // solvers x retained problems, +inf on failure
  std::vector<ProfileCurve> curves;           // one per solver
  std::vector<double> breakpoints;            // union grid used for export
};

/// Dolan-More profile of a solver-by-problem cost matrix. Failures are +inf.
/// Ratios are per problem against the best finite cost; problems where every
/// solver failed are dropped (with a record) rather than zero-divided. Curves
/// are sampled at the exact log2-ratio breakpoints.
inline PerformanceProfile performance_profile(const Matrix& costs,
                                              std::vector<std::string> solver_names = {},
                                              std::vector<std::string> problem_names = {}) {
  const Index ns = costs.rows();
  const Index np_all = costs.cols();
  if (ns == 0 || np_all == 0)
    throw std::invalid_argument("performance_profile: empty cost matrix");

  if (solver_names.empty())
    for (Index s = 0; s < ns; ++s) solver_names.push_back("solver" + std::to_string(s + 1));
  if (problem_names.empty())
    for (Index p = 0; p < np_all; ++p) problem_names.push_back("problem" + std::to_string(p + 1));

  PerformanceProfile out;
  out.solvers = std::move(solver_names);

  std::vector<Index> retained;
  for (Index p = 0; p < np_all; ++p) {
    double best = kFailureCost;
    for (Index s = 0; s < ns; ++s) {
      double v = costs(s, p);
      if (std::isfinite(v)) {
        if (!(v > 0.0))
          throw std::invalid_argument("performance_profile: costs must be positive");
        best = std::min(best, v);
      }
    }
    if (std::isfinite(best)) {
      retained.push_back(p);
      out.problems.push_back(problem_names[static_cast<std::size_t>(p)]);
    } else {
      out.dropped_problems.push_back(problem_names[static_cast<std::size_t>(p)]);
    }
  }

  const Index np = static_cast<Index>(retained.size());
  out.ratios.resize(ns, np);
  for (Index j = 0; j < np; ++j) {
    Index p = retained[static_cast<std::size_t>(j)];
    double best = kFailureCost;
    for (Index s = 0; s < ns; ++s)
      if (std::isfinite(costs(s, p))) best = std::min(best, costs(s, p));
    for (Index s = 0; s < ns; ++s)
      out.ratios(s, j) = std::isfinite(costs(s, p)) ? costs(s, p) / best : kFailureCost;
  }

  for (Index s = 0; s < ns; ++s) {
    std::vector<double> logs;
    for (Index j = 0; j < np; ++j)
      if (std::isfinite(out.ratios(s, j))) logs.push_back(std::log2(out.ratios(s, j)));
    std::sort(logs.begin(), logs.end());
    ProfileCurve curve;
    for (std::size_t i = 0; i < logs.size(); ++i) {
      double t = logs[i];
      double rho = static_cast<double>(i + 1) / static_cast<double>(np);
      if (!curve.t.empty() && curve.t.back() == t)
        curve.rho.back() = rho;  // ties collapse into one breakpoint
      else {
        curve.t.push_back(t);
        curve.rho.push_back(rho);
      }
    }
    out.curves.push_back(std::move(curve));
    for (double t : logs) out.breakpoints.push_back(t);
  }
  std::sort(out.breakpoints.begin(), out.breakpoints.end());
  out.breakpoints.erase(std::unique(out.breakpoints.begin(), out.breakpoints.end()),
                        out.breakpoints.end());
  return out;
}

// ---------------------------------------------------------------------------
// benchmark summarization

enum class CostCriterion { CpuTime, Iterations };

inline std::string criterion_name(CostCriterion c) {
  return c == CostCriterion::CpuTime ? "time" : "iterations";
}

/// A solved cell of (solver, problem).
struct CellResult {
  RunStatus status = RunStatus::IterationCap;
  double final_grad_norm = std::numeric_limits<double>::quiet_NaN();
  long iterations = 0;
  double wall_time = 0.0;

  bool converged(double tol) const {
    return status == RunStatus::Converged || final_grad_norm <= tol;
  }
};

inline CellResult cell_from_trace(const Trace& trace) {
  CellResult r;
  r.status = trace.status;
  r.final_grad_norm = trace.final_grad_norm;
  r.iterations = trace.final_k;
  r.wall_time = trace.records.empty() ? 0.0 : trace.records.back().wall_time;
  return r;
}

struct ComparisonSummary {
  PerformanceProfile profile;
  Matrix costs;  // solvers x problems, +inf on failure
  std::vector<std::string> solvers;
  std::vector<std::string> problems;
};

/// Builds the cost matrix (wall time or iterations at termination) and its
/// profile. Runs that hit the iteration cap without reaching the tolerance
/// count as failures. Solvers must cover identical problem sets; missing
/// pairs are an alignment error.
inline ComparisonSummary summarize_comparison(
    const std::map<std::string, std::map<std::string, CellResult>>& results,
    CostCriterion criterion, double gradient_tolerance) {
  if (results.empty()) throw std::invalid_argument("summarize_comparison: no solvers");

  std::vector<std::string> solvers;
  for (const auto& [name, _] : results) solvers.push_back(name);
  std::vector<std::string> problems;
  for (const auto& [pname, _] : results.begin()->second) problems.push_back(pname);

  std::string missing;
  for (const auto& [sname, cells] : results) {
    for (const auto& p : problems)
      if (!cells.count(p)) missing += " (" + sname + ", " + p + ")";
    for (const auto& [pname, _] : cells)
      if (std::find(problems.begin(), problems.end(), pname) == problems.end())
        missing += " (extra: " + sname + ", " + pname + ")";
  }
  if (!missing.empty())
    throw std::invalid_argument("summarize_comparison: inconsistent problem sets:" + missing);

  Matrix costs(static_cast<Index>(solvers.size()), static_cast<Index>(problems.size()));
  for (std::size_t s = 0; s < solvers.size(); ++s) {
    const auto& cells = results.at(solvers[s]);
    for (std::size_t p = 0; p < problems.size(); ++p) {
      const CellResult& cell = cells.at(problems[p]);
      bool failed = !cell.converged(gradient_tolerance);
      double cost = criterion == CostCriterion::CpuTime ? cell.wall_time
                                                        : static_cast<double>(cell.iterations);
      // zero wall time happens for instant convergence; clamp to keep ratios defined
      if (!failed && cost <= 0.0) cost = 1e-9;
      costs(static_cast<Index>(s), static_cast<Index>(p)) = failed ? kFailureCost : cost;
    }
  }

  ComparisonSummary summary;
  summary.costs = costs;
  summary.solvers = solvers;
  summary.problems = problems;
  summary.profile = performance_profile(costs, solvers, problems);
  return summary;
}

}  // namespace tikopt
