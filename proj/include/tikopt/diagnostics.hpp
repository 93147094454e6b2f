#pragma once

#include "tikopt/problems.hpp"
#include "tikopt/rng.hpp"
#include "tikopt/schedules.hpp"
#include "tikopt/solvers.hpp"

#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace tikopt {

struct ViscosityPoint {
  double epsilon = 0.0;
  Vector point;
  double inner_residual = 0.0;
};

/// Minimizer of phi_eps = f + (eps/2)||.||^2. Linear-structure families use
/// the exact shifted normal-equation solve; logistic problems run gradient
/// descent with the strongly-convex step 2/(L + 2 eps). The iterative route
/// refuses eps < 1e-4: the linear rate degrades as eps vanishes and audits
/// never need that regime.
inline ViscosityPoint viscosity_point(const Problem& problem, double epsilon,
                                      double tolerance = 1e-10, long budget = 100000) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("viscosity_point: epsilon must be positive");
  ViscosityPoint out;
  out.epsilon = epsilon;

  if (problem.has_linear_structure()) {
    out.point = problem.tikhonov_argmin(epsilon);
    Vector g = problem.gradient(out.point) + epsilon * out.point;
    out.inner_residual = g.norm();
    return out;
  }

  if (epsilon < 1e-4)
    throw std::invalid_argument("viscosity_point: eps < 1e-4 refused for iterative solves");
  double step = 2.0 / (problem.lipschitz() + 2.0 * epsilon);
  Vector x = Vector::Zero(problem.dimension());
  Vector g(problem.dimension());
  for (long it = 0; it < budget; ++it) {
    problem.value_and_gradient(x, g);
    g += epsilon * x;
    double res = g.norm();
    if (res <= tolerance) {
      out.point = std::move(x);
      out.inner_residual = res;
      return out;
    }
    x -= step * g;
  }
  problem.value_and_gradient(x, g);
  g += epsilon * x;
  throw IncompleteSolveError("viscosity_point: budget exhausted", g.norm());
}

/// Memoized viscosity points along a schedule.
class ViscosityCache {
 public:
  ViscosityCache(const Problem& problem, const TikhonovSchedule& schedule)
      : problem_(problem), schedule_(schedule) {}

  const Vector& at(long k) {
    auto it = cache_.find(k);
    if (it != cache_.end()) return it->second;
    Vector x = viscosity_point(problem_, schedule_.at(k)).point;
    return cache_.emplace(k, std::move(x)).first->second;
  }

 private:
  const Problem& problem_;
  const TikhonovSchedule& schedule_;
  std::map<long, Vector> cache_;
};

struct LemmaViolation {
  long k = 0;
  std::string which;
  double margin = 0.0;  // positive amount by which the inequality failed
};

/// Verifies the curve's classical properties along k_lo..k_hi, with slack
/// 1e-8 (1 + ||x*||^2):
///   (L1-i)  ||x_{eps_k}|| <= ||x*||
///   (L1-ii) ||x_{eps_k} - x*|| nonincreasing along the range
///   (L2-i)  phi_k(x_{eps_k}) - phi_{k+1}(x_{eps_{k+1}})
///             <= (eps_k - eps_{k+1})/2 ||x_{eps_{k+1}}||^2
///   (L2-ii) ||x_{eps_{k+1}} - x_{eps_k}||
///             <= ((eps_k - eps_{k+1})/eps_k) ||x_{eps_{k+1}}||
inline std::vector<LemmaViolation> check_viscosity_lemmas(const Problem& problem,
                                                          const TikhonovSchedule& schedule,
                                                          long k_lo, long k_hi) {
  auto xstar_opt = problem.min_norm_solution();
  if (!xstar_opt)
    throw std::invalid_argument("check_viscosity_lemmas: least-norm minimizer unavailable");
  const Vector xstar = *xstar_opt;
  const double xstar_norm = xstar.norm();
  const double slack = 1e-8 * (1.0 + xstar_norm * xstar_norm);

  auto phi = [&](double eps, const Vector& x) {
    return problem.value(x) + 0.5 * eps * x.squaredNorm();
  };

  ViscosityCache cache(problem, schedule);
  std::vector<LemmaViolation> violations;
  double prev_dist = std::numeric_limits<double>::infinity();

  for (long k = k_lo; k <= k_hi; ++k) {
    double eps_k = schedule.at(k);
    double eps_k1 = schedule.at(k + 1);
    const Vector& xk = cache.at(k);
    const Vector& xk1 = cache.at(k + 1);

    double norm_k = xk.norm();
    if (norm_k > xstar_norm + slack)
      violations.push_back({k, "L1-i", norm_k - xstar_norm});

    double dist = (xk - xstar).norm();
    if (dist > prev_dist + slack) violations.push_back({k, "L1-ii", dist - prev_dist});
    prev_dist = dist;

    double lhs_val = phi(eps_k, xk) - phi(eps_k1, xk1);
    double rhs_val = 0.5 * (eps_k - eps_k1) * xk1.squaredNorm();
    if (lhs_val > rhs_val + slack) violations.push_back({k, "L2-i", lhs_val - rhs_val});

    double lhs_move = (xk1 - xk).norm();
    double rhs_move = (eps_k - eps_k1) / eps_k * xk1.norm();
    if (lhs_move > rhs_move + slack) violations.push_back({k, "L2-ii", lhs_move - rhs_move});
  }
  return violations;
}

// ---------------------------------------------------------------------------
// energy decomposition and the per-step decay audit

struct EnergyBreakdown {
  long k = 0;
  double e_pot = 0.0;
  double e_mix = 0.0;
  double e_kin = 0.0;
  double e_total = 0.0;
  double mu_next = 0.0;
  double theta = 0.0;
  double tau = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  bool pre_regime = false;
};

/// E_k = alpha_k (phi_k(x_k) - phi_k(x_{eps_k}))
///     + 1/2 || tau_k (x_k - x_{eps_{k-1}}) + (x_k - x_{k-1}) ||^2
///     + (beta_k/2) || x_k - x_{k-1} ||^2
/// with tau_k = lambda sqrt(s eps_k), beta_k = q (1 - delta sqrt(s eps_k)),
/// alpha_k = (1+q) s / ((1 - delta sqrt(s eps_k)) (1 - s eps_k)). Note the
/// k-1 index on the mixed term's curve point: audits need the curve at both
/// k-1 and k. Indices before k0 (or where the denominators are not positive)
/// are computed anyway but flagged pre-regime.
inline EnergyBreakdown energy_at(const Trace& trace, long k, const Problem& problem,
                                 const TikhonovSchedule& schedule, const SolverParameters& params,
                                 ViscosityCache& cache) {
  if (k < 2) throw std::invalid_argument("energy_at: k must be >= 2");
  const Vector& xk = trace.iterate(k);
  const Vector& xkm1 = trace.iterate(k - 1);

  EnergyBreakdown e;
  e.k = k;
  double eps_k = schedule.at(k);
  double eps_k1 = schedule.at(k + 1);
  double eps_km1 = schedule.at(k - 1);
  double root_k = std::sqrt(params.s * eps_k);
  double dk = 1.0 - params.delta * root_k;
  double wk = 1.0 - params.s * eps_k;
  e.pre_regime = !(dk > 0.0) || !(wk > 0.0) || (params.k0 > 0 && k < params.k0);

  e.tau = params.lambda * root_k;
  e.alpha = (1.0 + params.q) * params.s / (dk * wk);
  e.beta = params.q * dk;

  auto phi = [&](double eps, const Vector& x) {
    return problem.value(x) + 0.5 * eps * x.squaredNorm();
  };

  const Vector& curve_k = cache.at(k);
  const Vector& curve_km1 = cache.at(k - 1);

  e.e_pot = e.alpha * (phi(eps_k, xk) - phi(eps_k, curve_k));
  Vector mixed = e.tau * (xk - curve_km1) + (xk - xkm1);
  e.e_mix = 0.5 * mixed.squaredNorm();
  e.e_kin = 0.5 * e.beta * (xk - xkm1).squaredNorm();
  e.e_total = e.e_pot + e.e_mix + e.e_kin;

  e.mu_next = std::sqrt(eps_k / eps_k1) - 1.0 + (params.delta / dk - params.lambda) * root_k;
  double de_km1 = eps_k - eps_km1;    // backward difference at k-1
  double de_k = eps_k1 - eps_k;       // forward difference at k
  e.theta = (params.a + params.b) * e.tau * (de_km1 * de_km1) / (eps_km1 * eps_km1) -
            e.alpha * (1.0 + e.mu_next) * de_k;
  return e;
}

inline EnergyBreakdown energy_at(const Trace& trace, long k, const Problem& problem,
                                 const TikhonovSchedule& schedule,
                                 const SolverParameters& params) {
  ViscosityCache cache(problem, schedule);
  return energy_at(trace, k, problem, schedule, params, cache);
}

struct AuditEntry {
  long k = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // lhs - rhs - slack; violation iff > 0 outside pre-regime
  bool pre_regime = false;
  bool violation = false;
};

struct AuditReport {
  std::vector<AuditEntry> entries;
  long violation_count = 0;
  long pre_regime_count = 0;
};

/// Checks the per-step energy decay inequality
///   E_{k+1} - E_k + mu_{k+1} E_{k+1} <= (theta_k/2) ||x*||^2
/// over the window. The inequality is exact in reals; the slack
/// 1e-9 (1 + E_k + ||x*||^2) only absorbs floating-point accumulation.
/// Window entries before k0 are flagged pre-regime and excluded from
/// pass/fail.
inline AuditReport audit_energy_decay(const Trace& trace, long k_lo, long k_hi,
                                  const Problem& problem, const TikhonovSchedule& schedule,
                                  const SolverParameters& params) {
  auto xstar_opt = problem.min_norm_solution();
  if (!xstar_opt) throw std::invalid_argument("audit_energy_decay: least-norm minimizer unavailable");
  double xstar_sq = xstar_opt->squaredNorm();

  ViscosityCache cache(problem, schedule);
  AuditReport report;
  for (long k = k_lo; k <= k_hi; ++k) {
    EnergyBreakdown ek = energy_at(trace, k, problem, schedule, params, cache);
    EnergyBreakdown ek1 = energy_at(trace, k + 1, problem, schedule, params, cache);
    AuditEntry entry;
    entry.k = k;
    entry.pre_regime = ek.pre_regime || ek1.pre_regime;
    entry.lhs = ek1.e_total - ek.e_total + ek.mu_next * ek1.e_total;
    entry.rhs = 0.5 * ek.theta * xstar_sq;
    double slack = 1e-9 * (1.0 + ek.e_total + xstar_sq);
    entry.margin = entry.lhs - entry.rhs - slack;
    entry.violation = !entry.pre_regime && entry.margin > 0.0;
    if (entry.violation) ++report.violation_count;
    if (entry.pre_regime) ++report.pre_regime_count;
    report.entries.push_back(entry);
  }
  return report;
}

/// Pointwise level bounds tying the trace to the energy:
///   f(x_k) - min f            <= E_k/alpha_k + (eps_k/2)||x*||^2
///   ||x_k - x_{eps_k}||^2     <= 2 E_k / (alpha_k eps_k)
///   ||x_k - x_{k-1}||^2       <= 2 E_k / beta_k
///   phi_k(x_k) - phi_k(x_eps) >= (eps_k/2) ||x_k - x_{eps_k}||^2
inline std::vector<LemmaViolation> check_energy_bounds(const Trace& trace, long k_lo, long k_hi,
                                                       const Problem& problem,
                                                       const TikhonovSchedule& schedule,
                                                       const SolverParameters& params) {
  auto xstar_opt = problem.min_norm_solution();
  auto fmin_opt = problem.optimum_value();
  if (!xstar_opt || !fmin_opt)
    throw std::invalid_argument("check_energy_bounds: needs closed-form optimum and x*");
  double xstar_sq = xstar_opt->squaredNorm();

  ViscosityCache cache(problem, schedule);
  std::vector<LemmaViolation> violations;
  for (long k = k_lo; k <= k_hi; ++k) {
    EnergyBreakdown e = energy_at(trace, k, problem, schedule, params, cache);
    if (e.pre_regime) continue;
    double eps_k = schedule.at(k);
    const Vector& xk = trace.iterate(k);
    const Vector& curve = cache.at(k);
    double slack = 1e-9 * (1.0 + e.e_total + xstar_sq);

    double f_gap = problem.value(xk) - *fmin_opt;
    double bound_gap = e.e_total / e.alpha + 0.5 * eps_k * xstar_sq;
    if (f_gap > bound_gap + slack) violations.push_back({k, "gap-bound", f_gap - bound_gap});

    double dist_sq = (xk - curve).squaredNorm();
    double bound_dist = 2.0 * e.e_total / (e.alpha * eps_k);
    if (dist_sq > bound_dist + slack)
      violations.push_back({k, "curve-dist-bound", dist_sq - bound_dist});

    double vel_sq = (xk - trace.iterate(k - 1)).squaredNorm();
    double bound_vel = 2.0 * e.e_total / e.beta;
    if (vel_sq > bound_vel + slack)
      violations.push_back({k, "velocity-bound", vel_sq - bound_vel});

    double gap_phi = e.e_pot / e.alpha;  // phi_k(x_k) - phi_k(x_{eps_k})
    double strong = 0.5 * eps_k * dist_sq;
    if (gap_phi < strong - slack)
      violations.push_back({k, "strong-convexity", strong - gap_phi});
  }
  return violations;
}

// ---------------------------------------------------------------------------
// sampled descent-lemma checks

/// Samples (x, y, s) with s in (0, 2/L] and verifies, at 1e-10 relative slack,
///   plain descent on f:
///     f(y) <= f(x) + <grad f(x), y - x> + (L/2)||x - y||^2
///   extended descent on phi_eps (eps-strongly convex, (L+eps)-smooth), for
///   eps in {1, 0.1, 0.01}:
///     phi(y - s grad phi(y)) <= phi(x) + <grad phi(y), y - x>
///         + ((L+eps) s^2/2 - s)||grad phi(y)||^2 - (eps/2)||x - y||^2
inline std::vector<LemmaViolation> check_descent_lemmas(const Problem& problem, int sample_count,
                                                        std::uint64_t seed = 20240801u) {
  Rng rng(seed);
  const Index n = problem.dimension();
  const double lip = problem.lipschitz();
  constexpr double kRelSlack = 1e-10;
  const double scales[3] = {0.3, 1.0, 3.0};
  const double epsilons[3] = {1.0, 0.1, 0.01};

  std::vector<LemmaViolation> violations;
  for (int sample = 0; sample < sample_count; ++sample) {
    double scale = scales[sample % 3];
    Vector x(n), y(n);
    for (Index i = 0; i < n; ++i) x[i] = scale * rng.gaussian();
    for (Index i = 0; i < n; ++i) y[i] = scale * rng.gaussian();
    double s = rng.uniform_open() * 2.0 / lip;

    {
      Vector gx(n);
      double fx = problem.value_and_gradient(x, gx);
      double fy = problem.value(y);
      double rhs = fx + gx.dot(y - x) + 0.5 * lip * (x - y).squaredNorm();
      double slack = kRelSlack * (1.0 + std::abs(fy) + std::abs(rhs));
      if (fy > rhs + slack) violations.push_back({sample, "descent", fy - rhs});
    }

    for (double eps : epsilons) {
      double lphi = lip + eps;
      Vector gy(n);
      problem.value_and_gradient(y, gy);
      Vector gphi = gy + eps * y;
      Vector z = y - s * gphi;
      double phi_z = problem.value(z) + 0.5 * eps * z.squaredNorm();
      double phi_x = problem.value(x) + 0.5 * eps * x.squaredNorm();
      double rhs = phi_x + gphi.dot(y - x) + (0.5 * lphi * s * s - s) * gphi.squaredNorm() -
                   0.5 * eps * (x - y).squaredNorm();
      double slack = kRelSlack * (1.0 + std::abs(phi_z) + std::abs(rhs));
      if (phi_z > rhs + slack)
        violations.push_back({sample, "extended-descent", phi_z - rhs});
    }
  }
  return violations;
}

}  // namespace tikopt
