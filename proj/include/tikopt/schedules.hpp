#pragma once

#include "tikopt/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace tikopt {

/// Vanishing regularization sequence eps_k, k >= 1. Two families:
///   power(p):    eps_k = k^{-p},  0 < p <= 2 (p = 2 only for the coincidence
///                with critical(1); runs use p < 2)
///   critical(c): eps_k = c / k^2
class TikhonovSchedule {
 public:
  enum class Kind { Power, Critical };

  static TikhonovSchedule power(double p) {
    if (!(p > 0.0 && p <= 2.0))
      throw std::invalid_argument("schedule: power exponent must be in (0, 2]");
    return TikhonovSchedule(Kind::Power, p);
  }

  static TikhonovSchedule critical(double c) {
    if (!(c > 0.0)) throw std::invalid_argument("schedule: critical coefficient must be positive");
    return TikhonovSchedule(Kind::Critical, c);
  }

  double at(long k) const {
    if (k < 1) throw std::invalid_argument("schedule: index starts at 1");
    double kd = static_cast<double>(k);
    return kind_ == Kind::Power ? std::pow(kd, -value_) : value_ / (kd * kd);
  }

  Kind kind() const { return kind_; }
  bool is_power() const { return kind_ == Kind::Power; }
  double exponent() const { return kind_ == Kind::Power ? value_ : 2.0; }
  double coefficient() const { return kind_ == Kind::Critical ? value_ : 1.0; }

  std::string describe() const {
    return kind_ == Kind::Power ? "power(p=" + std::to_string(value_) + ")"
                                : "critical(c=" + std::to_string(value_) + ")";
  }

 private:
  TikhonovSchedule(Kind kind, double value) : kind_(kind), value_(value) {}
  Kind kind_;
  double value_;
};

/// delta = 2^{p/2} / sqrt(s), the step-adapted damping level used by the
/// experiments when no explicit delta is given.
inline double default_delta(double p, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("default_delta: s must be positive");
  if (!(p > 0.0 && p <= 2.0)) throw std::invalid_argument("default_delta: p must be in (0, 2]");
  return std::exp2(0.5 * p) / std::sqrt(s);
}

/// The analysis tuple. (s, delta) enter the iteration itself; (lambda, q, a, b)
/// only enter the certification system and the energy diagnostics; k0 is the
/// empirically certified start index (0 = not certified).
struct SolverParameters {
  double s = 0.0;
  double delta = 0.0;
  double lambda = 0.0;
  double q = 0.0;
  double a = 0.0;
  double b = 0.0;
  long k0 = 0;
};

/// Signed slacks for the four constant-level constraints; each passes iff the
/// slack is strictly negative.
///   (i)   (1+q)/(2+q) delta < lambda < delta   (reported as max of both gaps)
///   (ii)  (1 + a(1-q)) lambda - a delta < 0
///   (iii) ((1-b)/b) lambda^2 + delta lambda - 1 < 0
///   (iv)  L s < q/(q+1)
struct K1Report {
  std::array<double, 4> slack{};
  bool pass(int i) const { return slack[static_cast<std::size_t>(i)] < 0.0; }
  bool all_pass() const {
    for (double v : slack)
      if (!(v < 0.0)) return false;
    return true;
  }
};

inline K1Report check_K1(const SolverParameters& p, double lipschitz) {
  K1Report r;
  double lower_gap = (1.0 + p.q) / (2.0 + p.q) * p.delta - p.lambda;
  double upper_gap = p.lambda - p.delta;
  r.slack[0] = std::max(lower_gap, upper_gap);
  r.slack[1] = (1.0 + p.a * (1.0 - p.q)) * p.lambda - p.a * p.delta;
  r.slack[2] = (1.0 - p.b) / p.b * p.lambda * p.lambda + p.delta * p.lambda - 1.0;
  r.slack[3] = lipschitz * p.s - p.q / (p.q + 1.0);
  return r;
}

/// Left-hand sides of the per-index admissibility system at index k; each
/// inequality passes iff lhs <= 0. `pre_regime` marks indices where
/// 1 - delta sqrt(s eps_k) or 1 - s eps_k is not yet positive, for which the
/// system is not meaningful.
struct K0Report {
  bool pre_regime = false;
  std::array<double, 4> lhs{};
  bool pass() const {
    if (pre_regime) return false;
    for (double v : lhs)
      if (!(v <= 0.0)) return false;
    return true;
  }
  int first_violated() const {
    for (int i = 0; i < 4; ++i)
      if (lhs[static_cast<std::size_t>(i)] > 0.0) return i;
    return -1;
  }
};

inline K0Report check_K0_at(const SolverParameters& p, const TikhonovSchedule& schedule,
                            double lipschitz, long k) {
  K0Report r;
  double eps_k = schedule.at(k);
  double eps_k1 = schedule.at(k + 1);
  double root_k = std::sqrt(p.s * eps_k);
  double root_k1 = std::sqrt(p.s * eps_k1);
  double dk = 1.0 - p.delta * root_k;
  if (!(dk > 0.0) || !(1.0 - p.s * eps_k > 0.0)) {
    r.pre_regime = true;
    return r;
  }
  double diff = 1.0 / root_k1 - 1.0 / root_k;
  double damping = p.delta / dk;

  r.lhs[0] =
      (1.0 + p.q) * (diff + damping - p.lambda) - p.lambda * std::sqrt(eps_k1 / eps_k);
  r.lhs[1] = (1.0 - p.b) / p.b * p.lambda * p.lambda + damping * p.lambda - 1.0;
  r.lhs[2] = (1.0 + p.a * (1.0 - p.q)) * p.lambda / p.a - p.delta + (1.0 + p.q) * diff +
             p.q * p.delta * p.delta * root_k1 / dk;
  r.lhs[3] = lipschitz * p.s * (1.0 + p.lambda * root_k1) +
             p.q * ((lipschitz + eps_k) * p.s - 1.0);
  return r;
}

namespace detail {

// Midpoint of an interval that is open on at least one side; both rules keep
// the choice strictly inside.
inline double midpoint(double lo, double hi) { return 0.5 * (lo + hi); }

// "lower bound x 2" for intervals unbounded above, per the selection rules.
inline double above(double lo) { return 2.0 * lo; }

inline double b_choice(double lo) { return std::max(2.0 * lo, lo + 1.0); }

}  // namespace detail

struct SelectedParameters {
  SolverParameters params;
  double step_bound = 0.0;  // admissible s must stay strictly below this
  int table_row = 0;        // 1..6, which admissibility row produced the tuple
};

/// Picks (a, b, lambda) from the admissibility table for the given (delta, q)
/// and attaches a step strictly inside the bound s < q/((q+1) L). Rows with a
/// bounded a-interval are preferred; `prefer_large_a` switches to the
/// unbounded-a sibling row where one exists.
///
/// a: interval midpoint, or lower bound x 2 when unbounded above.
/// b: max(lower x 2, lower + 1).
/// lambda: interval midpoint.
inline SelectedParameters select_parameters(double delta, double q, double lipschitz,
                                            double step = 0.0, bool prefer_large_a = false) {
  if (!(delta > 0.0) || !(q > 0.0) || !(lipschitz > 0.0))
    throw std::invalid_argument("select_parameters: delta, q, L must be positive");

  SelectedParameters out;
  SolverParameters& p = out.params;
  p.delta = delta;
  p.q = q;

  double lambda_lo = (1.0 + q) / (2.0 + q) * delta;
  double lambda_hi = 0.0;

  if (delta < 2.0) {
    double b_lo = 4.0 / (4.0 - delta * delta);
    p.b = detail::b_choice(b_lo);
    if (q <= 1.0) {
      double a_lo = (q + 1.0) / (q * q + q + 1.0);
      if (!prefer_large_a) {
        out.table_row = 1;
        p.a = detail::midpoint(a_lo, 1.0 / q);
        lambda_hi = p.a * delta / (1.0 + p.a * (1.0 - q));
      } else {
        out.table_row = 2;
        p.a = detail::above(1.0 / q);
        lambda_hi = delta;
      }
    } else {
      out.table_row = 3;
      p.a = detail::above(1.0 / (q - 1.0));
      lambda_hi = delta;
    }
  } else {
    double root = std::sqrt(1.0 - 4.0 / (delta * delta));
    if (q <= 1.0) {
      double a_hat = std::max((q + 1.0) / (q * q + q + 1.0),
                              (1.0 + root) / (2.0 - (1.0 + root) * (1.0 - q)));
      if (!prefer_large_a) {
        out.table_row = 4;
        if (!(a_hat < 1.0 / q))
          throw SelectionError("select_parameters: empty a-interval (a_hat >= 1/q)");
        p.a = detail::midpoint(a_hat, 1.0 / q);
        lambda_hi = p.a * delta / (1.0 + p.a * (1.0 - q));
      } else {
        out.table_row = 5;
        p.a = detail::above(1.0 / q);
        lambda_hi = delta;
      }
    } else {
      out.table_row = 6;
      p.a = detail::above(1.0 / (q - 1.0));
      lambda_hi = delta;
    }
    double b_hat = (p.a * delta) * (p.a * delta) /
                   (delta * delta * p.a * (p.a * q - 1.0) +
                    (1.0 + p.a * (1.0 - q)) * (1.0 + p.a * (1.0 - q)));
    double b_lo;
    if (out.table_row == 4) {
      b_lo = b_hat;
    } else if (out.table_row == 5) {
      // b_hat only keeps lambda_plus under a*delta/(1+a(1-q)) > delta; the
      // binding requirement here is lambda_plus < delta, i.e. b > delta^2.
      b_lo = std::max(b_hat, delta * delta);
    } else {
      b_lo = delta * delta;
    }
    p.b = detail::b_choice(b_lo);
    double lambda_plus =
        p.b / (2.0 * (p.b - 1.0)) *
        (delta + std::sqrt(delta * delta + 4.0 * (1.0 - p.b) / p.b));
    lambda_lo = std::max(lambda_lo, lambda_plus);
  }

  if (!(lambda_lo < lambda_hi))
    throw SelectionError("select_parameters: empty lambda-interval for the selected row");
  p.lambda = detail::midpoint(lambda_lo, lambda_hi);

  out.step_bound = q / ((q + 1.0) * lipschitz);
  p.s = step > 0.0 ? step : out.step_bound / 1.1;
  if (!(p.s < out.step_bound))
    throw SelectionError("select_parameters: step violates s < q/((q+1)L)");

  K1Report k1 = check_K1(p, lipschitz);
  if (!k1.all_pass()) {
    static const char* names[4] = {"(i)", "(ii)", "(iii)", "(iv)"};
    for (int i = 0; i < 4; ++i)
      if (!k1.pass(i))
        throw SelectionError(std::string("select_parameters: selected tuple violates ") +
                             names[i]);
  }
  return out;
}

/// Empirical admissibility certificate: the per-index system was verified on
/// an exhaustive prefix [k0, k0+1000] and then on a geometric grid up to the
/// horizon. `monotone_regime` reports whether the first inequality's left side
/// was nonincreasing along the checked indices, the property that justifies
/// grid extrapolation for power schedules; a false value downgrades the
/// certificate.
struct K0Certificate {
  bool certified = false;
  long k0 = 0;
  long verified_up_to = 0;
  int failed_condition = -1;  // 0..3 when failed; -1 otherwise
  bool pre_regime_throughout = false;
  bool monotone_regime = true;
  std::array<double, 4> worst_lhs{-std::numeric_limits<double>::infinity(),
                                  -std::numeric_limits<double>::infinity(),
                                  -std::numeric_limits<double>::infinity(),
                                  -std::numeric_limits<double>::infinity()};
  std::string failure_message;
};

inline K0Certificate find_k0(const SolverParameters& params, const TikhonovSchedule& schedule,
                             double lipschitz, long k_max) {
  if (k_max < 2) throw std::invalid_argument("find_k0: k_max must be >= 2");
  K0Certificate cert;
  if (!(params.lambda < params.delta)) {
    cert.failed_condition = 0;
    cert.failure_message = "lambda < delta is violated; condition (i) cannot hold";
    return cert;
  }

  long candidate = 1;
  int last_violation = -1;
  bool saw_regime = false;

  auto track = [&](const K0Report& r) {
    for (std::size_t i = 0; i < 4; ++i) cert.worst_lhs[i] = std::max(cert.worst_lhs[i], r.lhs[i]);
  };

  while (candidate <= k_max) {
    // advance to the first passing index
    long k = candidate;
    bool found = false;
    for (; k <= k_max; ++k) {
      K0Report r = check_K0_at(params, schedule, lipschitz, k);
      if (r.pre_regime) continue;
      saw_regime = true;
      if (r.pass()) {
        found = true;
        break;
      }
      last_violation = r.first_violated();
    }
    if (!found) break;

    long k0 = k;
    bool restart = false;
    double prev_lhs0 = -std::numeric_limits<double>::infinity();
    bool prev_set = false;

    auto verify = [&](long idx) -> bool {
      K0Report r = check_K0_at(params, schedule, lipschitz, idx);
      if (r.pre_regime || !r.pass()) {
        if (!r.pre_regime) last_violation = r.first_violated();
        candidate = idx + 1;
        restart = true;
        return false;
      }
      track(r);
      if (prev_set && r.lhs[0] > prev_lhs0 + 1e-12 * (1.0 + std::abs(prev_lhs0)))
        cert.monotone_regime = false;
      prev_lhs0 = r.lhs[0];
      prev_set = true;
      return true;
    };

    long prefix_end = std::min(k0 + 1000, k_max);
    for (long i = k0; i <= prefix_end && !restart; ++i) verify(i);
    if (!restart) {
      long g = prefix_end;
      while (g < k_max && !restart) {
        g = std::max(g + 1, static_cast<long>(std::ceil(1.1 * static_cast<double>(g))));
        g = std::min(g, k_max);
        verify(g);
      }
    }
    if (restart) continue;

    cert.certified = true;
    cert.k0 = k0;
    cert.verified_up_to = k_max;
    return cert;
  }

  cert.certified = false;
  cert.pre_regime_throughout = !saw_regime;
  cert.failed_condition = saw_regime ? last_violation : -1;
  if (!saw_regime) {
    cert.failure_message = "pre-regime through the whole horizon (delta*sqrt(s*eps_k) >= 1)";
  } else {
    static const char* names[4] = {"(i)", "(ii)", "(iii)", "(iv)"};
    cert.failure_message = std::string("no admissible k0 up to horizon; last violated condition ") +
                           (last_violation >= 0 ? names[last_violation] : "(none)");
  }
  return cert;
}

/// Smallest admissible coefficient for the critical schedule: any c with
/// c > 1/(s m^2) is admissible, where m is the three-term minimum below.
/// Throws when the tuple leaves no admissible c (m <= 0).
inline double critical_c_bound(const SolverParameters& p) {
  double t1 = (2.0 + p.q) * p.lambda / (1.0 + p.q) - p.delta;
  double t2 = (p.delta - (1.0 + p.a * (1.0 - p.q)) * p.lambda / p.a) / (1.0 + p.q);
  double t3 = p.delta - p.lambda;
  double m = std::min({t1, t2, t3});
  if (!(m > 0.0))
    throw CertificationError(
        "critical_c_bound: no admissible c for these parameters (three-term minimum is " +
        std::to_string(m) + "); move lambda toward the upper end of its interval");
  return 1.0 / (p.s * m * m);
}

}  // namespace tikopt
