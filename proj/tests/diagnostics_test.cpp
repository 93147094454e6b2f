#include "tikopt/diagnostics.hpp"

#include "test_support.hpp"
#include "tikopt/config.hpp"

#include <gtest/gtest.h>

using namespace tikopt;
using tikopt::testing::make_test_logistic;

namespace {

LeastSquares shifted_scalar() {  // f(x) = (x-1)^2 / 2
  Matrix a(1, 1);
  a << 1.0;
  Vector b(1);
  b << 1.0;
  return LeastSquares(a, b, "shifted");
}

// the certified configuration used by the audit tests: quadratic pairs with
// L = 2, s = 1/(2.1 L), row-1 tuple at delta = 1, q = 0.95; start index
// frozen from an independent scan
struct AuditSetup {
  QuadraticCoupling problem{4};
  TikhonovSchedule schedule = TikhonovSchedule::power(1.0);
  SolverParameters params;
  long k0 = 0;

  AuditSetup() {
    double lip = problem.lipschitz();
    double s = 1.0 / (2.1 * lip);
    SelectedParameters sel = select_parameters(1.0, 0.95, lip, s);
    K0Certificate cert = find_k0(sel.params, schedule, lip, 5000);
    EXPECT_TRUE(cert.certified);
    EXPECT_EQ(cert.k0, 578);
    params = sel.params;
    params.k0 = cert.k0;
    k0 = cert.k0;
  }

  Trace run_window(long hi) const {
    Vector start = gaussian_vector(33, problem.dimension());
    RunOptions opts;
    opts.stop.max_iterations = hi + 2;
    opts.stop.gradient_tolerance = 0.0;
    opts.stride = 1;
    opts.iterate_window_lo = 1;
    opts.iterate_window_hi = hi + 2;
    Method method = TrigaMethod{schedule, params};
    return run(problem, method, start, start, opts);
  }
};

}  // namespace

TEST(ViscosityPoint, ClosedFormSolves) {
  {
    Matrix a(1, 1);
    a << 1.0;
    LeastSquares prob(a, Vector::Zero(1), "origin");
    for (double eps : {10.0, 1.0, 1e-4}) {
      ViscosityPoint v = viscosity_point(prob, eps);
      EXPECT_NEAR(v.point[0], 0.0, 1e-14);
      EXPECT_LE(v.inner_residual, 1e-12);
    }
  }
  {
    LeastSquares prob = shifted_scalar();
    ViscosityPoint v = viscosity_point(prob, 1.0);
    EXPECT_NEAR(v.point[0], 0.5, 1e-13);
  }
  {
    QuadraticCoupling prob(1);
    ViscosityPoint v = viscosity_point(prob, 2.0);
    EXPECT_NEAR(v.point[0], 0.25, 1e-14);
    EXPECT_NEAR(v.point[1], 0.25, 1e-14);
  }
}

TEST(ViscosityPoint, DirectSolveMatchesGradientDescent) {
  Matrix a = gaussian_matrix(17, 8, 5);
  LeastSquares prob(a, gaussian_vector(18, 8), "gd-check");
  for (double eps : {1.0, 0.1, 0.01}) {
    ViscosityPoint direct = viscosity_point(prob, eps);
    // independent plain gradient-descent solve of phi_eps
    Vector x = Vector::Zero(prob.dimension());
    double step = 2.0 / (prob.lipschitz() + 2.0 * eps);
    for (int it = 0; it < 200000; ++it) {
      Vector g = prob.gradient(x) + eps * x;
      if (g.norm() <= 1e-12) break;
      x -= step * g;
    }
    EXPECT_LE((direct.point - x).norm(), 1e-8);
  }
}

TEST(ViscosityPoint, IterativeRouteForLogistic) {
  LogisticRegression prob = make_test_logistic();
  ViscosityPoint v = viscosity_point(prob, 0.5, 1e-10);
  Vector g = prob.gradient(v.point) + 0.5 * v.point;
  EXPECT_LE(g.norm(), 1e-10);
  EXPECT_THROW(viscosity_point(prob, 1e-5), std::invalid_argument);
}

TEST(ViscosityLemmas, DegenerateCurveAtOrigin) {
  Matrix a(1, 1);
  a << 1.0;
  LeastSquares prob(a, Vector::Zero(1), "origin");
  auto violations = check_viscosity_lemmas(prob, TikhonovSchedule::power(1.0), 1, 50);
  EXPECT_TRUE(violations.empty());
}

TEST(ViscosityLemmas, CoupledQuadraticCleanOverHundredIndices) {
  QuadraticCoupling prob(1);
  auto violations = check_viscosity_lemmas(prob, TikhonovSchedule::power(1.0), 1, 100);
  EXPECT_TRUE(violations.empty());
}

namespace {
// deliberately broken curve: every regularized minimizer scaled by 1.5
class CorruptedQuadratic : public QuadraticCoupling {
 public:
  using QuadraticCoupling::QuadraticCoupling;
  Vector tikhonov_argmin(double eps) const override {
    return 1.5 * QuadraticCoupling::tikhonov_argmin(eps);
  }
};
}  // namespace

TEST(ViscosityLemmas, CorruptedCurveIsFlaggedEverywhere) {
  CorruptedQuadratic prob(1);
  auto violations = check_viscosity_lemmas(prob, TikhonovSchedule::power(1.0), 1, 30);
  long l1_count = 0;
  for (const auto& v : violations)
    if (v.which == "L1-i") ++l1_count;
  // at k = 1 the scaled point lands exactly on ||x*|| (1.5/(2+1) = 1/2), so
  // the norm bound is violated from k = 2 onward
  EXPECT_EQ(l1_count, 29);
}

TEST(EnergyAt, MixedAndKineticCollapse) {
  QuadraticCoupling prob(1);
  auto sched = TikhonovSchedule::power(1.0);
  SolverParameters params;
  params.s = 0.25;
  params.delta = 1.0;
  params.lambda = 0.75;
  params.q = 1.0;
  params.a = 5.0 / 6.0;
  params.b = 8.0 / 3.0;

  Trace trace;
  trace.window_lo = 2;
  trace.window_hi = 3;
  Vector curve2 = prob.tikhonov_argmin(sched.at(2));
  trace.iterates = {curve2, curve2};  // x_2 = x_3 = x_{eps_2}

  EnergyBreakdown e = energy_at(trace, 3, prob, sched, params);
  EXPECT_EQ(e.e_mix, 0.0);
  EXPECT_EQ(e.e_kin, 0.0);
  EXPECT_NEAR(e.e_total, e.e_pot, 1e-18);
  EXPECT_GT(e.e_pot, 0.0);  // x_{eps_2} is not the eps_3 minimizer
}

TEST(EnergyAt, MuFixtureFromExtendedPrecision) {
  // p = 1, k = 3, s*eps_3 = 1/12, delta = 2, lambda = 1
  QuadraticCoupling prob(1);
  auto sched = TikhonovSchedule::power(1.0);
  SolverParameters params;
  params.s = 0.25;
  params.delta = 2.0;
  params.lambda = 1.0;
  params.q = 1.0;
  params.a = 1.0;
  params.b = 2.0;

  Trace trace;
  trace.window_lo = 2;
  trace.window_hi = 3;
  trace.iterates = {Vector::Constant(2, 0.3), Vector::Constant(2, 0.35)};
  EnergyBreakdown e = energy_at(trace, 3, prob, sched, params);
  EXPECT_NEAR(e.mu_next, 1.232050807568877, 1e-14);
  EXPECT_NEAR(e.tau, std::sqrt(1.0 / 12.0), 1e-15);
}

TEST(EnergyAt, FullDecompositionMatchesExtendedPrecisionFixture) {
  // f(x) = (x-1)^2/2, power p=1, s=1/4, delta=2, lambda=1, q=1, a=1, b=2,
  // x0 = x1 = 0.3; values frozen from a 40-digit independent evaluation
  LeastSquares prob = shifted_scalar();
  auto sched = TikhonovSchedule::power(1.0);
  SolverParameters params;
  params.s = 0.25;
  params.delta = 2.0;
  params.lambda = 1.0;
  params.q = 1.0;
  params.a = 1.0;
  params.b = 2.0;

  Vector start = Vector::Constant(1, 0.3);
  RunOptions opts;
  opts.stop.max_iterations = 4;
  opts.stop.gradient_tolerance = 0.0;
  opts.stride = 1;
  opts.iterate_window_lo = 1;
  opts.iterate_window_hi = 4;
  Trace trace = run(prob, TrigaMethod{sched, params}, start, start, opts);
  EXPECT_NEAR(trace.iterate(3)[0], 0.5183058261758407797249, 1e-15);
  EXPECT_NEAR(trace.iterate(4)[0], 0.6288718345082392074934, 1e-15);

  EnergyBreakdown e2 = energy_at(trace, 2, prob, sched, params);
  EXPECT_NEAR(e2.e_pot, 0.1040522228532752776778, 1e-15);
  EXPECT_NEAR(e2.e_mix, 0.002089466094067262377996, 1e-16);
  EXPECT_NEAR(e2.e_kin, 0.001464466094067262377996, 1e-16);
  EXPECT_NEAR(e2.mu_next, 2.2854050431714103357, 1e-13);
  EXPECT_NEAR(e2.theta, 1.333457848305411799148, 1e-13);
  EXPECT_NEAR(e2.alpha, 1.950979178498911456458, 1e-14);
  EXPECT_NEAR(e2.beta, 0.2928932188134524755992, 1e-15);

  EnergyBreakdown e3 = energy_at(trace, 3, prob, sched, params);
  EXPECT_NEAR(e3.e_pot, 0.04618670025682650853858, 1e-15);
  EXPECT_NEAR(e3.e_mix, 0.002848444661421601516783, 1e-16);
  EXPECT_NEAR(e3.e_kin, 0.002957759558447963882585, 1e-16);
  EXPECT_NEAR(e3.theta, 0.3362745409215528666761, 1e-14);

  // one decay-audit step against the same fixture
  AuditReport report = audit_energy_decay(trace, 2, 2, prob, sched, params);
  ASSERT_EQ(report.entries.size(), 1u);
  EXPECT_NEAR(report.entries[0].lhs, 0.06321159553545687607063, 1e-14);
  EXPECT_NEAR(report.entries[0].rhs, 0.6667289241527058995742, 1e-13);
}

TEST(EnergyAt, ThetaPositiveInCertifiedRegime) {
  AuditSetup setup;
  Trace trace = setup.run_window(setup.k0 + 100);
  ViscosityCache cache(setup.problem, setup.schedule);
  for (long k = setup.k0; k <= setup.k0 + 100; k += 7) {
    EnergyBreakdown e = energy_at(trace, k, setup.problem, setup.schedule, setup.params, cache);
    EXPECT_FALSE(e.pre_regime);
    EXPECT_GT(e.theta, 0.0);
    EXPECT_GT(e.alpha, 0.0);
    EXPECT_GT(e.beta, 0.0);
    EXPECT_GE(e.e_pot, -1e-15);
  }
}

TEST(EnergyDecayAudit, CertifiedWindowIsClean) {
  AuditSetup setup;
  Trace trace = setup.run_window(setup.k0 + 300);
  AuditReport report = audit_energy_decay(trace, setup.k0, setup.k0 + 300, setup.problem,
                                      setup.schedule, setup.params);
  EXPECT_EQ(report.violation_count, 0);
  EXPECT_EQ(report.pre_regime_count, 0);
  EXPECT_EQ(report.entries.size(), 301u);
}

TEST(EnergyDecayAudit, TamperedIterateIsLocalized) {
  AuditSetup setup;
  Trace trace = setup.run_window(setup.k0 + 300);
  long bad_k = setup.k0 + 150;
  trace.iterates[static_cast<std::size_t>(bad_k - trace.window_lo)] *= 1.1;

  AuditReport report = audit_energy_decay(trace, setup.k0, setup.k0 + 300, setup.problem,
                                      setup.schedule, setup.params);
  EXPECT_GT(report.violation_count, 0);
  for (const auto& entry : report.entries) {
    if (entry.violation) {
      EXPECT_GE(entry.k, bad_k - 2);
      EXPECT_LE(entry.k, bad_k + 2);
    }
  }
}

TEST(EnergyDecayAudit, EntriesBeforeK0AreExcluded) {
  AuditSetup setup;
  Trace trace = setup.run_window(setup.k0 + 50);
  AuditReport report = audit_energy_decay(trace, setup.k0 - 20, setup.k0 + 50, setup.problem,
                                      setup.schedule, setup.params);
  EXPECT_EQ(report.pre_regime_count, 20);
  EXPECT_EQ(report.violation_count, 0);
}

TEST(EnergyBounds, PointwiseLevelBoundsHold) {
  AuditSetup setup;
  Trace trace = setup.run_window(setup.k0 + 200);
  auto violations = check_energy_bounds(trace, setup.k0, setup.k0 + 200, setup.problem,
                                        setup.schedule, setup.params);
  EXPECT_TRUE(violations.empty());
}

TEST(DescentLemmas, CleanOnAllFamilies) {
  QuadraticCoupling quad(3);
  Matrix a = gaussian_matrix(77, 9, 6);
  LeastSquares ls(a, gaussian_vector(78, 9), "ls");
  LogisticRegression logistic = make_test_logistic();
  EXPECT_TRUE(check_descent_lemmas(quad, 200).empty());
  EXPECT_TRUE(check_descent_lemmas(ls, 200).empty());
  EXPECT_TRUE(check_descent_lemmas(logistic, 100).empty());
}

TEST(DescentLemmas, GradientStepCaseAtEqualPoints) {
  // x = y reduces the extended inequality to
  //   phi(y - s grad phi(y)) <= phi(y) + (L_phi s^2/2 - s) ||grad phi(y)||^2
  QuadraticCoupling prob(2);
  double eps = 0.5;
  double lphi = prob.lipschitz() + eps;
  Vector y = gaussian_vector(13, prob.dimension());
  Vector gphi = prob.gradient(y) + eps * y;
  double phi_y = prob.value(y) + 0.5 * eps * y.squaredNorm();
  for (double s : {0.1, 0.5, 2.0 / prob.lipschitz()}) {
    Vector z = y - s * gphi;
    double phi_z = prob.value(z) + 0.5 * eps * z.squaredNorm();
    double rhs = phi_y + (0.5 * lphi * s * s - s) * gphi.squaredNorm();
    EXPECT_LE(phi_z, rhs + 1e-10 * ( 1.0 + std::abs(rhs)));
  }
}

namespace {
class UnderstatedLipschitz : public QuadraticCoupling {
 public:
  using QuadraticCoupling::QuadraticCoupling;
  double lipschitz() const override { return 0.4 * QuadraticCoupling::lipschitz(); }
};
}  // namespace

TEST(DescentLemmas, UnderstatedConstantIsDetected) {
  UnderstatedLipschitz prob(3);
  auto violations = check_descent_lemmas(prob, 300);
  EXPECT_FALSE(violations.empty());
}
