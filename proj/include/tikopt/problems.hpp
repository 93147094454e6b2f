#pragma once

#include "tikopt/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tikopt {

/// Result of the spectral power-iteration bound. `degenerate` marks an
/// all-zero operator, for which the bound is exactly 0.
struct LipschitzEstimate {
  double value = 0.0;
  bool degenerate = false;
};

/// Upper bound on the largest eigenvalue of A^T A, i.e. sigma_max(A)^2.
///
/// Power iteration with the deterministic start (1, 1/2, ..., 1/n), run until
/// the Rayleigh-quotient increment falls below `tolerance` relatively, then
/// inflated by a 1e-3 slack so the returned value sits above the true
/// constant. The certificate is empirical: pathological spectra with a tiny
/// dominant gap converge slowly, hence the generous iteration cap.
template <class Mat>
LipschitzEstimate spectral_bound_squared(const Mat& a, double tolerance) {
  const Index n = a.cols();
  if (n == 0 || a.rows() == 0) return {0.0, true};
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = 1.0 / static_cast<double>(i + 1);
  v.normalize();

  double rayleigh = 0.0;
  const long max_iter = 200 + 20 * static_cast<long>(n);
  for (long it = 0; it < max_iter; ++it) {
    Vector w = a.transpose() * (a * v).eval();
    double norm = w.norm();
    if (norm == 0.0) return {0.0, it == 0};
    double next = v.dot(w);
    v = w / norm;
    if (it > 0 && std::abs(next - rayleigh) <= tolerance * std::max(1.0, std::abs(next))) {
      rayleigh = next;
      break;
    }
    rayleigh = next;
  }
  if (rayleigh <= 0.0) return {0.0, true};
  constexpr double kSlack = 1e-3;
  return {rayleigh * (1.0 + kSlack), false};
}

/// A smooth convex objective. Implementations are immutable after
/// construction; concurrent read-only evaluation from many threads is part of
/// the contract (the benchmark harness relies on it). Lazily computed members
/// hide behind std::call_once.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual Index dimension() const = 0;

  /// Upper bound on the Lipschitz modulus of the gradient.
  virtual double lipschitz() const = 0;

  virtual double value(const Vector& x) const = 0;
  virtual double value_and_gradient(const Vector& x, Vector& grad) const = 0;

  Vector gradient(const Vector& x) const {
    Vector g(dimension());
    value_and_gradient(x, g);
    return g;
  }

  /// min f when available in closed form.
  virtual std::optional<double> optimum_value() const { return std::nullopt; }

  /// Least-norm minimizer when the family admits one in closed form.
  virtual std::optional<Vector> min_norm_solution() const { return std::nullopt; }

  /// True when minimizing f + (eps/2)||.||^2 reduces to a linear solve.
  virtual bool has_linear_structure() const { return false; }

  /// argmin of f + (eps/2)||.||^2 for linear-structure families.
  virtual Vector tikhonov_argmin(double /*eps*/) const {
    throw std::logic_error("tikhonov_argmin: not a linear-structure problem");
  }

  virtual std::string name() const = 0;
};

/// Checked single evaluation: f(x) and grad f(x).
inline std::pair<double, Vector> evaluate(const Problem& problem, const Vector& x) {
  if (x.size() != problem.dimension())
    throw std::invalid_argument("evaluate: x has length " + std::to_string(x.size()) +
                                ", problem dimension is " + std::to_string(problem.dimension()));
  if (!x.allFinite()) throw std::invalid_argument("evaluate: x has non-finite entries");
  Vector grad(x.size());
  double v = problem.value_and_gradient(x, grad);
  return {v, std::move(grad)};
}

/// f(x) = 1/2 sum_i (x_{2i-1} + x_{2i} - 1)^2 over n coupled pairs.
/// Solution set: every pair sums to one; the least-norm point is (1/2,...,1/2).
class QuadraticCoupling : public Problem {
 public:
  explicit QuadraticCoupling(Index pair_count) : pairs_(pair_count) {
    if (pair_count < 1) throw std::invalid_argument("QuadraticCoupling: pair_count must be >= 1");
  }

  Index pair_count() const { return pairs_; }
  Index dimension() const override { return 2 * pairs_; }
  double lipschitz() const override { return 2.0; }

  double value(const Vector& x) const override {
    double f = 0.0;
    for (Index i = 0; i < pairs_; ++i) {
      double r = x[2 * i] + x[2 * i + 1] - 1.0;
      f += r * r;
    }
    return 0.5 * f;
  }

  double value_and_gradient(const Vector& x, Vector& grad) const override {
    grad.resize(2 * pairs_);
    double f = 0.0;
    for (Index i = 0; i < pairs_; ++i) {
      double r = x[2 * i] + x[2 * i + 1] - 1.0;
      f += r * r;
      grad[2 * i] = r;
      grad[2 * i + 1] = r;
    }
    return 0.5 * f;
  }

  std::optional<double> optimum_value() const override { return 0.0; }

  std::optional<Vector> min_norm_solution() const override {
    return Vector::Constant(2 * pairs_, 0.5);
  }

  bool has_linear_structure() const override { return true; }

  Vector tikhonov_argmin(double eps) const override {
    // stationarity per pair: r + eps*u = 0 with u = v by symmetry
    return Vector::Constant(2 * pairs_, 1.0 / (2.0 + eps));
  }

  /// The n x 2n design matrix whose rows are (..., 1, 1, ...).
  SparseMatrix design_matrix() const {
    SparseMatrix a(pairs_, 2 * pairs_);
    a.reserve(Eigen::VectorXi::Constant(2 * pairs_, 1));
    for (Index i = 0; i < pairs_; ++i) {
      a.insert(i, 2 * i) = 1.0;
      a.insert(i, 2 * i + 1) = 1.0;
    }
    a.makeCompressed();
    return a;
  }

  std::string name() const override { return "quadratic:n=" + std::to_string(pairs_); }

 private:
  Index pairs_;
};

/// f(x) = 1/2 ||Ax - b||^2. The matrix may be rank deficient; the least-norm
/// minimizer is the pseudoinverse solution with singular values below
/// 1e-10 * sigma_max truncated.
class LeastSquares : public Problem {
 public:
  LeastSquares(SparseMatrix a, Vector b, std::string label = "ls")
      : a_(std::move(a)), b_(std::move(b)), label_(std::move(label)) {
    if (a_.rows() != b_.size())
      throw std::invalid_argument("LeastSquares: rhs length does not match matrix rows");
    a_.makeCompressed();
    lipschitz_ = spectral_bound_squared(a_, 1e-12);
  }

  LeastSquares(const Matrix& a, Vector b, std::string label = "ls")
      : LeastSquares(SparseMatrix(a.sparseView(0.0, -1.0)), std::move(b), std::move(label)) {}

  const SparseMatrix& matrix() const { return a_; }
  const Vector& rhs() const { return b_; }
  Index rows() const { return a_.rows(); }

  Index dimension() const override { return a_.cols(); }
  double lipschitz() const override { return lipschitz_.value; }
  bool degenerate() const { return lipschitz_.degenerate; }

  double value(const Vector& x) const override { return 0.5 * (a_ * x - b_).squaredNorm(); }

  double value_and_gradient(const Vector& x, Vector& grad) const override {
    Vector r = a_ * x - b_;
    grad = a_.transpose() * r;
    return 0.5 * r.squaredNorm();
  }

  std::optional<double> optimum_value() const override {
    ensure_pinv();
    return optimum_;
  }

  std::optional<Vector> min_norm_solution() const override {
    ensure_pinv();
    return min_norm_;
  }

  bool has_linear_structure() const override { return true; }

  Vector tikhonov_argmin(double eps) const override {
    ensure_normal_equations();
    Matrix shifted = gram_;
    shifted.diagonal().array() += eps;
    return Eigen::LDLT<Matrix>(shifted).solve(atb_);
  }

  std::string name() const override { return label_; }

 private:
  void ensure_normal_equations() const {
    std::call_once(normal_once_, [this] {
      gram_ = Matrix(a_.transpose() * a_);
      atb_ = a_.transpose() * b_;
    });
  }

  void ensure_pinv() const {
    std::call_once(pinv_once_, [this] {
      Eigen::BDCSVD<Matrix> svd(Matrix(a_), Eigen::ComputeThinU | Eigen::ComputeThinV);
      const auto& sv = svd.singularValues();
      double cutoff = sv.size() > 0 ? 1e-10 * sv[0] : 0.0;
      Vector inv = Vector::Zero(sv.size());
      for (Index i = 0; i < sv.size(); ++i)
        if (sv[i] > cutoff) inv[i] = 1.0 / sv[i];
      Vector x = svd.matrixV() * inv.asDiagonal() * (svd.matrixU().transpose() * b_);
      min_norm_ = x;
      optimum_ = 0.5 * (a_ * x - b_).squaredNorm();
    });
  }

  SparseMatrix a_;
  Vector b_;
  std::string label_;
  LipschitzEstimate lipschitz_;

  mutable std::once_flag normal_once_;
  mutable Matrix gram_;
  mutable Vector atb_;

  mutable std::once_flag pinv_once_;
  mutable Vector min_norm_;
  mutable double optimum_ = 0.0;
};

/// Binary logistic loss, f(x) = (1/m) sum_i log(1 + exp(-y_i <a_i, x>)).
/// Evaluated through the overflow-free softplus split
/// log(1+e^z) = max(z,0) + log1p(e^{-|z|}).
class LogisticRegression : public Problem {
 public:
  LogisticRegression(SparseMatrix features, Vector labels, std::string label = "logistic")
      : a_(std::move(features)), y_(std::move(labels)), label_(std::move(label)) {
    if (a_.rows() != y_.size())
      throw std::invalid_argument("LogisticRegression: labels length does not match sample count");
    if (a_.rows() == 0) throw std::invalid_argument("LogisticRegression: empty dataset");
    for (Index i = 0; i < y_.size(); ++i)
      if (y_[i] != 1.0 && y_[i] != -1.0)
        throw std::invalid_argument("LogisticRegression: labels must be -1 or +1");
    a_.makeCompressed();
    LipschitzEstimate sigma = spectral_bound_squared(a_, 1e-12);
    lipschitz_ = sigma.value / (4.0 * static_cast<double>(a_.rows()));
  }

  const SparseMatrix& features() const { return a_; }
  const Vector& labels() const { return y_; }
  Index sample_count() const { return a_.rows(); }

  Index dimension() const override { return a_.cols(); }
  double lipschitz() const override { return lipschitz_; }

  double value(const Vector& x) const override {
    Vector u = a_ * x;
    double f = 0.0;
    for (Index i = 0; i < u.size(); ++i) f += softplus(-y_[i] * u[i]);
    return f / static_cast<double>(u.size());
  }

  double value_and_gradient(const Vector& x, Vector& grad) const override {
    const Index m = a_.rows();
    Vector u = a_ * x;
    Vector w(m);
    double f = 0.0;
    for (Index i = 0; i < m; ++i) {
      double z = -y_[i] * u[i];
      f += softplus(z);
      w[i] = -y_[i] * sigmoid(z);
    }
    grad = (a_.transpose() * w) / static_cast<double>(m);
    return f / static_cast<double>(m);
  }

  std::string name() const override { return label_; }

 private:
  static double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
  }
  static double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
  }

  SparseMatrix a_;
  Vector y_;
  std::string label_;
  double lipschitz_ = 0.0;
};

/// Power-iteration Lipschitz bound for data-backed problems. Quadratic
/// coupling carries its exact constant and is not accepted here.
inline LipschitzEstimate estimate_lipschitz(const Problem& problem, double tolerance) {
  if (auto* ls = dynamic_cast<const LeastSquares*>(&problem))
    return spectral_bound_squared(ls->matrix(), tolerance);
  if (auto* lr = dynamic_cast<const LogisticRegression*>(&problem)) {
    LipschitzEstimate e = spectral_bound_squared(lr->features(), tolerance);
    e.value /= 4.0 * static_cast<double>(lr->sample_count());
    return e;
  }
  throw std::invalid_argument("estimate_lipschitz: supported for least-squares and logistic only");
}

}  // namespace tikopt
