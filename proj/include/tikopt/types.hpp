#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tikopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Index = Eigen::Index;

/// Error raised when a text input (MatrixMarket, LIBSVM, config) is malformed.
/// Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line = 0)
      : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameter selection could not produce an admissible tuple.
class SelectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Empirical certification failed (no admissible index within the horizon,
/// or an inadmissible schedule coefficient).
class CertificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An inner iterative solve stopped before reaching its target residual.
class IncompleteSolveError : public std::runtime_error {
 public:
  IncompleteSolveError(const std::string& what, double achieved_residual)
      : std::runtime_error(what), achieved_residual_(achieved_residual) {}
  double achieved_residual() const { return achieved_residual_; }

 private:
  double achieved_residual_;
};

}  // namespace tikopt
