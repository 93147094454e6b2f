#pragma once

#include "tikopt/types.hpp"

#include <cmath>
#include <random>

namespace tikopt {

/// Deterministic random stream. std::mt19937_64 is fully specified by the
/// standard; the uniform and gaussian transforms below are spelled out by hand
/// so that a seed always produces the same doubles regardless of the standard
/// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform in (0, 1].
  double uniform_open() { return 1.0 - uniform(); }

  /// Standard normal via Box-Muller.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform_open();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double angle = 6.283185307179586476925287 * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

inline Vector gaussian_vector(std::uint64_t seed, Index n) {
  Rng rng(seed);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.gaussian();
  return v;
}

inline Matrix gaussian_matrix(std::uint64_t seed, Index rows, Index cols) {
  Rng rng(seed);
  Matrix m(rows, cols);
  // row-major fill so the stream order matches how instances are described
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.gaussian();
  return m;
}

}  // namespace tikopt
