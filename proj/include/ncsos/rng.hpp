#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

namespace ncsos {

/// Deterministic random helpers on top of std::mt19937_64. The distribution
/// shapes are implemented here rather than with <random> distributions, whose
/// output is implementation-defined; identical seeds must give identical
/// streams everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  int uniformInt(int a, int b) {  // inclusive bounds
    return a + static_cast<int>(uniform() * (b - a + 1));
  }

  double gaussian() {
    if (haveSpare_) {
      haveSpare_ = false;
      return spare_;
    }
    double u1 = 0;
    while (u1 <= 0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * M_PI * u2;
    spare_ = r * std::sin(t);
    haveSpare_ = true;
    return r * std::cos(t);
  }

  Eigen::VectorXd gaussianVector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = gaussian();
    return v;
  }

  Eigen::MatrixXd gaussianSymmetric(int n) {
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        A(i, j) = A(j, i) = gaussian();
      }
    }
    return A;
  }

  std::uint64_t next() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  bool haveSpare_ = false;
  double spare_ = 0.0;
};

}  // namespace ncsos
