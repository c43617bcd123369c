#pragma once

// Deterministic synthetic datasets shared by unit and acceptance tests.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "robust/random.hpp"

namespace fixtures {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Measurements of a length, clean and with the fourth value misrecorded.
inline const std::vector<double> kClean{6.27, 6.34, 6.25, 6.31, 6.28};
inline const std::vector<double> kContaminated{6.27, 6.34, 6.25, 63.1, 6.28};

class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed, std::uint64_t stream = 0)
      : rng_(robust::make_stream(seed, stream)) {}

  double uniform() {
    return (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform(), u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::vector<double> sample(std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = (*this)();
    return v;
  }

  MatrixXd matrix(Index n, Index d) {
    MatrixXd m(n, d);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < d; ++j) m(i, j) = (*this)();
    return m;
  }

  robust::Rng& rng() { return rng_; }

 private:
  robust::Rng rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Bivariate "animals-like" data: 25 correlated gaussian inliers and 3
/// outliers well below the inlier trend. The classical ellipse inflates
/// toward them and masks them.
inline MatrixXd masking_fixture(std::uint64_t seed = 1) {
  Gaussian g(seed);
  MatrixXd X(28, 2);
  for (Index i = 0; i < 25; ++i) {
    const double a = g(), b = g();
    X(i, 0) = 2.0 + 1.5 * a;
    X(i, 1) = 1.0 + 1.2 * a + 0.35 * b;
  }
  X.row(25) << 4.5, 1.0;
  X.row(26) << 5.0, 1.3;
  X.row(27) << 4.1, 0.6;
  return X;
}

/// "Stars-like" regression data: 43 points on y = 2 + 0.5 x plus noise and
/// 4 giant leverage points shifted to (x - 4, y + 1.5).
struct RegressionFixture {
  MatrixXd X;
  VectorXd y;
  std::vector<Index> planted;
};

inline RegressionFixture stars_fixture(std::uint64_t seed = 11) {
  Gaussian g(seed);
  RegressionFixture f;
  f.X.resize(47, 1);
  f.y.resize(47);
  for (Index i = 0; i < 43; ++i) {
    const double x = 4.0 + 0.6 * g.uniform();
    f.X(i, 0) = x;
    f.y(i) = 2.0 + 0.5 * x + 0.08 * g();
  }
  for (Index i = 43; i < 47; ++i) {
    const double x = 4.0 + 0.6 * g.uniform();
    f.X(i, 0) = x - 4.0;
    f.y(i) = 2.0 + 0.5 * x + 0.08 * g() + 1.5;
    f.planted.push_back(i);
  }
  return f;
}

/// Random n x d gaussian fixture with a random linear mixing.
inline MatrixXd mixed_gaussian(Index n, Index d, std::uint64_t seed) {
  Gaussian g(seed);
  MatrixXd Z = g.matrix(n, d);
  MatrixXd A = g.matrix(d, d);
  A.diagonal().array() += 2.0;
  return Z * A.transpose();
}

/// Three-dimensional data near the plane z = 0 with the five point types of
/// a PCA outlier map appended as the last five rows:
///   n-5, n-4: far along the plane (good leverage)
///   n-3:      lifted above the center (orthogonal outlier)
///   n-2, n-1: lifted and far (bad leverage)
struct PcaFixture {
  MatrixXd X;
  MatrixXd plane;  // 3x2 orthonormal basis of the true plane
  Index regular = 0;
};

inline PcaFixture pca_fixture(std::uint64_t seed = 5) {
  Gaussian g(seed);
  PcaFixture f;
  f.regular = 50;
  f.X.resize(55, 3);
  for (Index i = 0; i < 50; ++i) {
    f.X(i, 0) = 4.0 * g();
    f.X(i, 1) = 2.0 * g();
    f.X(i, 2) = 0.05 * g();
  }
  f.X.row(50) << 30.0, 1.0, 0.0;
  f.X.row(51) << -2.0, -16.0, 0.0;
  f.X.row(52) << 0.5, 0.5, 6.0;
  f.X.row(53) << 22.0, 14.0, 30.0;
  f.X.row(54) << 26.0, 10.0, 34.0;
  f.plane = MatrixXd::Zero(3, 2);
  f.plane(0, 0) = 1.0;
  f.plane(1, 1) = 1.0;
  return f;
}

}  // namespace fixtures
