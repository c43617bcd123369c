#pragma once

// Brute-force reference computations. These deliberately avoid the library
// code paths they are used to check (no shared selection, solver or
// concentration routines).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace oracles {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Qn by sorting all n(n-1)/2 pairwise distances.
inline double qn_bruteforce(const std::vector<double>& x) {
  std::vector<double> diffs;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) diffs.push_back(std::fabs(x[i] - x[j]));
  std::sort(diffs.begin(), diffs.end());
  const std::size_t h = x.size() / 2 + 1;
  const std::size_t k = h * (h - 1) / 2;
  return 2.2219 * diffs[k - 1];
}

/// Minimizer of sum rho((x_i - m) / s) over a dense grid on [lo, hi].
template <class Rho>
double grid_minimizer(const std::vector<double>& x, double s, Rho rho, double lo, double hi,
                      int points = 200001) {
  double best = lo, best_val = std::numeric_limits<double>::infinity();
  for (int g = 0; g < points; ++g) {
    const double m = lo + (hi - lo) * g / (points - 1);
    double val = 0.0;
    for (double v : x) val += rho((v - m) / s);
    if (val < best_val) {
      best_val = val;
      best = m;
    }
  }
  return best;
}

/// Visits every k-subset of {0..n-1} (as a bitmask over n <= 30 items).
template <class Visit>
void for_each_subset(int n, int k, Visit visit) {
  std::vector<Index> idx(static_cast<std::size_t>(k));
  for (unsigned long long mask = 0; mask < (1ULL << n); ++mask) {
    if (__builtin_popcountll(mask) != k) continue;
    std::size_t c = 0;
    for (int i = 0; i < n; ++i)
      if (mask & (1ULL << i)) idx[c++] = i;
    visit(idx);
  }
}

inline MatrixXd rows_of(const MatrixXd& X, const std::vector<Index>& idx) {
  MatrixXd out(static_cast<Index>(idx.size()), X.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = X.row(idx[i]);
  return out;
}

// Covariance by explicit double loop (divisor m - 1).
inline MatrixXd loop_covariance(const MatrixXd& Y) {
  const Index m = Y.rows(), d = Y.cols();
  VectorXd mu = VectorXd::Zero(d);
  for (Index i = 0; i < m; ++i) mu += Y.row(i).transpose();
  mu /= static_cast<double>(m);
  MatrixXd S = MatrixXd::Zero(d, d);
  for (Index i = 0; i < m; ++i)
    for (Index a = 0; a < d; ++a)
      for (Index b = 0; b < d; ++b) S(a, b) += (Y(i, a) - mu(a)) * (Y(i, b) - mu(b));
  return S / static_cast<double>(m - 1);
}

struct SubsetOptimum {
  double objective = std::numeric_limits<double>::infinity();
  std::vector<Index> subset;
};

/// Minimum covariance determinant over all h-subsets (determinant by LU).
inline SubsetOptimum mcd_bruteforce(const MatrixXd& X, int h) {
  SubsetOptimum best;
  for_each_subset(static_cast<int>(X.rows()), h, [&](const std::vector<Index>& idx) {
    const double det = loop_covariance(rows_of(X, idx)).partialPivLu().determinant();
    if (det < best.objective) best = {det, idx};
  });
  return best;
}

/// Minimum of det(rho T + (1 - rho) S_H) over all h-subsets.
inline SubsetOptimum mrcd_bruteforce(const MatrixXd& X, int h, const MatrixXd& T, double rho) {
  SubsetOptimum best;
  for_each_subset(static_cast<int>(X.rows()), h, [&](const std::vector<Index>& idx) {
    const MatrixXd K = rho * T + (1.0 - rho) * loop_covariance(rows_of(X, idx));
    const double det = K.partialPivLu().determinant();
    if (det < best.objective) best = {det, idx};
  });
  return best;
}

/// Minimum over h-subsets of the least squares residual sum of squares,
/// solved by normal equations. Design = [1, X] when `intercept`.
inline SubsetOptimum lts_bruteforce(const MatrixXd& X, const VectorXd& y, int h,
                                    bool intercept = true) {
  SubsetOptimum best;
  for_each_subset(static_cast<int>(X.rows()), h, [&](const std::vector<Index>& idx) {
    const Index p = X.cols() + (intercept ? 1 : 0);
    MatrixXd Z(static_cast<Index>(idx.size()), p);
    VectorXd t(static_cast<Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const Index r = static_cast<Index>(i);
      if (intercept) Z(r, 0) = 1.0;
      Z.row(r).tail(X.cols()) = X.row(idx[i]);
      t(r) = y(idx[i]);
    }
    const VectorXd beta = (Z.transpose() * Z).ldlt().solve(Z.transpose() * t);
    const double rss = (t - Z * beta).squaredNorm();
    if (rss < best.objective) best = {rss, idx};
  });
  return best;
}

/// Explicit inverse Mahalanobis distances.
inline VectorXd mahalanobis_explicit(const MatrixXd& X, const VectorXd& mu, const MatrixXd& S) {
  const MatrixXd inv = S.inverse();
  VectorXd out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) {
    const VectorXd c = X.row(i).transpose() - mu;
    out(i) = std::sqrt(c.dot(inv * c));
  }
  return out;
}

/// Exact trimmed 2-means in the plane: for every choice of trimmed rows, the
/// optimal 2-partition of the remaining points is linearly separable, so it
/// is found among partitions induced by lines through two points.
inline double trimmed_two_means_bruteforce(const MatrixXd& X, int h) {
  const int n = static_cast<int>(X.rows());
  double best = std::numeric_limits<double>::infinity();
  auto sse = [](const std::vector<Eigen::Vector2d>& pts) {
    if (pts.empty()) return std::numeric_limits<double>::infinity();
    Eigen::Vector2d m = Eigen::Vector2d::Zero();
    for (const auto& p : pts) m += p;
    m /= static_cast<double>(pts.size());
    double s = 0.0;
    for (const auto& p : pts) s += (p - m).squaredNorm();
    return s;
  };
  for_each_subset(n, h, [&](const std::vector<Index>& keep) {
    std::vector<Eigen::Vector2d> pts;
    for (Index i : keep) pts.emplace_back(X(i, 0), X(i, 1));
    const std::size_t m = pts.size();
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a + 1; b < m; ++b) {
        const Eigen::Vector2d dir = pts[b] - pts[a];
        const Eigen::Vector2d normal(-dir(1), dir(0));
        for (int side = 0; side < 4; ++side) {
          std::vector<Eigen::Vector2d> g1, g2;
          for (std::size_t i = 0; i < m; ++i) {
            bool first;
            if (i == a)
              first = side & 1;
            else if (i == b)
              first = side & 2;
            else
              first = normal.dot(pts[i] - pts[a]) > 0.0;
            (first ? g1 : g2).push_back(pts[i]);
          }
          best = std::min(best, sse(g1) + sse(g2));
        }
      }
    }
  });
  return best;
}

}  // namespace oracles
