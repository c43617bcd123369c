#pragma once

// Small Eigen helpers shared by the multivariate estimators.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "robust/error.hpp"

namespace robust {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Subset = std::vector<Index>;

/// Relative eigenvalue threshold below which a scatter matrix counts as singular.
inline constexpr double kSingularTol = 1e-12;

inline void check_finite(const MatrixXd& X, const char* who) {
  if (!X.allFinite()) throw InputError(std::string(who) + ": non-finite entry in data");
}

struct Moments {
  VectorXd mean;
  MatrixXd cov;  // divisor m - 1
};

inline Moments subset_moments(const MatrixXd& X, const Subset& rows) {
  const Index m = static_cast<Index>(rows.size());
  Moments out;
  out.mean = VectorXd::Zero(X.cols());
  for (Index r : rows) out.mean += X.row(r).transpose();
  out.mean /= static_cast<double>(m);
  MatrixXd centered(m, X.cols());
  for (Index i = 0; i < m; ++i) centered.row(i) = X.row(rows[i]) - out.mean.transpose();
  out.cov = (centered.transpose() * centered) / static_cast<double>(std::max<Index>(m - 1, 1));
  return out;
}

inline Moments full_moments(const MatrixXd& X) {
  Moments out;
  out.mean = X.colwise().mean().transpose();
  const MatrixXd centered = X.rowwise() - out.mean.transpose();
  out.cov = (centered.transpose() * centered) / static_cast<double>(X.rows() - 1);
  return out;
}

/// Eigen-analysis of a symmetric matrix: log-determinant (-inf unless
/// positive definite) and a numerical-singularity verdict (smallest
/// eigenvalue <= kSingularTol * largest).
struct SpectralInfo {
  double log_det;
  bool singular;
  VectorXd eigenvalues;   // ascending
  MatrixXd eigenvectors;  // columns match eigenvalues
};

inline SpectralInfo spectral_info(const MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
  SpectralInfo info;
  info.eigenvalues = es.eigenvalues();
  info.eigenvectors = es.eigenvectors();
  const double lmax = info.eigenvalues.maxCoeff();
  const double lmin = info.eigenvalues.minCoeff();
  info.singular = !(lmax > 0.0) || lmin <= kSingularTol * lmax;
  info.log_det = lmin > 0.0 ? info.eigenvalues.array().log().sum()
                            : -std::numeric_limits<double>::infinity();
  return info;
}

/// Squared Mahalanobis distances of every row of X; throws on a singular scatter.
inline VectorXd squared_distances(const MatrixXd& X, const VectorXd& center,
                                  const MatrixXd& scatter) {
  Eigen::LLT<MatrixXd> llt(scatter);
  if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().minCoeff() > 0.0))
    throw DegenerateError("scatter matrix is singular");
  const MatrixXd centered = (X.rowwise() - center.transpose()).transpose();
  const MatrixXd solved = llt.matrixL().solve(centered);
  return solved.colwise().squaredNorm().transpose();
}

/// Indices of the `count` smallest entries, ties broken by lower index,
/// returned in ascending index order.
inline Subset smallest_indices(const VectorXd& values, Index count) {
  Subset idx(static_cast<std::size_t>(values.size()));
  for (Index i = 0; i < values.size(); ++i) idx[static_cast<std::size_t>(i)] = i;
  auto less = [&](Index a, Index b) {
    return values(a) < values(b) || (values(a) == values(b) && a < b);
  };
  std::nth_element(idx.begin(), idx.begin() + count - 1, idx.end(), less);
  idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline Subset all_rows(Index n) {
  Subset s(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = i;
  return s;
}

/// Number of k-subsets of n items, saturating at `cap + 1`.
inline double binomial_capped(Index n, Index k, double cap) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (Index i = 1; i <= k; ++i) {
    c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
    if (c > cap) return cap + 1.0;
  }
  return std::round(c);
}

/// Advances a sorted k-combination of {0..n-1} in lexicographic order.
inline bool next_combination(Subset& c, Index n) {
  const Index k = static_cast<Index>(c.size());
  for (Index i = k - 1; i >= 0; --i) {
    auto& v = c[static_cast<std::size_t>(i)];
    if (v < n - k + i) {
      ++v;
      for (Index j = i + 1; j < k; ++j)
        c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace robust
