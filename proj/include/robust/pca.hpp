#pragma once

// Principal components: classical, ROBPCA-lite (projection-pursuit trimming
// followed by the covariance of the least outlying rows) and spherical PCA,
// plus orthogonal and score distances for the PCA outlier map.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <vector>

#include "robust/covariance.hpp"
#include "robust/distributions.hpp"
#include "robust/error.hpp"
#include "robust/linalg.hpp"
#include "robust/univariate.hpp"

namespace robust {

enum class PcaMethod { classical, robpca, spherical };

inline const char* to_string(PcaMethod m) {
  switch (m) {
    case PcaMethod::classical: return "classical";
    case PcaMethod::robpca: return "robpca";
    case PcaMethod::spherical: return "spherical";
  }
  return "?";
}

struct PCAModel {
  VectorXd center;
  MatrixXd loadings;     // d x k, orthonormal columns
  VectorXd eigenvalues;  // k, descending
  Index k = 0;
  PcaMethod method = PcaMethod::classical;
  VectorXd scree;        // all d eigenvalues of the fitted scatter, descending
  Subset kept;           // rows used for the scatter (robpca)
};

enum class PcaClass { regular, good_leverage, orthogonal, bad_leverage };

inline const char* to_string(PcaClass c) {
  switch (c) {
    case PcaClass::regular: return "regular";
    case PcaClass::good_leverage: return "good_leverage";
    case PcaClass::orthogonal: return "orthogonal";
    case PcaClass::bad_leverage: return "bad_leverage";
  }
  return "?";
}

struct PCAOutlierMap {
  VectorXd od;
  VectorXd sd;
  double od_cutoff = 0.0;
  double sd_cutoff = 0.0;
  std::vector<PcaClass> cls;
};

/// Flips each column so that its largest-magnitude entry is positive (the
/// first such entry on ties).
inline void normalize_signs(MatrixXd& loadings) {
  for (Index j = 0; j < loadings.cols(); ++j) {
    Index arg = 0;
    for (Index i = 1; i < loadings.rows(); ++i)
      if (std::fabs(loadings(i, j)) > std::fabs(loadings(arg, j))) arg = i;
    if (loadings(arg, j) < 0.0) loadings.col(j) *= -1.0;
  }
}

/// Largest principal angle (radians) between the column spaces of two
/// orthonormal d x k bases.
inline double principal_angle(const MatrixXd& A, const MatrixXd& B) {
  require(A.rows() == B.rows() && A.cols() == B.cols(), "principal_angle: shape mismatch");
  const MatrixXd resid = B - A * (A.transpose() * B);
  const double s = Eigen::JacobiSVD<MatrixXd>(resid).singularValues()(0);
  return std::asin(std::min(1.0, s));
}

namespace detail {

inline void check_k(const MatrixXd& X, Index k, const char* who) {
  validate_matrix(X, 2, who);
  if (k < 1 || k > std::min<Index>(X.rows() - 1, X.cols())) {
    std::ostringstream os;
    os << who << ": k=" << k << " outside [1, " << std::min<Index>(X.rows() - 1, X.cols()) << "]";
    throw InputError(os.str());
  }
}

// Top-k eigenvectors of a symmetric matrix, descending, signs normalized.
inline void top_eigen(const MatrixXd& S, Index k, PCAModel& model) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
  model.scree = es.eigenvalues().reverse();
  model.loadings = es.eigenvectors().rightCols(k).rowwise().reverse();
  normalize_signs(model.loadings);
  model.eigenvalues = model.scree.head(k);
  model.k = k;
}

// Replace eigenvalues by squared Qn of the score columns and reorder the
// components by them.
inline void robust_eigenvalues(const MatrixXd& X, PCAModel& model) {
  const MatrixXd T = (X.rowwise() - model.center.transpose()) * model.loadings;
  VectorXd lam(model.k);
  for (Index j = 0; j < model.k; ++j) {
    std::vector<double> col(T.col(j).data(), T.col(j).data() + T.rows());
    const double s = qn(col);
    lam(j) = s * s;
  }
  std::vector<Index> order(static_cast<std::size_t>(model.k));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return lam(a) > lam(b); });
  MatrixXd L(model.loadings.rows(), model.k);
  VectorXd ev(model.k);
  for (Index j = 0; j < model.k; ++j) {
    L.col(j) = model.loadings.col(order[static_cast<std::size_t>(j)]);
    ev(j) = lam(order[static_cast<std::size_t>(j)]);
  }
  model.loadings = L;
  model.eigenvalues = ev;
  if (!(ev.minCoeff() > 0.0))
    throw DegenerateError("robust eigenvalue is zero: more than half of a score column is tied");
}

}  // namespace detail

inline PCAModel classical_pca(const MatrixXd& X, Index k) {
  detail::check_k(X, k, "classical_pca");
  const auto mom = full_moments(X);
  PCAModel model;
  model.method = PcaMethod::classical;
  model.center = mom.mean;
  detail::top_eigen(mom.cov, k, model);
  if (!(model.eigenvalues.minCoeff() > 0.0))
    throw DegenerateError("classical_pca: component with zero variance");
  return model;
}

/// Default number of rows kept by robust_pca, floor(0.75 n).
inline Index default_pca_h(Index n) { return (3 * n) / 4; }

/// ROBPCA-lite: Stahel-Donoho outlyingness, covariance of the h least
/// outlying rows, top-k eigenvectors; eigenvalues are squared Qn of the scores.
inline PCAModel robust_pca(const MatrixXd& X, Index k, Index h = 0, int n_dirs = 500,
                           std::uint64_t seed = 0) {
  detail::check_k(X, k, "robust_pca");
  const Index n = X.rows();
  if (h == 0) h = default_pca_h(n);
  if (h < k + 1 || h > n) {
    std::ostringstream os;
    os << "robust_pca: h=" << h << " outside [" << k + 1 << ", " << n << "]";
    throw InputError(os.str());
  }
  const auto outl = stahel_donoho(X, n_dirs, seed);
  PCAModel model;
  model.method = PcaMethod::robpca;
  model.kept = smallest_indices(outl.outl, h);
  const auto mom = subset_moments(X, model.kept);
  model.center = mom.mean;
  detail::top_eigen(mom.cov, k, model);
  if (!(model.eigenvalues.minCoeff() > 0.0))
    throw DegenerateError("robust_pca: covariance of the kept rows has rank below k");
  detail::robust_eigenvalues(X, model);
  return model;
}

/// Spatial median by Weiszfeld iteration from the coordinatewise median.
/// Points coinciding with the current iterate are left out of that step.
inline VectorXd spatial_median(const MatrixXd& X, double tol = 1e-8, int max_iter = 1000) {
  const Index n = X.rows(), d = X.cols();
  VectorXd m(d);
  std::vector<double> col(static_cast<std::size_t>(n));
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = X(i, j);
    m(j) = median(col);
  }
  const double scale = std::max(detail::data_spread(X), 1.0);
  for (int it = 0; it < max_iter; ++it) {
    VectorXd num = VectorXd::Zero(d);
    double den = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double r = (X.row(i).transpose() - m).norm();
      if (r <= 1e-12 * scale) continue;
      num += X.row(i).transpose() / r;
      den += 1.0 / r;
    }
    if (den == 0.0) return m;
    const VectorXd next = num / den;
    const double step = (next - m).norm();
    m = next;
    if (step <= tol * scale) return m;
  }
  throw ConvergenceError("spatial_median: Weiszfeld iteration did not converge");
}

/// Spherical PCA: rows projected onto the unit sphere around the spatial
/// median, eigenvectors of the second-moment matrix of the projections;
/// eigenvalues are squared Qn of the scores.
inline PCAModel spherical_pca(const MatrixXd& X, Index k) {
  detail::validate_matrix(X, 2, "spherical_pca");
  if (k < 1 || k > X.cols()) throw InputError("spherical_pca: k must lie in [1, d]");
  const Index n = X.rows(), d = X.cols();
  PCAModel model;
  model.method = PcaMethod::spherical;
  model.center = spatial_median(X);
  const double scale = std::max(detail::data_spread(X), 1.0);
  MatrixXd U = MatrixXd::Zero(n, d);
  Index off = 0;
  for (Index i = 0; i < n; ++i) {
    const VectorXd c = X.row(i).transpose() - model.center;
    const double r = c.norm();
    if (r > 1e-12 * scale) {
      U.row(i) = c.transpose() / r;
      ++off;
    }
  }
  if (off == 0) throw DegenerateError("spherical_pca: every point sits at the spatial median");
  detail::top_eigen(U.transpose() * U / static_cast<double>(n), k, model);
  detail::robust_eigenvalues(X, model);
  return model;
}

/// Orthogonal and score distances with the two cutoffs and four classes.
inline PCAOutlierMap pca_distances(const PCAModel& model, const MatrixXd& X, double level = 0.975) {
  require(X.cols() == model.center.size(), "pca_distances: dimension mismatch");
  if (!(model.eigenvalues.size() == model.k && model.eigenvalues.minCoeff() > 0.0))
    throw DegenerateError("pca_distances: zero eigenvalue");
  const Index n = X.rows();
  const MatrixXd C = X.rowwise() - model.center.transpose();
  const MatrixXd T = C * model.loadings;
  const MatrixXd R = C - T * model.loadings.transpose();
  PCAOutlierMap map;
  map.od = R.rowwise().norm();
  map.sd = (T.array().square().rowwise() / model.eigenvalues.transpose().array()).rowwise().sum().sqrt();
  map.sd_cutoff = std::sqrt(dist::chi2_quantile(level, static_cast<double>(model.k)));

  std::vector<double> od23(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) od23[static_cast<std::size_t>(i)] = std::pow(map.od(i), 2.0 / 3.0);
  const double med = median(od23);
  const double s = mad(od23, med);
  map.od_cutoff = std::pow(med + s * dist::normal_quantile(level), 1.5);

  map.cls.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const bool far = map.sd(i) > map.sd_cutoff, off = map.od(i) > map.od_cutoff;
    map.cls[static_cast<std::size_t>(i)] = off ? (far ? PcaClass::bad_leverage : PcaClass::orthogonal)
                                               : (far ? PcaClass::good_leverage : PcaClass::regular);
  }
  return map;
}

}  // namespace robust
