#pragma once

// Multivariate location and scatter: classical moments, the Minimum
// Covariance Determinant (FastMCD and an exhaustive reference), its
// regularized variant MRCD, Stahel-Donoho outlyingness, robust distances,
// DD-plot data and tolerance ellipses.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "robust/distributions.hpp"
#include "robust/error.hpp"
#include "robust/linalg.hpp"
#include "robust/random.hpp"
#include "robust/univariate.hpp"

namespace robust {

/// Affine hyperplane { x : normal' x = offset } containing an exact fit.
struct Hyperplane {
  VectorXd normal;
  double offset = 0.0;
};

struct LocationScatter {
  VectorXd center;
  MatrixXd scatter;
  Index h = 0;
  double consistency_factor = 1.0;
  bool reweighted = false;
  Subset best_subset;
  double objective = 0.0;  // determinant of the raw (unscaled) subset covariance
  bool exact_fit = false;
  std::optional<Hyperplane> hyperplane;

  // Raw (pre-reweighting) estimate and the reweighting weights, if any.
  VectorXd raw_center;
  MatrixXd raw_scatter;
  std::vector<int> weights;

  double rho = 0.0;  // MRCD regularization weight; 0 for MCD
};

struct DistanceReport {
  VectorXd distances;
  double cutoff = 0.0;
  std::vector<bool> flags;
};

struct DDPlot {
  VectorXd md;
  VectorXd rd;
  double cutoff = 0.0;
  std::vector<bool> md_flags;
  std::vector<bool> rd_flags;
};

struct OutlyingnessReport {
  VectorXd outl;
  Index directions_used = 0;
  Index directions_skipped = 0;
};

/// Default MCD subset size floor((n + d + 1) / 2).
inline Index default_mcd_h(Index n, Index d) { return (n + d + 1) / 2; }

/// Consistency factor (h/n) / P(chi2_{d+2} <= chi2_{d, h/n}); 1 when h = n.
inline double mcd_consistency_factor(Index h, Index n, Index d) {
  const double alpha = static_cast<double>(h) / static_cast<double>(n);
  if (alpha >= 1.0) return 1.0;
  const double q = dist::chi2_quantile(alpha, static_cast<double>(d));
  return alpha / dist::chi2_cdf(q, static_cast<double>(d + 2));
}

/// Factor applied after reweighting with the 0.975 cutoff.
inline double reweight_consistency_factor(Index d, double level = 0.975) {
  const double q = dist::chi2_quantile(level, static_cast<double>(d));
  return level / dist::chi2_cdf(q, static_cast<double>(d + 2));
}

namespace detail {

inline Hyperplane hyperplane_of(const SpectralInfo& info, const VectorXd& center) {
  Hyperplane hp;
  hp.normal = info.eigenvectors.col(0);
  hp.offset = hp.normal.dot(center);
  return hp;
}

// Rows lying on the hyperplane up to a tolerance relative to the data spread.
inline Index count_on_hyperplane(const MatrixXd& X, const Hyperplane& hp,
                                 double spread) {
  const double tol = 1e-12 * std::max(spread, 1.0);
  Index count = 0;
  for (Index i = 0; i < X.rows(); ++i)
    if (std::fabs(X.row(i).dot(hp.normal) - hp.offset) <= tol) ++count;
  return count;
}

inline double data_spread(const MatrixXd& X) {
  return (X.colwise().maxCoeff() - X.colwise().minCoeff()).maxCoeff();
}

struct SubsetState {
  Subset subset;
  double log_det = std::numeric_limits<double>::infinity();
  bool exact = false;
};

inline bool state_less(const SubsetState& a, const SubsetState& b) {
  return std::tie(a.log_det, a.subset) < std::tie(b.log_det, b.subset);
}

// Classical moments of a subset plus the spectral verdict on its covariance.
// `exact` means the subset lies on a hyperplane: the covariance is
// numerically singular and every subset row is within tolerance of the
// hyperplane through the subset mean.
struct SubsetFit {
  Moments m;
  SpectralInfo info;
  bool exact = false;
};

inline SubsetFit fit_subset(const MatrixXd& X, const Subset& s) {
  SubsetFit f{subset_moments(X, s), {}, false};
  f.info = spectral_info(f.m.cov);
  if (f.info.singular) {
    if (!(f.info.eigenvalues.minCoeff() > 0.0)) {
      f.exact = true;
    } else {
      const Hyperplane hp = hyperplane_of(f.info, f.m.mean);
      const double tol = 1e-12 * std::max(data_spread(X), 1.0);
      Index on = 0;
      for (Index r : s)
        if (std::fabs(X.row(r).dot(hp.normal) - hp.offset) <= tol) ++on;
      f.exact = on == static_cast<Index>(s.size());
    }
  }
  if (f.exact) f.info.log_det = -std::numeric_limits<double>::infinity();
  return f;
}

// One concentration step from an already fitted subset. Returns nullopt for
// an exact-fit subset.
inline std::optional<Subset> concentrate(const MatrixXd& X, const SubsetFit& fit, Index h) {
  if (fit.exact) return std::nullopt;
  return smallest_indices(squared_distances(X, fit.m.mean, fit.m.cov), h);
}

// Iterates C-steps from `s` (at most max_steps, or until a fixed point).
inline SubsetState iterate_csteps(const MatrixXd& X, Subset s, Index h, int max_steps) {
  SubsetFit fit = fit_subset(X, s);
  SubsetState state{s, fit.info.log_det, fit.exact};
  for (int step = 0; step < max_steps && !state.exact; ++step) {
    auto next = concentrate(X, fit, h);
    if (!next || *next == state.subset) break;
    SubsetFit next_fit = fit_subset(X, *next);
    if (!(next_fit.info.log_det < state.log_det)) break;  // ties keep the current subset
    state = {*next, next_fit.info.log_det, next_fit.exact};
    fit = std::move(next_fit);
  }
  return state;
}

inline void validate_matrix(const MatrixXd& X, Index min_rows, const char* who) {
  if (X.rows() < min_rows || X.cols() < 1) {
    std::ostringstream os;
    os << who << ": need at least " << min_rows << " rows and 1 column, got "
       << X.rows() << "x" << X.cols();
    throw InputError(os.str());
  }
  check_finite(X, who);
}

}  // namespace detail

/// Empirical mean and covariance (divisor n - 1). A singular covariance sets
/// exact_fit and records the degenerate direction.
inline LocationScatter classical_moments(const MatrixXd& X) {
  detail::validate_matrix(X, 2, "classical_moments");
  const auto fit = detail::fit_subset(X, all_rows(X.rows()));
  LocationScatter ls;
  ls.center = fit.m.mean;
  ls.scatter = fit.m.cov;
  ls.raw_center = fit.m.mean;
  ls.raw_scatter = fit.m.cov;
  ls.h = X.rows();
  ls.best_subset = all_rows(X.rows());
  ls.objective = fit.exact ? 0.0 : std::exp(fit.info.log_det);
  ls.exact_fit = fit.exact;
  if (fit.exact) ls.hyperplane = detail::hyperplane_of(fit.info, fit.m.mean);
  return ls;
}

/// Mahalanobis distances of the rows of X w.r.t. (center, scatter), flagged
/// at sqrt(chi2_{d, level}).
inline DistanceReport mahalanobis_distances(const MatrixXd& X, const VectorXd& center,
                                            const MatrixXd& scatter, double level = 0.975) {
  require(center.size() == X.cols() && scatter.rows() == X.cols() &&
              scatter.cols() == X.cols(),
          "mahalanobis_distances: dimension mismatch");
  DistanceReport r;
  r.distances = squared_distances(X, center, scatter).cwiseSqrt();
  r.cutoff = dist::chi_cutoff(static_cast<int>(X.cols()), level);
  r.flags.resize(static_cast<std::size_t>(X.rows()));
  for (Index i = 0; i < X.rows(); ++i)
    r.flags[static_cast<std::size_t>(i)] = r.distances(i) > r.cutoff;
  return r;
}

inline DistanceReport mahalanobis_distances(const MatrixXd& X, const LocationScatter& ls,
                                            double level = 0.975) {
  if (ls.exact_fit) throw DegenerateError("mahalanobis_distances: exact fit, scatter is singular");
  return mahalanobis_distances(X, ls.center, ls.scatter, level);
}

/// One concentration step: the h rows with the smallest Mahalanobis distances
/// with respect to the mean and covariance of `subset`. Throws
/// DegenerateError (exact fit) when the subset covariance is singular.
inline Subset c_step(const MatrixXd& X, const Subset& subset) {
  require(subset.size() >= 2, "c_step: subset needs at least 2 rows");
  const auto fit = detail::fit_subset(X, subset);
  auto next = detail::concentrate(X, fit, static_cast<Index>(subset.size()));
  if (!next) throw DegenerateError("c_step: subset covariance is singular (exact fit)");
  return *next;
}

/// Determinant of the covariance (divisor h - 1) of a subset of rows.
inline double subset_determinant(const MatrixXd& X, const Subset& subset) {
  return subset_moments(X, subset).cov.determinant();
}

struct McdOptions {
  Index h = 0;  // 0 selects floor((n + d + 1) / 2)
  int n_starts = 500;
  std::uint64_t seed = 0;
  bool reweight = true;
  int initial_csteps = 2;
  int n_refine = 10;
  int max_csteps = 100;
};

namespace detail {

inline LocationScatter finish_mcd(const MatrixXd& X, const SubsetState& best, Index h,
                                  bool reweight) {
  const Index n = X.rows(), d = X.cols();
  const SubsetFit fit = fit_subset(X, best.subset);
  LocationScatter ls;
  ls.h = h;
  ls.best_subset = best.subset;
  ls.center = fit.m.mean;
  ls.raw_center = fit.m.mean;

  if (fit.exact) {
    ls.exact_fit = true;
    ls.objective = 0.0;
    ls.scatter = fit.m.cov;
    ls.raw_scatter = fit.m.cov;
    ls.hyperplane = hyperplane_of(fit.info, fit.m.mean);
    return ls;
  }

  ls.objective = std::exp(fit.info.log_det);
  ls.consistency_factor = mcd_consistency_factor(h, n, d);
  ls.scatter = ls.consistency_factor * fit.m.cov;
  ls.raw_scatter = ls.scatter;
  if (!reweight) return ls;

  const double cut2 = dist::chi2_quantile(0.975, static_cast<double>(d));
  const VectorXd d2 = squared_distances(X, ls.center, ls.scatter);
  Subset kept;
  ls.weights.assign(static_cast<std::size_t>(n), 0);
  for (Index i = 0; i < n; ++i) {
    if (d2(i) <= cut2) {
      kept.push_back(i);
      ls.weights[static_cast<std::size_t>(i)] = 1;
    }
  }
  if (static_cast<Index>(kept.size()) <= d) return ls;  // too few to reweight
  const Moments rw = subset_moments(X, kept);
  if (!std::isfinite(spectral_info(rw.cov).log_det)) return ls;
  ls.center = rw.mean;
  ls.scatter = reweight_consistency_factor(d) * rw.cov;
  ls.reweighted = true;
  return ls;
}

// Elemental start: d + 1 random rows, extended one random row at a time
// while their covariance is singular. Returns the h-subset it induces, or an
// exact-fit state when a singular subset of size >= h is reached.
inline SubsetState elemental_start(const MatrixXd& X, Index h, Rng& rng) {
  const Index n = X.rows(), d = X.cols();
  const auto order = sample_without_replacement(rng, static_cast<std::size_t>(n),
                                                static_cast<std::size_t>(n));
  Index size = d + 1;
  while (true) {
    Subset s(order.begin(), order.begin() + size);
    std::sort(s.begin(), s.end());
    const SubsetFit fit = fit_subset(X, s);
    if (!fit.exact) return {*concentrate(X, fit, h), 0.0, false};
    if (size >= h) {
      const Hyperplane hp = hyperplane_of(fit.info, fit.m.mean);
      if (count_on_hyperplane(X, hp, data_spread(X)) >= h) {
        // Exact fit: collect h rows on the hyperplane.
        VectorXd off(n);
        for (Index i = 0; i < n; ++i) off(i) = std::fabs(X.row(i).dot(hp.normal) - hp.offset);
        return {smallest_indices(off, h), -std::numeric_limits<double>::infinity(), true};
      }
    }
    if (size == n) return {s, -std::numeric_limits<double>::infinity(), true};
    ++size;
  }
}

}  // namespace detail

/// FastMCD: elemental random starts, a few C-steps each, then full C-step
/// convergence for the best candidates. The raw scatter is scaled by the
/// consistency factor and optionally reweighted with the 0.975 chi-square
/// cutoff. Deterministic given (seed, n_starts).
inline LocationScatter fast_mcd(const MatrixXd& X, const McdOptions& opt = {}) {
  const Index n = X.rows(), d = X.cols();
  detail::validate_matrix(X, 2, "fast_mcd");
  if (n <= d) {
    std::ostringstream os;
    os << "fast_mcd: need n > d (got n=" << n << ", d=" << d
       << "); use mrcd for high-dimensional data";
    throw InputError(os.str());
  }
  const Index h = opt.h > 0 ? opt.h : default_mcd_h(n, d);
  if (h < d + 1 || h > n) {
    std::ostringstream os;
    os << "fast_mcd: h=" << h << " outside [" << d + 1 << ", " << n << "]";
    throw InputError(os.str());
  }
  require(opt.n_starts >= 1, "fast_mcd: n_starts must be positive");

  if (h == n)
    return detail::finish_mcd(X, detail::SubsetState{all_rows(n), 0.0, false}, h, opt.reweight);

  std::vector<detail::SubsetState> starts(static_cast<std::size_t>(opt.n_starts));
  parallel_for(starts.size(), [&](std::size_t s) {
    Rng rng = make_stream(opt.seed, s);
    detail::SubsetState st = detail::elemental_start(X, h, rng);
    if (!st.exact) st = detail::iterate_csteps(X, st.subset, h, opt.initial_csteps);
    starts[s] = std::move(st);
  });

  std::sort(starts.begin(), starts.end(), detail::state_less);
  starts.erase(std::unique(starts.begin(), starts.end(),
                           [](const auto& a, const auto& b) { return a.subset == b.subset; }),
               starts.end());
  if (starts.front().exact) return detail::finish_mcd(X, starts.front(), h, false);

  const std::size_t refine = std::min<std::size_t>(starts.size(), static_cast<std::size_t>(opt.n_refine));
  std::vector<detail::SubsetState> refined(refine);
  parallel_for(refine, [&](std::size_t i) {
    refined[i] = detail::iterate_csteps(X, starts[i].subset, h, opt.max_csteps);
  });
  const auto best = *std::min_element(refined.begin(), refined.end(), detail::state_less);
  return detail::finish_mcd(X, best, h, opt.reweight && !best.exact);
}

/// Exhaustive MCD over all C(n, h) subsets (raw estimate, no reweighting).
/// Ties in the determinant keep the lexicographically first subset.
inline LocationScatter exhaustive_mcd(const MatrixXd& X, Index h, double budget = 1e6) {
  const Index n = X.rows(), d = X.cols();
  detail::validate_matrix(X, 2, "exhaustive_mcd");
  require(h >= 2 && h <= n, "exhaustive_mcd: h out of range");
  if (binomial_capped(n, h, budget) > budget)
    throw InputError("exhaustive_mcd: C(n, h) exceeds the combinatorial budget");

  Subset c = all_rows(h);
  detail::SubsetState best;
  do {
    const auto fit = detail::fit_subset(X, c);
    if (fit.info.log_det < best.log_det) best = {c, fit.info.log_det, fit.exact};
  } while (next_combination(c, n));
  (void)d;
  return detail::finish_mcd(X, best, h, false);
}

// ---------------------------------------------------------------------------
// MRCD

enum class MrcdTarget { identity, equicorrelation };

struct MrcdOptions {
  Index h = 0;         // 0 selects floor((n + d + 1) / 2), at least 2
  double rho = -1.0;   // < 0 selects rho from the condition-number grid
  MrcdTarget target = MrcdTarget::identity;
  double equicorrelation = 0.0;
  double max_condition = 1000.0;
  int n_starts = 500;
  std::uint64_t seed = 0;
  int initial_csteps = 2;
  int n_refine = 10;
  int max_csteps = 100;
};

inline MatrixXd mrcd_target(Index d, MrcdTarget target, double c) {
  if (target == MrcdTarget::identity) return MatrixXd::Identity(d, d);
  require(c < 1.0 && c > -1.0 / std::max<double>(1.0, static_cast<double>(d - 1)),
          "mrcd: equicorrelation parameter must lie in (-1/(d-1), 1)");
  MatrixXd T = MatrixXd::Constant(d, d, c);
  T.diagonal().setOnes();
  return T;
}

struct Standardized {
  MatrixXd data;
  VectorXd center;
  VectorXd scale;
};

/// Column-wise (x - median) / Qn.
inline Standardized standardize_robust(const MatrixXd& X) {
  detail::validate_matrix(X, 2, "standardize_robust");
  Standardized s{X, VectorXd(X.cols()), VectorXd(X.cols())};
  for (Index j = 0; j < X.cols(); ++j) {
    std::vector<double> col(X.col(j).data(), X.col(j).data() + X.rows());
    s.center(j) = median(col);
    s.scale(j) = qn(col);
    if (s.scale(j) <= 0.0) {
      std::ostringstream os;
      os << "standardize_robust: column " << j << " has zero Qn scale";
      throw DegenerateError(os.str());
    }
    s.data.col(j) = (X.col(j).array() - s.center(j)) / s.scale(j);
  }
  return s;
}

/// log det(rho T + (1 - rho) S_H) of a subset.
inline double mrcd_log_objective(const MatrixXd& X, const Subset& s, const MatrixXd& T,
                                 double rho) {
  const Moments m = subset_moments(X, s);
  return spectral_info(rho * T + (1.0 - rho) * m.cov).log_det;
}

/// Smallest rho on the grid {0.01, 0.02, ..., 1} giving a condition number of
/// rho T + (1 - rho) S_H at most `max_condition`.
inline double mrcd_select_rho(const MatrixXd& X, const Subset& s, const MatrixXd& T,
                              double max_condition) {
  const Moments m = subset_moments(X, s);
  for (int g = 1; g <= 100; ++g) {
    const double rho = g / 100.0;
    const VectorXd ev = spectral_info(rho * T + (1.0 - rho) * m.cov).eigenvalues;
    if (ev.minCoeff() > 0.0 && ev.maxCoeff() / ev.minCoeff() <= max_condition) return rho;
  }
  return 1.0;
}

namespace detail {

inline SubsetState mrcd_csteps(const MatrixXd& X, Subset s, Index h, const MatrixXd& T,
                               double rho, int max_steps) {
  Moments m = subset_moments(X, s);
  MatrixXd K = rho * T + (1.0 - rho) * m.cov;
  SubsetState state{s, spectral_info(K).log_det, false};
  for (int step = 0; step < max_steps; ++step) {
    Subset next = smallest_indices(squared_distances(X, m.mean, K), h);
    if (next == state.subset) break;
    Moments nm = subset_moments(X, next);
    MatrixXd nK = rho * T + (1.0 - rho) * nm.cov;
    const double nld = spectral_info(nK).log_det;
    if (!(nld < state.log_det)) break;
    state = {std::move(next), nld, false};
    m = std::move(nm);
    K = std::move(nK);
  }
  return state;
}

}  // namespace detail

/// Minimum Regularized Covariance Determinant. Minimizes
/// det(rho T + (1 - rho) S_H) over h-subsets H by regularized C-steps.
/// X is expected to be standardized (see standardize_robust); the returned
/// scatter is rho T + (1 - rho) c S_H with the MCD consistency factor c and
/// objective det(rho T + (1 - rho) S_H).
inline LocationScatter mrcd(const MatrixXd& X, const MrcdOptions& opt = {}) {
  const Index n = X.rows(), d = X.cols();
  detail::validate_matrix(X, 3, "mrcd");
  const Index h = opt.h > 0 ? opt.h : std::max<Index>(2, default_mcd_h(n, std::min(d, n - 2)));
  require(h >= 2 && h <= n, "mrcd: h out of range");
  require(opt.rho < 0.0 || (opt.rho > 0.0 && opt.rho <= 1.0),
          "mrcd: rho must lie in (0, 1]");
  require(opt.n_starts >= 1, "mrcd: n_starts must be positive");
  const MatrixXd T = mrcd_target(d, opt.target, opt.equicorrelation);

  // Deterministic start: the h rows closest to the (standardized) origin.
  const Subset norm_start = smallest_indices(X.rowwise().squaredNorm(), h);
  const double rho = opt.rho > 0.0 ? opt.rho : mrcd_select_rho(X, norm_start, T, opt.max_condition);

  std::vector<detail::SubsetState> starts(static_cast<std::size_t>(opt.n_starts) + 1);
  starts[0] = detail::mrcd_csteps(X, norm_start, h, T, rho, opt.initial_csteps);
  parallel_for(static_cast<std::size_t>(opt.n_starts), [&](std::size_t s) {
    Rng rng = make_stream(opt.seed, s);
    auto pick = sample_without_replacement(rng, static_cast<std::size_t>(n), static_cast<std::size_t>(h));
    Subset sub(pick.begin(), pick.end());
    std::sort(sub.begin(), sub.end());
    starts[s + 1] = detail::mrcd_csteps(X, sub, h, T, rho, opt.initial_csteps);
  });
  std::sort(starts.begin(), starts.end(), detail::state_less);
  starts.erase(std::unique(starts.begin(), starts.end(),
                           [](const auto& a, const auto& b) { return a.subset == b.subset; }),
               starts.end());
  const std::size_t refine = std::min<std::size_t>(starts.size(), static_cast<std::size_t>(opt.n_refine));
  std::vector<detail::SubsetState> refined(refine);
  parallel_for(refine, [&](std::size_t i) {
    refined[i] = detail::mrcd_csteps(X, starts[i].subset, h, T, rho, opt.max_csteps);
  });
  const auto best = *std::min_element(refined.begin(), refined.end(), detail::state_less);

  const Moments m = subset_moments(X, best.subset);
  LocationScatter ls;
  ls.h = h;
  ls.rho = rho;
  ls.best_subset = best.subset;
  ls.center = m.mean;
  ls.raw_center = m.mean;
  ls.consistency_factor = mcd_consistency_factor(h, n, d);
  ls.scatter = rho * T + (1.0 - rho) * ls.consistency_factor * m.cov;
  ls.raw_scatter = ls.scatter;
  ls.objective = std::exp(best.log_det);
  return ls;
}

// ---------------------------------------------------------------------------
// Stahel-Donoho outlyingness

/// Robust z-score outlyingness maximized over the coordinate axes and
/// `n_dirs` normalized differences of random row pairs. Directions whose
/// projections have zero MAD are skipped.
inline OutlyingnessReport stahel_donoho(const MatrixXd& X, int n_dirs = 500,
                                        std::uint64_t seed = 0) {
  detail::validate_matrix(X, 2, "stahel_donoho");
  const Index n = X.rows(), d = X.cols();
  std::vector<VectorXd> dirs;
  dirs.reserve(static_cast<std::size_t>(d + std::max(n_dirs, 0)));
  for (Index j = 0; j < d; ++j) dirs.push_back(VectorXd::Unit(d, j));
  Rng rng = make_stream(seed, 0);
  for (int t = 0; t < n_dirs; ++t) {
    const auto pair = sample_without_replacement(rng, static_cast<std::size_t>(n), 2);
    VectorXd u = X.row(static_cast<Index>(pair[0])) - X.row(static_cast<Index>(pair[1]));
    const double norm = u.norm();
    if (norm > 0.0) dirs.push_back(u / norm);
  }

  OutlyingnessReport rep;
  rep.outl = VectorXd::Zero(n);
  std::vector<double> proj(static_cast<std::size_t>(n));
  for (const auto& u : dirs) {
    const VectorXd p = X * u;
    proj.assign(p.data(), p.data() + n);
    const double med = median(proj);
    const double s = mad(proj, med);
    if (!(s > 0.0)) {
      ++rep.directions_skipped;
      continue;
    }
    ++rep.directions_used;
    for (Index i = 0; i < n; ++i) rep.outl(i) = std::max(rep.outl(i), std::fabs(p(i) - med) / s);
  }
  if (rep.directions_used == 0)
    throw DegenerateError("stahel_donoho: every sampled direction has zero MAD");
  return rep;
}

// ---------------------------------------------------------------------------
// Diagnostics

/// Classical (MD) and robust (RD) distances with the shared chi-square cutoff.
inline DDPlot dd_plot_data(const MatrixXd& X, const LocationScatter& classical,
                           const LocationScatter& robust_fit, double level = 0.975) {
  const auto md = mahalanobis_distances(X, classical, level);
  const auto rd = mahalanobis_distances(X, robust_fit, level);
  return {md.distances, rd.distances, md.cutoff, md.flags, rd.flags};
}

/// Closed polyline (first vertex repeated last) of the bivariate tolerance
/// ellipse MD(x) = sqrt(chi2_{2, level}).
inline std::vector<std::array<double, 2>> tolerance_ellipse(const VectorXd& center,
                                                            const MatrixXd& scatter,
                                                            double level = 0.975,
                                                            int vertices = 200) {
  require(center.size() == 2 && scatter.rows() == 2 && scatter.cols() == 2,
          "tolerance_ellipse: requires d = 2");
  require(vertices >= 3, "tolerance_ellipse: need at least 3 vertices");
  Eigen::LLT<MatrixXd> llt(scatter);
  if (llt.info() != Eigen::Success) throw DegenerateError("tolerance_ellipse: scatter is not positive definite");
  const MatrixXd L = llt.matrixL();
  const double r = dist::chi_cutoff(2, level);
  std::vector<std::array<double, 2>> poly;
  poly.reserve(static_cast<std::size_t>(vertices) + 1);
  for (int k = 0; k < vertices; ++k) {
    const double t = 2.0 * std::numbers::pi * k / vertices;
    const Eigen::Vector2d v = center + r * L * Eigen::Vector2d(std::cos(t), std::sin(t));
    poly.push_back({v(0), v(1)});
  }
  poly.push_back(poly.front());
  return poly;
}

inline std::vector<std::array<double, 2>> tolerance_ellipse(const LocationScatter& ls,
                                                            double level = 0.975,
                                                            int vertices = 200) {
  return tolerance_ellipse(ls.center, ls.scatter, level, vertices);
}

}  // namespace robust
