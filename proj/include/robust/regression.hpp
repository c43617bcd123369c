#pragma once

// Least Trimmed Squares regression (FAST-LTS), its consistent residual
// scale, the reweighted least squares step with the usual inferential
// output, and the four-class regression outlier map.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <tuple>
#include <vector>

#include "robust/covariance.hpp"
#include "robust/distributions.hpp"
#include "robust/error.hpp"
#include "robust/linalg.hpp"
#include "robust/random.hpp"

namespace robust {

struct RegressionData {
  MatrixXd X;  // n x d predictors
  VectorXd y;
  bool intercept = true;

  Index n() const { return X.rows(); }
  Index d() const { return X.cols(); }
  Index p() const { return X.cols() + (intercept ? 1 : 0); }

  /// Design matrix [1, X] (or X without intercept).
  MatrixXd design() const {
    MatrixXd Z(X.rows(), p());
    if (intercept) {
      Z.col(0).setOnes();
      Z.rightCols(X.cols()) = X;
    } else {
      Z = X;
    }
    return Z;
  }
};

struct RegressionInference {
  VectorXd std_errors;
  VectorXd t_values;
  VectorXd p_values;
  double residual_scale = 0.0;
  Index df_residual = 0;
  double r_squared = 0.0;
  double adj_r_squared = 0.0;
  double f_statistic = 0.0;
  double f_p_value = 1.0;
};

struct RegressionFit {
  VectorXd beta;       // (intercept, slopes...) when the model has an intercept
  VectorXd residuals;  // y - yhat, all n cases
  Index h = 0;
  double scale = 0.0;  // sigma_LTS for a raw fit, consistency-corrected LS scale after reweighting
  double chn = 1.0;
  std::vector<int> weights;
  Subset best_subset;
  double objective = 0.0;  // sum of the h smallest squared residuals
  bool exact_fit = false;
  bool reweighted = false;
  std::optional<RegressionInference> inference;
};

enum class PointClass { regular, vertical, good_leverage, bad_leverage };

inline const char* to_string(PointClass c) {
  switch (c) {
    case PointClass::regular: return "regular";
    case PointClass::vertical: return "vertical";
    case PointClass::good_leverage: return "good_leverage";
    case PointClass::bad_leverage: return "bad_leverage";
  }
  return "?";
}

struct RegressionOutlierMap {
  VectorXd std_resid;
  VectorXd rd_x;
  double resid_cutoff = 2.5;
  double rd_cutoff = 0.0;
  std::vector<PointClass> cls;
};

/// Default LTS subset size floor((n + d + 2) / 2).
inline Index default_lts_h(Index n, Index d) { return (n + d + 2) / 2; }

/// Asymptotic gaussian consistency factor of the trimmed residual scale,
/// 1 / sqrt(1 - (2n/h) q phi(q)) with q = Phi^-1((h + n) / (2n)).
inline double lts_consistency_factor(Index h, Index n) {
  if (h >= n) return 1.0;
  const double q = dist::normal_quantile(static_cast<double>(h + n) / (2.0 * static_cast<double>(n)));
  const double frac = (2.0 * static_cast<double>(n) / static_cast<double>(h)) * q * dist::normal_pdf(q);
  return 1.0 / std::sqrt(1.0 - frac);
}

/// Gaussian consistency factor of a residual scale computed from the cases
/// with |r / sigma| <= cutoff only.
inline double reweighted_consistency_factor(double cutoff) {
  const double mass = 2.0 * dist::normal_cdf(cutoff) - 1.0;
  return 1.0 / std::sqrt(1.0 - 2.0 * cutoff * dist::normal_pdf(cutoff) / mass);
}

/// Sum of the h smallest squared residuals.
inline double trimmed_sum_of_squares(const VectorXd& residuals, Index h) {
  std::vector<double> r2(static_cast<std::size_t>(residuals.size()));
  for (Index i = 0; i < residuals.size(); ++i) r2[static_cast<std::size_t>(i)] = residuals(i) * residuals(i);
  std::nth_element(r2.begin(), r2.begin() + (h - 1), r2.end());
  double s = 0.0;
  for (Index i = 0; i < h; ++i) s += r2[static_cast<std::size_t>(i)];
  return s;
}

/// c_{h,n} * sqrt(mean of the h smallest squared residuals).
inline double lts_scale(const RegressionFit& fit) {
  require(fit.h >= 1 && fit.h <= fit.residuals.size(), "lts_scale: invalid fit");
  return fit.chn * std::sqrt(trimmed_sum_of_squares(fit.residuals, fit.h) / static_cast<double>(fit.h));
}

namespace detail {

inline void validate_regression(const RegressionData& data, const char* who) {
  std::ostringstream os;
  if (data.X.rows() != data.y.size()) {
    os << who << ": X has " << data.X.rows() << " rows but y has " << data.y.size();
    throw InputError(os.str());
  }
  if (data.n() <= data.p()) {
    os << who << ": need more cases than coefficients (n=" << data.n() << ", p=" << data.p() << ")";
    throw InputError(os.str());
  }
  check_finite(data.X, who);
  if (!data.y.allFinite()) throw InputError(std::string(who) + ": non-finite response");
}

inline VectorXd ls_solve(const MatrixXd& Z, const VectorXd& y, const Subset& rows) {
  MatrixXd Zs(static_cast<Index>(rows.size()), Z.cols());
  VectorXd ys(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Zs.row(static_cast<Index>(i)) = Z.row(rows[i]);
    ys(static_cast<Index>(i)) = y(rows[i]);
  }
  return Zs.completeOrthogonalDecomposition().solve(ys);
}

struct LtsState {
  Subset subset;
  double objective = std::numeric_limits<double>::infinity();
};

inline bool lts_less(const LtsState& a, const LtsState& b) {
  return std::tie(a.objective, a.subset) < std::tie(b.objective, b.subset);
}

inline double subset_rss(const MatrixXd& Z, const VectorXd& y, const Subset& s, const VectorXd& beta) {
  double rss = 0.0;
  for (Index r : s) {
    const double e = y(r) - Z.row(r).dot(beta);
    rss += e * e;
  }
  return rss;
}

// C-steps: refit on the subset, keep the h smallest squared residuals.
inline LtsState lts_csteps(const MatrixXd& Z, const VectorXd& y, Subset s, Index h, int max_steps) {
  VectorXd beta = ls_solve(Z, y, s);
  LtsState state{s, subset_rss(Z, y, s, beta)};
  for (int step = 0; step < max_steps; ++step) {
    const VectorXd r2 = (y - Z * beta).array().square();
    Subset next = smallest_indices(r2, h);
    if (next == state.subset) break;
    const VectorXd nb = ls_solve(Z, y, next);
    const double obj = subset_rss(Z, y, next, nb);
    if (!(obj < state.objective)) break;
    state = {std::move(next), obj};
    beta = nb;
  }
  return state;
}

// Elemental start: p random cases with a full-rank design, solved exactly.
inline std::optional<LtsState> lts_elemental_start(const MatrixXd& Z, const VectorXd& y, Index h,
                                                   Rng& rng) {
  const Index n = Z.rows(), p = Z.cols();
  for (int attempt = 0; attempt < 100; ++attempt) {
    const auto pick = sample_without_replacement(rng, static_cast<std::size_t>(n), static_cast<std::size_t>(p));
    MatrixXd Zs(p, p);
    VectorXd ys(p);
    for (Index i = 0; i < p; ++i) {
      Zs.row(i) = Z.row(static_cast<Index>(pick[static_cast<std::size_t>(i)]));
      ys(i) = y(static_cast<Index>(pick[static_cast<std::size_t>(i)]));
    }
    Eigen::ColPivHouseholderQR<MatrixXd> qr(Zs);
    if (qr.rank() < p) continue;  // rank-deficient elemental set: resample
    const VectorXd beta = qr.solve(ys);
    const VectorXd r2 = (y - Z * beta).array().square();
    Subset s = smallest_indices(r2, h);
    return LtsState{s, std::numeric_limits<double>::infinity()};
  }
  return std::nullopt;
}

inline RegressionFit finish_lts(const RegressionData& data, const MatrixXd& Z, const Subset& subset,
                                Index h) {
  RegressionFit fit;
  fit.h = h;
  fit.best_subset = subset;
  fit.beta = ls_solve(Z, data.y, subset);
  fit.residuals = data.y - Z * fit.beta;
  fit.objective = trimmed_sum_of_squares(fit.residuals, h);
  fit.chn = lts_consistency_factor(h, data.n());
  fit.scale = lts_scale(fit);
  fit.weights.assign(static_cast<std::size_t>(data.n()), 0);
  for (Index i : subset) fit.weights[static_cast<std::size_t>(i)] = 1;

  const double yscale = std::max(data.y.cwiseAbs().maxCoeff(), 1.0);
  Index zero = 0;
  for (Index i = 0; i < fit.residuals.size(); ++i)
    if (std::fabs(fit.residuals(i)) <= 1e-12 * yscale) ++zero;
  if (zero >= h) {
    fit.exact_fit = true;
    fit.scale = 0.0;
  }
  return fit;
}

}  // namespace detail

/// Weighted (0/1) least squares on the cases with weight 1, with standard
/// errors, t and F statistics, and R^2.
inline RegressionFit least_squares(const RegressionData& data, const std::vector<int>& weights = {}) {
  detail::validate_regression(data, "least_squares");
  const Index n = data.n(), p = data.p();
  Subset rows;
  for (Index i = 0; i < n; ++i)
    if (weights.empty() || weights[static_cast<std::size_t>(i)] != 0) rows.push_back(i);
  const Index m = static_cast<Index>(rows.size());
  if (m < p + 1) {
    std::ostringstream os;
    os << "least_squares: only " << m << " weighted cases for " << p << " coefficients";
    throw DegenerateError(os.str());
  }

  const MatrixXd Z = data.design();
  MatrixXd Zs(m, p);
  VectorXd ys(m);
  for (Index i = 0; i < m; ++i) {
    Zs.row(i) = Z.row(rows[static_cast<std::size_t>(i)]);
    ys(i) = data.y(rows[static_cast<std::size_t>(i)]);
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(Zs);
  if (qr.rank() < p) throw DegenerateError("least_squares: design matrix is rank deficient");

  RegressionFit fit;
  fit.beta = qr.solve(ys);
  fit.residuals = data.y - Z * fit.beta;
  fit.h = m;
  fit.best_subset = rows;
  fit.weights.assign(static_cast<std::size_t>(n), 0);
  for (Index r : rows) fit.weights[static_cast<std::size_t>(r)] = 1;

  const VectorXd rs = ys - Zs * fit.beta;
  const double rss = rs.squaredNorm();
  fit.objective = rss;
  RegressionInference inf;
  inf.df_residual = m - p;
  inf.residual_scale = std::sqrt(rss / static_cast<double>(inf.df_residual));
  fit.scale = inf.residual_scale;

  const MatrixXd gram_inv = (Zs.transpose() * Zs).inverse();
  inf.std_errors = (gram_inv.diagonal().array() * rss / static_cast<double>(inf.df_residual)).sqrt();
  inf.t_values = fit.beta.array() / inf.std_errors.array();
  inf.p_values.resize(p);
  for (Index j = 0; j < p; ++j)
    inf.p_values(j) = 2.0 * (1.0 - dist::student_t_cdf(std::fabs(inf.t_values(j)),
                                                       static_cast<double>(inf.df_residual)));

  const double center = data.intercept ? ys.mean() : 0.0;
  const double tss = (ys.array() - center).square().sum();
  const Index df_model = data.intercept ? p - 1 : p;
  inf.r_squared = tss > 0.0 ? 1.0 - rss / tss : 1.0;
  const Index df_total = data.intercept ? m - 1 : m;
  inf.adj_r_squared = 1.0 - (1.0 - inf.r_squared) * static_cast<double>(df_total) /
                                static_cast<double>(inf.df_residual);
  if (df_model > 0 && rss > 0.0) {
    inf.f_statistic = ((tss - rss) / static_cast<double>(df_model)) /
                      (rss / static_cast<double>(inf.df_residual));
    inf.f_p_value = 1.0 - dist::f_cdf(inf.f_statistic, static_cast<double>(df_model),
                                      static_cast<double>(inf.df_residual));
  }
  fit.inference = inf;
  return fit;
}

/// LS residual sum of squares on the given cases.
inline double lts_subset_objective(const RegressionData& data, const Subset& subset) {
  const MatrixXd Z = data.design();
  return detail::subset_rss(Z, data.y, subset, detail::ls_solve(Z, data.y, subset));
}

/// One concentration step: LS on `subset`, then the h = |subset| cases with
/// the smallest squared residuals.
inline Subset lts_c_step(const RegressionData& data, const Subset& subset) {
  require(static_cast<Index>(subset.size()) >= data.p(), "lts_c_step: subset smaller than p");
  const MatrixXd Z = data.design();
  const VectorXd beta = detail::ls_solve(Z, data.y, subset);
  const VectorXd r2 = (data.y - Z * beta).array().square();
  return smallest_indices(r2, static_cast<Index>(subset.size()));
}

struct LtsOptions {
  Index h = 0;  // 0 selects floor((n + d + 2) / 2)
  int n_starts = 500;
  std::uint64_t seed = 0;
  int initial_csteps = 2;
  int n_refine = 10;
  int max_csteps = 100;
};

/// FAST-LTS: elemental starts, two C-steps each, full convergence for the
/// best candidates. The returned fit is the LS fit on the best h-subset with
/// sigma_LTS as its scale; weights mark the h-subset.
inline RegressionFit fast_lts(const RegressionData& data, const LtsOptions& opt = {}) {
  detail::validate_regression(data, "fast_lts");
  const Index n = data.n(), p = data.p();
  const Index h = opt.h > 0 ? opt.h : default_lts_h(n, data.d());
  if (h < p + 1 || h > n) {
    std::ostringstream os;
    os << "fast_lts: h=" << h << " outside [" << p + 1 << ", " << n << "]";
    throw InputError(os.str());
  }
  require(opt.n_starts >= 1, "fast_lts: n_starts must be positive");
  const MatrixXd Z = data.design();
  if (h == n) return detail::finish_lts(data, Z, all_rows(n), h);

  std::vector<std::optional<detail::LtsState>> starts(static_cast<std::size_t>(opt.n_starts));
  parallel_for(starts.size(), [&](std::size_t s) {
    Rng rng = make_stream(opt.seed, s);
    auto st = detail::lts_elemental_start(Z, data.y, h, rng);
    if (st) st = detail::lts_csteps(Z, data.y, st->subset, h, opt.initial_csteps);
    starts[s] = std::move(st);
  });
  std::vector<detail::LtsState> cand;
  for (auto& s : starts)
    if (s) cand.push_back(std::move(*s));
  if (cand.empty()) throw DegenerateError("fast_lts: every elemental subset is rank deficient");
  std::sort(cand.begin(), cand.end(), detail::lts_less);
  cand.erase(std::unique(cand.begin(), cand.end(),
                         [](const auto& a, const auto& b) { return a.subset == b.subset; }),
             cand.end());

  const std::size_t refine = std::min<std::size_t>(cand.size(), static_cast<std::size_t>(opt.n_refine));
  std::vector<detail::LtsState> refined(refine);
  parallel_for(refine, [&](std::size_t i) {
    refined[i] = detail::lts_csteps(Z, data.y, cand[i].subset, h, opt.max_csteps);
  });
  const auto best = *std::min_element(refined.begin(), refined.end(), detail::lts_less);
  return detail::finish_lts(data, Z, best.subset, h);
}

/// LTS over all C(n, h) subsets (reference for small problems).
inline RegressionFit exhaustive_lts(const RegressionData& data, Index h, double budget = 1e6) {
  detail::validate_regression(data, "exhaustive_lts");
  const Index n = data.n();
  require(h >= data.p() + 1 && h <= n, "exhaustive_lts: h out of range");
  if (binomial_capped(n, h, budget) > budget)
    throw InputError("exhaustive_lts: C(n, h) exceeds the combinatorial budget");
  const MatrixXd Z = data.design();
  Subset c = all_rows(h);
  detail::LtsState best;
  do {
    const VectorXd beta = detail::ls_solve(Z, data.y, c);
    const double obj = detail::subset_rss(Z, data.y, c, beta);
    if (obj < best.objective) best = {c, obj};
  } while (next_combination(c, n));
  return detail::finish_lts(data, Z, best.subset, h);
}

/// Reweighted least squares: weight 1 for |r_i / scale| <= cutoff, then a
/// least squares refit (with inference) on the weight-1 cases.
inline RegressionFit reweighted_ls(const RegressionData& data, const RegressionFit& fit,
                                   double cutoff = 2.5) {
  if (!(fit.scale > 0.0)) throw DegenerateError("reweighted_ls: residual scale is zero (exact fit)");
  require(fit.residuals.size() == data.n(), "reweighted_ls: fit does not match data");
  std::vector<int> w(static_cast<std::size_t>(data.n()));
  for (Index i = 0; i < data.n(); ++i)
    w[static_cast<std::size_t>(i)] = std::fabs(fit.residuals(i) / fit.scale) <= cutoff ? 1 : 0;
  RegressionFit out = least_squares(data, w);
  out.reweighted = true;
  out.chn = reweighted_consistency_factor(cutoff);
  out.scale *= out.chn;
  return out;
}

/// Standardized residuals r_i / scale against robust distances of the
/// predictors; classes follow the two threshold tests.
inline RegressionOutlierMap regression_outlier_map(const RegressionData& data, const RegressionFit& fit,
                                                   const LocationScatter& x_scatter,
                                                   double resid_cutoff = 2.5, double level = 0.975) {
  if (!(fit.scale > 0.0)) throw DegenerateError("regression_outlier_map: residual scale is zero (exact fit)");
  const auto rd = mahalanobis_distances(data.X, x_scatter, level);
  RegressionOutlierMap map;
  map.std_resid = fit.residuals / fit.scale;
  map.rd_x = rd.distances;
  map.resid_cutoff = resid_cutoff;
  map.rd_cutoff = rd.cutoff;
  map.cls.resize(static_cast<std::size_t>(data.n()));
  for (Index i = 0; i < data.n(); ++i) {
    const bool outlying = std::fabs(map.std_resid(i)) > resid_cutoff;
    const bool leverage = map.rd_x(i) > map.rd_cutoff;
    map.cls[static_cast<std::size_t>(i)] =
        leverage ? (outlying ? PointClass::bad_leverage : PointClass::good_leverage)
                 : (outlying ? PointClass::vertical : PointClass::regular);
  }
  return map;
}

}  // namespace robust
