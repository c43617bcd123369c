#pragma once

// Cellwise outliers: per-column robust scores with signed flags, rowwise
// flags from a multivariate fit, and block aggregation for cell maps.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "robust/covariance.hpp"
#include "robust/error.hpp"
#include "robust/linalg.hpp"
#include "robust/pca.hpp"
#include "robust/univariate.hpp"

namespace robust {

enum class CellFlag : int { low = -1, ok = 0, high = 1, missing = 2 };
enum class CellScale { mad, qn };
enum class CellMethod { univariate };  // slot for a correlation-based detector

inline const char* to_string(CellFlag f) {
  switch (f) {
    case CellFlag::low: return "low";
    case CellFlag::ok: return "ok";
    case CellFlag::high: return "high";
    case CellFlag::missing: return "missing";
  }
  return "?";
}

struct CellFlags {
  MatrixXd resid;  // robust cell scores, 0 in degenerate columns, NaN when missing
  std::vector<std::vector<CellFlag>> flag;  // [row][col]
  double cutoff = kDefaultScoreCutoff;
  CellScale scale = CellScale::mad;
  CellMethod method = CellMethod::univariate;
  VectorXd center;
  VectorXd spread;
  std::vector<bool> degenerate;

  Index rows() const { return resid.rows(); }
  Index cols() const { return resid.cols(); }

  /// +1 high, -1 low, 0 ok or missing.
  MatrixXd signed_values() const {
    MatrixXd s = MatrixXd::Zero(rows(), cols());
    for (Index i = 0; i < rows(); ++i)
      for (Index j = 0; j < cols(); ++j) {
        const CellFlag f = flag[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        if (f == CellFlag::high) s(i, j) = 1.0;
        if (f == CellFlag::low) s(i, j) = -1.0;
      }
    return s;
  }

  std::vector<bool> rows_with_flag() const {
    std::vector<bool> out(static_cast<std::size_t>(rows()), false);
    for (Index i = 0; i < rows(); ++i)
      for (Index j = 0; j < cols(); ++j) {
        const CellFlag f = flag[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        if (f == CellFlag::high || f == CellFlag::low) out[static_cast<std::size_t>(i)] = true;
      }
    return out;
  }
};

/// Robust scores (x - median) / scale per column; cells beyond +-cutoff are
/// flagged high or low. NaN cells are missing and left out of the column
/// statistics. A column with zero scale is marked degenerate and all its
/// observed cells stay ok.
inline CellFlags flag_cells(const MatrixXd& X, double cutoff = kDefaultScoreCutoff,
                            CellScale scale = CellScale::mad) {
  require(cutoff > 0.0, "flag_cells: cutoff must be positive");
  require(X.rows() >= 1 && X.cols() >= 1, "flag_cells: empty matrix");
  const Index n = X.rows(), d = X.cols();
  CellFlags out;
  out.cutoff = cutoff;
  out.scale = scale;
  out.resid = MatrixXd::Zero(n, d);
  out.flag.assign(static_cast<std::size_t>(n), std::vector<CellFlag>(static_cast<std::size_t>(d), CellFlag::ok));
  out.center = VectorXd::Zero(d);
  out.spread = VectorXd::Zero(d);
  out.degenerate.assign(static_cast<std::size_t>(d), false);

  for (Index j = 0; j < d; ++j) {
    std::vector<double> col;
    for (Index i = 0; i < n; ++i) {
      if (std::isnan(X(i, j))) {
        out.flag[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = CellFlag::missing;
        out.resid(i, j) = std::nan("");
      } else if (!std::isfinite(X(i, j))) {
        throw InputError("flag_cells: infinite cell");
      } else {
        col.push_back(X(i, j));
      }
    }
    if (col.empty() || (scale == CellScale::qn && col.size() < 2)) {
      out.degenerate[static_cast<std::size_t>(j)] = true;
      continue;
    }
    const double med = median(col);
    const double s = scale == CellScale::mad ? mad(col, med) : qn(col);
    out.center(j) = med;
    out.spread(j) = s;
    if (!(s > 0.0)) {
      out.degenerate[static_cast<std::size_t>(j)] = true;
      continue;
    }
    for (Index i = 0; i < n; ++i) {
      auto& f = out.flag[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (f == CellFlag::missing) continue;
      const double r = (X(i, j) - med) / s;
      out.resid(i, j) = r;
      if (r > cutoff) f = CellFlag::high;
      else if (r < -cutoff) f = CellFlag::low;
    }
  }
  return out;
}

enum class RowMethod { mcd, robust_pca };

struct RowFlagOptions {
  RowMethod method = RowMethod::mcd;
  Index k = 2;  // components for robust_pca
  int n_starts = 500;
  std::uint64_t seed = 0;
  double level = 0.975;
};

struct RowFlags {
  std::vector<bool> flagged;
  VectorXd distance;  // RD (mcd) or OD (robust_pca)
  double cutoff = 0.0;
};

/// Outlying rows: reweighted MCD robust distance or ROBPCA orthogonal
/// distance above its cutoff.
inline RowFlags rowwise_flags(const MatrixXd& X, const RowFlagOptions& opt = {}) {
  RowFlags out;
  if (opt.method == RowMethod::mcd) {
    McdOptions mo;
    mo.n_starts = opt.n_starts;
    mo.seed = opt.seed;
    const auto fit = fast_mcd(X, mo);
    const auto rd = mahalanobis_distances(X, fit, opt.level);
    out.distance = rd.distances;
    out.cutoff = rd.cutoff;
  } else {
    const auto model = robust_pca(X, opt.k, 0, 500, opt.seed);
    const auto map = pca_distances(model, X, opt.level);
    out.distance = map.od;
    out.cutoff = map.od_cutoff;
  }
  out.flagged.resize(static_cast<std::size_t>(X.rows()));
  for (Index i = 0; i < X.rows(); ++i) out.flagged[static_cast<std::size_t>(i)] = out.distance(i) > out.cutoff;
  return out;
}

struct CellMapGrid {
  Index block_rows = 1;
  Index block_cols = 1;
  MatrixXd cells;  // block means
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
};

namespace detail {

inline std::string range_label(Index first, Index last) {
  // 1-based, inclusive
  return first == last ? std::to_string(first + 1)
                       : std::to_string(first + 1) + "-" + std::to_string(last + 1);
}

}  // namespace detail

/// Means over br x bc blocks; blocks on a ragged edge average over the
/// cells they actually contain.
inline CellMapGrid block_aggregate(const MatrixXd& values, Index br, Index bc) {
  require(br >= 1 && bc >= 1, "block_aggregate: block sizes must be at least 1");
  const Index n = values.rows(), d = values.cols();
  const Index gr = (n + br - 1) / br, gc = (d + bc - 1) / bc;
  CellMapGrid g;
  g.block_rows = br;
  g.block_cols = bc;
  g.cells = MatrixXd::Zero(gr, gc);
  for (Index a = 0; a < gr; ++a) {
    const Index r0 = a * br, rn = std::min(br, n - r0);
    for (Index b = 0; b < gc; ++b) {
      const Index c0 = b * bc, cn = std::min(bc, d - c0);
      g.cells(a, b) = values.block(r0, c0, rn, cn).sum() / static_cast<double>(rn * cn);
    }
  }
  for (Index a = 0; a < gr; ++a) g.row_labels.push_back(detail::range_label(a * br, std::min(n, (a + 1) * br) - 1));
  for (Index b = 0; b < gc; ++b) g.col_labels.push_back(detail::range_label(b * bc, std::min(d, (b + 1) * bc) - 1));
  return g;
}

inline CellMapGrid block_aggregate(const CellFlags& flags, Index br, Index bc) {
  return block_aggregate(flags.signed_values(), br, bc);
}

/// Rowmap: 1 for a flagged row, 0 otherwise, averaged over blocks of br rows.
inline CellMapGrid rowmap_aggregate(const std::vector<bool>& flagged, Index br) {
  MatrixXd v(static_cast<Index>(flagged.size()), 1);
  for (std::size_t i = 0; i < flagged.size(); ++i) v(static_cast<Index>(i), 0) = flagged[i] ? 1.0 : 0.0;
  return block_aggregate(v, br, 1);
}

}  // namespace robust
