#pragma once

// Univariate location and scale: classical moments, median, MAD, Qn,
// normalized IQR, M-estimators of location, and the z-score / robust-score
// outlier rules together with Tukey's boxplot fence.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "robust/error.hpp"

namespace robust {

inline constexpr double kMadFactor = 1.4826;
inline constexpr double kQnFactor = 2.2219;
inline constexpr double kIqrFactor = 0.7413;
inline constexpr double kDefaultScoreCutoff = 2.5;

namespace detail {

inline void check_sample(std::span<const double> x, std::size_t min_n, const char* who) {
  if (x.size() < min_n) {
    std::ostringstream os;
    os << who << ": need at least " << min_n << " observation(s), got " << x.size();
    throw InputError(os.str());
  }
  for (double v : x)
    if (!std::isfinite(v)) throw InputError(std::string(who) + ": non-finite value in sample");
}

inline std::vector<double> sorted_copy(std::span<const double> x) {
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  return s;
}

// Median of a scratch buffer (reordered in place).
inline double median_inplace(std::vector<double>& v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

// k-th smallest (1-based) of { y[j] - y[i] : i < j } for ascending y, found by
// repeatedly splitting the implicit row-sorted difference matrix at the
// weighted median of row medians. O(n log n).
inline double kth_pairwise_difference(const std::vector<double>& y, std::size_t k) {
  const std::size_t n = y.size();
  std::vector<std::size_t> left(n), right(n), below(n), below_eq(n);
  std::size_t candidates = 0;
  for (std::size_t i = 0; i < n; ++i) {
    left[i] = i + 1;
    right[i] = n;  // half-open [left, right)
    candidates += n - i - 1;
  }
  std::size_t skipped = 0;  // differences known to rank below every candidate

  std::vector<std::pair<double, std::size_t>> row_medians;
  while (candidates > n) {
    row_medians.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (left[i] < right[i]) {
        const std::size_t mid = left[i] + (right[i] - left[i]) / 2;
        row_medians.emplace_back(y[mid] - y[i], right[i] - left[i]);
      }
    }
    std::sort(row_medians.begin(), row_medians.end());
    std::size_t acc = 0;
    double trial = row_medians.back().first;
    for (const auto& [value, weight] : row_medians) {
      acc += weight;
      if (2 * acc >= candidates) {
        trial = value;
        break;
      }
    }

    std::size_t count_lt = 0, count_le = 0;
    std::size_t j_lt = 0, j_le = 0;
    for (std::size_t i = 0; i < n; ++i) {
      j_lt = std::max(j_lt, i + 1);
      while (j_lt < n && y[j_lt] - y[i] < trial) ++j_lt;
      j_le = std::max(j_le, i + 1);
      while (j_le < n && y[j_le] - y[i] <= trial) ++j_le;
      below[i] = j_lt;
      below_eq[i] = j_le;
      count_lt += j_lt - (i + 1);
      count_le += j_le - (i + 1);
    }

    if (k <= count_lt) {
      for (std::size_t i = 0; i < n; ++i) right[i] = std::min(right[i], below[i]);
    } else if (k > count_le) {
      for (std::size_t i = 0; i < n; ++i) left[i] = std::max(left[i], below_eq[i]);
    } else {
      return trial;
    }
    candidates = 0;
    skipped = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (right[i] < left[i]) right[i] = left[i];
      candidates += right[i] - left[i];
      skipped += left[i] - (i + 1);
    }
  }

  std::vector<double> rest;
  rest.reserve(candidates);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = left[i]; j < right[i]; ++j) rest.push_back(y[j] - y[i]);
  const std::size_t r = k - skipped - 1;
  std::nth_element(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(r), rest.end());
  return rest[r];
}

}  // namespace detail

inline double mean(std::span<const double> x) {
  detail::check_sample(x, 1, "mean");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Sample standard deviation with divisor n - 1.
inline double stdev(std::span<const double> x) {
  detail::check_sample(x, 2, "stdev");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

/// Middle order statistic; midpoint of the two middle ones for even n.
inline double median(std::span<const double> x) {
  detail::check_sample(x, 1, "median");
  std::vector<double> tmp(x.begin(), x.end());
  return detail::median_inplace(tmp);
}

/// 1.4826 * med_i |x_i - med_j x_j|.
inline double mad(std::span<const double> x, double center) {
  detail::check_sample(x, 1, "mad");
  std::vector<double> dev(x.size());
  std::transform(x.begin(), x.end(), dev.begin(),
                 [center](double v) { return std::fabs(v - center); });
  return kMadFactor * detail::median_inplace(dev);
}

inline double mad(std::span<const double> x) { return mad(x, median(x)); }

/// Qn: 2.2219 times the C(h,2)-th smallest pairwise distance, h = n/2 + 1.
inline double qn(std::span<const double> x) {
  detail::check_sample(x, 2, "qn");
  const std::size_t n = x.size();
  const std::size_t h = n / 2 + 1;
  const std::size_t k = h * (h - 1) / 2;
  return kQnFactor * detail::kth_pairwise_difference(detail::sorted_copy(x), k);
}

struct Quartiles {
  double q1;
  double q3;
};

/// Q1 = x_(floor(n/4)), Q3 = x_(ceil(3n/4)), 1-based order statistics clamped
/// into [1, n].
inline Quartiles quartiles(std::span<const double> x) {
  detail::check_sample(x, 4, "quartiles");
  const auto s = detail::sorted_copy(x);
  const std::size_t n = s.size();
  const std::size_t i1 = std::clamp<std::size_t>(n / 4, 1, n);
  const std::size_t i3 = std::clamp<std::size_t>((3 * n + 3) / 4, 1, n);
  return {s[i1 - 1], s[i3 - 1]};
}

/// 0.7413 (Q3 - Q1).
inline double iqr_normalized(std::span<const double> x) {
  const auto q = quartiles(x);
  return kIqrFactor * (q.q3 - q.q1);
}

struct Fences {
  double lower;
  double upper;
};

/// Tukey's fence [Q1 - 1.5 IQR, Q3 + 1.5 IQR] with the raw (unnormalized) IQR.
inline Fences boxplot_fences(std::span<const double> x) {
  const auto q = quartiles(x);
  const double iqr = q.q3 - q.q1;
  return {q.q1 - 1.5 * iqr, q.q3 + 1.5 * iqr};
}

// ---------------------------------------------------------------------------
// M-estimation of location

enum class PsiFamily { huber, bisquare };

struct PsiSpec {
  PsiFamily family = PsiFamily::huber;
  double c = 1.345;

  static PsiSpec huber(double c = 1.345) { return {PsiFamily::huber, c}; }
  static PsiSpec bisquare(double c = 4.685) { return {PsiFamily::bisquare, c}; }

  double psi(double u) const {
    switch (family) {
      case PsiFamily::huber:
        return std::clamp(u, -c, c);
      case PsiFamily::bisquare: {
        if (std::fabs(u) > c) return 0.0;
        const double t = 1.0 - (u / c) * (u / c);
        return u * t * t;
      }
    }
    return 0.0;
  }

  // psi(u) / u, with the limit psi'(0) = 1 at u = 0.
  double weight(double u) const {
    switch (family) {
      case PsiFamily::huber:
        return std::fabs(u) <= c ? 1.0 : c / std::fabs(u);
      case PsiFamily::bisquare: {
        if (std::fabs(u) > c) return 0.0;
        const double t = 1.0 - (u / c) * (u / c);
        return t * t;
      }
    }
    return 0.0;
  }

  // Objective whose derivative is psi.
  double rho(double u) const {
    switch (family) {
      case PsiFamily::huber:
        return std::fabs(u) <= c ? 0.5 * u * u : c * std::fabs(u) - 0.5 * c * c;
      case PsiFamily::bisquare: {
        const double c2 = c * c;
        if (std::fabs(u) > c) return c2 / 6.0;
        const double t = 1.0 - (u / c) * (u / c);
        return c2 / 6.0 * (1.0 - t * t * t);
      }
    }
    return 0.0;
  }
};

struct MLocation {
  double location;
  double scale;  // the fixed auxiliary scale (Qn)
  int iterations;
  bool converged;
};

/// Solves sum psi((x_i - mu) / Qn) = 0 by iteratively reweighted averaging
/// from the median. Stops when |mu change| <= tol * Qn. On non-convergence
/// the last iterate is returned with converged = false.
inline MLocation m_location(std::span<const double> x, PsiSpec psi = PsiSpec::huber(),
                            double tol = 1e-8, int max_iter = 100) {
  detail::check_sample(x, 2, "m_location");
  require(psi.c > 0.0, "m_location: tuning constant must be positive");
  const double sigma = qn(x);
  if (sigma <= 0.0) throw DegenerateError("m_location: Qn scale is zero (degenerate scale)");

  double mu = median(x);
  for (int it = 1; it <= max_iter; ++it) {
    double sw = 0.0, swx = 0.0;
    for (double v : x) {
      const double w = psi.weight((v - mu) / sigma);
      sw += w;
      swx += w * v;
    }
    if (sw <= 0.0) return {mu, sigma, it, false};
    const double next = swx / sw;
    const bool done = std::fabs(next - mu) <= tol * sigma;
    mu = next;
    if (done) return {mu, sigma, it, true};
  }
  return {mu, sigma, max_iter, false};
}

// ---------------------------------------------------------------------------
// Outlier scoring rules

struct UnivariateReport {
  double location = 0.0;
  double scale = 0.0;
  std::vector<double> scores;
  std::vector<bool> flagged;
  double cutoff = kDefaultScoreCutoff;

  std::size_t flagged_count() const {
    return static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), true));
  }
};

namespace detail {

inline UnivariateReport make_report(std::span<const double> x, double loc, double scale,
                                    double cutoff) {
  UnivariateReport r;
  r.location = loc;
  r.scale = scale;
  r.cutoff = cutoff;
  r.scores.reserve(x.size());
  r.flagged.reserve(x.size());
  for (double v : x) {
    const double s = (v - loc) / scale;
    r.scores.push_back(s);
    r.flagged.push_back(std::fabs(s) > cutoff);
  }
  return r;
}

}  // namespace detail

/// Classical z-scores (x_i - mean) / stdev.
inline UnivariateReport z_scores(std::span<const double> x,
                                 double cutoff = kDefaultScoreCutoff) {
  const double s = stdev(x);
  if (s <= 0.0) throw DegenerateError("z_scores: standard deviation is zero");
  return detail::make_report(x, mean(x), s, cutoff);
}

/// Robust scores (x_i - median) / MAD.
inline UnivariateReport robust_scores(std::span<const double> x,
                                      double cutoff = kDefaultScoreCutoff) {
  const double med = median(x);
  const double s = mad(x, med);
  if (s <= 0.0) {
    std::ostringstream os;
    os << "robust_scores: MAD is zero (degenerate scale); at least half of the "
          "values are tied at "
       << med;
    throw DegenerateError(os.str());
  }
  return detail::make_report(x, med, s, cutoff);
}

}  // namespace robust
