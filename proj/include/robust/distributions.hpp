#pragma once

// Gaussian, chi-square, Student t and F distribution helpers.
//
// Quantiles are obtained by bisection on the CDF, so they are only as
// accurate as the CDF (about 1e-12 relative for the ranges used here).

#include <cmath>
#include <limits>
#include <numbers>

#include "robust/error.hpp"

namespace robust::dist {

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

namespace detail {

template <class Cdf>
double bisect_quantile(Cdf cdf, double p, double lo, double hi) {
  // Grow the bracket until it contains the quantile.
  while (cdf(hi) < p) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) return std::numeric_limits<double>::infinity();
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (cdf(mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Series expansion of P(a, x); converges quickly for x < a + 1.
inline double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 1000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) (modified Lentz); for x >= a + 1.
inline double gamma_q_cf(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Continued fraction for the incomplete beta function.
inline double beta_cf(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < 1000; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return h;
}

}  // namespace detail

/// Inverse of the standard normal CDF.
inline double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, "normal_quantile: p must lie in (0, 1)");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -normal_quantile(1.0 - p);
  return detail::bisect_quantile(normal_cdf, p, 0.0, 8.0);
}

/// Regularized lower incomplete gamma function P(a, x).
inline double gamma_p(double a, double x) {
  require(a > 0.0, "gamma_p: shape must be positive");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_cf(a, x);
}

inline double chi2_cdf(double x, double df) {
  return gamma_p(0.5 * df, 0.5 * x);
}

/// Quantile of the chi-square distribution with `df` degrees of freedom.
/// chi2_quantile(1, df) is +infinity.
inline double chi2_quantile(double p, double df) {
  require(df > 0.0, "chi2_quantile: degrees of freedom must be positive");
  require(p >= 0.0 && p <= 1.0, "chi2_quantile: p must lie in [0, 1]");
  if (p == 0.0) return 0.0;
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  return detail::bisect_quantile([df](double x) { return chi2_cdf(x, df); }, p,
                                 0.0, df + 10.0);
}

/// Regularized incomplete beta function I_x(a, b).
inline double beta_inc(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, "beta_inc: shapes must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) -
                                std::lgamma(b) + a * std::log(x) +
                                b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_cf(a, b, x) / a;
  return 1.0 - front * detail::beta_cf(b, a, 1.0 - x) / b;
}

inline double student_t_cdf(double t, double df) {
  const double x = df / (df + t * t);
  const double tail = 0.5 * beta_inc(0.5 * df, 0.5, x);
  return t >= 0.0 ? 1.0 - tail : tail;
}

inline double f_cdf(double f, double df1, double df2) {
  if (f <= 0.0) return 0.0;
  return beta_inc(0.5 * df1, 0.5 * df2, df1 * f / (df1 * f + df2));
}

/// sqrt(chi2_{d, level}), the cutoff used on robust and Mahalanobis distances.
inline double chi_cutoff(int d, double level = 0.975) {
  return std::sqrt(chi2_quantile(level, static_cast<double>(d)));
}

}  // namespace robust::dist
