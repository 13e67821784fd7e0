#pragma once

#include <cmath>
#include <limits>

#include "hetknock/errors.hpp"

// Standard normal helpers. Everything here is deterministic and
// platform-stable: the CDF routes through std::erfc (correctly rounded to a
// few ulp in libm) and the quantile is a rational approximation polished by
// one Halley step, accurate to ~1e-15 over (0, 1).

namespace hetknock {

inline constexpr double kSqrt2 = 1.4142135623730951;
inline constexpr double kSqrt2Pi = 2.5066282746310002;

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / kSqrt2);
}

// Two-sided tail mass 2 * Phi(-|s|), computed as erfc to keep precision deep
// in the tails.
inline double two_sided_p_value(double s) {
  if (!std::isfinite(s)) fail(ErrorCode::NonFiniteValue, "statistic is not finite");
  return std::erfc(std::abs(s) / kSqrt2);
}

namespace detail {

// Acklam's rational approximation to the probit function; relative error
// below 1.15e-9 before refinement.
inline double probit_estimate(double p) {
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  static constexpr double p_low = 0.02425;

  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - p_low) {
    double q = p - 0.5;
    double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  double q = std::sqrt(-2.0 * std::log(1.0 - p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

}  // namespace detail

inline double normal_quantile(double p) {
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::BadLevel, "probability outside [0, 1]");
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return std::numeric_limits<double>::infinity();

  double x = detail::probit_estimate(p);
  // One Halley refinement against the erfc-based CDF.
  double e = normal_cdf(x) - p;
  double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

// Rejection threshold for a two-sided level-alpha test: -Phi^{-1}(alpha / 2).
inline double two_sided_threshold(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::BadLevel, "alpha outside (0, 1)");
  return -normal_quantile(alpha / 2.0);
}

}  // namespace hetknock
