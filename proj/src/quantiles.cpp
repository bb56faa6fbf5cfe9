// SPDX-License-Identifier: Apache-2.0

#include "ggrpo/quantiles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ggrpo/kernels.hpp"

namespace ggrpo {
namespace {

constexpr double kTwoOverSqrtPi = 1.1283791670955125739;   // 2/sqrt(pi)
constexpr double kOneOverSqrtPi = 0.5641895835477562869;   // 1/sqrt(pi)
constexpr double kSqrt1_2 = 0.7071067811865475244;         // 1/sqrt(2)
constexpr double kSqrt2Pi = 2.5066282746310005024;         // sqrt(2*pi)

// erf on |x| < 3 via the all-positive-term series
//   erf(x) = 2x/sqrt(pi) * exp(-x^2) * sum_n (2x^2)^n / (2n+1)!!
// No cancellation, so relative error stays at a few eps.
double erf_series(double ax) {
  const double t = 2.0 * ax * ax;
  double term = 1.0;
  double total = 1.0;
  for (int n = 1; n < 300; ++n) {
    term *= t / double(2 * n + 1);
    total += term;
    if (term < total * 1e-18) break;
  }
  return kTwoOverSqrtPi * ax * std::exp(-ax * ax) * total;
}

// erfc on x >= 3 via the Laplace continued fraction
//   erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + (2/2)/(x + ...))),
// evaluated backward at fixed depth (ample for x >= 3).
double erfc_fraction(double x) {
  double t = x;
  for (int n = 64; n >= 1; --n) t = x + 0.5 * double(n) / t;
  return std::exp(-x * x) * kOneOverSqrtPi / t;
}

// Lower-tail rational estimate for Phi^-1, |error| < 1.2e-9 before polish.
double quantile_tail_estimate(double p) {
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  const double q = std::sqrt(-2.0 * std::log(p));
  const double num = ((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5];
  const double den = (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0;
  return num / den;
}

double quantile_central_estimate(double p) {
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  const double q = p - 0.5;
  const double r = q * q;
  const double num = ((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5];
  const double den = ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0;
  return q * num / den;
}

}  // namespace

double erf(double x) {
  if (std::isnan(x)) return x;
  const double ax = std::fabs(x);
  double v;
  if (ax < 3.0) {
    v = ax == 0.0 ? 0.0 : erf_series(ax);
  } else if (ax < 40.0) {
    v = 1.0 - erfc_fraction(ax);
  } else {
    v = 1.0;
  }
  return x < 0.0 ? -v : v;
}

double erfc(double x) {
  if (std::isnan(x)) return x;
  if (x < 0.0) return 2.0 - erfc(-x);
  if (x < 3.0) return 1.0 - erf(x);
  if (x > 40.0) return 0.0;  // underflows well before this
  return erfc_fraction(x);
}

double normal_cdf(double x) {
  if (!std::isfinite(x)) throw std::domain_error("normal_cdf: non-finite input");
  if (x < 0.0) return 0.5 * erfc(-x * kSqrt1_2);
  return 1.0 - 0.5 * erfc(x * kSqrt1_2);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("normal_quantile: p must lie in (0,1)");

  constexpr double kPLow = 0.02425;
  double x;
  if (p < kPLow) {
    x = quantile_tail_estimate(p);
  } else if (p > 1.0 - kPLow) {
    x = -quantile_tail_estimate(1.0 - p);
  } else {
    x = quantile_central_estimate(p);
  }

  // One Halley step against the CDF lifts the estimate to full precision.
  const double e = normal_cdf(x) - p;
  const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

void standard_normal_quantiles(std::span<double> out) {
  const std::size_t n = out.size();
  const double dn = double(n);
  for (std::size_t i = 0; i < n / 2; ++i) {
    const double q = normal_quantile((double(i) + 0.5) / dn);
    out[i] = q;
    out[n - 1 - i] = -q;
  }
  if (n % 2 == 1) out[n / 2] = 0.0;
}

SortedSample SortedSample::from_unsorted(std::vector<double> values) {
  if (values.empty()) throw std::domain_error("SortedSample: empty sample");
  for (double v : values)
    if (!std::isfinite(v)) throw std::domain_error("SortedSample: non-finite value");
  std::sort(values.begin(), values.end());
  return SortedSample(std::move(values));
}

SortedSample SortedSample::from_sorted(std::vector<double> values) {
  if (values.empty()) throw std::domain_error("SortedSample: empty sample");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]))
      throw std::domain_error("SortedSample: non-finite value");
    if (i > 0 && values[i] < values[i - 1])
      throw std::domain_error("SortedSample: values not non-decreasing");
  }
  return SortedSample(std::move(values));
}

double empirical_cdf(const SortedSample& sample, double x) {
  const auto vals = sample.values();
  const auto lo = std::lower_bound(vals.begin(), vals.end(), x) - vals.begin();
  const auto hi = std::upper_bound(vals.begin(), vals.end(), x) - vals.begin();
  // (count_below + count_at / 2) / N; reduces to (k - 0.5)/N at order stats
  return (double(lo) + double(hi)) / (2.0 * double(sample.count()));
}

double wasserstein2_to_normal(const SortedSample& sample) {
  const std::size_t n = sample.count();
  std::vector<double> target(n);
  standard_normal_quantiles(target);
  const double ss = kernels::squared_distance(sample.values(), target);
  return std::sqrt(ss / double(n));
}

}  // namespace ggrpo
