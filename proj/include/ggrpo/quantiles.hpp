// SPDX-License-Identifier: Apache-2.0
//
// Scalar probability functions: standard-normal CDF and quantile, the error
// function pair they are built on, the mid-rank empirical CDF, and the
// closed-form 1D Wasserstein-2 distance to N(0,1).
//
// Accuracy contracts (enforced by tests against a bisection oracle):
//   erf/erfc       absolute error <= 1e-14
//   normal_cdf     absolute error <= 1e-12
//   normal_quantile  |normal_cdf(normal_quantile(p)) - p| <= 1e-10
//
// All functions are pure; everything runs in 64-bit floating point.
#pragma once

#include <span>
#include <vector>

namespace ggrpo {

// Error function, series branch for |x| < 3 and a continued fraction for the
// tails. erfc keeps full relative accuracy for large positive arguments.
double erf(double x);
double erfc(double x);

// Phi(x) for N(0,1). Throws std::domain_error on non-finite input.
double normal_cdf(double x);

// Phi^-1(p), p in the open interval (0,1); rational initial estimate refined
// by one Halley step against normal_cdf. Throws std::domain_error outside
// (0,1). Antisymmetric: normal_quantile(1-p) == -normal_quantile(p).
double normal_quantile(double p);

// Fills out[0..n) with Phi^-1((i+0.5)/n), i = 0..n-1. The grid is built from
// its lower half and mirrored, so out[n-1-i] == -out[i] bit-for-bit and the
// total is exactly zero.
void standard_normal_quantiles(std::span<double> out);

// A non-empty, non-decreasing sequence of finite reals.
class SortedSample {
 public:
  static SortedSample from_unsorted(std::vector<double> values);
  static SortedSample from_sorted(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  std::size_t count() const { return values_.size(); }

 private:
  explicit SortedSample(std::vector<double> values) : values_(std::move(values)) {}
  std::vector<double> values_;
};

// Mid-rank empirical CDF: at the k-th order statistic (1-based, ties given
// the mean of their ranks) the value is (k - 0.5) / N.
double empirical_cdf(const SortedSample& sample, double x);

// Closed-form 1D W2 estimate against N(0,1):
//   sqrt((1/N) * sum_i (values[i] - Phi^-1((i - 0.5)/N))^2).
// The optimal coupling is the monotone map, so no transport plan is built.
double wasserstein2_to_normal(const SortedSample& sample);

}  // namespace ggrpo
