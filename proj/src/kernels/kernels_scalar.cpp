// SPDX-License-Identifier: Apache-2.0
//
// Scalar reference kernels. These define the semantics the SIMD variants are
// tested against.

#include "kernels_internal.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace ggrpo::kernels::detail {
namespace {

double sum_scalar(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc;
}

double sum_squares_scalar(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc;
}

double dot_scalar(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double squared_distance_scalar(std::span<const double> a,
                               std::span<const double> b) {
  assert(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double max_value_scalar(std::span<const double> x) {
  assert(!x.empty());
  double m = x[0];
  for (double v : x.subspan(1)) m = std::max(m, v);
  return m;
}

void shift_scale_scalar(std::span<const double> x, double shift, double scale,
                        std::span<double> out) {
  assert(x.size() == out.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] + shift) * scale;
}

void axpy_scalar(double a, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void exp_values_scalar(std::span<const double> x, std::span<double> out) {
  assert(x.size() == out.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::exp(x[i]);
}

double softmax_scalar(std::span<const double> logits, std::span<double> probs) {
  assert(!logits.empty() && logits.size() == probs.size());
  const double m = max_value_scalar(logits);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - m);
    total += probs[i];
  }
  const double inv = 1.0 / total;
  for (double& p : probs) p *= inv;
  return m + std::log(total);
}

double log_sum_exp_scalar(std::span<const double> logits) {
  assert(!logits.empty());
  const double m = max_value_scalar(logits);
  double total = 0.0;
  for (double z : logits) total += std::exp(z - m);
  return m + std::log(total);
}

// H = lse - sum(p_i * z_i); avoids log() per element.
double row_entropy_scalar(std::span<const double> logits) {
  assert(!logits.empty());
  const double m = max_value_scalar(logits);
  double total = 0.0;
  double weighted = 0.0;
  for (double z : logits) {
    const double e = std::exp(z - m);
    total += e;
    weighted += e * z;
  }
  const double h = (m + std::log(total)) - weighted / total;
  return h < 0.0 ? 0.0 : h;  // clamp the |rounding| of a saturated row
}

}  // namespace

const OpsTable& scalar_table() {
  static const OpsTable table{
      sum_scalar,         sum_squares_scalar, dot_scalar,
      squared_distance_scalar, max_value_scalar, shift_scale_scalar,
      axpy_scalar,        exp_values_scalar,  softmax_scalar,
      log_sum_exp_scalar, row_entropy_scalar,
  };
  return table;
}

}  // namespace ggrpo::kernels::detail
