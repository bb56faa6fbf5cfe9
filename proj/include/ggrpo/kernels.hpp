// SPDX-License-Identifier: Apache-2.0
//
// Data-parallel arithmetic kernels: scalar reference implementations plus
// AVX2 variants selected at runtime. Higher-level modules route their inner
// loops (reductions, standardization, softmax-family row operations) through
// this layer; scalar and SIMD paths are equivalence-tested against each other.
#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace ggrpo::kernels {

enum class Backend { Scalar, Avx2 };

// The active backend is chosen once at first use: AVX2 when the CPU supports
// it, otherwise scalar. The GGRPO_SIMD environment variable ("scalar",
// "avx2", "auto") overrides auto-detection, and set_backend() overrides both.
Backend active_backend();
bool backend_supported(Backend b);
void set_backend(Backend b);  // throws std::invalid_argument if unsupported
std::string_view backend_name(Backend b);

// Reductions.
double sum(std::span<const double> x);
double sum_squares(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
double max_value(std::span<const double> x);  // x must be non-empty

// Elementwise maps. in/out spans must have equal length; in-place allowed.
// out[i] = (x[i] + shift) * scale
void shift_scale(std::span<const double> x, double shift, double scale,
                 std::span<double> out);
// y[i] += a * x[i]
void axpy(double a, std::span<const double> x, std::span<double> y);
// out[i] = exp(x[i]); finite inputs, a few ulp of relative error
void exp_values(std::span<const double> x, std::span<double> out);

// Softmax-family row operations over one logits row (finite entries).
// softmax() writes the probabilities and returns the log-sum-exp.
double softmax(std::span<const double> logits, std::span<double> probs);
double log_sum_exp(std::span<const double> logits);
// Entropy (nats) of softmax(logits).
double row_entropy(std::span<const double> logits);

}  // namespace ggrpo::kernels
