// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

namespace ggrpo::kernels::detail {

// One entry per kernel; the dispatcher holds a table per backend.
struct OpsTable {
  double (*sum)(std::span<const double>);
  double (*sum_squares)(std::span<const double>);
  double (*dot)(std::span<const double>, std::span<const double>);
  double (*squared_distance)(std::span<const double>, std::span<const double>);
  double (*max_value)(std::span<const double>);
  void (*shift_scale)(std::span<const double>, double, double, std::span<double>);
  void (*axpy)(double, std::span<const double>, std::span<double>);
  void (*exp_values)(std::span<const double>, std::span<double>);
  double (*softmax)(std::span<const double>, std::span<double>);
  double (*log_sum_exp)(std::span<const double>);
  double (*row_entropy)(std::span<const double>);
};

const OpsTable& scalar_table();

#if defined(GGRPO_HAVE_AVX2)
const OpsTable& avx2_table();
#endif

}  // namespace ggrpo::kernels::detail
