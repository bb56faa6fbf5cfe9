// SPDX-License-Identifier: Apache-2.0
//
// Backend detection and dispatch for the kernel layer.

#include "ggrpo/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

#include "kernels_internal.hpp"

namespace ggrpo::kernels {
namespace {

using detail::OpsTable;

bool cpu_has_avx2() {
#if defined(GGRPO_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const OpsTable* table_for(Backend b) {
#if defined(GGRPO_HAVE_AVX2)
  if (b == Backend::Avx2) return &detail::avx2_table();
#endif
  (void)b;
  return &detail::scalar_table();
}

Backend detect_backend() {
  if (const char* env = std::getenv("GGRPO_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::Scalar;
    if (std::strcmp(env, "avx2") == 0) {
      if (!cpu_has_avx2())
        throw std::invalid_argument("GGRPO_SIMD=avx2 but CPU lacks AVX2/FMA");
      return Backend::Avx2;
    }
    // anything else (incl. "auto") falls through to detection
  }
  return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

struct Dispatch {
  Backend backend;
  const OpsTable* ops;
};

Dispatch& dispatch() {
  static Dispatch d = [] {
    const Backend b = detect_backend();
    return Dispatch{b, table_for(b)};
  }();
  return d;
}

}  // namespace

Backend active_backend() { return dispatch().backend; }

bool backend_supported(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
      return cpu_has_avx2();
  }
  return false;
}

void set_backend(Backend b) {
  if (!backend_supported(b))
    throw std::invalid_argument(std::string("unsupported kernel backend: ") +
                                std::string(backend_name(b)));
  dispatch() = Dispatch{b, table_for(b)};
}

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return "scalar";
    case Backend::Avx2:
      return "avx2";
  }
  return "unknown";
}

double sum(std::span<const double> x) { return dispatch().ops->sum(x); }
double sum_squares(std::span<const double> x) {
  return dispatch().ops->sum_squares(x);
}
double dot(std::span<const double> a, std::span<const double> b) {
  return dispatch().ops->dot(a, b);
}
double squared_distance(std::span<const double> a, std::span<const double> b) {
  return dispatch().ops->squared_distance(a, b);
}
double max_value(std::span<const double> x) {
  return dispatch().ops->max_value(x);
}
void shift_scale(std::span<const double> x, double shift, double scale,
                 std::span<double> out) {
  dispatch().ops->shift_scale(x, shift, scale, out);
}
void axpy(double a, std::span<const double> x, std::span<double> y) {
  dispatch().ops->axpy(a, x, y);
}
void exp_values(std::span<const double> x, std::span<double> out) {
  dispatch().ops->exp_values(x, out);
}
double softmax(std::span<const double> logits, std::span<double> probs) {
  return dispatch().ops->softmax(logits, probs);
}
double log_sum_exp(std::span<const double> logits) {
  return dispatch().ops->log_sum_exp(logits);
}
double row_entropy(std::span<const double> logits) {
  return dispatch().ops->row_entropy(logits);
}

}  // namespace ggrpo::kernels
