// SPDX-License-Identifier: Apache-2.0
//
// AVX2 kernel variants (4-wide doubles, FMA). Compiled with -mavx2 -mfma;
// only reachable through the dispatcher after a runtime CPU check.

#include "kernels_internal.hpp"

#if defined(GGRPO_HAVE_AVX2)

#include <immintrin.h>

#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>

namespace ggrpo::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

inline double hmax(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_max_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_max_sd(lo, swapped));
}

// exp() over 4 lanes. Cody-Waite range reduction against ln 2, rational
// approximation of exp(r) on |r| <= ln2/2, reconstruction via the exponent
// bits. Matches std::exp to a few ulp over the normal double range; results
// saturate to inf above it and flush to 0 below it (the subnormal tail
// [-745.1, -708.4) also flushes, which the softmax-family callers never see).
inline __m256d exp4d(__m256d x) {
  const __m256d kMaxX = _mm256_set1_pd(709.782712893383996843);
  const __m256d kMinX = _mm256_set1_pd(-708.396418532264106224);
  const __m256d kLog2E = _mm256_set1_pd(1.44269504088896340736);
  const __m256d kLn2Hi = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d kLn2Lo = _mm256_set1_pd(1.42860682030941723212e-6);

  const __m256d xc = _mm256_min_pd(_mm256_max_pd(x, kMinX), kMaxX);
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(xc, kLog2E),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, kLn2Hi, xc);
  r = _mm256_fnmadd_pd(n, kLn2Lo, r);
  const __m256d rr = _mm256_mul_pd(r, r);

  __m256d p = _mm256_set1_pd(1.26177193074810590878e-4);
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(3.02994407707441961300e-2));
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910e-1));
  p = _mm256_mul_pd(p, r);
  __m256d q = _mm256_set1_pd(3.00198505138664455042e-6);
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.52448340349684104192e-3));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766e-1));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.00000000000000000005e0));
  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

  // 2^n in two factors: n can reach 1024, one exponent field cannot hold it
  const __m256d n_hi = _mm256_min_pd(n, _mm256_set1_pd(1023.0));
  const __m256d n_lo = _mm256_sub_pd(n, n_hi);  // 0 or 1
  const __m128i n32 = _mm256_cvtpd_epi32(n_hi);
  const __m256i n64 = _mm256_cvtepi32_epi64(n32);
  const __m256i bits =
      _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  __m256d out = _mm256_mul_pd(e, _mm256_castsi256_pd(bits));
  out = _mm256_mul_pd(out, _mm256_add_pd(_mm256_set1_pd(1.0), n_lo));

  const __m256d inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  out = _mm256_blendv_pd(out, inf, _mm256_cmp_pd(x, kMaxX, _CMP_GT_OQ));
  out = _mm256_blendv_pd(out, _mm256_setzero_pd(),
                         _mm256_cmp_pd(x, kMinX, _CMP_LT_OQ));
  return out;
}

double sum_avx2(std::span<const double> x) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(&x[i]));
  double total = hsum(acc);
  for (; i < n; ++i) total += x[i];
  return total;
}

double sum_squares_avx2(std::span<const double> x) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(&x[i]);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double total = hsum(acc);
  for (; i < n; ++i) total += x[i] * x[i];
  return total;
}

double dot_avx2(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  const std::size_t n = a.size();
  std::size_t i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i]), acc);
  }
  double total = hsum(acc);
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

double squared_distance_avx2(std::span<const double> a,
                             std::span<const double> b) {
  assert(a.size() == b.size());
  const std::size_t n = a.size();
  std::size_t i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) {
    const __m256d d =
        _mm256_sub_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i]));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double total = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    total += d * d;
  }
  return total;
}

double max_value_avx2(std::span<const double> x) {
  assert(!x.empty());
  const std::size_t n = x.size();
  std::size_t i = 0;
  double m = x[0];
  if (n >= 4) {
    __m256d acc = _mm256_loadu_pd(&x[0]);
    for (i = 4; i + 4 <= n; i += 4)
      acc = _mm256_max_pd(acc, _mm256_loadu_pd(&x[i]));
    m = hmax(acc);
  } else {
    i = 1;
  }
  for (; i < n; ++i) m = m < x[i] ? x[i] : m;
  return m;
}

void shift_scale_avx2(std::span<const double> x, double shift, double scale,
                      std::span<double> out) {
  assert(x.size() == out.size());
  const std::size_t n = x.size();
  const __m256d sh = _mm256_set1_pd(shift);
  const __m256d sc = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_add_pd(_mm256_loadu_pd(&x[i]), sh);
    _mm256_storeu_pd(&out[i], _mm256_mul_pd(v, sc));
  }
  for (; i < n; ++i) out[i] = (x[i] + shift) * scale;
}

void axpy_avx2(double a, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  const std::size_t n = x.size();
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r =
        _mm256_fmadd_pd(av, _mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&y[i]));
    _mm256_storeu_pd(&y[i], r);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void exp_values_avx2(std::span<const double> x, std::span<double> out) {
  assert(x.size() == out.size());
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(&out[i], exp4d(_mm256_loadu_pd(&x[i])));
  if (i < n) {
    alignas(32) double buf[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t k = i; k < n; ++k) buf[k - i] = x[k];
    alignas(32) double res[4];
    _mm256_store_pd(res, exp4d(_mm256_load_pd(buf)));
    for (std::size_t k = i; k < n; ++k) out[k] = res[k - i];
  }
}

double softmax_avx2(std::span<const double> logits, std::span<double> probs) {
  assert(!logits.empty() && logits.size() == probs.size());
  const std::size_t n = logits.size();
  const double m = max_value_avx2(logits);
  const __m256d mv = _mm256_set1_pd(m);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d e = exp4d(_mm256_sub_pd(_mm256_loadu_pd(&logits[i]), mv));
    _mm256_storeu_pd(&probs[i], e);
    acc = _mm256_add_pd(acc, e);
  }
  double total = hsum(acc);
  for (; i < n; ++i) {
    alignas(32) double buf[4] = {logits[i] - m, 0.0, 0.0, 0.0};
    alignas(32) double res[4];
    _mm256_store_pd(res, exp4d(_mm256_load_pd(buf)));
    probs[i] = res[0];
    total += res[0];
  }
  const double inv = 1.0 / total;
  const __m256d invv = _mm256_set1_pd(inv);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4)
    _mm256_storeu_pd(&probs[j], _mm256_mul_pd(_mm256_loadu_pd(&probs[j]), invv));
  for (; j < n; ++j) probs[j] *= inv;
  return m + std::log(total);
}

double log_sum_exp_avx2(std::span<const double> logits) {
  assert(!logits.empty());
  const std::size_t n = logits.size();
  const double m = max_value_avx2(logits);
  const __m256d mv = _mm256_set1_pd(m);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_add_pd(acc, exp4d(_mm256_sub_pd(_mm256_loadu_pd(&logits[i]), mv)));
  double total = hsum(acc);
  for (; i < n; ++i) {
    alignas(32) double buf[4] = {logits[i] - m, 0.0, 0.0, 0.0};
    alignas(32) double res[4];
    _mm256_store_pd(res, exp4d(_mm256_load_pd(buf)));
    total += res[0];
  }
  return m + std::log(total);
}

double row_entropy_avx2(std::span<const double> logits) {
  assert(!logits.empty());
  const std::size_t n = logits.size();
  const double m = max_value_avx2(logits);
  const __m256d mv = _mm256_set1_pd(m);
  __m256d acc = _mm256_setzero_pd();
  __m256d wacc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d z = _mm256_loadu_pd(&logits[i]);
    const __m256d e = exp4d(_mm256_sub_pd(z, mv));
    acc = _mm256_add_pd(acc, e);
    wacc = _mm256_fmadd_pd(e, z, wacc);
  }
  double total = hsum(acc);
  double weighted = hsum(wacc);
  for (; i < n; ++i) {
    alignas(32) double buf[4] = {logits[i] - m, 0.0, 0.0, 0.0};
    alignas(32) double res[4];
    _mm256_store_pd(res, exp4d(_mm256_load_pd(buf)));
    total += res[0];
    weighted += res[0] * logits[i];
  }
  const double h = (m + std::log(total)) - weighted / total;
  return h < 0.0 ? 0.0 : h;
}

}  // namespace

const OpsTable& avx2_table() {
  static const OpsTable table{
      sum_avx2,         sum_squares_avx2, dot_avx2,
      squared_distance_avx2, max_value_avx2, shift_scale_avx2,
      axpy_avx2,        exp_values_avx2,  softmax_avx2,
      log_sum_exp_avx2, row_entropy_avx2,
  };
  return table;
}

}  // namespace ggrpo::kernels::detail

#endif  // GGRPO_HAVE_AVX2
