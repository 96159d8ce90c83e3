// SPDX-License-Identifier: Apache-2.0
//
// AVX2+FMA kernel variants. Compiled with -mavx2 -mfma; callers must check
// avx2_available() before selecting these.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstdint>
#include <limits>

#include "brwire/kernels.hpp"

namespace brwire::kernels {
namespace {

// exp(x) for 4 doubles, Cephes-style rational approximation:
//   exp(x) = 2^n * (1 + 2*p/(q - p)),  r = x - n*ln2,  p,q polynomials in r.
// Accurate to ~1 ulp on the normal range; x < -708 flushes to 0,
// x > 709 saturates to +inf.
__m256d exp_pd(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
  const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);
  const __m256d p0 = _mm256_set1_pd(1.26177193074810590878e-4);
  const __m256d p1 = _mm256_set1_pd(3.02994407707441961300e-2);
  const __m256d p2 = _mm256_set1_pd(9.99999999999999999910e-1);
  const __m256d q0 = _mm256_set1_pd(3.00198505138664455042e-6);
  const __m256d q1 = _mm256_set1_pd(2.52448340349684104192e-3);
  const __m256d q2 = _mm256_set1_pd(2.27265548208155028766e-1);
  const __m256d q3 = _mm256_set1_pd(2.00000000000000000005e0);
  const __m256d lo = _mm256_set1_pd(-708.0);
  const __m256d hi = _mm256_set1_pd(709.0);

  const __m256d xin = x;
  x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

  __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  // r = x - n*ln2, split into hi/lo parts for precision
  __m256d r = _mm256_fnmadd_pd(n, c1, x);
  r = _mm256_fnmadd_pd(n, c2, r);

  const __m256d rr = _mm256_mul_pd(r, r);
  __m256d p = _mm256_fmadd_pd(p0, rr, p1);
  p = _mm256_fmadd_pd(p, rr, p2);
  p = _mm256_mul_pd(p, r);
  __m256d q = _mm256_fmadd_pd(q0, rr, q1);
  q = _mm256_fmadd_pd(q, rr, q2);
  q = _mm256_fmadd_pd(q, rr, q3);

  const __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  __m256d res = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

  // ldexp(res, n): add n to the exponent field; res in [2^-1, 2^1] and
  // n in [-1022, 1023] keep the result in the normal range.
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  const __m256i n64 = _mm256_cvtepi32_epi64(n32);
  const __m256i bits = _mm256_add_epi64(_mm256_castpd_si256(res),
                                        _mm256_slli_epi64(n64, 52));
  res = _mm256_castsi256_pd(bits);

  const __m256d zero_mask = _mm256_cmp_pd(xin, lo, _CMP_LT_OQ);
  const __m256d inf_mask = _mm256_cmp_pd(xin, hi, _CMP_GT_OQ);
  res = _mm256_blendv_pd(res, _mm256_setzero_pd(), zero_mask);
  res = _mm256_blendv_pd(
      res, _mm256_set1_pd(std::numeric_limits<double>::infinity()), inf_mask);
  return res;
}

struct NeumaierAcc {
  double sum = 0.0, comp = 0.0;
  void add(double v) {
    const double s = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - s) + v;
    else
      comp += (v - s) + sum;
    sum = s;
  }
  double result() const { return sum + comp; }
};

double sum_exp_affine_avx2(const double* x, std::size_t n, double t,
                           double shift) {
  const __m256d vt = _mm256_set1_pd(t);
  const __m256d vshift = _mm256_set1_pd(shift);
  __m256d vsum = _mm256_setzero_pd();
  __m256d vcomp = _mm256_setzero_pd();
  const __m256d absmask = _mm256_castsi256_pd(_mm256_set1_epi64x(
      static_cast<long long>(0x7FFFFFFFFFFFFFFFull)));

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xs = _mm256_loadu_pd(x + i);
    const __m256d v = exp_pd(_mm256_fmsub_pd(vt, xs, vshift));
    const __m256d s = _mm256_add_pd(vsum, v);
    const __m256d sum_ge =
        _mm256_cmp_pd(_mm256_and_pd(vsum, absmask), _mm256_and_pd(v, absmask),
                      _CMP_GE_OQ);
    const __m256d big = _mm256_blendv_pd(v, vsum, sum_ge);
    const __m256d small = _mm256_blendv_pd(vsum, v, sum_ge);
    vcomp = _mm256_add_pd(
        vcomp, _mm256_add_pd(_mm256_sub_pd(big, s), small));
    vsum = s;
  }

  alignas(32) double lane_sum[4], lane_comp[4];
  _mm256_store_pd(lane_sum, vsum);
  _mm256_store_pd(lane_comp, vcomp);
  NeumaierAcc acc;
  for (double v : lane_sum) acc.add(v);
  for (double v : lane_comp) acc.add(v);
  for (; i < n; ++i) acc.add(std::exp(t * x[i] - shift));
  return acc.result();
}

double reduce_max_avx2(const double* x, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  if (n >= 4) {
    __m256d vm = _mm256_loadu_pd(x);
    for (i = 4; i + 4 <= n; i += 4)
      vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, vm);
    for (double v : lanes) m = v > m ? v : m;
  }
  for (; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

double reduce_min_avx2(const double* x, std::size_t n) {
  double m = std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  if (n >= 4) {
    __m256d vm = _mm256_loadu_pd(x);
    for (i = 4; i + 4 <= n; i += 4)
      vm = _mm256_min_pd(vm, _mm256_loadu_pd(x + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, vm);
    for (double v : lanes) m = v < m ? v : m;
  }
  for (; i < n; ++i) m = x[i] < m ? x[i] : m;
  return m;
}

std::uint64_t count_in_closed_avx2(const double* x, std::size_t n, double lo,
                                   double hi) {
  const __m256d vlo = _mm256_set1_pd(lo);
  const __m256d vhi = _mm256_set1_pd(hi);
  std::uint64_t c = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xs = _mm256_loadu_pd(x + i);
    const __m256d in = _mm256_and_pd(_mm256_cmp_pd(xs, vlo, _CMP_GE_OQ),
                                     _mm256_cmp_pd(xs, vhi, _CMP_LE_OQ));
    c += static_cast<unsigned>(__builtin_popcount(_mm256_movemask_pd(in)));
  }
  for (; i < n; ++i) c += (x[i] >= lo) & (x[i] <= hi);
  return c;
}

}  // namespace

bool avx2_available() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

const Ops& avx2_ops() {
  static const Ops ops{"avx2", reduce_max_avx2, reduce_min_avx2,
                       sum_exp_affine_avx2, count_in_closed_avx2};
  return ops;
}

}  // namespace brwire::kernels

#endif  // x86-64
