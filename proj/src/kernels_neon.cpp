// SPDX-License-Identifier: Apache-2.0
//
// NEON kernel variants (aarch64 baseline). Same range reduction and
// rational approximation as the AVX2 path, two lanes wide.

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>
#include <cstdint>
#include <limits>

#include "brwire/kernels.hpp"

namespace brwire::kernels {
namespace {

float64x2_t exp_f64(float64x2_t x) {
  const float64x2_t log2e = vdupq_n_f64(1.4426950408889634073599);
  const float64x2_t c1 = vdupq_n_f64(6.93145751953125e-1);
  const float64x2_t c2 = vdupq_n_f64(1.42860682030941723212e-6);
  const float64x2_t lo = vdupq_n_f64(-708.0);
  const float64x2_t hi = vdupq_n_f64(709.0);

  const float64x2_t xin = x;
  x = vminq_f64(vmaxq_f64(x, lo), hi);

  const float64x2_t n = vrndnq_f64(vmulq_f64(x, log2e));
  float64x2_t r = vfmsq_f64(x, n, c1);  // x - n*c1
  r = vfmsq_f64(r, n, c2);

  const float64x2_t rr = vmulq_f64(r, r);
  float64x2_t p = vfmaq_f64(vdupq_n_f64(3.02994407707441961300e-2),
                            vdupq_n_f64(1.26177193074810590878e-4), rr);
  p = vfmaq_f64(vdupq_n_f64(9.99999999999999999910e-1), p, rr);
  p = vmulq_f64(p, r);
  float64x2_t q = vfmaq_f64(vdupq_n_f64(2.52448340349684104192e-3),
                            vdupq_n_f64(3.00198505138664455042e-6), rr);
  q = vfmaq_f64(vdupq_n_f64(2.27265548208155028766e-1), q, rr);
  q = vfmaq_f64(vdupq_n_f64(2.00000000000000000005e0), q, rr);

  const float64x2_t e = vdivq_f64(p, vsubq_f64(q, p));
  float64x2_t res = vfmaq_f64(vdupq_n_f64(1.0), vdupq_n_f64(2.0), e);

  const int64x2_t n64 = vcvtq_s64_f64(n);  // n is integral already
  const int64x2_t bits =
      vaddq_s64(vreinterpretq_s64_f64(res), vshlq_n_s64(n64, 52));
  res = vreinterpretq_f64_s64(bits);

  const uint64x2_t under = vcltq_f64(xin, lo);
  const uint64x2_t over = vcgtq_f64(xin, hi);
  res = vbslq_f64(under, vdupq_n_f64(0.0), res);
  res = vbslq_f64(over, vdupq_n_f64(std::numeric_limits<double>::infinity()),
                  res);
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

double sum_exp_affine_neon(const double* x, std::size_t n, double t,
                           double shift) {
  const float64x2_t vt = vdupq_n_f64(t);
  const float64x2_t vshift = vdupq_n_f64(shift);
  float64x2_t vsum = vdupq_n_f64(0.0);
  float64x2_t vcomp = vdupq_n_f64(0.0);

  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t xs = vld1q_f64(x + i);
    const float64x2_t v = exp_f64(vsubq_f64(vmulq_f64(vt, xs), vshift));
    const float64x2_t s = vaddq_f64(vsum, v);
    const uint64x2_t sum_ge = vcgeq_f64(vabsq_f64(vsum), vabsq_f64(v));
    const float64x2_t big = vbslq_f64(sum_ge, vsum, v);
    const float64x2_t small = vbslq_f64(sum_ge, v, vsum);
    vcomp = vaddq_f64(vcomp, vaddq_f64(vsubq_f64(big, s), small));
    vsum = s;
  }

  NeumaierAcc acc;
  acc.add(vgetq_lane_f64(vsum, 0));
  acc.add(vgetq_lane_f64(vsum, 1));
  acc.add(vgetq_lane_f64(vcomp, 0));
  acc.add(vgetq_lane_f64(vcomp, 1));
  for (; i < n; ++i) acc.add(std::exp(t * x[i] - shift));
  return acc.result();
}

double reduce_max_neon(const double* x, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  if (n >= 2) {
    float64x2_t vm = vld1q_f64(x);
    for (i = 2; i + 2 <= n; i += 2) vm = vmaxq_f64(vm, vld1q_f64(x + i));
    m = vmaxvq_f64(vm);
  }
  for (; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

double reduce_min_neon(const double* x, std::size_t n) {
  double m = std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  if (n >= 2) {
    float64x2_t vm = vld1q_f64(x);
    for (i = 2; i + 2 <= n; i += 2) vm = vminq_f64(vm, vld1q_f64(x + i));
    m = vminvq_f64(vm);
  }
  for (; i < n; ++i) m = x[i] < m ? x[i] : m;
  return m;
}

std::uint64_t count_in_closed_neon(const double* x, std::size_t n, double lo,
                                   double hi) {
  const float64x2_t vlo = vdupq_n_f64(lo);
  const float64x2_t vhi = vdupq_n_f64(hi);
  uint64x2_t vc = vdupq_n_u64(0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t xs = vld1q_f64(x + i);
    const uint64x2_t in = vandq_u64(vcgeq_f64(xs, vlo), vcleq_f64(xs, vhi));
    vc = vsubq_u64(vc, in);  // mask lanes are all-ones == -1
  }
  std::uint64_t c = vgetq_lane_u64(vc, 0) + vgetq_lane_u64(vc, 1);
  for (; i < n; ++i) c += (x[i] >= lo) & (x[i] <= hi);
  return c;
}

}  // namespace

const Ops& neon_ops() {
  static const Ops ops{"neon", reduce_max_neon, reduce_min_neon,
                       sum_exp_affine_neon, count_in_closed_neon};
  return ops;
}

}  // namespace brwire::kernels

#endif  // aarch64
