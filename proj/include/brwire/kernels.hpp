// SPDX-License-Identifier: Apache-2.0
//
// Array reduction kernels for the measure-query hot loops: exp-sum
// transforms, extrema and interval counts over particle position arrays.
//
// A scalar reference implementation always exists; on x86-64 an AVX2+FMA
// variant and on aarch64 a NEON variant are compiled in and selected at
// runtime (override with select() or the BRWIRE_KERNEL environment
// variable). Scalar and vector variants are equivalence-tested: counts and
// extrema match exactly, compensated exp-sums to ~1e-13 relative.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace brwire::kernels {

struct Ops {
  const char* name;
  // max / min over x[0..n); n == 0 yields -inf / +inf.
  double (*reduce_max)(const double* x, std::size_t n);
  double (*reduce_min)(const double* x, std::size_t n);
  // Neumaier-compensated sum of exp(t*x[i] - shift).
  // Arguments below -708 flush to zero (scalar exp underflows there too).
  double (*sum_exp_affine)(const double* x, std::size_t n, double t,
                           double shift);
  // #{ i : lo <= x[i] <= hi }
  std::uint64_t (*count_in_closed)(const double* x, std::size_t n, double lo,
                                   double hi);
};

const Ops& scalar_ops();

#if defined(__x86_64__) || defined(_M_X64)
const Ops& avx2_ops();  // call only if avx2_available()
bool avx2_available();
#endif
#if defined(__aarch64__)
const Ops& neon_ops();
#endif

// Currently selected kernel set. Defaults to the best variant the CPU
// supports, unless BRWIRE_KERNEL={scalar,avx2,neon,auto} says otherwise.
const Ops& active();

// Returns false (and leaves the selection unchanged) if the named variant
// is not available on this build/CPU.
bool select(std::string_view name);

}  // namespace brwire::kernels
