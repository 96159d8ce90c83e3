// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>

#include "brwire/kernels.hpp"

namespace brwire::kernels {
namespace {

double reduce_max_scalar(const double* x, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

double reduce_min_scalar(const double* x, std::size_t n) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] < m) m = x[i];
  return m;
}

double sum_exp_affine_scalar(const double* x, std::size_t n, double t,
                             double shift) {
  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::exp(t * x[i] - shift);
    const double s = sum + v;
    // Neumaier update; v >= 0 but sum can exceed or trail it.
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - s) + v;
    else
      comp += (v - s) + sum;
    sum = s;
  }
  return sum + comp;
}

std::uint64_t count_in_closed_scalar(const double* x, std::size_t n, double lo,
                                     double hi) {
  std::uint64_t c = 0;
  for (std::size_t i = 0; i < n; ++i) c += (x[i] >= lo) & (x[i] <= hi);
  return c;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{"scalar", reduce_max_scalar, reduce_min_scalar,
                       sum_exp_affine_scalar, count_in_closed_scalar};
  return ops;
}

}  // namespace brwire::kernels
