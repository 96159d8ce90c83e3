// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "brwire/kernels.hpp"

using namespace brwire;

namespace {

std::vector<double> random_positions(std::size_t n, unsigned seed,
                                     double spread = 10.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-spread, spread);
  std::vector<double> v(n);
  for (auto& x : v) x = u(gen);
  return v;
}

// Long-double reference for the compensated sums.
long double sum_exp_reference(const std::vector<double>& x, double t,
                              double shift) {
  long double s = 0.0L;
  for (double xi : x) s += std::exp(static_cast<long double>(t) * xi - shift);
  return s;
}

}  // namespace

TEST_CASE("scalar kernels: basics and empty input") {
  const auto& ops = kernels::scalar_ops();
  CHECK(ops.reduce_max(nullptr, 0) == -std::numeric_limits<double>::infinity());
  CHECK(ops.reduce_min(nullptr, 0) == std::numeric_limits<double>::infinity());
  CHECK(ops.sum_exp_affine(nullptr, 0, 1.0, 0.0) == 0.0);
  CHECK(ops.count_in_closed(nullptr, 0, 0.0, 1.0) == 0);

  const std::vector<double> x = {-1.0, 3.0, 2.0, 3.0};
  CHECK(ops.reduce_max(x.data(), x.size()) == 3.0);
  CHECK(ops.reduce_min(x.data(), x.size()) == -1.0);
  CHECK(ops.count_in_closed(x.data(), x.size(), 2.0, 3.0) == 3);
  CHECK(ops.count_in_closed(x.data(), x.size(), 3.0, 3.0) == 2);
  CHECK(ops.sum_exp_affine(x.data(), x.size(), 0.0, 0.0) == 4.0);
}

TEST_CASE("kernel variants agree with the scalar reference") {
  const auto& scalar = kernels::scalar_ops();
  const auto& active = kernels::active();
  INFO("active kernel: ", active.name);

  for (std::size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 31, 1000, 4097}) {
    const auto x = random_positions(n, 42 + static_cast<unsigned>(n));
    for (double t : {-3.0, -0.5, 0.0, 1.0, 2.5}) {
      const double shift = t >= 0 ? t * scalar.reduce_max(x.data(), n)
                                  : t * scalar.reduce_min(x.data(), n);
      const double a = scalar.sum_exp_affine(x.data(), n, t, n ? shift : 0.0);
      const double b = active.sum_exp_affine(x.data(), n, t, n ? shift : 0.0);
      if (n == 0) {
        CHECK(a == b);
      } else {
        CHECK(std::abs(a - b) <= 1e-13 * std::abs(a));
      }
      CHECK(scalar.reduce_max(x.data(), n) == active.reduce_max(x.data(), n));
      CHECK(scalar.reduce_min(x.data(), n) == active.reduce_min(x.data(), n));
      CHECK(scalar.count_in_closed(x.data(), n, -5.0, 5.0) ==
            active.count_in_closed(x.data(), n, -5.0, 5.0));
      CHECK(scalar.count_in_closed(x.data(), n, 0.25, 0.25) ==
            active.count_in_closed(x.data(), n, 0.25, 0.25));
    }
  }
}

TEST_CASE("vector exp matches std::exp to a few ulp across the range") {
  const auto& active = kernels::active();
  // sum over a single element isolates the exp itself
  for (double arg = -700.0; arg <= 700.0; arg += 0.37) {
    const double x = arg / 2.0;
    const double got = active.sum_exp_affine(&x, 1, 2.0, 0.0);
    const double want = std::exp(arg);
    CHECK(std::abs(got - want) <= 5e-15 * want);
  }
  // padded to exercise the vector lanes, not just the tail path
  for (double base : {-650.0, -100.0, 0.0, 100.0, 650.0}) {
    std::vector<double> xs(8);
    for (std::size_t i = 0; i < xs.size(); ++i)
      xs[i] = base + 0.1 * static_cast<double>(i);
    const double got = active.sum_exp_affine(xs.data(), xs.size(), 1.0, 0.0);
    long double want = sum_exp_reference(xs, 1.0, 0.0);
    CHECK(std::abs(got - static_cast<double>(want)) <=
          1e-13 * static_cast<double>(want));
  }
}

TEST_CASE("deep underflow flushes to zero without poisoning the sum") {
  const auto& active = kernels::active();
  std::vector<double> xs = {0.0, -800.0, -750.0, -710.0, 0.0};
  const double got = active.sum_exp_affine(xs.data(), xs.size(), 1.0, 0.0);
  CHECK(got == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("compensated summation keeps tiny terms next to huge counts") {
  const auto& scalar = kernels::scalar_ops();
  const auto& active = kernels::active();
  // 10^7 copies of 1.0 plus one late 1e-9: a naive float sum drops bits.
  std::vector<double> xs(1'000'001, 0.0);
  xs.back() = std::log(1e-9);
  const long double want = 1'000'000.0L + 1e-9L;
  for (const auto* ops : {&scalar, &active}) {
    const double got = ops->sum_exp_affine(xs.data(), xs.size(), 1.0, 0.0);
    CHECK(std::abs(got - static_cast<double>(want)) <=
          1e-15 * static_cast<double>(want));
  }
}

TEST_CASE("kernel selection honors names and rejects unknown ones") {
  CHECK(kernels::select("auto"));
  const std::string active_name = kernels::active().name;
  CHECK(kernels::select("scalar"));
  CHECK(std::string(kernels::active().name) == "scalar");
  CHECK_FALSE(kernels::select("notakernel"));
  CHECK(std::string(kernels::active().name) == "scalar");
  CHECK(kernels::select("auto"));
  CHECK(std::string(kernels::active().name) == active_name);
}
