// SPDX-License-Identifier: Apache-2.0
//
// Deterministic RNG streams for the simulation core.
//
// A single master seed is split into named sub-streams (environment,
// immigration, branching, ...) so that fixing one source of randomness
// across replicas is exact, not approximate. The splitting function is:
//
//   stream_seed(master, name, index) =
//       mix64( mix64( mix64(master + GOLDEN) ^ fnv1a64(name) ) ^ index )
//
// where mix64 is the splitmix64 finalizer and GOLDEN = 0x9E3779B97F4A7C15.
// Draws come from xoshiro256++, state-seeded by splitmix64 expansion.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>

namespace brwire {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

constexpr std::uint64_t stream_seed(std::uint64_t master, std::string_view name,
                                    std::uint64_t index = 0) {
  std::uint64_t z = mix64(master + kGolden);
  z = mix64(z ^ fnv1a64(name));
  return mix64(z ^ index);
}

// xoshiro256++ (Blackman & Vigna), seeded by splitmix64 expansion.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : state_) {
      x += kGolden;
      w = mix64(x);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0,1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1]; safe as a log() argument.
  double uniform01_pos() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> state_{};
};

// Box-Muller; both values of each pair are used, so a full fill costs one
// uniform pair per two samples.
inline void fill_gaussian(Rng& rng, std::span<double> out, double mean,
                          double sd) {
  const double two_pi = 2.0 * std::numbers::pi;
  std::size_t i = 0;
  while (i + 1 < out.size()) {
    const double u1 = rng.uniform01_pos();
    const double u2 = rng.uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    out[i++] = mean + sd * r * std::cos(two_pi * u2);
    out[i++] = mean + sd * r * std::sin(two_pi * u2);
  }
  if (i < out.size()) {
    const double u1 = rng.uniform01_pos();
    const double u2 = rng.uniform01();
    out[i] = mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }
}

inline void fill_two_point(Rng& rng, std::span<double> out, double offset) {
  for (double& v : out) v = (rng.next() & 1u) ? offset : -offset;
}

// Knuth's product method; exact for any lambda, O(lambda) uniforms per draw.
inline std::uint32_t sample_poisson(Rng& rng, double lambda) {
  if (lambda <= 0.0) return 0;
  const double limit = std::exp(-lambda);
  std::uint32_t k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= rng.uniform01();
  } while (p > limit);
  return k - 1;
}

// Inverse-CDF draw from cumulative weights; cum.back() is the total mass.
inline std::size_t sample_cumulative(Rng& rng, std::span<const double> cum) {
  const double u = rng.uniform01() * cum.back();
  std::size_t lo = 0, hi = cum.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (cum[mid] <= u)
      lo = mid + 1;
    else
      hi = mid;
  }
  return lo;
}

}  // namespace brwire
