// SPDX-License-Identifier: Apache-2.0
//
// Per-realization functionals over trajectories: Laplace transforms of the
// counting measure, quenched normalizers (conditional means m_k, their
// products Pi_k, variance accumulators b_n), normalized transforms
// W_n(t) = Ztilde_n(t) / Pi_n(t) and the root-restricted Wbar_n(t), the
// immigrant-wave transforms Y_k(t), and the exact founder decomposition
//
//   W_n(t) = Wbar_n(t)
//          + sum_{k=1..n} Pi_k(t)^-1 sum_{i<=V_{k-1}} Wbar_{n-k}(f,t) e^{t S_f}
//
// where f runs over the immigrants of wave k-1 (the ones joining
// generation k) and Wbar_{n-k}(f,t) is the f-rooted subtree transform,
// recentred at S_f and normalized by Pi_n(t)/Pi_k(t).

#pragma once

#include <cstdint>
#include <vector>

#include "brwire/simulator.hpp"

namespace brwire {

struct OverflowError : std::runtime_error {
  explicit OverflowError(const std::string& what) : std::runtime_error(what) {}
};

// Queryable empirical measure: sorted particle positions with multiplicity.
class CountingMeasure {
 public:
  explicit CountingMeasure(std::vector<double> positions);
  static CountingMeasure from_generation(const Generation& gen) {
    return CountingMeasure(gen.positions);
  }
  static CountingMeasure from_snapshot(GenerationSnapshot snap);

  std::uint64_t total() const { return positions_.size(); }
  double rightmost() const { return positions_.back(); }
  double leftmost() const { return positions_.front(); }

  std::uint64_t mass_leq(double x) const;             // #{ S <= x }
  std::uint64_t mass_closed(double lo, double hi) const;
  double cdf_ratio(double x) const {                  // Z(-inf, x] / Z(R)
    return static_cast<double>(mass_leq(x)) / static_cast<double>(total());
  }

  // Plain sum of exp(t S); throws OverflowError once any exponent leaves
  // the safe floating range. Compensated summation throughout.
  double laplace(double t) const;
  // log of the same sum; switches to a max-shifted evaluation
  // automatically when any exponent exceeds +-600.
  double log_laplace(double t) const;

  const std::vector<double>& positions() const { return positions_; }

 private:
  std::vector<double> positions_;
};

// Quenched normalizers for one environment realization.
class QuenchedNormalizers {
 public:
  QuenchedNormalizers(const EnvSequence& env, std::size_t generations);

  std::size_t generations() const { return n_; }
  double log_m(std::size_t k, double t) const;   // log m_k(t)
  double log_pi(std::size_t n, double t) const;  // log Pi_n(t), Pi_0 = 1
  double sigma2(std::size_t k) const { return sigma2_[k]; }
  double b(std::size_t n) const { return b_[n]; }  // b_n = sqrt(sum_{k<n} sigma_k^2)

 private:
  const EnvModel* model_;
  std::vector<std::uint32_t> indices_;
  std::size_t n_;
  std::vector<double> sigma2_;  // per generation k < n
  std::vector<double> b_;       // size n+1, b_[0] = 0
};

// W_n(t) and Wbar_n(t) for n = 0..N, from the trajectory's streamed
// transforms; t must be one of trajectory.t_eval.
std::vector<double> w_values(const Trajectory& traj,
                             const QuenchedNormalizers& norm, double t);
std::vector<double> wbar_values(const Trajectory& traj,
                                const QuenchedNormalizers& norm, double t);

// log W_n(t) / log Wbar_n(t), same conventions.
std::vector<double> log_w_values(const Trajectory& traj,
                                 const QuenchedNormalizers& norm, double t);
std::vector<double> log_wbar_values(const Trajectory& traj,
                                    const QuenchedNormalizers& norm, double t);

// Y_k(t) = sum_{i<=V_k} exp(t S_{0_k i}); wave k joins generation k+1.
double y_of_t(const ImmigrationRealization& immig, std::size_t k, double t);

// E_{xi,Y} W_n(t) = 1 + sum_{k=1..n} Pi_k(t)^-1 Y_{k-1}(t), evaluated for
// n = 0..generations. Nondecreasing in n by construction.
std::vector<double> w_mean_targets(const ImmigrationRealization& immig,
                                   const QuenchedNormalizers& norm,
                                   std::size_t generations, double t);

// Relative residual |LHS - RHS| / LHS of the founder decomposition at
// generation n (default: final). The left side is the whole-generation
// transform; the right side reassembles it from the root restriction and
// the streamed founder-recentred subtree transforms, so the two routes
// share no reduction. Requires per_founder_transforms.
double decomposition_residual(const Trajectory& traj,
                              const QuenchedNormalizers& norm, double t,
                              std::size_t n = SIZE_MAX);

// R_n per generation.
std::vector<double> rightmost_values(const Trajectory& traj);

// Standard normal CDF.
double normal_cdf(double x);

}  // namespace brwire
