// SPDX-License-Identifier: Apache-2.0

#include "brwire/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "brwire/kernels.hpp"

namespace brwire {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogPathThreshold = 600.0;

std::size_t t_index(const std::vector<double>& t_eval, double t) {
  for (std::size_t i = 0; i < t_eval.size(); ++i)
    if (t_eval[i] == t) return i;
  throw std::logic_error("t not in the trajectory's evaluation grid");
}

struct Neumaier {
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

}  // namespace

// ---------------------------------------------------------------------------
// CountingMeasure

CountingMeasure::CountingMeasure(std::vector<double> positions)
    : positions_(std::move(positions)) {
  if (positions_.empty())
    throw std::invalid_argument("counting measure needs at least one particle");
  std::sort(positions_.begin(), positions_.end());
}

CountingMeasure CountingMeasure::from_snapshot(GenerationSnapshot snap) {
  CountingMeasure m(std::move(snap.sorted_positions));
  return m;
}

std::uint64_t CountingMeasure::mass_leq(double x) const {
  return static_cast<std::uint64_t>(
      std::upper_bound(positions_.begin(), positions_.end(), x) -
      positions_.begin());
}

std::uint64_t CountingMeasure::mass_closed(double lo, double hi) const {
  if (lo > hi) return 0;
  const auto b = std::lower_bound(positions_.begin(), positions_.end(), lo);
  const auto e = std::upper_bound(positions_.begin(), positions_.end(), hi);
  return static_cast<std::uint64_t>(e - b);
}

double CountingMeasure::laplace(double t) const {
  const double hi = t >= 0 ? t * rightmost() : t * leftmost();
  if (hi > 700.0)
    throw OverflowError(
        "exp(t S) exceeds the floating range; use log_laplace");
  return kernels::active().sum_exp_affine(positions_.data(), positions_.size(),
                                          t, 0.0);
}

double CountingMeasure::log_laplace(double t) const {
  const double hi = t >= 0 ? t * rightmost() : t * leftmost();
  const double lo = t >= 0 ? t * leftmost() : t * rightmost();
  if (std::max(std::abs(hi), std::abs(lo)) <= kLogPathThreshold)
    return std::log(kernels::active().sum_exp_affine(
        positions_.data(), positions_.size(), t, 0.0));
  return hi + std::log(kernels::active().sum_exp_affine(
                  positions_.data(), positions_.size(), t, hi));
}

// ---------------------------------------------------------------------------
// QuenchedNormalizers

QuenchedNormalizers::QuenchedNormalizers(const EnvSequence& env,
                                         std::size_t generations)
    : model_(env.model), indices_(env.indices), n_(generations) {
  if (indices_.size() < n_)
    throw std::invalid_argument("environment shorter than the trajectory");
  sigma2_.resize(n_);
  b_.resize(n_ + 1);
  b_[0] = 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < n_; ++k) {
    sigma2_[k] = model_->states()[indices_[k]].sigma2();
    acc += sigma2_[k];
    b_[k + 1] = std::sqrt(acc);
  }
}

double QuenchedNormalizers::log_m(std::size_t k, double t) const {
  return model_->states()[indices_[k]].log_m(t);
}

double QuenchedNormalizers::log_pi(std::size_t n, double t) const {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += log_m(k, t);
  return acc;
}

// ---------------------------------------------------------------------------
// W trajectories

std::vector<double> log_w_values(const Trajectory& traj,
                                 const QuenchedNormalizers& norm, double t) {
  const std::size_t ti = t_index(traj.t_eval, t);
  std::vector<double> out(traj.gens.size());
  for (std::size_t n = 0; n < traj.gens.size(); ++n)
    out[n] = traj.gens[n].log_full[ti] - norm.log_pi(n, t);
  return out;
}

std::vector<double> log_wbar_values(const Trajectory& traj,
                                    const QuenchedNormalizers& norm,
                                    double t) {
  const std::size_t ti = t_index(traj.t_eval, t);
  std::vector<double> out(traj.gens.size());
  for (std::size_t n = 0; n < traj.gens.size(); ++n)
    out[n] = traj.gens[n].log_root[ti] - norm.log_pi(n, t);
  return out;
}

std::vector<double> w_values(const Trajectory& traj,
                             const QuenchedNormalizers& norm, double t) {
  std::vector<double> out = log_w_values(traj, norm, t);
  for (double& v : out) v = std::exp(v);
  return out;
}

std::vector<double> wbar_values(const Trajectory& traj,
                                const QuenchedNormalizers& norm, double t) {
  std::vector<double> out = log_wbar_values(traj, norm, t);
  for (double& v : out) v = std::exp(v);
  return out;
}

double y_of_t(const ImmigrationRealization& immig, std::size_t k, double t) {
  const ImmigrationWave& w = immig.waves[k];
  if (w.count == 0) return 0.0;
  return kernels::active().sum_exp_affine(w.positions.data(), w.count, t, 0.0);
}

std::vector<double> w_mean_targets(const ImmigrationRealization& immig,
                                   const QuenchedNormalizers& norm,
                                   std::size_t generations, double t) {
  std::vector<double> out(generations + 1);
  double acc = 1.0;
  out[0] = 1.0;
  for (std::size_t n = 1; n <= generations; ++n) {
    acc += std::exp(-norm.log_pi(n, t)) * y_of_t(immig, n - 1, t);
    out[n] = acc;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Decomposition

double decomposition_residual(const Trajectory& traj,
                              const QuenchedNormalizers& norm, double t,
                              std::size_t n) {
  if (n == SIZE_MAX) n = traj.gens.size() - 1;
  const std::size_t ti = t_index(traj.t_eval, t);
  const GenSummary& gs = traj.gens[n];
  if (gs.founder_terms.empty() && gs.total != gs.root_total)
    throw std::logic_error(
        "decomposition needs per_founder_transforms in the run config");

  const double log_pi_n = norm.log_pi(n, t);

  // LHS: W_n(t) from the whole-generation transform.
  const double lhs = std::exp(gs.log_full[ti] - log_pi_n);

  // RHS: Wbar_n(t) plus, per founder f joined at generation k with alive
  // descendants, Pi_k^-1 * Wbar_{n-k}(f,t) * e^{t S_f}. With
  // Wbar_{n-k}(f,t) = (recentred transform) * Pi_k / Pi_n the Pi_k factors
  // cancel: each term is exp(log_recentred + t S_f - log Pi_n).
  Neumaier rhs;
  rhs.add(std::exp(gs.log_root[ti] - log_pi_n));
  if (!gs.founder_terms.empty()) {
    for (const auto& [id, log_sub] : gs.founder_terms[ti]) {
      const FounderInfo& f = traj.founders[id - 1];
      rhs.add(std::exp(log_sub + t * f.position - log_pi_n));
    }
  }
  return std::abs(lhs - rhs.result()) / lhs;
}

std::vector<double> rightmost_values(const Trajectory& traj) {
  std::vector<double> out(traj.gens.size());
  for (std::size_t n = 0; n < traj.gens.size(); ++n)
    out[n] = traj.gens[n].rightmost;
  return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace brwire
