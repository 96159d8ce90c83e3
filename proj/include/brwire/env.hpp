// SPDX-License-Identifier: Apache-2.0
//
// Parametric environment states for the branching walk and stationary
// ergodic sequence generators over them (constant / i.i.d. / finite-state
// Markov). Displacements are i.i.d. and independent of the offspring count
// given the state, so every moment functional used downstream has a closed
// form:
//
//   m(t)      = E[N] * mgf_L(t)           (conditional mean of sum exp(t L_i))
//   m'(t)/m(t)= (log mgf_L)'(t)
//   sigma^2   = E[L^2]
//
// Gaussian(mu, s):  log mgf = mu t + s^2 t^2 / 2,  E L^2 = s^2 + mu^2
// TwoPoint(d):      log mgf = log cosh(d t),       E L^2 = d^2

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "brwire/rng.hpp"

namespace brwire {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Laws

struct GaussianLaw {
  double mean = 0.0;
  double sd = 1.0;
};

struct TwoPointLaw {
  double offset = 1.0;  // +-offset with probability 1/2 each
};

class DisplacementLaw {
 public:
  DisplacementLaw() : law_(GaussianLaw{}) {}
  explicit DisplacementLaw(GaussianLaw g) : law_(g) {}
  explicit DisplacementLaw(TwoPointLaw tp) : law_(tp) {}

  static DisplacementLaw gaussian(double mean, double sd) {
    if (!(sd > 0)) throw ConfigError("gaussian displacement needs sd > 0");
    return DisplacementLaw(GaussianLaw{mean, sd});
  }
  static DisplacementLaw two_point(double offset) {
    if (!(offset > 0)) throw ConfigError("two_point displacement needs offset > 0");
    return DisplacementLaw(TwoPointLaw{offset});
  }

  double mean() const;
  double second_moment() const;
  double log_mgf(double t) const;
  double log_mgf_prime(double t) const;  // d/dt log mgf = mgf'/mgf
  void sample_fill(Rng& rng, std::span<double> out) const;

  bool is_gaussian() const { return std::holds_alternative<GaussianLaw>(law_); }
  const GaussianLaw* gaussian_params() const {
    return std::get_if<GaussianLaw>(&law_);
  }
  const TwoPointLaw* two_point_params() const {
    return std::get_if<TwoPointLaw>(&law_);
  }

 private:
  std::variant<GaussianLaw, TwoPointLaw> law_;
};

struct FixedOffspring {
  std::uint32_t count = 2;
};

struct CategoricalOffspring {
  std::vector<std::uint32_t> support;
  std::vector<double> probs;  // same length, a probability simplex
};

class OffspringLaw {
 public:
  OffspringLaw() : law_(FixedOffspring{}) {}
  static OffspringLaw fixed(std::uint32_t count) {
    return OffspringLaw(FixedOffspring{count});
  }
  // Throws on structural junk (empty support, non-simplex probs); the
  // distributional requirements (no mass at 0, mass at 1 below one) are
  // reported by validate() instead.
  static OffspringLaw categorical(std::vector<std::uint32_t> support,
                                  std::vector<double> probs);

  double mean() const;
  double mass_at(std::uint32_t k) const;
  std::uint32_t sample(Rng& rng) const;

  const FixedOffspring* fixed_params() const {
    return std::get_if<FixedOffspring>(&law_);
  }
  const CategoricalOffspring* categorical_params() const {
    return std::get_if<CategoricalOffspring>(&law_);
  }

 private:
  explicit OffspringLaw(FixedOffspring f) : law_(f) {}
  explicit OffspringLaw(CategoricalOffspring c) : law_(std::move(c)) {}
  std::variant<FixedOffspring, CategoricalOffspring> law_;
  std::vector<double> cum_;  // cumulative probs for categorical sampling
};

struct ZeroCount {};
struct FixedCount {
  std::uint32_t value = 0;
};
struct PoissonCount {
  double lambda = 0.0;
};

class ImmigrationLaw {
 public:
  ImmigrationLaw() : count_(ZeroCount{}) {}
  static ImmigrationLaw zero() { return ImmigrationLaw(); }
  static ImmigrationLaw fixed(std::uint32_t v, DisplacementLaw position) {
    ImmigrationLaw law;
    law.count_ = FixedCount{v};
    law.position_ = position;
    return law;
  }
  static ImmigrationLaw poisson(double lambda, DisplacementLaw position) {
    if (lambda < 0) throw ConfigError("poisson immigration needs lambda >= 0");
    ImmigrationLaw law;
    law.count_ = PoissonCount{lambda};
    law.position_ = position;
    return law;
  }

  bool is_zero() const {
    if (std::holds_alternative<ZeroCount>(count_)) return true;
    if (auto* f = std::get_if<FixedCount>(&count_)) return f->value == 0;
    if (auto* p = std::get_if<PoissonCount>(&count_)) return p->lambda == 0.0;
    return false;
  }
  double mean_count() const;
  std::uint32_t sample_count(Rng& rng) const;
  const DisplacementLaw& position() const { return position_; }

  const FixedCount* fixed_params() const {
    return std::get_if<FixedCount>(&count_);
  }
  const PoissonCount* poisson_params() const {
    return std::get_if<PoissonCount>(&count_);
  }

 private:
  std::variant<ZeroCount, FixedCount, PoissonCount> count_;
  DisplacementLaw position_;
};

// ---------------------------------------------------------------------------
// Environment state and model

struct EnvState {
  OffspringLaw offspring;
  DisplacementLaw displacement;
  ImmigrationLaw immigration;
  bool centered = true;

  double mean_offspring() const { return offspring.mean(); }
  double log_m(double t) const {
    return std::log(offspring.mean()) + displacement.log_mgf(t);
  }
  double m(double t) const { return offspring.mean() * std::exp(displacement.log_mgf(t)); }
  // m'(t) = E[N] * mgf'(t)
  double m_prime(double t) const {
    return m(t) * displacement.log_mgf_prime(t);
  }
  double log_m_prime_over_m(double t) const {
    return displacement.log_mgf_prime(t);
  }
  double sigma2() const { return displacement.second_moment(); }
};

class EnvModel {
 public:
  enum class Kind { constant, iid, markov };

  static EnvModel constant(EnvState state);
  static EnvModel iid(std::vector<EnvState> states, std::vector<double> probs);
  // Throws ConfigError on non-stochastic rows, reducible or periodic chains.
  static EnvModel markov(std::vector<EnvState> states,
                         std::vector<std::vector<double>> transition);

  Kind kind() const { return kind_; }
  const std::vector<EnvState>& states() const { return states_; }
  // Stationary distribution: the point mass, the i.i.d. weights, or the
  // solution of pi P = pi.
  const std::vector<double>& stationary() const { return stationary_; }
  const std::vector<std::vector<double>>& transition() const {
    return transition_;
  }

  // Stationary sequence of state indices; Markov chains start from pi.
  std::vector<std::uint32_t> sample_indices(std::size_t n, Rng& rng) const;

  // True when no state has immigration.
  bool immigration_free() const;
  // Model with immigration forced off in every state.
  EnvModel without_immigration() const;

 private:
  Kind kind_ = Kind::constant;
  std::vector<EnvState> states_;
  std::vector<double> stationary_;
  std::vector<std::vector<double>> transition_;
  std::vector<double> cum_;  // cumulative stationary weights
  std::vector<std::vector<double>> row_cum_;
};

// Environment realization: shared model + per-generation state indices.
struct EnvSequence {
  const EnvModel* model = nullptr;
  std::vector<std::uint32_t> indices;

  std::size_t size() const { return indices.size(); }
  const EnvState& operator[](std::size_t k) const {
    return model->states()[indices[k]];
  }
};

// Deterministic in (model, n, seed); the draw uses the dedicated
// "environment" sub-stream of the seed.
EnvSequence sample_environment(const EnvModel& model, std::size_t n,
                               std::uint64_t seed);

// ---------------------------------------------------------------------------
// Validation

enum class CheckStatus { pass, warn, fail };

struct ValidationCheck {
  std::string name;
  CheckStatus status = CheckStatus::pass;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool ok() const {
    for (const auto& c : checks)
      if (c.status == CheckStatus::fail) return false;
    return true;
  }
  bool clean() const {
    for (const auto& c : checks)
      if (c.status != CheckStatus::pass) return false;
    return true;
  }
  std::string summary() const;
};

// Checks, per state: P(N=0)=0, P(N=1)<1, displacement centering (warns
// instead when centered == false), and finiteness of log m on the grid;
// plus supercriticality of the stationary mean: sum_i pi_i log E[N_i] > 0.
ValidationReport validate(const EnvModel& model,
                          std::span<const double> t_grid);

}  // namespace brwire
