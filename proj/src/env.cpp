// SPDX-License-Identifier: Apache-2.0

#include "brwire/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>

namespace brwire {
namespace {

constexpr double kSimplexTol = 1e-12;

bool is_simplex(std::span<const double> p) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= 1e-9;
}

std::vector<double> cumulative(std::span<const double> p) {
  std::vector<double> cum(p.size());
  double run = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    run += p[i];
    cum[i] = run;
  }
  return cum;
}

// Stationary vector of an irreducible stochastic matrix via direct solve of
// (P^T - I) pi = 0 with the normalization row sum(pi) = 1.
std::vector<double> solve_stationary(
    const std::vector<std::vector<double>>& P) {
  const std::size_t k = P.size();
  std::vector<std::vector<double>> a(k, std::vector<double>(k + 1, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) a[i][j] = P[j][i] - (i == j ? 1.0 : 0.0);
  }
  // Replace the last equation by the normalization.
  for (std::size_t j = 0; j < k; ++j) a[k - 1][j] = 1.0;
  a[k - 1][k] = 1.0;

  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[piv], a[col]);
    if (std::abs(a[col][col]) < 1e-14)
      throw ConfigError("markov transition matrix is singular");
    for (std::size_t r = 0; r < k; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= k; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> pi(k);
  for (std::size_t i = 0; i < k; ++i) pi[i] = a[i][k] / a[i][i];
  return pi;
}

bool strongly_connected(const std::vector<std::vector<double>>& P) {
  const std::size_t k = P.size();
  auto reachable = [&](bool transpose) {
    std::vector<char> seen(k, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < k; ++v) {
        const double w = transpose ? P[v][u] : P[u][v];
        if (w > 0.0 && !seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c; });
  };
  return reachable(false) && reachable(true);
}

// Period of an irreducible chain: gcd over edges (u,v) of d(u) + 1 - d(v)
// for BFS distances d from state 0.
std::size_t chain_period(const std::vector<std::vector<double>>& P) {
  const std::size_t k = P.size();
  std::vector<long> dist(k, -1);
  std::vector<std::size_t> queue{0};
  dist[0] = 0;
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const std::size_t u = queue[qi];
    for (std::size_t v = 0; v < k; ++v) {
      if (P[u][v] > 0.0 && dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  std::size_t g = 0;
  for (std::size_t u = 0; u < k; ++u)
    for (std::size_t v = 0; v < k; ++v)
      if (P[u][v] > 0.0)
        g = std::gcd(g, static_cast<std::size_t>(
                            std::labs(dist[u] + 1 - dist[v])));
  return g == 0 ? 1 : g;
}

}  // namespace

// ---------------------------------------------------------------------------
// DisplacementLaw

double DisplacementLaw::mean() const {
  if (auto* g = std::get_if<GaussianLaw>(&law_)) return g->mean;
  return 0.0;
}

double DisplacementLaw::second_moment() const {
  if (auto* g = std::get_if<GaussianLaw>(&law_))
    return g->sd * g->sd + g->mean * g->mean;
  return std::get<TwoPointLaw>(law_).offset * std::get<TwoPointLaw>(law_).offset;
}

double DisplacementLaw::log_mgf(double t) const {
  if (auto* g = std::get_if<GaussianLaw>(&law_))
    return t * g->mean + 0.5 * t * t * g->sd * g->sd;
  // log cosh(dt), overflow-free
  const double a = std::abs(t * std::get<TwoPointLaw>(law_).offset);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

double DisplacementLaw::log_mgf_prime(double t) const {
  if (auto* g = std::get_if<GaussianLaw>(&law_))
    return g->mean + t * g->sd * g->sd;
  const double d = std::get<TwoPointLaw>(law_).offset;
  return d * std::tanh(d * t);
}

void DisplacementLaw::sample_fill(Rng& rng, std::span<double> out) const {
  if (auto* g = std::get_if<GaussianLaw>(&law_))
    fill_gaussian(rng, out, g->mean, g->sd);
  else
    fill_two_point(rng, out, std::get<TwoPointLaw>(law_).offset);
}

// ---------------------------------------------------------------------------
// OffspringLaw

OffspringLaw OffspringLaw::categorical(std::vector<std::uint32_t> support,
                                       std::vector<double> probs) {
  if (support.empty()) throw ConfigError("offspring support must be non-empty");
  if (support.size() != probs.size())
    throw ConfigError("offspring support/probs length mismatch");
  if (!is_simplex(probs))
    throw ConfigError("offspring probs must form a probability simplex");
  OffspringLaw law{CategoricalOffspring{std::move(support), std::move(probs)}};
  law.cum_ = cumulative(law.categorical_params()->probs);
  return law;
}

double OffspringLaw::mean() const {
  if (auto* f = std::get_if<FixedOffspring>(&law_)) return f->count;
  const auto& c = std::get<CategoricalOffspring>(law_);
  double m = 0.0;
  for (std::size_t i = 0; i < c.support.size(); ++i)
    m += static_cast<double>(c.support[i]) * c.probs[i];
  return m;
}

double OffspringLaw::mass_at(std::uint32_t k) const {
  if (auto* f = std::get_if<FixedOffspring>(&law_))
    return f->count == k ? 1.0 : 0.0;
  const auto& c = std::get<CategoricalOffspring>(law_);
  double p = 0.0;
  for (std::size_t i = 0; i < c.support.size(); ++i)
    if (c.support[i] == k) p += c.probs[i];
  return p;
}

std::uint32_t OffspringLaw::sample(Rng& rng) const {
  if (auto* f = std::get_if<FixedOffspring>(&law_)) return f->count;
  const auto& c = std::get<CategoricalOffspring>(law_);
  return c.support[sample_cumulative(rng, cum_)];
}

// ---------------------------------------------------------------------------
// ImmigrationLaw

double ImmigrationLaw::mean_count() const {
  if (auto* f = std::get_if<FixedCount>(&count_)) return f->value;
  if (auto* p = std::get_if<PoissonCount>(&count_)) return p->lambda;
  return 0.0;
}

std::uint32_t ImmigrationLaw::sample_count(Rng& rng) const {
  if (auto* f = std::get_if<FixedCount>(&count_)) return f->value;
  if (auto* p = std::get_if<PoissonCount>(&count_))
    return sample_poisson(rng, p->lambda);
  return 0;
}

// ---------------------------------------------------------------------------
// EnvModel

EnvModel EnvModel::constant(EnvState state) {
  EnvModel m;
  m.kind_ = Kind::constant;
  m.states_ = {std::move(state)};
  m.stationary_ = {1.0};
  return m;
}

EnvModel EnvModel::iid(std::vector<EnvState> states,
                       std::vector<double> probs) {
  if (states.empty()) throw ConfigError("environment needs at least one state");
  if (states.size() != probs.size())
    throw ConfigError("environment states/probs length mismatch");
  if (!is_simplex(probs))
    throw ConfigError("environment probs must form a probability simplex");
  EnvModel m;
  m.kind_ = Kind::iid;
  m.states_ = std::move(states);
  m.stationary_ = std::move(probs);
  m.cum_ = cumulative(m.stationary_);
  return m;
}

EnvModel EnvModel::markov(std::vector<EnvState> states,
                          std::vector<std::vector<double>> transition) {
  if (states.empty()) throw ConfigError("environment needs at least one state");
  if (transition.size() != states.size())
    throw ConfigError("transition matrix must be square over the states");
  for (const auto& row : transition) {
    if (row.size() != states.size())
      throw ConfigError("transition matrix must be square over the states");
    if (!is_simplex(row))
      throw ConfigError("transition rows must form probability simplices");
  }
  if (!strongly_connected(transition))
    throw ConfigError("transition matrix must be irreducible");
  if (chain_period(transition) != 1)
    throw ConfigError("transition matrix must be aperiodic");

  EnvModel m;
  m.kind_ = Kind::markov;
  m.states_ = std::move(states);
  m.transition_ = std::move(transition);
  m.stationary_ = solve_stationary(m.transition_);
  m.cum_ = cumulative(m.stationary_);
  m.row_cum_.reserve(m.transition_.size());
  for (const auto& row : m.transition_) m.row_cum_.push_back(cumulative(row));
  return m;
}

std::vector<std::uint32_t> EnvModel::sample_indices(std::size_t n,
                                                    Rng& rng) const {
  std::vector<std::uint32_t> idx(n, 0);
  if (kind_ == Kind::constant || n == 0) return idx;
  if (kind_ == Kind::iid) {
    for (auto& v : idx) v = static_cast<std::uint32_t>(sample_cumulative(rng, cum_));
    return idx;
  }
  idx[0] = static_cast<std::uint32_t>(sample_cumulative(rng, cum_));
  for (std::size_t k = 1; k < n; ++k)
    idx[k] =
        static_cast<std::uint32_t>(sample_cumulative(rng, row_cum_[idx[k - 1]]));
  return idx;
}

bool EnvModel::immigration_free() const {
  return std::all_of(states_.begin(), states_.end(),
                     [](const EnvState& s) { return s.immigration.is_zero(); });
}

EnvModel EnvModel::without_immigration() const {
  EnvModel m = *this;
  for (auto& s : m.states_) s.immigration = ImmigrationLaw::zero();
  return m;
}

EnvSequence sample_environment(const EnvModel& model, std::size_t n,
                               std::uint64_t seed) {
  Rng rng(stream_seed(seed, "environment"));
  return EnvSequence{&model, model.sample_indices(n, rng)};
}

// ---------------------------------------------------------------------------
// Validation

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    const char* tag = c.status == CheckStatus::pass   ? "pass"
                      : c.status == CheckStatus::warn ? "warn"
                                                      : "FAIL";
    os << tag << "  " << c.name;
    if (!c.detail.empty()) os << "  (" << c.detail << ")";
    os << '\n';
  }
  return os.str();
}

ValidationReport validate(const EnvModel& model,
                          std::span<const double> t_grid) {
  ValidationReport rep;
  auto add = [&rep](std::string name, CheckStatus st, std::string detail = "") {
    rep.checks.push_back({std::move(name), st, std::move(detail)});
  };

  const auto& states = model.states();
  for (std::size_t i = 0; i < states.size(); ++i) {
    const EnvState& s = states[i];
    const std::string tag = "state " + std::to_string(i);

    const double p0 = s.offspring.mass_at(0);
    add(tag + ": P(N=0)=0", p0 == 0.0 ? CheckStatus::pass : CheckStatus::fail,
        p0 == 0.0 ? "" : "P(N=0)=0 violated");

    const double p1 = s.offspring.mass_at(1);
    add(tag + ": P(N=1)<1", p1 < 1.0 ? CheckStatus::pass : CheckStatus::fail,
        p1 < 1.0 ? "" : "offspring law concentrated at 1");

    const double mean_l = s.displacement.mean();
    if (s.centered) {
      add(tag + ": centering E[sum L]=0",
          mean_l == 0.0 ? CheckStatus::pass : CheckStatus::fail,
          mean_l == 0.0 ? "" : "mean displacement is " + std::to_string(mean_l));
    } else {
      add(tag + ": centering skipped", CheckStatus::warn,
          "state declared non-centered; growth-rate sign regimes may differ");
    }

    bool finite = true;
    for (double t : t_grid)
      finite = finite && std::isfinite(s.log_m(t));
    add(tag + ": log m(t) finite on grid",
        finite ? CheckStatus::pass : CheckStatus::fail);
  }

  double drift = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i)
    drift += model.stationary()[i] * std::log(states[i].mean_offspring());
  add("supercriticality E[log m(0)] > 0",
      drift > 0.0 ? CheckStatus::pass : CheckStatus::fail,
      "E[log m(0)] = " + std::to_string(drift));

  if (model.kind() == EnvModel::Kind::markov) {
    double resid = 0.0;
    const auto& pi = model.stationary();
    const auto& P = model.transition();
    for (std::size_t j = 0; j < pi.size(); ++j) {
      double pj = 0.0;
      for (std::size_t i = 0; i < pi.size(); ++i) pj += pi[i] * P[i][j];
      resid = std::max(resid, std::abs(pj - pi[j]));
    }
    add("stationarity residual |pi P - pi| <= 1e-12",
        resid <= kSimplexTol ? CheckStatus::pass : CheckStatus::fail,
        "residual = " + std::to_string(resid));
  }

  return rep;
}

}  // namespace brwire
