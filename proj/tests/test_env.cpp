// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "brwire/env.hpp"

using namespace brwire;

namespace {

EnvState make_state(OffspringLaw off, DisplacementLaw disp,
                    ImmigrationLaw imm = ImmigrationLaw::zero(),
                    bool centered = true) {
  EnvState s;
  s.offspring = off;
  s.displacement = disp;
  s.immigration = imm;
  s.centered = centered;
  return s;
}

EnvState reference_state() {
  return make_state(OffspringLaw::fixed(2), DisplacementLaw::gaussian(0, 1));
}

std::vector<double> default_grid() {
  std::vector<double> g;
  for (double t = -4.0; t <= 4.0 + 1e-12; t += 0.5) g.push_back(t);
  return g;
}

// Independent Monte Carlo oracle for m(t) = E sum_{i<=N} exp(t L_i), using
// the standard library generator rather than the simulation streams.
double mc_conditional_mean(const EnvState& s, double t, std::size_t draws,
                           double* se_out) {
  std::mt19937_64 gen(1234567);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> unif;

  auto draw_L = [&]() {
    if (const GaussianLaw* g = s.displacement.gaussian_params())
      return g->mean + g->sd * normal(gen);
    const double d = s.displacement.two_point_params()->offset;
    return coin(gen) ? d : -d;
  };
  auto draw_N = [&]() -> std::uint32_t {
    if (const FixedOffspring* f = s.offspring.fixed_params()) return f->count;
    const auto& c = *s.offspring.categorical_params();
    double u = unif(gen);
    for (std::size_t i = 0; i < c.support.size(); ++i) {
      if (u < c.probs[i]) return c.support[i];
      u -= c.probs[i];
    }
    return c.support.back();
  };

  double sum = 0.0, sumsq = 0.0;
  for (std::size_t k = 0; k < draws; ++k) {
    const std::uint32_t n = draw_N();
    double v = 0.0;
    for (std::uint32_t i = 0; i < n; ++i) v += std::exp(t * draw_L());
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / static_cast<double>(draws);
  const double var =
      sumsq / static_cast<double>(draws) - mean * mean;
  if (se_out) *se_out = std::sqrt(var / static_cast<double>(draws));
  return mean;
}

}  // namespace

TEST_CASE("conditional mean m(t): trivial and frozen oracle values") {
  const EnvState ref = reference_state();
  CHECK(ref.m(0.0) == doctest::Approx(2.0).epsilon(1e-14));
  // frozen: 2 e^{1/2}, cross-checked by the Monte Carlo oracle below
  CHECK(ref.m(1.0) == doctest::Approx(3.2974425414002564).epsilon(1e-13));

  const EnvState tp =
      make_state(OffspringLaw::fixed(3), DisplacementLaw::two_point(1.0));
  // frozen: 3 cosh(1)
  CHECK(tp.m(1.0) == doctest::Approx(4.629241904445731).epsilon(1e-13));

  for (const EnvState& s : {ref, tp}) {
    double se = 0.0;
    const double est = mc_conditional_mean(s, 1.0, 1'000'000, &se);
    CHECK(std::abs(est - s.m(1.0)) <= 3.0 * se);
  }
}

TEST_CASE("m' matches centered finite differences within 1e-6 relative") {
  const std::vector<EnvState> states = {
      reference_state(),
      make_state(OffspringLaw::fixed(2), DisplacementLaw::gaussian(0.3, 1.7),
                 ImmigrationLaw::zero(), false),
      make_state(OffspringLaw::fixed(3), DisplacementLaw::two_point(0.8))};
  const double h = 1e-6;
  for (const EnvState& s : states) {
    for (double t = -3.0; t <= 3.0 + 1e-12; t += 0.25) {
      const double fd = (s.m(t + h) - s.m(t - h)) / (2 * h);
      CHECK(s.m_prime(t) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
  // m'(1)/m(1) = 1 for the unit gaussian
  const EnvState ref = reference_state();
  CHECK(ref.m_prime(1.0) / ref.m(1.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sigma2 closed forms") {
  CHECK(reference_state().sigma2() == 1.0);
  CHECK(make_state(OffspringLaw::fixed(2), DisplacementLaw::two_point(2.0))
            .sigma2() == 4.0);
  CHECK(make_state(OffspringLaw::fixed(2),
                   DisplacementLaw::gaussian(0.3, 2.0), ImmigrationLaw::zero(),
                   false)
            .sigma2() == doctest::Approx(4.09).epsilon(1e-14));
}

TEST_CASE("centered states satisfy m(t) >= m(0) on the grid") {
  const std::vector<EnvState> states = {
      reference_state(),
      make_state(OffspringLaw::categorical({1, 2, 3}, {0.2, 0.5, 0.3}),
                 DisplacementLaw::two_point(1.3))};
  for (const EnvState& s : states)
    for (double t : default_grid())
      CHECK(s.m(t) >= s.m(0.0) * (1.0 - 1e-12));
}

TEST_CASE("validation: canonical pass and the named failure modes") {
  const auto grid = default_grid();

  SUBCASE("centered constant model passes every check") {
    const EnvModel m = EnvModel::constant(reference_state());
    const ValidationReport rep = validate(m, grid);
    CHECK(rep.ok());
    CHECK(rep.clean());
  }

  SUBCASE("offspring mass at zero fails") {
    const EnvModel m = EnvModel::constant(make_state(
        OffspringLaw::categorical({0, 2}, {0.5, 0.5}),
        DisplacementLaw::gaussian(0, 1)));
    const ValidationReport rep = validate(m, grid);
    CHECK_FALSE(rep.ok());
    bool found = false;
    for (const auto& c : rep.checks)
      found = found || (c.status == CheckStatus::fail &&
                        c.detail.find("P(N=0)=0 violated") != std::string::npos);
    CHECK(found);
  }

  SUBCASE("offspring concentrated at one fails") {
    const EnvModel m = EnvModel::constant(
        make_state(OffspringLaw::fixed(1), DisplacementLaw::gaussian(0, 1)));
    CHECK_FALSE(validate(m, grid).ok());  // P(N=1)<1 and supercriticality
  }

  SUBCASE("non-centered mean with centered flag fails, without it warns") {
    const EnvModel bad = EnvModel::constant(make_state(
        OffspringLaw::fixed(2), DisplacementLaw::gaussian(0.3, 1.0)));
    CHECK_FALSE(validate(bad, grid).ok());

    const EnvModel warned = EnvModel::constant(
        make_state(OffspringLaw::fixed(2), DisplacementLaw::gaussian(0.3, 1.0),
                   ImmigrationLaw::zero(), false));
    const ValidationReport rep = validate(warned, grid);
    CHECK(rep.ok());
    CHECK_FALSE(rep.clean());
  }

  SUBCASE("structural junk throws ConfigError") {
    CHECK_THROWS_AS(OffspringLaw::categorical({}, {}), ConfigError);
    CHECK_THROWS_AS(OffspringLaw::categorical({1, 2}, {0.7, 0.7}),
                    ConfigError);
    CHECK_THROWS_AS(EnvModel::iid({reference_state()}, {0.5}), ConfigError);
    CHECK_THROWS_AS(DisplacementLaw::gaussian(0.0, 0.0), ConfigError);
    // reducible chain
    CHECK_THROWS_AS(EnvModel::markov({reference_state(), reference_state()},
                                     {{1.0, 0.0}, {0.0, 1.0}}),
                    ConfigError);
    // periodic chain
    CHECK_THROWS_AS(EnvModel::markov({reference_state(), reference_state()},
                                     {{0.0, 1.0}, {1.0, 0.0}}),
                    ConfigError);
  }
}

TEST_CASE("stationary distribution: closed form and residual") {
  const EnvModel m = EnvModel::markov(
      {reference_state(), reference_state()}, {{0.7, 0.3}, {0.4, 0.6}});
  CHECK(m.stationary()[0] == doctest::Approx(4.0 / 7.0).epsilon(1e-12));
  CHECK(m.stationary()[1] == doctest::Approx(3.0 / 7.0).epsilon(1e-12));

  const auto& pi = m.stationary();
  const auto& P = m.transition();
  for (std::size_t j = 0; j < 2; ++j) {
    double pj = 0.0;
    for (std::size_t i = 0; i < 2; ++i) pj += pi[i] * P[i][j];
    CHECK(std::abs(pj - pi[j]) <= 1e-12);
  }
}

TEST_CASE("sample_environment: constant, reproducibility, frequencies") {
  const EnvState a = reference_state();
  const EnvState b =
      make_state(OffspringLaw::fixed(3), DisplacementLaw::two_point(1.0));

  SUBCASE("constant model returns copies") {
    const EnvModel m = EnvModel::constant(a);
    const EnvSequence seq = sample_environment(m, 3, 1);
    CHECK(seq.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) CHECK(seq.indices[k] == 0);
  }

  SUBCASE("fixed seed reproduces bit-identically") {
    const EnvModel m = EnvModel::iid({a, b}, {0.3, 0.7});
    const EnvSequence s1 = sample_environment(m, 1000, 99);
    const EnvSequence s2 = sample_environment(m, 1000, 99);
    CHECK(s1.indices == s2.indices);
    const EnvSequence s3 = sample_environment(m, 1000, 100);
    CHECK(s1.indices != s3.indices);
  }

  SUBCASE("iid frequencies within 3 standard errors at n=1e5") {
    const EnvModel m = EnvModel::iid({a, b}, {0.3, 0.7});
    const EnvSequence seq = sample_environment(m, 100000, 7);
    double freq1 = 0.0;
    for (auto i : seq.indices) freq1 += i;
    freq1 /= 100000.0;
    CHECK(std::abs(freq1 - 0.7) <= 3.0 * std::sqrt(0.3 * 0.7 / 100000.0));
  }

  SUBCASE("markov stationary frequencies at n=1e5") {
    const EnvModel m =
        EnvModel::markov({a, b}, {{0.9, 0.1}, {0.1, 0.9}});
    const EnvSequence seq = sample_environment(m, 100000, 11);
    double freq1 = 0.0;
    for (auto i : seq.indices) freq1 += i;
    freq1 /= 100000.0;
    // effective sample size shrinks by (1+rho)/(1-rho) = 9 at rho = 0.8
    const double se = std::sqrt(0.25 * 9.0 / 100000.0);
    CHECK(std::abs(freq1 - 0.5) <= 3.0 * se);
  }
}
