// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "brwire/functionals.hpp"

using namespace brwire;

namespace {

EnvState make_state(OffspringLaw off, DisplacementLaw disp,
                    ImmigrationLaw imm = ImmigrationLaw::zero()) {
  EnvState s;
  s.offspring = off;
  s.displacement = disp;
  s.immigration = imm;
  return s;
}

EnvModel reference_model(ImmigrationLaw imm = ImmigrationLaw::zero()) {
  return EnvModel::constant(
      make_state(OffspringLaw::fixed(2), DisplacementLaw::gaussian(0, 1), imm));
}

}  // namespace

TEST_CASE("laplace transform: single atom, two atoms, mass identity") {
  CHECK(CountingMeasure({0.0}).laplace(3.7) == 1.0);
  // e + 1/e, frozen
  CHECK(CountingMeasure({-1.0, 1.0}).laplace(1.0) ==
        doctest::Approx(3.0861612696304874).epsilon(1e-15));

  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<double> pos(1000);
  for (auto& p : pos) p = u(gen);
  CHECK(CountingMeasure(pos).laplace(0.0) == 1000.0);
}

TEST_CASE("laplace >= total * exp(t * leftmost) pointwise") {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<double> pos(257);
  for (auto& p : pos) p = u(gen);
  const CountingMeasure z(pos);
  for (double t = -2.0; t <= 2.0; t += 0.25) {
    const double floor_bound =
        static_cast<double>(z.total()) *
        std::exp(t * (t >= 0 ? z.leftmost() : z.rightmost()));
    CHECK(z.laplace(t) >= floor_bound * (1.0 - 1e-12));
  }
}

TEST_CASE("plain path overflows loudly; log path agrees with it in range") {
  const CountingMeasure z({-400.0, 0.0, 350.0});
  CHECK_THROWS_AS(z.laplace(3.0), OverflowError);
  CHECK(z.log_laplace(3.0) == doctest::Approx(1050.0).epsilon(1e-12));
  // both automatic branches agree where the plain sum is representable
  const CountingMeasure small({-1.5, 0.25, 2.0});
  for (double t : {-0.5, 0.0, 1.0}) {
    CHECK(small.log_laplace(t) ==
          doctest::Approx(std::log(small.laplace(t))).epsilon(1e-14));
  }
  // shifted branch engages beyond +-600 exponents and stays finite
  const CountingMeasure wide({-310.0, 310.0});
  const double ll = wide.log_laplace(2.1);
  CHECK(std::isfinite(ll));
  CHECK(ll == doctest::Approx(651.0 + std::log1p(std::exp(-2.0 * 651.0)))
                  .epsilon(1e-12));
}

TEST_CASE("cdf_ratio step behavior") {
  const CountingMeasure z({-1.0, 1.0});
  CHECK(z.cdf_ratio(0.0) == 0.5);
  CHECK(z.cdf_ratio(-1.5) == 0.0);
  CHECK(z.cdf_ratio(1.0) == 1.0);
  CHECK(z.cdf_ratio(5.0) == 1.0);

  // right-continuity and atom bookkeeping at a duplicated point
  const CountingMeasure atoms({-1.0, 0.0, 0.0, 2.0});
  CHECK(atoms.cdf_ratio(0.0) == 0.75);
  CHECK(atoms.cdf_ratio(std::nextafter(0.0, -1.0)) == 0.25);
  CHECK(atoms.mass_closed(0.0, 0.0) == 2);
}

TEST_CASE("W_0 = 1 and no-immigration W == Wbar for all n, t") {
  const EnvModel m = reference_model();
  SimConfig cfg;
  cfg.generations = 8;
  cfg.seed = 3;
  cfg.t_eval = {-1.0, 0.0, 0.5, 2.0};
  const Trajectory traj = simulate(m, cfg);
  const QuenchedNormalizers norm(traj.env, 8);
  for (double t : cfg.t_eval) {
    const auto w = w_values(traj, norm, t);
    const auto wbar = wbar_values(traj, norm, t);
    CHECK(w[0] == 1.0);
    for (std::size_t n = 0; n <= 8; ++n) CHECK(w[n] == wbar[n]);
  }
}

TEST_CASE("quenched martingale mean: Wbar over replicas stays at 1") {
  const EnvModel m = reference_model();
  SimConfig cfg;
  cfg.generations = 10;
  cfg.seed = 12;
  cfg.replicas = 1000;
  cfg.t_eval = {1.0};
  const EnvSequence env = sample_environment(m, 10, cfg.seed);
  const QuenchedNormalizers norm(env, 10);
  const auto ws = simulate_ensemble(m, cfg, [&](Trajectory&& t) {
    return wbar_values(t, norm, 1.0).back();
  });
  double mean = 0.0, var = 0.0;
  for (double v : ws) mean += v;
  mean /= static_cast<double>(ws.size());
  for (double v : ws) var += (v - mean) * (v - mean);
  var /= static_cast<double>(ws.size() - 1);
  CHECK(std::abs(mean - 1.0) <=
        3.0 * std::sqrt(var / static_cast<double>(ws.size())));
}

TEST_CASE("immigrant wave transform Y_k(t)") {
  ImmigrationRealization immig;
  immig.waves.resize(3);
  immig.waves[1].count = 2;
  immig.waves[1].positions = {0.0, 0.0};
  immig.waves[2].count = 2;
  immig.waves[2].positions = {-1.0, 1.0};
  CHECK(y_of_t(immig, 0, 1.7) == 0.0);
  CHECK(y_of_t(immig, 1, -2.3) == 2.0);
  CHECK(y_of_t(immig, 2, 1.0) ==
        doctest::Approx(3.0861612696304874).epsilon(1e-15));
}

TEST_CASE("normalizers: product recurrence and b_n monotonicity") {
  const EnvModel m = EnvModel::markov(
      {make_state(OffspringLaw::fixed(2), DisplacementLaw::gaussian(0, 1)),
       make_state(OffspringLaw::fixed(3), DisplacementLaw::two_point(1.5))},
      {{0.7, 0.3}, {0.4, 0.6}});
  const EnvSequence env = sample_environment(m, 12, 5);
  const QuenchedNormalizers norm(env, 12);
  for (double t : {-1.0, 0.0, 0.7}) {
    for (std::size_t k = 0; k < 12; ++k)
      CHECK(norm.log_pi(k + 1, t) ==
            doctest::Approx(norm.log_pi(k, t) + norm.log_m(k, t))
                .epsilon(1e-12));
  }
  CHECK(norm.b(0) == 0.0);
  for (std::size_t n = 0; n < 12; ++n) {
    CHECK(norm.b(n + 1) >= norm.b(n));
    const double expect =
        norm.b(n) * norm.b(n) + norm.sigma2(n);
    CHECK(norm.b(n + 1) * norm.b(n + 1) ==
          doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("decomposition: no immigration gives an exactly zero residual") {
  const EnvModel m = reference_model();
  SimConfig cfg;
  cfg.generations = 8;
  cfg.seed = 21;
  cfg.t_eval = {-1.0, 0.0, 1.0};
  cfg.per_founder_transforms = true;
  const Trajectory traj = simulate(m, cfg);
  const QuenchedNormalizers norm(traj.env, 8);
  for (double t : cfg.t_eval)
    for (std::size_t g = 0; g <= 8; ++g)
      CHECK(decomposition_residual(traj, norm, t, g) == 0.0);
}

TEST_CASE("decomposition at n=1 with one immigrant reduces to the hand sum") {
  // Ztilde_1(t) = Zbar_1(t) + e^{t s};  W_1 = Ztilde_1 / m(t)
  const EnvState state =
      make_state(OffspringLaw::fixed(2), DisplacementLaw::gaussian(0, 1));
  const EnvModel m = EnvModel::constant(state);

  Trajectory traj;
  traj.env = EnvSequence{&m, {0}};
  traj.t_eval = {0.8};
  traj.immigration.waves.resize(1);
  traj.immigration.waves[0].count = 1;
  traj.immigration.waves[0].positions = {0.4};
  traj.founders.push_back(FounderInfo{1, 1, 0.4});

  Generation g0 = Generation::initial();
  const Generation g1 = step(g0, state, traj.immigration.waves[0], 1,
                             stream_seed(77, "branching", 0), 1000);
  REQUIRE(g1.size() == 3);

  // the summaries the simulator would emit for this step
  const double t = 0.8;
  const double z_full = std::exp(t * g1.positions[0]) +
                        std::exp(t * g1.positions[1]) + std::exp(t * 0.4);
  GenSummary s0;
  s0.log_full = {0.0};
  s0.log_root = {0.0};
  s0.log_wave = {-std::numeric_limits<double>::infinity()};
  s0.founder_terms = {{}};
  GenSummary s1;
  s1.log_full = {std::log(z_full)};
  s1.log_root = {std::log(z_full - std::exp(t * 0.4))};
  s1.log_wave = {t * 0.4};
  s1.founder_terms = {{{1u, 0.0}}};  // recentred singleton: log 1
  traj.gens = {s0, s1};
  traj.gens[1].total = 3;

  const QuenchedNormalizers norm(traj.env, 1);
  CHECK(decomposition_residual(traj, norm, t) <= 1e-14);
}

TEST_CASE("decomposition residual is floating noise on seeded runs") {
  const EnvModel m = reference_model(
      ImmigrationLaw::poisson(1.0, DisplacementLaw::gaussian(0, 1)));
  SimConfig cfg;
  cfg.generations = 14;
  cfg.t_eval = {-2.0, -1.0, 0.0, 1.0, 2.0};
  cfg.per_founder_transforms = true;
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    cfg.seed = seed;
    const Trajectory traj = simulate(m, cfg);
    const QuenchedNormalizers norm(traj.env, 14);
    for (double t : cfg.t_eval)
      for (std::size_t g = 1; g <= 14; ++g)
        CHECK(decomposition_residual(traj, norm, t, g) <= 1e-9);
  }
}

TEST_CASE("streamed founder terms match a direct final-generation regroup") {
  const EnvModel m = reference_model(
      ImmigrationLaw::poisson(1.5, DisplacementLaw::gaussian(0, 1)));
  SimConfig cfg;
  cfg.generations = 9;
  cfg.seed = 8;
  cfg.t_eval = {0.6};
  cfg.per_founder_transforms = true;
  cfg.keep_final_generation = true;
  const Trajectory traj = simulate(m, cfg);
  REQUIRE_FALSE(traj.gens.back().founder_terms.empty());

  // brute regroup over the kept final generation
  const Generation& gen = traj.final_gen;
  for (const auto& [id, log_sub] : traj.gens.back().founder_terms[0]) {
    const double centre = traj.founders[id - 1].position;
    long double acc = 0.0L;
    for (std::size_t i = 0; i < gen.size(); ++i)
      if (gen.tags[i] == id)
        acc += std::exp(
            static_cast<long double>(0.6) * (gen.positions[i] - centre));
    CHECK(log_sub ==
          doctest::Approx(std::log(static_cast<double>(acc))).epsilon(1e-12));
  }
}

TEST_CASE("fixed-(xi,Y) ensemble: mean W_n(t) tracks the derived target") {
  const EnvModel m = reference_model(
      ImmigrationLaw::poisson(1.0, DisplacementLaw::gaussian(0, 1)));
  SimConfig cfg;
  cfg.generations = 8;
  cfg.seed = 14;
  cfg.replicas = 600;
  cfg.mode = SimMode::quenched_xi_and_Y;
  cfg.t_eval = {0.5};

  const EnvSequence env = sample_environment(m, 8, cfg.seed);
  const QuenchedNormalizers norm(env, 8);
  const auto ws = simulate_ensemble(m, cfg, [&](Trajectory&& t) {
    return w_values(t, norm, 0.5);
  });

  const auto target =
      w_mean_targets(draw_immigration(env, cfg.seed, 0), norm, 8, 0.5);
  for (std::size_t n = 1; n < target.size(); ++n)
    CHECK(target[n] >= target[n - 1]);  // nondecreasing by construction

  for (std::size_t n = 0; n <= 8; ++n) {
    double mean = 0.0, var = 0.0;
    for (const auto& w : ws) mean += w[n];
    mean /= static_cast<double>(ws.size());
    for (const auto& w : ws) var += (w[n] - mean) * (w[n] - mean);
    var /= static_cast<double>(ws.size() - 1);
    const double se = std::sqrt(var / static_cast<double>(ws.size()));
    CHECK(std::abs(mean - target[n]) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("rightmost per generation and the normal cdf") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-9));
  CHECK(normal_cdf(-8.0) == doctest::Approx(6.22096e-16).epsilon(1e-3));

  const EnvModel m = reference_model();
  SimConfig cfg;
  cfg.generations = 5;
  cfg.seed = 1;
  cfg.keep_final_generation = true;
  const Trajectory traj = simulate(m, cfg);
  const auto r = rightmost_values(traj);
  CHECK(r[0] == 0.0);
  CHECK(r.back() ==
        *std::max_element(traj.final_gen.positions.begin(),
                          traj.final_gen.positions.end()));
}
