// SPDX-License-Identifier: Apache-2.0
//
// Forward simulation of the branching random walk with immigration under a
// fixed environment realization. Only the current generation is held in
// memory; per-generation summaries (masses, extrema, log transforms on a
// configurable t list, interval probes) stream out as they are produced.
//
// Particle layout inside a generation is [root-descendants | descendants of
// earlier immigrants | this generation's immigrant wave]; every founder's
// particles stay contiguous across steps, which the transform code exploits.
//
// RNG streams (see rng.hpp for the splitting function):
//   environment   stream_seed(seed, "environment"[, replica if varied])
//   immigration   stream_seed(seed, "immigration", replica)  (replica 0 is
//                 the shared stream when the immigrant sequence is fixed)
//   branching     per (replica, generation, founder) group:
//                 stream_seed(stream_seed(seed, "branching", replica),
//                             "group", generation << 32 | founder)
// Per-group branching streams make the no-immigration run bit-identical to
// the root-tagged restriction of the full run, and make results independent
// of thread scheduling.

#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "brwire/env.hpp"

namespace brwire {

struct CapExceeded : std::runtime_error {
  CapExceeded(std::size_t gen, std::uint64_t attempted, std::uint64_t cap)
      : std::runtime_error("particle cap exceeded at generation " +
                           std::to_string(gen) + ": " +
                           std::to_string(attempted) + " > " +
                           std::to_string(cap)),
        generation(gen) {}
  std::size_t generation;
};

// Founder id 0 is the initial particle; ids >= 1 index FounderInfo records.
struct FounderInfo {
  std::uint32_t join_generation = 0;  // generation the immigrant appears in
  std::uint32_t index_in_wave = 0;    // 1-based index within its wave
  double position = 0.0;
};

struct OriginTag {
  bool root = true;
  std::uint32_t generation = 0;  // valid when !root
  std::uint32_t index = 0;
};

struct Generation {
  std::size_t index = 0;
  std::vector<double> positions;
  std::vector<std::uint32_t> tags;  // founder ids, same length as positions
  std::size_t root_count = 0;       // root-tagged prefix length
  std::size_t wave_start = 0;       // first index of this generation's wave

  static Generation initial() {
    Generation g;
    g.positions = {0.0};
    g.tags = {0};
    g.root_count = 1;
    g.wave_start = 1;
    return g;
  }
  std::size_t size() const { return positions.size(); }
};

// Wave k is drawn alongside the step into generation k+1 and joins that
// generation.
struct ImmigrationWave {
  std::uint32_t count = 0;
  std::vector<double> positions;
};

struct ImmigrationRealization {
  std::vector<ImmigrationWave> waves;  // index k = 0 .. n-1
};

enum class SimMode { quenched_xi, quenched_xi_and_Y };

// Interval probes evaluated against every generation: the configured
// bounds are multiplied by gen or gen^exponent for the scaled variants.
struct ProbeSpec {
  enum class Scale { fixed, linear_n, power_n };
  Scale scale = Scale::fixed;
  double exponent = 1.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct SimConfig {
  std::size_t generations = 10;
  std::uint64_t seed = 1;
  std::uint64_t max_particles = 30'000'000;
  SimMode mode = SimMode::quenched_xi;
  std::size_t replicas = 1;
  std::size_t threads = 0;     // 0: hardware concurrency
  bool vary_environment = false;  // annealed runs: fresh environment per replica

  std::vector<double> t_eval;  // transform evaluation points
  std::vector<std::size_t> keep_generations;  // snapshot these generations
  bool keep_final_generation = false;
  // Also stream founder-recentred subtree transforms (one term per
  // immigrant founder with alive descendants). Intended for desk-scale
  // runs; the founder count is what it costs.
  bool per_founder_transforms = false;
  std::vector<ProbeSpec> probes;
};

struct GenSummary {
  std::uint64_t total = 0;
  std::uint64_t root_total = 0;
  std::uint64_t wave_size = 0;
  double rightmost = 0.0;
  double leftmost = 0.0;
  // log of the exp(t S) sums over the whole generation / the root-tagged
  // prefix / the generation's immigrant wave, per t_eval entry. All three
  // share one exponent shift, so full >= root and full >= wave hold exactly
  // as floating-point comparisons. Empty wave gives -inf.
  std::vector<double> log_full;
  std::vector<double> log_root;
  std::vector<double> log_wave;
  // Per t_eval entry, the founder-recentred subtree transforms
  // log sum exp(t (S_u - S_f)) over this generation's run of founder f.
  // Only filled under per_founder_transforms.
  std::vector<std::vector<std::pair<std::uint32_t, double>>> founder_terms;
  std::vector<std::uint64_t> probe_counts;
};

struct GenerationSnapshot {
  std::size_t generation = 0;
  std::vector<double> sorted_positions;
};

struct Trajectory {
  EnvSequence env;
  ImmigrationRealization immigration;
  std::vector<FounderInfo> founders;
  std::vector<double> t_eval;
  std::vector<GenSummary> gens;  // 0 .. generations
  std::vector<GenerationSnapshot> snapshots;
  Generation final_gen;  // populated when keep_final_generation
  std::uint64_t seed = 0;
  std::size_t replica = 0;
  SimMode mode = SimMode::quenched_xi;

  OriginTag tag_of(std::uint32_t founder_id) const {
    if (founder_id == 0) return OriginTag{};
    const FounderInfo& f = founders[founder_id - 1];
    return OriginTag{false, f.join_generation, f.index_in_wave};
  }
};

// One synchronous step. The wave is already realized; its members get
// founder ids first_new_founder, first_new_founder+1, ...
Generation step(const Generation& gen, const EnvState& state,
                const ImmigrationWave& wave, std::uint32_t first_new_founder,
                std::uint64_t branch_master, std::uint64_t max_particles);

// Immigration realization for the given environment, drawn from the
// replica's immigration stream.
ImmigrationRealization draw_immigration(const EnvSequence& env,
                                        std::uint64_t seed,
                                        std::size_t stream_index);

// Single trajectory for one replica. `fixed` (nullable) replays a shared
// immigration realization instead of drawing one.
Trajectory simulate_one(const EnvModel& model, const SimConfig& cfg,
                        const EnvSequence& env,
                        const ImmigrationRealization* fixed,
                        std::size_t replica);

// Convenience: replica 0 with freshly sampled environment (and, in
// quenched_xi_and_Y mode, a shared immigration realization).
Trajectory simulate(const EnvModel& model, const SimConfig& cfg);

// Same run with immigration forced off in every state.
Trajectory simulate_no_immigration(const EnvModel& model, const SimConfig& cfg);

namespace detail {
// fn(i) for i in [0, count); worker threads pull indices from a shared
// counter, so writes must go to per-index slots. Rethrows the
// lowest-index exception after joining.
void run_indexed(std::size_t count, std::size_t threads,
                 const std::function<void(std::size_t)>& fn);
}  // namespace detail

// Runs `cfg.replicas` trajectories sharing the environment (and, in
// quenched_xi_and_Y mode, the immigration realization), applying `extract`
// to each finished trajectory. Results are ordered by replica index
// regardless of thread count.
template <typename F>
auto simulate_ensemble(const EnvModel& model, const SimConfig& cfg, F extract)
    -> std::vector<decltype(extract(std::declval<Trajectory&&>()))> {
  using R = decltype(extract(std::declval<Trajectory&&>()));
  EnvSequence env = sample_environment(model, cfg.generations, cfg.seed);
  ImmigrationRealization shared;
  const bool fix_y = cfg.mode == SimMode::quenched_xi_and_Y;
  if (fix_y) shared = draw_immigration(env, cfg.seed, 0);

  std::vector<R> results(cfg.replicas);
  detail::run_indexed(cfg.replicas, cfg.threads, [&](std::size_t r) {
    const EnvSequence* env_ptr = &env;
    EnvSequence varied;
    if (cfg.vary_environment && r != 0) {
      Rng rng(stream_seed(cfg.seed, "environment", r));
      varied = EnvSequence{&model, model.sample_indices(cfg.generations, rng)};
      env_ptr = &varied;
    }
    results[r] =
        extract(simulate_one(model, cfg, *env_ptr, fix_y ? &shared : nullptr, r));
  });
  return results;
}

}  // namespace brwire
