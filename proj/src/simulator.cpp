// SPDX-License-Identifier: Apache-2.0

#include "brwire/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "brwire/kernels.hpp"

namespace brwire {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::uint64_t group_stream_index(std::size_t generation,
                                 std::uint32_t founder) {
  return (static_cast<std::uint64_t>(generation) << 32) | founder;
}

double probe_scale(const ProbeSpec& p, std::size_t gen) {
  switch (p.scale) {
    case ProbeSpec::Scale::fixed:
      return 1.0;
    case ProbeSpec::Scale::linear_n:
      return static_cast<double>(gen);
    case ProbeSpec::Scale::power_n:
      return std::pow(static_cast<double>(gen), p.exponent);
  }
  return 1.0;
}

GenSummary summarize(const Generation& gen, const SimConfig& cfg,
                     const std::vector<FounderInfo>& founders) {
  const auto& ops = kernels::active();
  const double* pos = gen.positions.data();
  const std::size_t n = gen.size();

  GenSummary s;
  s.total = n;
  s.root_total = gen.root_count;
  s.wave_size = n - gen.wave_start;
  s.rightmost = ops.reduce_max(pos, n);
  s.leftmost = ops.reduce_min(pos, n);

  s.log_full.reserve(cfg.t_eval.size());
  s.log_root.reserve(cfg.t_eval.size());
  s.log_wave.reserve(cfg.t_eval.size());
  if (cfg.per_founder_transforms) s.founder_terms.resize(cfg.t_eval.size());
  for (std::size_t ti = 0; ti < cfg.t_eval.size(); ++ti) {
    const double t = cfg.t_eval[ti];
    // One shift for all three group sums keeps full >= root and
    // full >= wave exact after the final monotone additions.
    const double shift = t >= 0 ? t * s.rightmost : t * s.leftmost;
    const double root_sum = ops.sum_exp_affine(pos, gen.root_count, t, shift);
    const double old_sum = ops.sum_exp_affine(
        pos + gen.root_count, gen.wave_start - gen.root_count, t, shift);
    const double wave_sum = ops.sum_exp_affine(
        pos + gen.wave_start, n - gen.wave_start, t, shift);
    const double full_sum = (root_sum + old_sum) + wave_sum;
    s.log_full.push_back(shift + std::log(full_sum));
    s.log_root.push_back(shift + std::log(root_sum));
    s.log_wave.push_back(wave_sum > 0.0 ? shift + std::log(wave_sum) : kNegInf);

    if (cfg.per_founder_transforms) {
      // Founder runs are contiguous past the root prefix; each gets its
      // own recentred, shifted compensated sum.
      for (std::size_t i = gen.root_count; i < n;) {
        std::size_t j = i;
        const std::uint32_t id = gen.tags[i];
        while (j < n && gen.tags[j] == id) ++j;
        const double centre = founders[id - 1].position;
        const double mx = ops.reduce_max(pos + i, j - i);
        const double mn = ops.reduce_min(pos + i, j - i);
        const double sub_shift = (t >= 0 ? t * mx : t * mn) - t * centre;
        double acc_sum = 0.0, acc_comp = 0.0;
        for (std::size_t u = i; u < j; ++u) {
          const double v = std::exp(t * (pos[u] - centre) - sub_shift);
          const double ss = acc_sum + v;
          if (std::abs(acc_sum) >= std::abs(v))
            acc_comp += (acc_sum - ss) + v;
          else
            acc_comp += (v - ss) + acc_sum;
          acc_sum = ss;
        }
        s.founder_terms[ti].emplace_back(
            id, sub_shift + std::log(acc_sum + acc_comp));
        i = j;
      }
    }
  }

  s.probe_counts.reserve(cfg.probes.size());
  for (const ProbeSpec& p : cfg.probes) {
    const double sc = probe_scale(p, gen.index);
    s.probe_counts.push_back(ops.count_in_closed(pos, n, p.lo * sc, p.hi * sc));
  }
  return s;
}

}  // namespace

Generation step(const Generation& gen, const EnvState& state,
                const ImmigrationWave& wave, std::uint32_t first_new_founder,
                std::uint64_t branch_master, std::uint64_t max_particles) {
  // Contiguous runs of equal founder tag; each run draws from its own
  // stream (offspring counts first, then child displacements).
  struct Run {
    std::size_t begin, end;
    Rng rng;
    std::uint64_t children = 0;
  };
  std::vector<Run> runs;
  std::vector<std::uint32_t> counts(gen.size());
  for (std::size_t i = 0; i < gen.size();) {
    std::size_t j = i;
    while (j < gen.size() && gen.tags[j] == gen.tags[i]) ++j;
    runs.push_back(Run{i, j,
                       Rng(stream_seed(branch_master, "group",
                                       group_stream_index(gen.index,
                                                          gen.tags[i]))),
                       0});
    Run& run = runs.back();
    for (std::size_t u = i; u < j; ++u) {
      counts[u] = state.offspring.sample(run.rng);
      run.children += counts[u];
    }
    i = j;
  }

  std::uint64_t total_children = 0;
  for (const Run& r : runs) total_children += r.children;
  const std::uint64_t next_size = total_children + wave.count;
  if (next_size > max_particles)
    throw CapExceeded(gen.index + 1, next_size, max_particles);

  Generation next;
  next.index = gen.index + 1;
  next.positions.resize(next_size);
  next.tags.resize(next_size);

  std::size_t out = 0;
  for (Run& run : runs) {
    const std::size_t block_begin = out;
    // Displacements for the whole run in one batch, then recentre on the
    // parents.
    state.displacement.sample_fill(
        run.rng, std::span<double>(next.positions.data() + block_begin,
                                   run.children));
    const std::uint32_t tag = gen.tags[run.begin];
    for (std::size_t u = run.begin; u < run.end; ++u) {
      const double parent_pos = gen.positions[u];
      for (std::uint32_t c = 0; c < counts[u]; ++c) {
        next.positions[out] += parent_pos;
        next.tags[out] = tag;
        ++out;
      }
    }
  }

  next.root_count = runs.empty() || gen.tags[0] != 0 ? 0 : runs[0].children;
  next.wave_start = out;
  for (std::uint32_t i = 0; i < wave.count; ++i) {
    next.positions[out] = wave.positions[i];
    next.tags[out] = first_new_founder + i;
    ++out;
  }
  return next;
}

ImmigrationRealization draw_immigration(const EnvSequence& env,
                                        std::uint64_t seed,
                                        std::size_t stream_index) {
  Rng rng(stream_seed(seed, "immigration", stream_index));
  ImmigrationRealization real;
  real.waves.resize(env.size());
  for (std::size_t k = 0; k < env.size(); ++k) {
    const ImmigrationLaw& law = env[k].immigration;
    ImmigrationWave& wave = real.waves[k];
    wave.count = law.sample_count(rng);
    wave.positions.resize(wave.count);
    if (wave.count > 0) law.position().sample_fill(rng, wave.positions);
  }
  return real;
}

Trajectory simulate_one([[maybe_unused]] const EnvModel& model,
                        const SimConfig& cfg, const EnvSequence& env,
                        const ImmigrationRealization* fixed,
                        std::size_t replica) {
  Trajectory traj;
  traj.env = env;
  traj.t_eval = cfg.t_eval;
  traj.seed = cfg.seed;
  traj.replica = replica;
  traj.mode = cfg.mode;
  traj.immigration =
      fixed ? *fixed : draw_immigration(env, cfg.seed, replica);

  // Founder ids are assigned wave by wave up front.
  std::vector<std::uint32_t> first_id(cfg.generations, 1);
  std::uint32_t next_id = 1;
  for (std::size_t k = 0; k < cfg.generations; ++k) {
    first_id[k] = next_id;
    const ImmigrationWave& w = traj.immigration.waves[k];
    for (std::uint32_t i = 0; i < w.count; ++i)
      traj.founders.push_back(FounderInfo{static_cast<std::uint32_t>(k + 1),
                                          i + 1, w.positions[i]});
    next_id += w.count;
  }

  const std::uint64_t branch_master =
      stream_seed(cfg.seed, "branching", replica);

  Generation gen = Generation::initial();
  traj.gens.reserve(cfg.generations + 1);
  traj.gens.push_back(summarize(gen, cfg, traj.founders));

  auto snapshot_if_requested = [&](const Generation& g) {
    if (std::find(cfg.keep_generations.begin(), cfg.keep_generations.end(),
                  g.index) == cfg.keep_generations.end())
      return;
    GenerationSnapshot snap;
    snap.generation = g.index;
    snap.sorted_positions = g.positions;
    std::sort(snap.sorted_positions.begin(), snap.sorted_positions.end());
    traj.snapshots.push_back(std::move(snap));
  };
  snapshot_if_requested(gen);

  for (std::size_t k = 0; k < cfg.generations; ++k) {
    gen = step(gen, env[k], traj.immigration.waves[k], first_id[k],
               branch_master, cfg.max_particles);
    traj.gens.push_back(summarize(gen, cfg, traj.founders));
    snapshot_if_requested(gen);
  }
  if (cfg.keep_final_generation) traj.final_gen = std::move(gen);
  return traj;
}

Trajectory simulate(const EnvModel& model, const SimConfig& cfg) {
  EnvSequence env = sample_environment(model, cfg.generations, cfg.seed);
  if (cfg.mode == SimMode::quenched_xi_and_Y) {
    const ImmigrationRealization shared = draw_immigration(env, cfg.seed, 0);
    return simulate_one(model, cfg, env, &shared, 0);
  }
  return simulate_one(model, cfg, env, nullptr, 0);
}

Trajectory simulate_no_immigration(const EnvModel& model,
                                   const SimConfig& cfg) {
  const EnvModel stripped = model.without_immigration();
  return simulate(stripped, cfg);
}

namespace detail {

void run_indexed(std::size_t count, std::size_t threads,
                 const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads == 0
                            ? std::max<std::size_t>(
                                  1, std::thread::hardware_concurrency())
                            : threads;
  workers = std::min(workers, count);

  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::size_t err_index = count;
  std::exception_ptr err;

  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace detail

}  // namespace brwire
