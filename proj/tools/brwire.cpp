// SPDX-License-Identifier: Apache-2.0
//
// brwire: simulate branching random walks with immigration in a random
// environment, tabulate their growth/deviation rate functions, and run the
// statistical verifiers. One config file feeds every subcommand.
//
// Exit status: 0 pass, 1 failed verification or aborted run, 2 config error.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>

#include "brwire/functionals.hpp"
#include "brwire/harness.hpp"
#include "brwire/io.hpp"
#include "brwire/kernels.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace brwire;

namespace {

json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) throw std::runtime_error("refusing to serialize NaN");
  return v > 0 ? json("inf") : json("-inf");
}

struct CliOverrides {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  std::uint64_t replicas = 0;
  bool replicas_set = false;
  std::uint64_t threads = 0;
  bool threads_set = false;
  bool quiet = false;
  std::string kernel;  // empty: BRWIRE_KERNEL or the best supported
};

RunConfig load_and_override(const CliOverrides& cli) {
  RunConfig cfg = load_config(cli.config_path);
  if (cli.seed_set) cfg.sim.seed = cli.seed;
  if (!cli.out_dir.empty()) cfg.out_dir = cli.out_dir;
  if (cli.replicas_set) cfg.sim.replicas = cli.replicas;
  if (cli.threads_set) cfg.sim.threads = cli.threads;
  cfg.quiet = cfg.quiet || cli.quiet;
  return cfg;
}

void write_manifest(const RunConfig& cfg, const std::string& subcommand,
                    bool pass, const std::vector<std::string>& outputs,
                    long cap_generation = -1,
                    const json* extra = nullptr) {
  json j;
  j["subcommand"] = subcommand;
  j["config_hash"] = cfg.hash;
  j["seed"] = cfg.sim.seed;
  j["kernel"] = kernels::active().name;
  j["mode"] = cfg.sim.mode == SimMode::quenched_xi ? "quenched_xi"
                                                   : "quenched_xi_and_Y";
  j["replicas"] = cfg.sim.replicas;
  j["threads"] = cfg.sim.threads;
  j["pass"] = pass;
  j["cap"] = json::object();
  j["cap"]["exceeded"] = cap_generation >= 0;
  if (cap_generation >= 0) j["cap"]["generation"] = cap_generation;
  j["outputs"] = outputs;
  if (extra)
    for (auto it = extra->begin(); it != extra->end(); ++it)
      j[it.key()] = it.value();
  write_text_file(fs::path(cfg.out_dir) / "manifest.json", j.dump(2) + "\n");
}

int run_simulate(const RunConfig& cfg) {
  SimConfig s = cfg.sim;
  s.t_eval = cfg.t_grid.values();

  std::vector<std::string> columns = {"replica", "generation", "total",
                                      "root_total", "rightmost", "leftmost"};
  for (std::size_t i = 0; i < s.t_eval.size(); ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "logZ_%02zu", i);
    columns.emplace_back(buf);
  }

  long cap_generation = -1;
  std::vector<std::vector<std::vector<std::string>>> rows_per_replica;
  try {
    rows_per_replica = simulate_ensemble(
        cfg.model, s, [&](Trajectory&& traj) {
          std::vector<std::vector<std::string>> rows;
          rows.reserve(traj.gens.size());
          for (std::size_t g = 0; g < traj.gens.size(); ++g) {
            const GenSummary& gs = traj.gens[g];
            std::vector<std::string> row = {
                format_number(static_cast<std::uint64_t>(traj.replica)),
                format_number(static_cast<std::uint64_t>(g)),
                format_number(gs.total),
                format_number(gs.root_total),
                format_number(gs.rightmost),
                format_number(gs.leftmost)};
            for (double v : gs.log_full) row.push_back(format_number(v));
            rows.push_back(std::move(row));
          }
          return rows;
        });
  } catch (const CapExceeded& e) {
    cap_generation = static_cast<long>(e.generation);
    std::cerr << "error: " << e.what() << "\n";
    write_manifest(cfg, "simulate", false, {}, cap_generation);
    return 1;
  }

  const fs::path csv_path = fs::path(cfg.out_dir) / "trajectories.csv";
  CsvWriter csv(csv_path);
  csv.header(columns);
  for (const auto& rows : rows_per_replica)
    for (const auto& row : rows) csv.row(row);

  // The CSV carries index-named transform columns; the grid values they
  // refer to live here.
  json extra;
  extra["t_grid"] = s.t_eval;
  write_manifest(cfg, "simulate", true, {"trajectories.csv"}, -1, &extra);
  if (!cfg.quiet)
    std::cout << "simulate: " << cfg.sim.replicas << " replica(s), "
              << cfg.sim.generations << " generations -> " << csv_path.string()
              << "\n";
  return 0;
}

int run_rates(const RunConfig& cfg) {
  const std::vector<double> t_grid = cfg.t_grid.values();
  const std::vector<double> x_grid = cfg.x_grid.values();

  json header;
  bool classified = true;
  RateTable table;
  try {
    table = build_rate_table(cfg.model, t_grid, x_grid);
  } catch (const UnclassifiedCase& e) {
    classified = false;
    header["case"] = "unclassified";
    header["detail"] = e.what();
  }

  if (classified) {
    CsvWriter tc(fs::path(cfg.out_dir) / "rates_t.csv");
    tc.header({"t", "lambda", "lambda_prime", "lambda_bar", "lambda_tilde"});
    for (std::size_t i = 0; i < t_grid.size(); ++i)
      tc.row({format_number(table.t_grid[i]), format_number(table.lambda_v[i]),
              format_number(table.lambda_prime_v[i]),
              format_number(table.lambda_bar_v[i]),
              format_number(table.lambda_tilde_v[i])});

    CsvWriter xc(fs::path(cfg.out_dir) / "rates_x.csv");
    xc.header({"x", "legendre_tilde"});
    for (std::size_t i = 0; i < x_grid.size(); ++i)
      xc.row({format_number(table.x_grid[i]),
              format_number(table.legendre_v[i])});

    header["t_minus"] = json_number(table.critical.t_minus);
    header["t_plus"] = json_number(table.critical.t_plus);
    header["slope_minus"] = json_number(table.critical.slope_minus);
    header["slope_plus"] = json_number(table.critical.slope_plus);
    header["t1"] = json_number(table.cases.t1);
    header["t2"] = json_number(table.cases.t2);
    header["case"] = ldp_case_name(table.cases.label);
    if (table.cases.has_exposed) {
      header["exposed"] = json::array({json_number(table.cases.exposed_lo),
                                       json_number(table.cases.exposed_hi)});
    } else {
      header["exposed"] = nullptr;
    }
    header["sigma2"] = json_number(table.sigma2);
  }
  write_text_file(fs::path(cfg.out_dir) / "rates.json", header.dump(2) + "\n");
  write_manifest(cfg, "rates", classified,
                 {"rates_t.csv", "rates_x.csv", "rates.json"});
  if (!cfg.quiet) {
    if (classified)
      std::cout << "rates: case " << ldp_case_name(table.cases.label)
                << ", t+ = " << format_number(table.critical.t_plus)
                << ", sigma2 = " << format_number(table.sigma2) << "\n";
    else
      std::cout << "rates: unclassified case, see rates.json\n";
  }
  return classified ? 0 : 1;
}

int run_verifier(const RunConfig& cfg, const std::string& name) {
  VerificationReport rep;
  long cap_generation = -1;
  try {
    if (name == "clt")
      rep = verify_clt(cfg);
    else if (name == "mdp")
      rep = verify_mdp(cfg);
    else if (name == "free_energy")
      rep = verify_free_energy(cfg);
    else if (name == "ldp")
      rep = verify_ldp(cfg);
    else if (name == "lp_rate")
      rep = verify_lp_rate(cfg);
    else if (name == "martingale")
      rep = verify_martingale(cfg);
    else
      rep = verify_decomposition(cfg);
  } catch (const CapExceeded& e) {
    std::cerr << "error: " << e.what()
              << " (lower verify n or raise max_particles)\n";
    write_manifest(cfg, "verify-" + name, false, {},
                   static_cast<long>(e.generation));
    return 1;
  }

  const std::string base = "verify_" + name;
  rep.write_json(fs::path(cfg.out_dir) / (base + ".json"));
  rep.write_csv(fs::path(cfg.out_dir) / (base + ".csv"));
  write_manifest(cfg, "verify-" + name, rep.pass,
                 {base + ".json", base + ".csv"}, cap_generation);

  if (!cfg.quiet) {
    for (const auto& c : rep.checks)
      std::cout << (c.pass ? "pass  " : "FAIL  ") << c.name
                << "  value=" << format_number(c.value)
                << " target=" << format_number(c.target)
                << " tol=" << format_number(c.tolerance) << "\n";
    std::cout << "verify-" << name << ": " << (rep.pass ? "PASS" : "FAIL")
              << "\n";
  }
  return rep.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"branching random walk with immigration: simulation, rate "
               "functions, limit-theorem verification"};
  app.require_subcommand(1);

  CliOverrides cli;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", cli.config_path, "config file (JSON)")
        ->required();
    sub->add_option("--seed", cli.seed, "override simulation.seed")
        ->each([&](const std::string&) { cli.seed_set = true; });
    sub->add_option("--out", cli.out_dir, "override output.dir");
    sub->add_option("--replicas", cli.replicas,
                    "override simulation.replicas")
        ->each([&](const std::string&) { cli.replicas_set = true; });
    sub->add_option("--threads", cli.threads, "override simulation.threads")
        ->each([&](const std::string&) { cli.threads_set = true; });
    sub->add_flag("--quiet", cli.quiet, "suppress progress output");
    sub->add_option("--kernel", cli.kernel,
                    "kernel variant: auto|scalar|avx2|neon");
  };

  CLI::App* sim = app.add_subcommand("simulate", "stream trajectories to CSV");
  CLI::App* rates_cmd =
      app.add_subcommand("rates", "tabulate the rate functions");
  std::vector<std::pair<std::string, std::string>> verifier_names = {
      {"verify-clt", "clt"},
      {"verify-mdp", "mdp"},
      {"verify-free-energy", "free_energy"},
      {"verify-ldp", "ldp"},
      {"verify-lp-rate", "lp_rate"},
      {"verify-martingale", "martingale"},
      {"verify-decomposition", "decomposition"}};
  std::vector<CLI::App*> verifier_subs;
  add_common(sim);
  add_common(rates_cmd);
  for (const auto& [cmd, id] : verifier_names)
    verifier_subs.push_back(app.add_subcommand(cmd, "verifier: " + id));
  for (CLI::App* sub : verifier_subs) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  if (!cli.kernel.empty() && !kernels::select(cli.kernel)) {
    std::cerr << "error: kernel variant '" << cli.kernel
              << "' is not available on this machine\n";
    return 2;
  }

  try {
    const RunConfig cfg = load_and_override(cli);

    const ValidationReport validation =
        validate(cfg.model, cfg.t_grid.values());
    if (!validation.ok()) {
      std::cerr << "config error: environment model failed validation\n"
                << validation.summary();
      return 2;
    }
    if (!validation.clean() && !cfg.quiet)
      std::cout << validation.summary();

    if (sim->parsed()) return run_simulate(cfg);
    if (rates_cmd->parsed()) return run_rates(cfg);
    for (std::size_t i = 0; i < verifier_subs.size(); ++i)
      if (verifier_subs[i]->parsed())
        return run_verifier(cfg, verifier_names[i].second);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
