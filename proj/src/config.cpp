// SPDX-License-Identifier: Apache-2.0

#include "brwire/config.hpp"

#include <json.hpp>

#include <set>

#include "brwire/io.hpp"

namespace brwire {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!ok.count(it.key())) fail(path + "." + it.key(), "unknown key");
}

const json& require(const json& obj, const std::string& path,
                    const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "missing");
  return *it;
}

double get_num(const json& obj, const std::string& path, const char* key) {
  const json& v = require(obj, path, key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

double get_num_or(const json& obj, const std::string& path, const char* key,
                  double dflt) {
  if (!obj.contains(key)) return dflt;
  return get_num(obj, path, key);
}

std::uint64_t get_uint(const json& obj, const std::string& path,
                       const char* key) {
  const json& v = require(obj, path, key);
  if (!v.is_number_unsigned() && !v.is_number_integer())
    fail(path + "." + key, "expected a non-negative integer");
  const auto i = v.get<std::int64_t>();
  if (i < 0) fail(path + "." + key, "expected a non-negative integer");
  return static_cast<std::uint64_t>(i);
}

std::uint64_t get_uint_or(const json& obj, const std::string& path,
                          const char* key, std::uint64_t dflt) {
  if (!obj.contains(key)) return dflt;
  return get_uint(obj, path, key);
}

std::string get_str(const json& obj, const std::string& path,
                    const char* key) {
  const json& v = require(obj, path, key);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

std::vector<double> get_num_list(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) fail(path, "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

DisplacementLaw parse_displacement(const json& obj, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  const std::string kind = get_str(obj, path, "kind");
  if (kind == "gaussian") {
    check_keys(obj, path, {"kind", "mean", "sd"});
    return DisplacementLaw::gaussian(get_num_or(obj, path, "mean", 0.0),
                                     get_num(obj, path, "sd"));
  }
  if (kind == "two_point") {
    check_keys(obj, path, {"kind", "offset"});
    return DisplacementLaw::two_point(get_num(obj, path, "offset"));
  }
  fail(path + ".kind", "expected gaussian or two_point");
}

OffspringLaw parse_offspring(const json& obj, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  const std::string kind = get_str(obj, path, "kind");
  if (kind == "fixed") {
    check_keys(obj, path, {"kind", "count"});
    return OffspringLaw::fixed(
        static_cast<std::uint32_t>(get_uint(obj, path, "count")));
  }
  if (kind == "categorical") {
    check_keys(obj, path, {"kind", "support", "probs"});
    const json& sup = require(obj, path, "support");
    if (!sup.is_array()) fail(path + ".support", "expected an array");
    std::vector<std::uint32_t> support;
    for (const auto& e : sup) {
      if (!e.is_number_integer() && !e.is_number_unsigned())
        fail(path + ".support", "expected integers");
      const auto i = e.get<std::int64_t>();
      if (i < 0) fail(path + ".support", "expected non-negative integers");
      support.push_back(static_cast<std::uint32_t>(i));
    }
    return OffspringLaw::categorical(
        std::move(support),
        get_num_list(require(obj, path, "probs"), path + ".probs"));
  }
  fail(path + ".kind", "expected fixed or categorical");
}

ImmigrationLaw parse_immigration(const json& obj, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  const std::string kind = get_str(obj, path, "kind");
  if (kind == "zero") {
    check_keys(obj, path, {"kind"});
    return ImmigrationLaw::zero();
  }
  if (kind == "fixed") {
    check_keys(obj, path, {"kind", "count", "position"});
    return ImmigrationLaw::fixed(
        static_cast<std::uint32_t>(get_uint(obj, path, "count")),
        parse_displacement(require(obj, path, "position"), path + ".position"));
  }
  if (kind == "poisson") {
    check_keys(obj, path, {"kind", "lambda", "position"});
    return ImmigrationLaw::poisson(
        get_num(obj, path, "lambda"),
        parse_displacement(require(obj, path, "position"), path + ".position"));
  }
  fail(path + ".kind", "expected zero, fixed or poisson");
}

EnvState parse_state(const json& obj, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  check_keys(obj, path, {"offspring", "displacement", "immigration", "centered"});
  EnvState s;
  s.offspring = parse_offspring(require(obj, path, "offspring"),
                                path + ".offspring");
  s.displacement = parse_displacement(require(obj, path, "displacement"),
                                      path + ".displacement");
  if (obj.contains("immigration"))
    s.immigration =
        parse_immigration(obj["immigration"], path + ".immigration");
  if (obj.contains("centered")) {
    if (!obj["centered"].is_boolean())
      fail(path + ".centered", "expected a boolean");
    s.centered = obj["centered"].get<bool>();
  }
  return s;
}

EnvModel parse_environment(const json& obj, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  check_keys(obj, path, {"kind", "states", "probs", "transition"});
  const std::string kind = get_str(obj, path, "kind");
  const json& st = require(obj, path, "states");
  if (!st.is_array() || st.empty())
    fail(path + ".states", "expected a non-empty array");
  std::vector<EnvState> states;
  for (std::size_t i = 0; i < st.size(); ++i)
    states.push_back(
        parse_state(st[i], path + ".states[" + std::to_string(i) + "]"));

  if (kind == "constant") {
    if (states.size() != 1)
      fail(path + ".states", "constant environment takes exactly one state");
    if (obj.contains("probs") || obj.contains("transition"))
      fail(path, "constant environment takes no probs/transition");
    return EnvModel::constant(std::move(states[0]));
  }
  if (kind == "iid") {
    if (obj.contains("transition"))
      fail(path + ".transition", "iid environment takes no transition");
    return EnvModel::iid(std::move(states),
                         get_num_list(require(obj, path, "probs"),
                                      path + ".probs"));
  }
  if (kind == "markov") {
    if (obj.contains("probs"))
      fail(path + ".probs", "markov environment derives its stationary law");
    const json& tr = require(obj, path, "transition");
    if (!tr.is_array()) fail(path + ".transition", "expected a matrix");
    std::vector<std::vector<double>> P;
    for (std::size_t i = 0; i < tr.size(); ++i)
      P.push_back(get_num_list(tr[i], path + ".transition[" +
                                          std::to_string(i) + "]"));
    return EnvModel::markov(std::move(states), std::move(P));
  }
  fail(path + ".kind", "expected constant, iid or markov");
}

GridSpec parse_grid(const json& obj, const std::string& path, GridSpec dflt) {
  if (!obj.is_object()) fail(path, "expected an object");
  check_keys(obj, path, {"min", "max", "points"});
  GridSpec g = dflt;
  g.min = get_num_or(obj, path, "min", dflt.min);
  g.max = get_num_or(obj, path, "max", dflt.max);
  g.points = get_uint_or(obj, path, "points", dflt.points);
  if (!(g.min < g.max) || g.points < 2)
    fail(path, "need min < max and points >= 2");
  return g;
}

std::vector<std::size_t> get_size_list(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of integers");
  std::vector<std::size_t> out;
  for (const auto& e : v) {
    if (!e.is_number_integer() && !e.is_number_unsigned())
      fail(path, "expected an array of integers");
    out.push_back(e.get<std::size_t>());
  }
  return out;
}

}  // namespace

std::vector<double> GridSpec::values() const {
  std::vector<double> v(points);
  for (std::size_t i = 0; i < points; ++i)
    v[i] = min + (max - min) * static_cast<double>(i) /
                     static_cast<double>(points - 1);
  return v;
}

RunConfig parse_config(const std::string& json_text,
                       const std::string& source_name) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source_name + ": " + e.what());
  }
  if (!root.is_object()) throw ConfigError(source_name + ": expected an object");
  check_keys(root, source_name,
             {"environment", "simulation", "grids", "output", "verify"});

  RunConfig cfg;
  cfg.model = parse_environment(require(root, source_name, "environment"),
                                source_name + ".environment");

  const std::string spath = source_name + ".simulation";
  const json& sim = require(root, source_name, "simulation");
  if (!sim.is_object()) fail(spath, "expected an object");
  check_keys(sim, spath,
             {"generations", "seed", "max_particles", "mode", "replicas",
              "threads"});
  cfg.sim.generations = get_uint_or(sim, spath, "generations", 10);
  if (cfg.sim.generations < 1) fail(spath + ".generations", "must be >= 1");
  cfg.sim.seed = get_uint_or(sim, spath, "seed", 1);
  cfg.sim.max_particles = get_uint_or(sim, spath, "max_particles", 30'000'000);
  if (cfg.sim.max_particles < 1) fail(spath + ".max_particles", "must be >= 1");
  cfg.sim.replicas = get_uint_or(sim, spath, "replicas", 1);
  cfg.sim.threads = get_uint_or(sim, spath, "threads", 0);
  if (sim.contains("mode")) {
    const std::string mode = get_str(sim, spath, "mode");
    if (mode == "quenched_xi")
      cfg.sim.mode = SimMode::quenched_xi;
    else if (mode == "quenched_xi_and_Y")
      cfg.sim.mode = SimMode::quenched_xi_and_Y;
    else
      fail(spath + ".mode", "expected quenched_xi or quenched_xi_and_Y");
  }

  if (root.contains("grids")) {
    const std::string gpath = source_name + ".grids";
    const json& grids = root["grids"];
    if (!grids.is_object()) fail(gpath, "expected an object");
    check_keys(grids, gpath, {"t", "x"});
    if (grids.contains("t"))
      cfg.t_grid = parse_grid(grids["t"], gpath + ".t", cfg.t_grid);
    if (grids.contains("x"))
      cfg.x_grid = parse_grid(grids["x"], gpath + ".x", cfg.x_grid);
  }

  if (root.contains("output")) {
    const std::string opath = source_name + ".output";
    const json& out = root["output"];
    if (!out.is_object()) fail(opath, "expected an object");
    check_keys(out, opath, {"dir", "quiet"});
    if (out.contains("dir")) cfg.out_dir = get_str(out, opath, "dir");
    if (out.contains("quiet")) {
      if (!out["quiet"].is_boolean()) fail(opath + ".quiet", "expected a boolean");
      cfg.quiet = out["quiet"].get<bool>();
    }
  }

  if (root.contains("verify")) {
    const std::string vpath = source_name + ".verify";
    const json& ver = root["verify"];
    if (!ver.is_object()) fail(vpath, "expected an object");
    check_keys(ver, vpath,
               {"clt", "mdp", "free_energy", "ldp", "lp_rate", "martingale",
                "decomposition"});

    if (ver.contains("clt")) {
      const json& o = ver["clt"];
      const std::string p = vpath + ".clt";
      check_keys(o, p, {"n", "trend_n", "trend_seeds", "ks_threshold", "x_min",
                        "x_max", "x_points"});
      cfg.clt.n = get_uint_or(o, p, "n", cfg.clt.n);
      if (o.contains("trend_n"))
        cfg.clt.trend_n = get_size_list(o["trend_n"], p + ".trend_n");
      cfg.clt.trend_seeds = get_uint_or(o, p, "trend_seeds", cfg.clt.trend_seeds);
      cfg.clt.ks_threshold =
          get_num_or(o, p, "ks_threshold", cfg.clt.ks_threshold);
      cfg.clt.x_min = get_num_or(o, p, "x_min", cfg.clt.x_min);
      cfg.clt.x_max = get_num_or(o, p, "x_max", cfg.clt.x_max);
      cfg.clt.x_points = get_uint_or(o, p, "x_points", cfg.clt.x_points);
    }
    if (ver.contains("mdp")) {
      const json& o = ver["mdp"];
      const std::string p = vpath + ".mdp";
      check_keys(o, p, {"alpha", "x", "tilt_t", "n_list", "stat_tolerance",
                        "tilt_tolerance"});
      cfg.mdp.alpha = get_num_or(o, p, "alpha", cfg.mdp.alpha);
      if (!(cfg.mdp.alpha > 0.5 && cfg.mdp.alpha < 1.0))
        fail(p + ".alpha", "must lie in (0.5, 1)");
      cfg.mdp.x = get_num_or(o, p, "x", cfg.mdp.x);
      cfg.mdp.tilt_t = get_num_or(o, p, "tilt_t", cfg.mdp.tilt_t);
      if (o.contains("n_list"))
        cfg.mdp.n_list = get_size_list(o["n_list"], p + ".n_list");
      cfg.mdp.stat_tolerance =
          get_num_or(o, p, "stat_tolerance", cfg.mdp.stat_tolerance);
      cfg.mdp.tilt_tolerance =
          get_num_or(o, p, "tilt_tolerance", cfg.mdp.tilt_tolerance);
    }
    if (ver.contains("free_energy")) {
      const json& o = ver["free_energy"];
      const std::string p = vpath + ".free_energy";
      check_keys(o, p, {"n", "t_inside", "t_outside", "tol_inside",
                        "tol_outside", "upper_epsilon"});
      cfg.free_energy.n = get_uint_or(o, p, "n", cfg.free_energy.n);
      if (o.contains("t_inside"))
        cfg.free_energy.t_inside =
            get_num_list(o["t_inside"], p + ".t_inside");
      if (o.contains("t_outside"))
        cfg.free_energy.t_outside =
            get_num_list(o["t_outside"], p + ".t_outside");
      cfg.free_energy.tol_inside =
          get_num_or(o, p, "tol_inside", cfg.free_energy.tol_inside);
      cfg.free_energy.tol_outside =
          get_num_or(o, p, "tol_outside", cfg.free_energy.tol_outside);
      cfg.free_energy.upper_epsilon =
          get_num_or(o, p, "upper_epsilon", cfg.free_energy.upper_epsilon);
    }
    if (ver.contains("ldp")) {
      const json& o = ver["ldp"];
      const std::string p = vpath + ".ldp";
      check_keys(o, p, {"n", "interval", "empty_interval", "tolerance"});
      cfg.ldp.n = get_uint_or(o, p, "n", cfg.ldp.n);
      if (o.contains("interval")) {
        const auto v = get_num_list(o["interval"], p + ".interval");
        if (v.size() != 2 || !(v[0] < v[1]))
          fail(p + ".interval", "expected [lo, hi] with lo < hi");
        cfg.ldp.interval_lo = v[0];
        cfg.ldp.interval_hi = v[1];
      }
      if (o.contains("empty_interval")) {
        const auto v = get_num_list(o["empty_interval"], p + ".empty_interval");
        if (v.size() != 2 || !(v[0] < v[1]))
          fail(p + ".empty_interval", "expected [lo, hi] with lo < hi");
        cfg.ldp.empty_lo = v[0];
        cfg.ldp.empty_hi = v[1];
      }
      cfg.ldp.tolerance = get_num_or(o, p, "tolerance", cfg.ldp.tolerance);
    }
    if (ver.contains("lp_rate")) {
      const json& o = ver["lp_rate"];
      const std::string p = vpath + ".lp_rate";
      check_keys(o, p, {"t", "p", "n", "replicas", "epsilon"});
      cfg.lp_rate.t = get_num_or(o, p, "t", cfg.lp_rate.t);
      cfg.lp_rate.p = get_num_or(o, p, "p", cfg.lp_rate.p);
      if (!(cfg.lp_rate.p > 1.0 && cfg.lp_rate.p <= 2.0))
        fail(p + ".p", "must lie in (1, 2]");
      cfg.lp_rate.n = get_uint_or(o, p, "n", cfg.lp_rate.n);
      cfg.lp_rate.replicas = get_uint_or(o, p, "replicas", cfg.lp_rate.replicas);
      cfg.lp_rate.epsilon = get_num_or(o, p, "epsilon", cfg.lp_rate.epsilon);
    }
    if (ver.contains("martingale")) {
      const json& o = ver["martingale"];
      const std::string p = vpath + ".martingale";
      check_keys(o, p, {"t", "n", "replicas", "se_multiplier"});
      cfg.martingale.t = get_num_or(o, p, "t", cfg.martingale.t);
      cfg.martingale.n = get_uint_or(o, p, "n", cfg.martingale.n);
      cfg.martingale.replicas =
          get_uint_or(o, p, "replicas", cfg.martingale.replicas);
      cfg.martingale.se_multiplier =
          get_num_or(o, p, "se_multiplier", cfg.martingale.se_multiplier);
    }
    if (ver.contains("decomposition")) {
      const json& o = ver["decomposition"];
      const std::string p = vpath + ".decomposition";
      check_keys(o, p, {"n", "t_list", "seeds", "threshold"});
      cfg.decomposition.n = get_uint_or(o, p, "n", cfg.decomposition.n);
      if (o.contains("t_list"))
        cfg.decomposition.t_list = get_num_list(o["t_list"], p + ".t_list");
      cfg.decomposition.seeds =
          get_uint_or(o, p, "seeds", cfg.decomposition.seeds);
      cfg.decomposition.threshold =
          get_num_or(o, p, "threshold", cfg.decomposition.threshold);
    }
  }

  // Canonical serialization: nlohmann objects iterate key-sorted, so a
  // compact dump is already order-independent.
  cfg.canonical = root.dump();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(cfg.canonical)));
  cfg.hash = buf;
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw ConfigError("config file not found: " + path.string());
  return parse_config(read_text_file(path), path.filename().string());
}

}  // namespace brwire
