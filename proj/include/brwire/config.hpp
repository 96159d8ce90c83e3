// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: one JSON file feeds every subcommand, so the model
// used by the rate layer and the one driving the simulator can never
// drift apart. Unknown keys are rejected with their path; the config hash
// is taken over a canonical (key-sorted) serialization and is therefore
// stable under key reordering.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "brwire/simulator.hpp"

namespace brwire {

struct GridSpec {
  double min = -4.0;
  double max = 4.0;
  std::size_t points = 81;
  std::vector<double> values() const;
};

struct CltParams {
  std::size_t n = 18;
  std::vector<std::size_t> trend_n = {10, 14, 18};
  std::size_t trend_seeds = 5;
  double ks_threshold = 0.05;
  double x_min = -4.0, x_max = 4.0;
  std::size_t x_points = 161;
};

struct MdpParams {
  double alpha = 0.7;
  double x = 1.0;
  double tilt_t = 1.0;
  std::vector<std::size_t> n_list = {10, 14, 18, 22};
  double stat_tolerance = 0.2;
  double tilt_tolerance = 0.1;
};

struct FreeEnergyParams {
  std::size_t n = 20;
  std::vector<double> t_inside = {-1.0, -0.5, 0.0, 0.5, 1.0};
  std::vector<double> t_outside = {-2.0, 2.0};
  double tol_inside = 0.05;
  double tol_outside = 0.15;
  double upper_epsilon = 0.1;
};

struct LdpParams {
  std::size_t n = 20;
  double interval_lo = 0.5, interval_hi = 0.8;
  double empty_lo = 1.3, empty_hi = 1.5;
  double tolerance = 0.1;
};

struct LpRateParams {
  double t = 0.5;
  double p = 2.0;
  std::size_t n = 14;
  std::size_t replicas = 200;
  double epsilon = 0.1;
};

struct MartingaleParams {
  double t = 1.0;
  std::size_t n = 10;
  std::size_t replicas = 500;
  double se_multiplier = 3.0;
};

struct DecompositionParams {
  std::size_t n = 12;
  std::vector<double> t_list = {-2.0, -1.0, 0.0, 1.0, 2.0};
  std::size_t seeds = 20;
  double threshold = 1e-9;
};

struct RunConfig {
  EnvModel model;
  SimConfig sim;  // generations/seed/cap/mode/replicas/threads from the file
  GridSpec t_grid;
  GridSpec x_grid{-1.5, 1.5, 61};
  std::string out_dir = "out";
  bool quiet = false;

  CltParams clt;
  MdpParams mdp;
  FreeEnergyParams free_energy;
  LdpParams ldp;
  LpRateParams lp_rate;
  MartingaleParams martingale;
  DecompositionParams decomposition;

  std::string hash;       // 16 hex digits over the canonical serialization
  std::string canonical;  // key-sorted JSON text
};

RunConfig parse_config(const std::string& json_text,
                       const std::string& source_name);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace brwire
