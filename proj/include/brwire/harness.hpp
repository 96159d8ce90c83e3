// SPDX-License-Identifier: Apache-2.0
//
// Statistical verification of the limit theorems against simulator output
// and the analytic rate layer. Almost-sure statements are checked along one
// (or a few) quenched environment realizations with the randomness budget
// spent on generations; ensemble statements fix (environment, immigration)
// and spend replicas on branching noise. Every report embeds seed, replica
// count, config hash and kernel name, enough to re-run bit-identically.
//
// Finite-n tolerances are acceptance choices echoed into the reports; the
// theorems themselves come without convergence rates.

#pragma once

#include <string>
#include <vector>

#include "brwire/config.hpp"
#include "brwire/rates.hpp"

namespace brwire {

struct CheckItem {
  std::string name;
  double value = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string note;
};

struct ReportTable {
  std::string name;  // artifact suffix
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct VerificationReport {
  std::string id;
  bool pass = true;
  std::vector<CheckItem> checks;
  std::vector<std::string> table_columns;
  std::vector<std::vector<std::string>> table;
  std::vector<ReportTable> aux_tables;
  std::uint64_t seed = 0;
  std::size_t replicas = 1;
  std::string config_hash;
  std::string kernel;
  std::string note;

  void add(CheckItem item);
  std::string to_json_string() const;
  // Writes the statistic table; aux tables land next to it as
  // <stem>_<name>.csv.
  void write_csv(const std::filesystem::path& path) const;
  void write_json(const std::filesystem::path& path) const;
};

VerificationReport verify_clt(const RunConfig& cfg);
VerificationReport verify_mdp(const RunConfig& cfg);
VerificationReport verify_free_energy(const RunConfig& cfg);
VerificationReport verify_ldp(const RunConfig& cfg);
VerificationReport verify_lp_rate(const RunConfig& cfg);
VerificationReport verify_martingale(const RunConfig& cfg);
VerificationReport verify_decomposition(const RunConfig& cfg);

}  // namespace brwire
