// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "brwire/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kBin = BRWIRE_BIN;
const fs::path kConfigs = CONFIG_DIR;

int run(const std::string& args) {
  const std::string cmd = kBin.string() + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("brwire_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("missing config and bad config exit with status 2") {
  CHECK(run("rates --config /nonexistent/nope.json") == 2);

  const fs::path dir = fresh_dir("badcfg");
  brwire::write_text_file(dir / "bad.json", "{\"unknown_key\": 1}");
  CHECK(run("rates --config " + (dir / "bad.json").string()) == 2);

  brwire::write_text_file(dir / "invalid.json", R"({
    "environment": {"kind": "constant", "states": [{
      "offspring": {"kind": "categorical", "support": [0, 2], "probs": [0.5, 0.5]},
      "displacement": {"kind": "gaussian", "sd": 1.0}}]},
    "simulation": {"generations": 2}})");
  CHECK(run("rates --config " + (dir / "invalid.json").string()) == 2);
}

TEST_CASE("unknown kernel name exits with status 2") {
  CHECK(run("rates --config " + (kConfigs / "base.json").string() +
            " --kernel nope") == 2);
}

TEST_CASE("rates subcommand writes tables and a manifest") {
  const fs::path out = fresh_dir("rates");
  CHECK(run("rates --config " + (kConfigs / "base.json").string() + " --out " +
            out.string() + " --quiet") == 0);
  CHECK(fs::exists(out / "rates_t.csv"));
  CHECK(fs::exists(out / "rates_x.csv"));
  CHECK(fs::exists(out / "rates.json"));
  const std::string manifest = brwire::read_text_file(out / "manifest.json");
  CHECK(manifest.find("\"subcommand\": \"rates\"") != std::string::npos);
  CHECK(manifest.find("\"config_hash\"") != std::string::npos);

  const std::string header = brwire::read_text_file(out / "rates.json");
  CHECK(header.find("\"case\": \"I\"") != std::string::npos);
  CHECK(header.find("1.177410") != std::string::npos);
}

TEST_CASE("simulate: small run, reproducible bytes across thread counts") {
  const fs::path dir = fresh_dir("sim");
  brwire::write_text_file(dir / "cfg.json", R"({
    "environment": {"kind": "constant", "states": [{
      "offspring": {"kind": "fixed", "count": 2},
      "displacement": {"kind": "gaussian", "sd": 1.0},
      "immigration": {"kind": "poisson", "lambda": 1.0,
                      "position": {"kind": "gaussian", "sd": 1.0}}}]},
    "simulation": {"generations": 8, "seed": 11, "replicas": 6,
                    "mode": "quenched_xi_and_Y"},
    "grids": {"t": {"min": -1.0, "max": 1.0, "points": 5}}})");

  const fs::path out1 = dir / "t1";
  const fs::path out2 = dir / "t4";
  CHECK(run("simulate --config " + (dir / "cfg.json").string() + " --out " +
            out1.string() + " --threads 1 --quiet") == 0);
  CHECK(run("simulate --config " + (dir / "cfg.json").string() + " --out " +
            out2.string() + " --threads 4 --quiet") == 0);
  const std::string csv1 = brwire::read_text_file(out1 / "trajectories.csv");
  const std::string csv2 = brwire::read_text_file(out2 / "trajectories.csv");
  CHECK(csv1 == csv2);
  CHECK(csv1.find("replica,generation,total") == 0);

  // repeated invocation is byte-identical too
  const fs::path out3 = dir / "again";
  CHECK(run("simulate --config " + (dir / "cfg.json").string() + " --out " +
            out3.string() + " --quiet") == 0);
  CHECK(brwire::read_text_file(out3 / "trajectories.csv") == csv1);
}

TEST_CASE("simulate honors the particle cap with exit 1 and a manifest") {
  const fs::path dir = fresh_dir("cap");
  brwire::write_text_file(dir / "cfg.json", R"({
    "environment": {"kind": "constant", "states": [{
      "offspring": {"kind": "fixed", "count": 2},
      "displacement": {"kind": "gaussian", "sd": 1.0}}]},
    "simulation": {"generations": 24, "seed": 1, "max_particles": 4096}})");
  CHECK(run("simulate --config " + (dir / "cfg.json").string() + " --out " +
            (dir / "out").string() + " --quiet") == 1);
  const std::string manifest =
      brwire::read_text_file(dir / "out" / "manifest.json");
  CHECK(manifest.find("\"exceeded\": true") != std::string::npos);
  CHECK(manifest.find("\"generation\": 13") != std::string::npos);
}

TEST_CASE("verifier subcommand: pass and forced-fail exit codes") {
  const fs::path dir = fresh_dir("verify");
  brwire::write_text_file(dir / "cfg.json", R"({
    "environment": {"kind": "constant", "states": [{
      "offspring": {"kind": "fixed", "count": 2},
      "displacement": {"kind": "gaussian", "sd": 1.0},
      "immigration": {"kind": "poisson", "lambda": 1.0,
                      "position": {"kind": "gaussian", "sd": 1.0}}}]},
    "simulation": {"generations": 8, "seed": 5},
    "verify": {"decomposition": {"n": 8, "t_list": [0.0, 1.0], "seeds": 2},
                "martingale": {"t": 0.5, "n": 5, "replicas": 200}}})");

  CHECK(run("verify-decomposition --config " + (dir / "cfg.json").string() +
            " --out " + (dir / "dec").string() + " --quiet") == 0);
  CHECK(fs::exists(dir / "dec" / "verify_decomposition.json"));
  CHECK(fs::exists(dir / "dec" / "verify_decomposition.csv"));

  CHECK(run("verify-martingale --config " + (dir / "cfg.json").string() +
            " --out " + (dir / "mart").string() + " --quiet") == 0);

  // absurd threshold forces a verification failure -> exit 1 (residual is
  // floating noise, nonzero once immigrant terms enter the sum)
  brwire::write_text_file(dir / "hard.json", R"({
    "environment": {"kind": "constant", "states": [{
      "offspring": {"kind": "fixed", "count": 2},
      "displacement": {"kind": "gaussian", "sd": 1.0},
      "immigration": {"kind": "fixed", "count": 2,
                      "position": {"kind": "gaussian", "sd": 1.0}}}]},
    "simulation": {"generations": 8, "seed": 5},
    "verify": {"decomposition": {"n": 8, "t_list": [1.0], "seeds": 1,
                                  "threshold": 1e-30}}})");
  CHECK(run("verify-decomposition --config " + (dir / "hard.json").string() +
            " --out " + (dir / "hard").string() + " --quiet") == 1);
}

TEST_CASE("BRWIRE_KERNEL environment variable selects the kernel") {
  const fs::path out = fresh_dir("kern_env");
  const std::string cmd = "BRWIRE_KERNEL=scalar " + kBin.string() +
                          " rates --config " +
                          (kConfigs / "base.json").string() + " --out " +
                          out.string() + " --quiet >/dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  CHECK(brwire::read_text_file(out / "manifest.json")
            .find("\"kernel\": \"scalar\"") != std::string::npos);
}

TEST_CASE("scalar kernel override produces self-consistent output") {
  const fs::path out_a = fresh_dir("kern_a");
  const fs::path out_b = fresh_dir("kern_b");
  const std::string cfg = (kConfigs / "base.json").string();
  CHECK(run("rates --config " + cfg + " --out " + out_a.string() +
            " --kernel scalar --quiet") == 0);
  CHECK(run("rates --config " + cfg + " --out " + out_b.string() +
            " --kernel scalar --quiet") == 0);
  CHECK(brwire::read_text_file(out_a / "rates_t.csv") ==
        brwire::read_text_file(out_b / "rates_t.csv"));
  const std::string manifest = brwire::read_text_file(out_a / "manifest.json");
  CHECK(manifest.find("\"kernel\": \"scalar\"") != std::string::npos);
}
