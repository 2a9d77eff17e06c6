// Copyright 2026 The iterqpe authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include "iterqpe/run.hpp"

using namespace iterqpe;
using namespace iterqpe::run;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out, err;
};

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("iterqpe_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

CliResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(ITERQPE_CLI_BINARY) + " " + args + " > " +
                          out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json base_config() {
  json doc;
  doc["model"]["spin_star"] = {{"couplings", {0.9, 1.7}}};
  doc["scheme"] = {{"kind", "repetitive"}, {"m", 24}, {"tau", 0.9}, {"phi", 0.3}};
  doc["sampling"] = {{"n_samples", 6000}, {"seed", 17}};
  doc["estimation"] = {{"expected_peaks", 4}};
  return doc;
}

fs::path write_config(const fs::path& dir, const json& doc, const std::string& name = "cfg.json") {
  const fs::path p = dir / name;
  std::ofstream out(p);
  out << doc.dump(2) << "\n";
  return p;
}

long long printed_count(const std::string& out) {
  std::smatch m;
  REQUIRE(std::regex_search(out, m, std::regex("= ([0-9]+)")));
  return std::stoll(m[1].str());
}

} // namespace

TEST_CASE("config_round_trip") {
  json doc = base_config();
  doc["noise"] = {{"gamma", 0.02},
                  {"lindblad", {{{"op", "sz"}, {"qubit", 1}, {"rate", 0.04}}}}};
  const RunConfig cfg = RunConfig::parse(doc);
  CHECK(cfg.scheme.m == 24);
  CHECK(cfg.noise_gamma == 0.02);
  REQUIRE(cfg.jumps.size() == 1);
  CHECK(cfg.jumps[0].qubit == 1);

  // The echo re-parses to the same effective configuration.
  const json echoed = cfg.echo();
  CHECK(RunConfig::parse(echoed).echo() == echoed);

  // Schema violations map to ConfigError.
  json bad = base_config();
  bad.erase("model");
  CHECK_THROWS_AS((void)RunConfig::parse(bad), ConfigError);
  bad = base_config();
  bad["scheme"]["kind"] = "magic";
  CHECK_THROWS_AS((void)RunConfig::parse(bad), ConfigError);
  bad = base_config();
  bad["scheme"]["tau"] = -1.0;
  CHECK_THROWS_AS((void)RunConfig::parse(bad), ConfigError);
  bad = base_config();
  bad["sampling"]["n_samples"] = -5;
  CHECK_THROWS_AS((void)RunConfig::parse(bad), ConfigError);
  bad = base_config();
  bad["noise"] = {{"gamma", 0.02}, {"omega", {0.1, 0.2}}};
  CHECK_THROWS_AS((void)RunConfig::parse(bad), ConfigError);
  bad = base_config();
  bad["noise"] = {{"lindblad", {{{"op", "sx"}, {"rate", 0.1}}}}};
  CHECK_THROWS_AS((void)RunConfig::parse(bad), ConfigError);
  bad = base_config();
  bad["sweep"] = {{"key", "tau"}, {"values", {1.0}}};
  CHECK_THROWS_AS((void)RunConfig::parse(bad), ConfigError);
  bad = base_config();
  bad["sweep"] = {{"key", "m"}, {"values", json::array()}};
  CHECK_THROWS_AS((void)RunConfig::parse(bad), ConfigError);
  bad = base_config();
  bad["scheme"] = {{"kind", "adaptive"}, {"m", 6}, {"tau0", 2.0}, {"tau0_factor", 1.5}};
  CHECK_THROWS_AS((void)RunConfig::parse(bad), ConfigError);
  bad = base_config();
  bad["init"] = {{"kind", "cat_state"}};
  CHECK_THROWS_AS((void)RunConfig::parse(bad), ConfigError);
}

TEST_CASE("simulate_determinism") {
  const auto dir = fresh_dir("sim");
  const auto cfg = write_config(dir, base_config());

  const auto a = fresh_dir("sim_a");
  const auto b = fresh_dir("sim_b");
  CHECK(run_cli("simulate " + cfg.string() + " --out-dir " + a.string(), dir).exit_code == ok);
  CHECK(run_cli("simulate " + cfg.string() + " --out-dir " + b.string() + " --workers 7", dir)
            .exit_code == ok);
  CHECK(slurp(a / "run.csv") == slurp(b / "run.csv"));
  CHECK(slurp(a / "run.csv").starts_with("xi,count\n"));
  CHECK(slurp(a / "run.csv").find("\r") == std::string::npos);

  // Rerunning the echoed config reproduces the histogram bit for bit.
  const json document = json::parse(slurp(a / "run.json"));
  const auto echo_cfg = write_config(dir, document["config"], "echo.json");
  const auto c = fresh_dir("sim_c");
  CHECK(run_cli("simulate " + echo_cfg.string() + " --out-dir " + c.string(), dir).exit_code == ok);
  CHECK(slurp(a / "run.csv") == slurp(c / "run.csv"));
  CHECK(json::parse(slurp(c / "run.json"))["fingerprint"] == document["fingerprint"]);

  // A different seed moves counts; atomic rewrite leaves no stale bytes.
  CHECK(run_cli("simulate " + cfg.string() + " --out-dir " + a.string() + " --seed 99", dir)
            .exit_code == ok);
  CHECK(slurp(a / "run.csv") != slurp(b / "run.csv"));
  CHECK(run_cli("simulate " + cfg.string() + " --out-dir " + a.string(), dir).exit_code == ok);
  CHECK(slurp(a / "run.csv") == slurp(b / "run.csv"));
  CHECK_FALSE(fs::exists(a / "run.csv.tmp"));

  // Plot emission and the environment-variable output directory.
  const auto d = fresh_dir("sim_d");
  CHECK(run_cli("simulate " + cfg.string() + " --out-dir " + d.string() + " --emit-plots", dir)
            .exit_code == ok);
  CHECK(slurp(d / "run.gp").find("run.csv") != std::string::npos);
  const auto e = fresh_dir("sim_e");
  CliResult env_run;
  {
    const std::string cmd = "ITERQPE_OUT_DIR=" + e.string() + " " + ITERQPE_CLI_BINARY +
                            " simulate " + cfg.string() + " > /dev/null 2>&1";
    env_run.exit_code = WEXITSTATUS(std::system(cmd.c_str()));
  }
  CHECK(env_run.exit_code == ok);
  CHECK(fs::exists(e / "run.json"));

  // Estimates land on the model eigenvalues.
  const json estimates = document["estimates"];
  REQUIRE(estimates.size() == 4);
  CHECK(document["delta"].get<double>() <= 0.1);
}

TEST_CASE("simulate_degenerate_and_errors") {
  const auto dir = fresh_dir("err");

  json zero = base_config();
  zero["sampling"]["n_samples"] = 0;
  const auto zero_cfg = write_config(dir, zero, "zero.json");
  const auto z = fresh_dir("err_z");
  const auto rz = run_cli("simulate " + zero_cfg.string() + " --out-dir " + z.string(), dir);
  CHECK(rz.exit_code == ok);
  CHECK(rz.err.find("warning") != std::string::npos);
  const json zdoc = json::parse(slurp(z / "run.json"));
  CHECK(zdoc["histogram"]["total"] == 0);
  CHECK_FALSE(zdoc.contains("estimates"));

  // Exit 1: unparseable and schema-invalid configs.
  const fs::path broken = dir / "broken.json";
  std::ofstream(broken) << "{ not json";
  CHECK(run_cli("simulate " + broken.string(), dir).exit_code == config_error);
  json missing = base_config();
  missing.erase("sampling");
  CHECK(run_cli("simulate " + write_config(dir, missing, "missing.json").string(), dir)
            .exit_code == config_error);

  // Exit 2: numeric failure (aliased repetitive inversion against truth).
  json aliased = base_config();
  aliased["scheme"]["tau"] = 1.35; // 2 v tau + phi leaves the principal branch
  aliased.erase("estimation");     // folded peaks merge, so no fixed peak count
  const auto a = fresh_dir("err_a");
  const auto ra = run_cli(
      "simulate " + write_config(dir, aliased, "aliased.json").string() + " --out-dir " + a.string(),
      dir);
  CHECK(ra.exit_code == numeric_error);
  CHECK(ra.err.find("aliasing") != std::string::npos);

  // Exit 3: unreadable config and unusable output directory.
  CHECK(run_cli("simulate " + (dir / "nope.json").string(), dir).exit_code == io_error);
  const fs::path blocker = dir / "file_not_dir";
  std::ofstream(blocker) << "x";
  CHECK(run_cli("simulate " + write_config(dir, base_config()).string() + " --out-dir " +
                    (blocker / "sub").string(),
                dir)
            .exit_code == io_error);
}

TEST_CASE("sweep") {
  const auto dir = fresh_dir("sweep");

  // A single-point sweep writes the same histogram as simulate.
  json single = base_config();
  single["sweep"] = {{"key", "m"}, {"values", {24.0}}};
  const auto s1 = fresh_dir("sweep_one");
  CHECK(run_cli("sweep " + write_config(dir, single, "one.json").string() + " --out-dir " +
                    s1.string(),
                dir)
            .exit_code == ok);
  const auto sim = fresh_dir("sweep_sim");
  CHECK(run_cli("simulate " + write_config(dir, base_config()).string() + " --out-dir " +
                    sim.string(),
                dir)
            .exit_code == ok);
  CHECK(slurp(s1 / "sweep_0.csv") == slurp(sim / "run.csv"));
  CHECK(slurp(s1 / "sweep.csv").starts_with("axis,total_time,delta\n"));

  // t-axis: requested times map onto round counts, fit reports the slope.
  json tsweep = base_config();
  tsweep["sampling"]["n_samples"] = 12000;
  tsweep["sweep"] = {{"key", "t"}, {"values", {21.6, 28.8, 43.2, 57.6}}, {"fit", true}};
  const auto s2 = fresh_dir("sweep_t");
  const auto rt = run_cli("sweep " + write_config(dir, tsweep, "t.json").string() + " --out-dir " +
                              s2.string(),
                          dir);
  CHECK(rt.exit_code == ok);
  const json summary = json::parse(slurp(s2 / "sweep.json"));
  REQUIRE(summary["points"].size() == 4);
  CHECK(summary["points"][0]["total_time"].get<double>() == doctest::Approx(21.6));
  CHECK(summary["points"][3]["total_time"].get<double>() == doctest::Approx(57.6));
  CHECK(summary["fit"]["slope"].get<double>() < 0.0);
  CHECK(rt.out.find("slope") != std::string::npos);

  // Sweep without an axis is a config error.
  CHECK(run_cli("sweep " + write_config(dir, base_config(), "noaxis.json").string(), dir)
            .exit_code == config_error);
}

TEST_CASE("spectrum") {
  const auto dir = fresh_dir("spec");

  json noiseless = base_config();
  const auto s1 = fresh_dir("spec_clean");
  const auto r1 = run_cli("spectrum " + write_config(dir, noiseless).string() + " --out-dir " +
                              s1.string(),
                          dir);
  CHECK(r1.exit_code == ok);
  CHECK(r1.out.find("unit-circle eigenvalues: 4") != std::string::npos);
  const json doc = json::parse(slurp(s1 / "spectrum.json"));
  int fixed = 0;
  for (const auto& row : doc["eigenvalues"])
    if (row["class"] == "fixed") ++fixed;
  CHECK(fixed == 4);
  CHECK(doc["window_nonempty"] == true);

  // Tilted axes with gamma = 0.02: metastable window opens and is reported.
  json noisy = base_config();
  noisy["model"]["spin_star"] = {{"couplings", {2.6, 5.2}},
                                 {"axes", {{0.6, 0.0, 0.8}, {0.0, 0.6, 0.8}}}};
  noisy["scheme"]["tau"] = 0.5;
  noisy["scheme"]["phi"] = 1.5707963267948966;
  noisy["noise"] = {{"gamma", 0.02}};
  const auto s2 = fresh_dir("spec_noisy");
  const auto r2 = run_cli("spectrum " + write_config(dir, noisy, "noisy.json").string() +
                              " --out-dir " + s2.string(),
                          dir);
  CHECK(r2.exit_code == ok);
  const json ndoc = json::parse(slurp(s2 / "spectrum.json"));
  CHECK(ndoc["window_nonempty"] == true);
  CHECK(ndoc["m_low"].get<double>() < ndoc["m_high"].get<double>());

  // Defective input: a Jordan-block dense operator is not Hermitian.
  const fs::path mat = dir / "defective.json";
  std::ofstream(mat) << R"({"real": [[0.0, 1.0], [0.0, 0.0]]})";
  json defective;
  defective["model"]["dense_file"] = mat.string();
  defective["scheme"] = base_config()["scheme"];
  defective["sampling"] = base_config()["sampling"];
  CHECK(run_cli("spectrum " + write_config(dir, defective, "defective.json").string(), dir)
            .exit_code == config_error);
}

TEST_CASE("samplesize") {
  const auto dir = fresh_dir("size");

  auto r = run_cli("samplesize --delta 0.01", dir);
  CHECK(r.exit_code == ok);
  CHECK(r.out == "N = 18445\n");

  // Doubling t: adaptive counts drop 16x (t^-4), repetitive 8x (t^-3).
  const auto n_a8 = printed_count(run_cli("samplesize --eta 1e-4 --m 8 --scheme adaptive", dir).out);
  const auto n_a9 = printed_count(run_cli("samplesize --eta 1e-4 --m 9 --scheme adaptive", dir).out);
  CHECK(double(n_a8) / double(n_a9) == doctest::Approx(16.0).epsilon(0.01));
  const auto n_r = printed_count(run_cli("samplesize --eta 1e-4 --m 50 --scheme repetitive", dir).out);
  const auto n_r2 =
      printed_count(run_cli("samplesize --eta 1e-4 --m 100 --scheme repetitive", dir).out);
  CHECK(double(n_r) / double(n_r2) == doctest::Approx(8.0).epsilon(0.01));

  CHECK(run_cli("samplesize", dir).exit_code == config_error);
  CHECK(run_cli("samplesize --delta -0.5", dir).exit_code == config_error);
  CHECK(run_cli("samplesize --eta 0 --m 4", dir).exit_code == config_error);
}
