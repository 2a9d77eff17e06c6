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

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "iterqpe/analysis.hpp"

namespace iterqpe::run {

// Exit-code contract, stable across releases.
enum ExitCode : int { ok = 0, config_error = 1, numeric_error = 2, io_error = 3 };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SchemeConfig {
  Scheme kind = Scheme::repetitive;
  int m = 1;
  double tau = 0.0;    // repetitive
  double phi = 0.0;    // repetitive
  double tau0 = 0.0;   // adaptive scale; 0 selects ||V||
  bool signed_mode = false;
};

struct SweepAxis {
  std::string key; // "m", "gamma" or "t"
  std::vector<double> values;
  bool fit = false;
};

/// One experiment: model + scheme + noise + sampling + init + output knobs.
/// Parsed from a single JSON document; `echo()` serializes back the effective
/// values so results are rerunnable verbatim.
struct RunConfig {
  model::SpinStarParams spin_star;
  bool dense_model = false;
  Matrix dense_operator;

  SchemeConfig scheme;

  std::vector<double> noise_omega;     // explicit coherent shifts
  double noise_gamma = 0.0;            // or relative strength: omega_j = (gamma/2) A_j
  struct Jump {
    std::string op; // "sz" or "sm"
    int qubit = 0;
    double rate = 0.0;
  };
  std::vector<Jump> jumps;

  int n_samples = 0;
  std::uint64_t seed = 0;
  sampler::InitialState::Kind init = sampler::InitialState::Kind::equal_superposition;
  int expected_peaks = -1;
  int workers = 0; // 0: hardware concurrency

  std::optional<SweepAxis> sweep;

  std::filesystem::path out_dir;
  bool emit_plots = false;

  static RunConfig parse(const nlohmann::json& doc);
  static RunConfig load(const std::filesystem::path& path);

  model::SpectralOperator build_operator() const;
  model::NoiseSpec build_noise(const model::SpectralOperator& v) const;
  sampler::AdaptivePlan build_plan(const model::SpectralOperator& v) const;
  nlohmann::json echo() const;
};

struct RunResult {
  nlohmann::json document; // config echo, histogram, estimates, metadata
  OutcomeHistogram histogram;
  analysis::EstimationResult estimate;
};

RunResult execute(const RunConfig& cfg);

/// Writes `document` (JSON) and the histogram CSV ("xi,count", LF endings,
/// shortest round-trip floats) under cfg.out_dir with the given stem.
/// Write-temp-then-rename; never appends.
void persist(const RunResult& result, const std::filesystem::path& out_dir,
             const std::string& stem, bool emit_plots);

int cmd_simulate(const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg);
int cmd_spectrum(const RunConfig& cfg);
int cmd_samplesize(std::optional<double> delta, std::optional<double> eps,
                   std::optional<double> eta, std::optional<int> m,
                   const std::string& scheme_name);

/// Shortest round-trip decimal rendering of a double (std::to_chars).
std::string format_double(double x);

/// Default output directory: --out-dir flag value, else ITERQPE_OUT_DIR,
/// else the current directory.
std::filesystem::path default_out_dir();

} // namespace iterqpe::run
