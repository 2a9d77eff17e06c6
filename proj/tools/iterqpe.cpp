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

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "iterqpe/run.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
  bool emit_plots = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool needs_config) {
  if (needs_config)
    cmd->add_option("config", flags.config_path, "JSON run configuration")->required();
  cmd->add_option("--out-dir", flags.out_dir, "output directory (default: $ITERQPE_OUT_DIR or .)");
  cmd->add_option("--seed", flags.seed, "override the config seed")
      ->each([&flags](const std::string&) { flags.seed_set = true; });
  cmd->add_option("--workers", flags.workers, "worker threads (default: hardware concurrency)");
  cmd->add_flag("--emit-plots", flags.emit_plots, "also write a gnuplot script per histogram");
}

iterqpe::run::RunConfig load_with_flags(const CommonFlags& flags) {
  auto cfg = iterqpe::run::RunConfig::load(flags.config_path);
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  if (flags.seed_set) cfg.seed = flags.seed;
  if (flags.workers > 0) cfg.workers = flags.workers;
  if (flags.emit_plots) cfg.emit_plots = true;
  return cfg;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const iterqpe::run::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return iterqpe::run::config_error;
  } catch (const iterqpe::run::IoError& e) {
    std::cerr << e.what() << "\n";
    return iterqpe::run::io_error;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << e.what() << "\n";
    return iterqpe::run::io_error;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return iterqpe::run::config_error;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return iterqpe::run::numeric_error;
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"iterative phase estimation simulator"};
  app.require_subcommand(1);

  CommonFlags sim_flags, sweep_flags, spec_flags;
  auto* simulate = app.add_subcommand("simulate", "single run: sample, estimate, persist");
  add_common(simulate, sim_flags, true);
  auto* sweep = app.add_subcommand("sweep", "run per axis point and tabulate (axis, delta)");
  add_common(sweep, sweep_flags, true);
  auto* spectrum = app.add_subcommand("spectrum", "channel eigenvalues and metastable window");
  add_common(spectrum, spec_flags, true);

  auto* samplesize = app.add_subcommand("samplesize", "Hoeffding sample-count calculator");
  double delta = 0.0, eps = 0.05, eta = 0.0;
  int m = 0;
  std::string scheme = "repetitive";
  auto* delta_opt = samplesize->add_option("--delta", delta, "histogram precision target");
  samplesize->add_option("--eps", eps, "failure probability (default 0.05)");
  auto* eta_opt = samplesize->add_option("--eta", eta, "response precision target");
  auto* m_opt = samplesize->add_option("--m", m, "round count");
  samplesize->add_option("--scheme", scheme, "repetitive or adaptive")
      ->check(CLI::IsMember({"repetitive", "adaptive"}));

  CLI11_PARSE(app, argc, argv);

  if (simulate->parsed())
    return guarded([&] { return iterqpe::run::cmd_simulate(load_with_flags(sim_flags)); });
  if (sweep->parsed())
    return guarded([&] { return iterqpe::run::cmd_sweep(load_with_flags(sweep_flags)); });
  if (spectrum->parsed())
    return guarded([&] { return iterqpe::run::cmd_spectrum(load_with_flags(spec_flags)); });
  return guarded([&] {
    return iterqpe::run::cmd_samplesize(
        delta_opt->count() ? std::optional<double>(delta) : std::nullopt, eps,
        eta_opt->count() ? std::optional<double>(eta) : std::nullopt,
        m_opt->count() ? std::optional<int>(m) : std::nullopt, scheme);
  });
}
