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

#include "iterqpe/run.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <thread>

#include "iterqpe/rng.hpp"

namespace iterqpe::run {

namespace {

using nlohmann::json;

constexpr double kPi = std::numbers::pi;

[[noreturn]] void bad_config(const std::string& where, const std::string& what) {
  throw ConfigError("config error at " + where + ": " + what);
}

const json& require(const json& doc, const std::string& key, const std::string& where) {
  auto it = doc.find(key);
  if (it == doc.end()) bad_config(where, "missing key '" + key + "'");
  return *it;
}

double require_number(const json& doc, const std::string& key, const std::string& where) {
  const json& v = require(doc, key, where);
  if (!v.is_number()) bad_config(where + "." + key, "expected a number");
  return v.get<double>();
}

Matrix dense_from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dense operator file: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    bad_config(path.string(), e.what());
  }
  const auto& re = require(doc, "real", path.string());
  const auto rows = re.size();
  if (rows == 0) bad_config(path.string(), "empty matrix");
  Matrix h(rows, rows);
  const json* im = doc.contains("imag") ? &doc["imag"] : nullptr;
  for (std::size_t i = 0; i < rows; ++i) {
    if (re[i].size() != rows) bad_config(path.string(), "matrix not square");
    for (std::size_t j = 0; j < rows; ++j)
      h(Eigen::Index(i), Eigen::Index(j)) =
          Complex(re[i][j].get<double>(), im != nullptr ? (*im)[i][j].get<double>() : 0.0);
  }
  return h;
}

} // namespace

std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, end);
}

std::filesystem::path default_out_dir() {
  if (const char* env = std::getenv("ITERQPE_OUT_DIR"); env != nullptr && *env != '\0')
    return env;
  return ".";
}

RunConfig RunConfig::parse(const json& doc) {
  RunConfig cfg;

  const json& model = require(doc, "model", "$");
  if (model.contains("spin_star")) {
    const json& ss = model["spin_star"];
    const json& couplings = require(ss, "couplings", "$.model.spin_star");
    for (const auto& a : couplings) cfg.spin_star.couplings.push_back(a.get<double>());
    if (ss.contains("axes")) {
      for (const auto& ax : ss["axes"]) {
        if (ax.size() != 3) bad_config("$.model.spin_star.axes", "axis needs 3 components");
        cfg.spin_star.axes.emplace_back(ax[0].get<double>(), ax[1].get<double>(),
                                        ax[2].get<double>());
      }
    } else {
      cfg.spin_star.axes.assign(cfg.spin_star.couplings.size(), Eigen::Vector3d(0, 0, 1));
    }
    cfg.spin_star.positivity_shift = ss.value("positivity_shift", true);
    try {
      cfg.spin_star.validate();
    } catch (const std::exception& e) {
      bad_config("$.model.spin_star", e.what());
    }
  } else if (model.contains("dense_file")) {
    cfg.dense_model = true;
    cfg.dense_operator = dense_from_file(model["dense_file"].get<std::string>());
  } else {
    bad_config("$.model", "need 'spin_star' or 'dense_file'");
  }

  const json& scheme = require(doc, "scheme", "$");
  const std::string kind = require(scheme, "kind", "$.scheme").get<std::string>();
  cfg.scheme.m = int(require_number(scheme, "m", "$.scheme"));
  if (cfg.scheme.m < 1) bad_config("$.scheme.m", "must be >= 1");
  if (kind == "repetitive") {
    cfg.scheme.kind = Scheme::repetitive;
    cfg.scheme.tau = require_number(scheme, "tau", "$.scheme");
    cfg.scheme.phi = scheme.value("phi", kPi / 2.0);
    if (cfg.scheme.tau <= 0.0) bad_config("$.scheme.tau", "must be positive");
  } else if (kind == "adaptive") {
    cfg.scheme.kind = Scheme::adaptive;
    cfg.scheme.tau0 = scheme.value("tau0", 0.0);
    if (scheme.contains("tau0_factor")) {
      if (cfg.scheme.tau0 != 0.0) bad_config("$.scheme", "give tau0 or tau0_factor, not both");
      cfg.scheme.tau0 = -scheme["tau0_factor"].get<double>(); // resolved against ||V|| later
    }
    cfg.scheme.signed_mode = scheme.value("signed", false);
  } else {
    bad_config("$.scheme.kind", "expected 'repetitive' or 'adaptive'");
  }

  if (doc.contains("noise")) {
    const json& noise = doc["noise"];
    if (noise.contains("omega"))
      for (const auto& o : noise["omega"]) cfg.noise_omega.push_back(o.get<double>());
    cfg.noise_gamma = noise.value("gamma", 0.0);
    if (!cfg.noise_omega.empty() && cfg.noise_gamma != 0.0)
      bad_config("$.noise", "give omega or gamma, not both");
    if (noise.contains("lindblad")) {
      for (const auto& spec : noise["lindblad"]) {
        RunConfig::Jump j;
        j.op = require(spec, "op", "$.noise.lindblad[]").get<std::string>();
        if (j.op != "sz" && j.op != "sm") bad_config("$.noise.lindblad[].op", "expected 'sz' or 'sm'");
        j.qubit = int(spec.value("qubit", 0.0));
        j.rate = require_number(spec, "rate", "$.noise.lindblad[]");
        if (j.rate < 0.0) bad_config("$.noise.lindblad[].rate", "must be >= 0");
        cfg.jumps.push_back(std::move(j));
      }
    }
  }

  const json& sampling = require(doc, "sampling", "$");
  cfg.n_samples = int(require_number(sampling, "n_samples", "$.sampling"));
  if (cfg.n_samples < 0) bad_config("$.sampling.n_samples", "must be >= 0");
  cfg.seed = std::uint64_t(sampling.value("seed", 0.0));

  if (doc.contains("init")) {
    const std::string k = doc["init"].value("kind", "equal_superposition");
    if (k == "equal_superposition")
      cfg.init = sampler::InitialState::Kind::equal_superposition;
    else if (k == "maximally_mixed")
      cfg.init = sampler::InitialState::Kind::maximally_mixed;
    else
      bad_config("$.init.kind", "expected 'equal_superposition' or 'maximally_mixed'");
  }

  if (doc.contains("estimation"))
    cfg.expected_peaks = int(doc["estimation"].value("expected_peaks", -1.0));

  if (doc.contains("output")) {
    cfg.out_dir = doc["output"].value("directory", std::string());
    cfg.emit_plots = doc["output"].value("emit_plots", false);
  }

  if (doc.contains("sweep")) {
    SweepAxis axis;
    axis.key = require(doc["sweep"], "key", "$.sweep").get<std::string>();
    if (axis.key != "m" && axis.key != "gamma" && axis.key != "t")
      bad_config("$.sweep.key", "expected 'm', 'gamma' or 't'");
    for (const auto& v : require(doc["sweep"], "values", "$.sweep"))
      axis.values.push_back(v.get<double>());
    if (axis.values.empty()) bad_config("$.sweep.values", "axis is empty");
    axis.fit = doc["sweep"].value("fit", false);
    cfg.sweep = std::move(axis);
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    bad_config(path.string(), e.what());
  }
  return parse(doc);
}

model::SpectralOperator RunConfig::build_operator() const {
  if (dense_model) return model::spectral_from_dense(dense_operator);
  return model::build_spin_star(spin_star);
}

model::NoiseSpec RunConfig::build_noise(const model::SpectralOperator& v) const {
  model::NoiseSpec noise;
  std::vector<double> omega = noise_omega;
  if (noise_gamma != 0.0) {
    if (dense_model) bad_config("$.noise.gamma", "relative gamma needs a spin_star model");
    for (double a : spin_star.couplings) omega.push_back(0.5 * noise_gamma * a);
  }
  if (!omega.empty()) {
    if (Eigen::Index(1) << omega.size() != v.dim)
      bad_config("$.noise.omega", "shift count does not match the register size");
    noise.coherent = model::build_coherent_noise(omega);
  }
  const auto qubits = std::size_t(std::log2(double(v.dim)) + 0.5);
  for (const auto& j : jumps) {
    if (j.qubit < 0 || std::size_t(j.qubit) >= qubits)
      bad_config("$.noise.lindblad[].qubit", "qubit index out of range");
    const Matrix op = j.op == "sz" ? model::sigma_z() : model::sigma_minus();
    noise.lindblad.emplace_back(model::pauli_on(qubits, std::size_t(j.qubit), op), j.rate);
  }
  noise.validate(v.dim);
  return noise;
}

sampler::AdaptivePlan RunConfig::build_plan(const model::SpectralOperator& v) const {
  sampler::AdaptivePlan plan;
  plan.rounds = scheme.m;
  if (scheme.tau0 > 0.0)
    plan.scale = scheme.tau0;
  else if (scheme.tau0 < 0.0)
    plan.scale = -scheme.tau0 * v.operator_norm(); // tau0_factor form
  else
    plan.scale = v.operator_norm();
  return plan;
}

json RunConfig::echo() const {
  json doc;
  if (dense_model) {
    json re = json::array(), im = json::array();
    for (Eigen::Index i = 0; i < dense_operator.rows(); ++i) {
      json rrow = json::array(), irow = json::array();
      for (Eigen::Index j = 0; j < dense_operator.cols(); ++j) {
        rrow.push_back(dense_operator(i, j).real());
        irow.push_back(dense_operator(i, j).imag());
      }
      re.push_back(std::move(rrow));
      im.push_back(std::move(irow));
    }
    doc["model"]["dense"] = {{"real", std::move(re)}, {"imag", std::move(im)}};
  } else {
    json axes = json::array();
    for (const auto& a : spin_star.axes) axes.push_back({a.x(), a.y(), a.z()});
    doc["model"]["spin_star"] = {{"couplings", spin_star.couplings},
                                 {"axes", std::move(axes)},
                                 {"positivity_shift", spin_star.positivity_shift}};
  }
  if (scheme.kind == Scheme::repetitive) {
    doc["scheme"] = {
        {"kind", "repetitive"}, {"m", scheme.m}, {"tau", scheme.tau}, {"phi", scheme.phi}};
  } else {
    doc["scheme"] = {{"kind", "adaptive"},
                     {"m", scheme.m},
                     {"tau0", scheme.tau0},
                     {"signed", scheme.signed_mode}};
  }
  if (!noise_omega.empty()) doc["noise"]["omega"] = noise_omega;
  if (noise_gamma != 0.0) doc["noise"]["gamma"] = noise_gamma;
  if (!jumps.empty()) {
    json arr = json::array();
    for (const auto& j : jumps)
      arr.push_back({{"op", j.op}, {"qubit", j.qubit}, {"rate", j.rate}});
    doc["noise"]["lindblad"] = std::move(arr);
  }
  doc["sampling"] = {{"n_samples", n_samples}, {"seed", seed}};
  doc["init"] = {{"kind", init == sampler::InitialState::Kind::equal_superposition
                              ? "equal_superposition"
                              : "maximally_mixed"}};
  if (expected_peaks >= 0) doc["estimation"] = {{"expected_peaks", expected_peaks}};
  return doc;
}

RunResult execute(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const auto v = cfg.build_operator();
  const auto noise = cfg.build_noise(v);
  const auto init = cfg.init == sampler::InitialState::Kind::equal_superposition
                        ? sampler::InitialState::equal_superposition()
                        : sampler::InitialState::maximally_mixed();

  sampler::SamplerOptions opt;
  opt.workers = cfg.workers > 0 ? cfg.workers : int(std::thread::hardware_concurrency());

  sampler::SampleBatch batch;
  double tau0 = 0.0, total_time = 0.0;
  if (cfg.scheme.kind == Scheme::repetitive) {
    const channel::RimSettings s{cfg.scheme.tau, cfg.scheme.phi};
    batch = sampler::sample_repetitive(v, noise, s, cfg.scheme.m, cfg.n_samples, init, cfg.seed, opt);
    total_time = cfg.scheme.m * cfg.scheme.tau;
  } else {
    const auto plan = cfg.build_plan(v);
    batch = sampler::sample_adaptive(v, noise, plan, cfg.n_samples, init, cfg.seed, opt);
    tau0 = plan.scale;
    total_time = plan.total_time();
  }

  RunResult result;
  result.histogram = sampler::histogram(batch, cfg.scheme.m);

  json doc;
  doc["config"] = cfg.echo();
  const std::string echo_dump = doc["config"].dump();
  doc["fingerprint"] = fnv1a(echo_dump.data(), echo_dump.size());
  doc["seed"] = cfg.seed;
  doc["total_time"] = total_time;

  json hist;
  hist["grid"] = result.histogram.grid;
  hist["counts"] = result.histogram.counts;
  hist["total"] = result.histogram.total;
  doc["histogram"] = std::move(hist);

  if (cfg.n_samples == 0) {
    doc["warning"] = "no samples requested; histogram is empty";
  } else {
    analysis::PeakOptions popt;
    popt.expected_peaks = cfg.expected_peaks;
    const std::vector<double> truth(v.eigenvalues.begin(), v.eigenvalues.end());
    if (cfg.scheme.kind == Scheme::repetitive)
      result.estimate = analysis::estimate_repetitive(result.histogram, cfg.scheme.tau,
                                                      cfg.scheme.phi, &truth, popt);
    else
      result.estimate = analysis::estimate_adaptive(result.histogram, tau0,
                                                    cfg.scheme.signed_mode, &truth, popt);
    doc["estimates"] = result.estimate.estimates;
    doc["weights"] = result.estimate.weights;
    doc["delta"] = result.estimate.delta;
    doc["truth"] = truth;
  }
  doc["wall_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  result.document = std::move(doc);
  return result;
}

namespace {

void atomic_write(const std::filesystem::path& path, const std::string& body) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << body;
    if (!out.flush()) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed for " + path.string() + ": " + ec.message());
}

std::string histogram_csv(const OutcomeHistogram& h) {
  std::string csv = "xi,count\n";
  for (std::size_t i = 0; i < h.grid.size(); ++i) {
    csv += format_double(h.grid[i]);
    csv += ',';
    csv += std::to_string(h.counts[i]);
    csv += '\n';
  }
  return csv;
}

} // namespace

void persist(const RunResult& result, const std::filesystem::path& out_dir,
             const std::string& stem, bool emit_plots) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir.string());
  atomic_write(out_dir / (stem + ".json"), result.document.dump(2) + "\n");
  atomic_write(out_dir / (stem + ".csv"), histogram_csv(result.histogram));
  if (emit_plots) {
    std::string gp = "set datafile separator ','\n";
    gp += "set style fill solid 0.6\n";
    gp += "plot '" + stem + ".csv' every ::1 using 1:2 with boxes title '" + stem + "'\n";
    atomic_write(out_dir / (stem + ".gp"), gp);
  }
}

int cmd_simulate(const RunConfig& cfg) {
  const auto out_dir = cfg.out_dir.empty() ? default_out_dir() : cfg.out_dir;
  const RunResult result = execute(cfg);
  persist(result, out_dir, "run", cfg.emit_plots);
  if (result.document.contains("warning"))
    std::cerr << "warning: " << result.document["warning"].get<std::string>() << "\n";
  std::cout << "wrote " << (out_dir / "run.json").string() << "\n";
  if (result.document.contains("delta"))
    std::cout << "delta " << format_double(result.document["delta"].get<double>()) << "\n";
  return ok;
}

int cmd_sweep(const RunConfig& cfg) {
  if (!cfg.sweep) throw ConfigError("config error at $.sweep: sweep command needs an axis");
  const auto out_dir = cfg.out_dir.empty() ? default_out_dir() : cfg.out_dir;
  const SweepAxis& axis = *cfg.sweep;

  std::vector<std::pair<double, double>> points; // (total time, delta)
  json table = json::array();
  for (std::size_t i = 0; i < axis.values.size(); ++i) {
    RunConfig point = cfg;
    point.sweep.reset();
    const double value = axis.values[i];
    if (axis.key == "m") {
      point.scheme.m = int(value);
    } else if (axis.key == "gamma") {
      point.noise_gamma = value;
      point.noise_omega.clear();
    } else { // t
      if (point.scheme.kind == Scheme::repetitive) {
        point.scheme.m = std::max(1, int(std::llround(value / point.scheme.tau)));
      } else {
        const double scale = point.build_plan(point.build_operator()).scale;
        point.scheme.m = std::max(1, int(std::llround(std::log2(value * scale / kPi + 1.0))));
      }
    }
    const RunResult result = execute(point);
    persist(result, out_dir, "sweep_" + std::to_string(i), cfg.emit_plots);
    const double t = result.document["total_time"].get<double>();
    const double delta =
        result.document.contains("delta") ? result.document["delta"].get<double>() : 0.0;
    points.emplace_back(t, delta);
    table.push_back({{"axis", value}, {"total_time", t}, {"delta", delta}});
    std::cout << axis.key << "=" << format_double(value) << " t=" << format_double(t)
              << " delta=" << format_double(delta) << "\n";
  }

  json summary;
  summary["axis"] = axis.key;
  summary["points"] = std::move(table);
  if (axis.fit) {
    const auto [slope, intercept] = analysis::scaling_fit(points);
    summary["fit"] = {{"slope", slope}, {"intercept", intercept}};
    std::cout << "slope " << format_double(slope) << "\n";
  }
  std::string csv = "axis,total_time,delta\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    csv += format_double(axis.values[i]);
    csv += ',';
    csv += format_double(points[i].first);
    csv += ',';
    csv += format_double(points[i].second);
    csv += '\n';
  }
  atomic_write(out_dir / "sweep.json", summary.dump(2) + "\n");
  atomic_write(out_dir / "sweep.csv", csv);
  return ok;
}

int cmd_spectrum(const RunConfig& cfg) {
  const auto out_dir = cfg.out_dir.empty() ? default_out_dir() : cfg.out_dir;
  const auto v = cfg.build_operator();
  const auto noise = cfg.build_noise(v);
  channel::RimSettings s;
  if (cfg.scheme.kind == Scheme::repetitive) {
    s = {cfg.scheme.tau, cfg.scheme.phi};
  } else {
    s = {kPi / cfg.build_plan(v).scale, kPi}; // final (shortest) adaptive round
  }
  const Matrix superop = channel::noisy_rim_superop(v, noise, s);
  const auto spectrum = channel::channel_spectrum(superop, int(v.size()));

  json doc;
  doc["config"] = cfg.echo();
  json table = json::array();
  for (Eigen::Index i = 0; i < spectrum.eigenvalues.size(); ++i) {
    const Complex l = spectrum.eigenvalues(i);
    table.push_back({{"re", l.real()},
                     {"im", l.imag()},
                     {"abs", std::abs(l)},
                     {"class", channel::to_string(spectrum.classes[std::size_t(i)])}});
  }
  doc["eigenvalues"] = std::move(table);
  doc["m_low"] = spectrum.m_low;
  doc["m_high"] = spectrum.m_high;
  doc["window_nonempty"] = spectrum.window_nonempty();
  atomic_write(out_dir / "spectrum.json", doc.dump(2) + "\n");

  std::cout << "unit-circle eigenvalues: "
            << std::count_if(spectrum.classes.begin(), spectrum.classes.end(),
                             [](channel::PointClass c) {
                               return c == channel::PointClass::fixed ||
                                      c == channel::PointClass::rotating;
                             })
            << "\n";
  std::cout << "metastable window: (" << format_double(spectrum.m_low) << ", "
            << format_double(spectrum.m_high) << ")"
            << (spectrum.window_nonempty() ? "" : " [empty]") << "\n";
  return ok;
}

int cmd_samplesize(std::optional<double> delta, std::optional<double> eps,
                   std::optional<double> eta, std::optional<int> m,
                   const std::string& scheme_name) {
  const double e = eps.value_or(0.05);
  bool printed = false;
  if (delta) {
    std::cout << "N = " << analysis::hoeffding_samples(*delta, e) << "\n";
    printed = true;
  }
  if (eta && m) {
    const Scheme scheme = scheme_name == "adaptive" ? Scheme::adaptive : Scheme::repetitive;
    const char* label = scheme == Scheme::repetitive ? "N_G" : "N_F";
    std::cout << label << " = " << analysis::scheme_samples(*eta, *m, scheme, e) << "\n";
    printed = true;
  }
  if (!printed)
    throw ConfigError("samplesize needs --delta, or --eta with --m");
  return ok;
}

} // namespace iterqpe::run
