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

#include "iterqpe/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace iterqpe::analysis {

namespace {

constexpr double kPi = std::numbers::pi;

double binomial_pmf(int m, int j, double p) {
  if (p <= 0.0) return j == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return j == m ? 1.0 : 0.0;
  const double logc = std::lgamma(m + 1.0) - std::lgamma(j + 1.0) - std::lgamma(m - j + 1.0);
  return std::exp(logc + j * std::log(p) + (m - j) * std::log1p(-p));
}

double circular_distance(double a, double b) {
  double d = std::abs(a - b);
  d -= std::floor(d);
  return std::min(d, 1.0 - d);
}

// Rank matching on the line: pair i-th smallest with i-th smallest;
// leftover truths contribute |v| in full.
double matched_delta_linear(std::vector<double>& estimates, std::vector<double>& weights,
                            std::vector<double> truth, std::vector<int>& matching) {
  std::vector<std::size_t> order(estimates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return estimates[a] < estimates[b]; });
  std::vector<double> se(estimates.size()), sw(estimates.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    se[i] = estimates[order[i]];
    sw[i] = weights[order[i]];
  }
  estimates = std::move(se);
  weights = std::move(sw);

  std::sort(truth.begin(), truth.end());
  matching.assign(estimates.size(), -1);
  const std::size_t paired = std::min(estimates.size(), truth.size());
  double err = 0.0;
  for (std::size_t i = 0; i < paired; ++i) {
    matching[i] = int(i);
    err += std::abs(estimates[i] - truth[i]);
  }
  for (std::size_t i = paired; i < truth.size(); ++i) err += std::abs(truth[i]);
  return truth.empty() ? std::numeric_limits<double>::quiet_NaN() : err / double(truth.size());
}

// Greedy nearest-pair matching on the circle of circumference `period`;
// leftover truths contribute |v| in full.
double matched_delta_circular(const std::vector<double>& estimates, std::vector<double> truth,
                              double period, std::vector<int>& matching) {
  struct Pair {
    double dist;
    std::size_t e, t;
  };
  std::vector<Pair> pairs;
  for (std::size_t e = 0; e < estimates.size(); ++e)
    for (std::size_t t = 0; t < truth.size(); ++t)
      pairs.push_back(
          {circular_distance(estimates[e] / period, truth[t] / period) * period, e, t});
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.dist < b.dist; });

  matching.assign(estimates.size(), -1);
  std::vector<bool> truth_used(truth.size(), false);
  double err = 0.0;
  std::size_t made = 0;
  for (const auto& p : pairs) {
    if (matching[p.e] != -1 || truth_used[p.t]) continue;
    matching[p.e] = int(p.t);
    truth_used[p.t] = true;
    err += p.dist;
    if (++made == std::min(estimates.size(), truth.size())) break;
  }
  for (std::size_t t = 0; t < truth.size(); ++t)
    if (!truth_used[t]) err += std::abs(truth[t]);
  return truth.empty() ? std::numeric_limits<double>::quiet_NaN() : err / double(truth.size());
}

} // namespace

DistributionTable repetitive_pdf(const SpectralOperator& v, const Matrix& rho0, int m,
                                 const RimSettings& s) {
  if (m < 1) throw std::invalid_argument("repetitive_pdf: m must be >= 1");
  s.validate();
  const auto w = v.weights(rho0);
  DistributionTable table;
  table.grid.resize(std::size_t(m) + 1);
  table.probabilities.assign(std::size_t(m) + 1, 0.0);
  for (int j = 0; j <= m; ++j) table.grid[std::size_t(j)] = double(j) / double(m);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double p0k = 0.5 * (1.0 - std::cos(2.0 * v.eigenvalues[k] * s.tau + s.phi));
    for (int j = 0; j <= m; ++j)
      table.probabilities[std::size_t(j)] += w[k] * binomial_pmf(m, j, p0k);
  }
  return table;
}

DistributionTable adaptive_pdf(const SpectralOperator& v, const Matrix& rho0,
                               const AdaptivePlan& plan) {
  plan.validate(v);
  const auto w = v.weights(rho0);
  const int n = 1 << plan.rounds;
  DistributionTable table;
  table.grid.resize(std::size_t(n));
  table.probabilities.assign(std::size_t(n), 0.0);
  for (int j = 0; j < n; ++j) table.grid[std::size_t(j)] = double(j) / double(n);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double vbar = v.eigenvalues[k] / plan.scale;
    for (int j = 0; j < n; ++j)
      table.probabilities[std::size_t(j)] += w[k] * fejer(n, double(j) / double(n) - vbar);
  }
  return table;
}

double fejer(int n, double x) {
  if (n < 1) throw std::invalid_argument("fejer: N must be >= 1");
  const double r = x - std::round(x); // periodicity; keeps the argument small
  if (r == 0.0) return 1.0;
  const double ratio = std::sin(n * kPi * r) / (double(n) * std::sin(kPi * r));
  return std::min(ratio * ratio, 1.0);
}

double relative_entropy(const std::vector<double>& f, const std::vector<double>& fp) {
  if (f.size() != fp.size()) throw std::invalid_argument("relative_entropy: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] <= 0.0) continue;
    if (fp[i] <= 0.0) throw std::domain_error("relative_entropy: support violation");
    s += f[i] * std::log(f[i] / fp[i]);
  }
  return std::max(s, 0.0);
}

double gaussian_kernel(double f0, double omega, int m, double tau, double phi) {
  if (m < 1) throw std::invalid_argument("gaussian_kernel: m must be >= 1");
  const double mu = 0.5 * (1.0 - std::cos(2.0 * omega * tau + phi));
  if (mu <= 0.0 || mu >= 1.0) throw std::domain_error("gaussian_kernel: degenerate kernel");
  const double sigma = std::sqrt(mu * (1.0 - mu) / double(m));
  const double z = (f0 - mu) / sigma;
  return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * kPi) * sigma * double(m));
}

long long separation_m(double p0k, double p0l, double eta) {
  if (eta <= 0.0 || eta >= 1.0) throw std::invalid_argument("separation_m: eta outside (0, 1)");
  if (p0k == p0l) throw std::domain_error("separation_m: equal peak probabilities, unbounded");
  const auto spread = [](double p) { return std::sqrt(p * (1.0 - p)); };
  const double num = spread(p0k) + spread(p0l);
  const double bound =
      0.5 * std::abs(std::log(eta)) * num * num / ((p0k - p0l) * (p0k - p0l));
  if (bound > 9.0e18) throw std::overflow_error("separation_m: bound overflows");
  // Strict inequality m > bound; the epsilon keeps analytically integral
  // bounds (e.g. exactly 3) from slipping below the floor through rounding.
  return (long long)(std::floor(bound + 1e-9)) + 1;
}

std::vector<Peak> find_peaks(const OutcomeHistogram& h, const PeakOptions& opt, bool circular) {
  const int bins = int(h.grid.size());
  if (bins < 2) throw std::invalid_argument("find_peaks: too few grid points");
  if (int(h.counts.size()) != bins) throw std::invalid_argument("find_peaks: count size mismatch");
  const int window = std::max(opt.smoothing_window | 1, 1); // force odd
  const int half = window / 2;

  std::vector<double> smooth(std::size_t(bins), 0.0);
  for (int i = 0; i < bins; ++i) {
    double acc = 0.0;
    int used = 0;
    for (int o = -half; o <= half; ++o) {
      int j = i + o;
      if (circular)
        j = (j % bins + bins) % bins;
      else if (j < 0 || j >= bins)
        continue;
      acc += double(h.counts[std::size_t(j)]);
      ++used;
    }
    smooth[std::size_t(i)] = acc / double(used);
  }

  const auto at = [&](int i) { return smooth[std::size_t((i % bins + bins) % bins)]; };
  std::vector<Peak> candidates;
  for (int i = 0; i < bins; ++i) {
    const double v = smooth[std::size_t(i)];
    if (v <= 0.0) continue;
    bool is_max;
    if (circular) {
      is_max = v > at(i - 1) && v >= at(i + 1);
    } else if (i == 0) {
      is_max = v > smooth[1];
    } else if (i == bins - 1) {
      is_max = v > smooth[std::size_t(bins - 2)];
    } else {
      is_max = v > smooth[std::size_t(i - 1)] && v >= smooth[std::size_t(i + 1)];
    }
    if (!is_max) continue;

    // Prominence: lowest valley on each side before a higher bar or boundary.
    double base = 0.0;
    bool bounded = false;
    for (int dir : {-1, 1}) {
      double valley = v;
      bool higher = false;
      bool moved = false;
      for (int step = 1; step < bins; ++step) {
        const int j = i + dir * step;
        if (!circular && (j < 0 || j >= bins)) break;
        moved = true;
        const double u = at(j);
        if (u > v) {
          higher = true;
          break;
        }
        valley = std::min(valley, u);
      }
      // A peak sitting on the grid edge has no valley on that side;
      // its prominence comes from the interior side alone.
      if (higher || (!circular && moved)) {
        base = bounded ? std::max(base, valley) : valley;
        bounded = true;
      }
    }
    candidates.push_back({0.0, 0.0, i, v - (bounded ? base : 0.0)});
  }

  const double pbar = 1.0 / double(bins);
  const double threshold =
      std::max(5.0 * std::sqrt(double(h.total) * pbar * (1.0 - pbar)), opt.prominence_floor);
  std::erase_if(candidates, [&](const Peak& p) { return p.prominence < threshold; });

  if (opt.expected_peaks >= 0) {
    if (int(candidates.size()) < opt.expected_peaks)
      throw std::runtime_error("find_peaks: fewer peaks than requested");
    std::sort(candidates.begin(), candidates.end(),
              [](const Peak& a, const Peak& b) { return a.prominence > b.prominence; });
    candidates.resize(std::size_t(opt.expected_peaks));
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Peak& a, const Peak& b) { return a.index < b.index; });
  if (candidates.empty()) return candidates;

  // Midpoint partition, then mass-weighted centroid per cell. On circular
  // grids the cell coordinates are unwrapped around the peak before
  // averaging so wrap-around mass pulls the centroid the short way.
  const int np = int(candidates.size());
  const double total = h.total > 0 ? double(h.total) : 1.0;
  for (int p = 0; p < np; ++p) {
    int lo, hi; // inclusive cell bounds, possibly wrapping when circular
    if (circular && np > 1) {
      const int prev = candidates[std::size_t((p + np - 1) % np)].index;
      const int next = candidates[std::size_t((p + 1) % np)].index;
      const int gap_prev = ((candidates[std::size_t(p)].index - prev) % bins + bins) % bins;
      const int gap_next = ((next - candidates[std::size_t(p)].index) % bins + bins) % bins;
      lo = candidates[std::size_t(p)].index - gap_prev / 2;
      hi = candidates[std::size_t(p)].index + (gap_next - 1) / 2;
    } else if (circular) {
      lo = candidates[0].index - bins / 2;
      hi = lo + bins - 1;
    } else {
      lo = p == 0 ? 0 : (candidates[std::size_t(p - 1)].index + candidates[std::size_t(p)].index) / 2 + 1;
      hi = p == np - 1 ? bins - 1
                       : (candidates[std::size_t(p)].index + candidates[std::size_t(p + 1)].index) / 2;
    }
    double mass = 0.0, first_moment = 0.0;
    const double span = h.grid[1] - h.grid[0];
    for (int j = lo; j <= hi; ++j) {
      const int wrapped = (j % bins + bins) % bins;
      const double c = double(h.counts[std::size_t(wrapped)]);
      const double coord = circular ? h.grid[0] + span * double(j) : h.grid[std::size_t(j)];
      mass += c;
      first_moment += c * coord;
    }
    auto& peak = candidates[std::size_t(p)];
    peak.mass = mass / total;
    peak.location = mass > 0.0 ? first_moment / mass : h.grid[std::size_t(peak.index)];
    if (circular) {
      const double period = span * double(bins);
      peak.location -= period * std::floor(peak.location / period);
    }
  }
  return candidates;
}

EstimationResult estimate_repetitive(const OutcomeHistogram& h, double tau, double phi,
                                     const std::vector<double>* truth, const PeakOptions& opt) {
  if (tau <= 0.0) throw std::invalid_argument("estimate_repetitive: tau must be positive");
  const auto peaks = find_peaks(h, opt, /*circular=*/false);
  EstimationResult res;
  for (const auto& p : peaks) {
    const double c = std::clamp(1.0 - 2.0 * p.location, -1.0, 1.0);
    res.estimates.push_back((std::acos(c) - phi) / (2.0 * tau));
    res.weights.push_back(p.mass);
  }
  res.delta = std::numeric_limits<double>::quiet_NaN();
  if (truth != nullptr) {
    for (double v : *truth) {
      const double angle = 2.0 * v * tau + phi;
      if (angle < -1e-12 || angle > kPi + 1e-12)
        throw std::domain_error("estimate_repetitive: aliasing, inversion leaves the principal branch");
    }
    res.delta = matched_delta_linear(res.estimates, res.weights, *truth, res.matching);
  } else {
    std::vector<int> unused;
    res.delta = std::numeric_limits<double>::quiet_NaN();
    matched_delta_linear(res.estimates, res.weights, {}, unused); // sort only
    res.matching.assign(res.estimates.size(), -1);
  }
  return res;
}

EstimationResult estimate_adaptive(const OutcomeHistogram& h, double tau0, bool signed_mode,
                                   const std::vector<double>* truth, const PeakOptions& opt) {
  if (tau0 <= 0.0) throw std::invalid_argument("estimate_adaptive: tau0 must be positive");
  const auto peaks = find_peaks(h, opt, /*circular=*/true);
  EstimationResult res;
  for (const auto& p : peaks) {
    double a = p.location;
    if (signed_mode && a > 0.5) a -= 1.0; // negative branch by kernel periodicity
    res.estimates.push_back(tau0 * a);
    res.weights.push_back(p.mass);
  }
  // Sort ascending, weights in tow.
  std::vector<std::size_t> order(res.estimates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return res.estimates[a] < res.estimates[b]; });
  EstimationResult sorted;
  for (auto i : order) {
    sorted.estimates.push_back(res.estimates[i]);
    sorted.weights.push_back(res.weights[i]);
  }
  res.estimates = std::move(sorted.estimates);
  res.weights = std::move(sorted.weights);

  res.delta = std::numeric_limits<double>::quiet_NaN();
  res.matching.assign(res.estimates.size(), -1);
  if (truth != nullptr)
    res.delta = matched_delta_circular(res.estimates, *truth, tau0, res.matching);
  return res;
}

std::vector<std::pair<double, double>> response_function(const SpectralOperator& v,
                                                         const Matrix& rho0) {
  const auto w = v.weights(rho0);
  std::vector<std::pair<double, double>> lines;
  lines.reserve(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) lines.emplace_back(v.eigenvalues[k], w[k]);
  return lines;
}

long long hoeffding_samples(double delta, double eps) {
  if (delta <= 0.0) throw std::invalid_argument("hoeffding_samples: delta must be positive");
  if (eps <= 0.0 || eps >= 1.0)
    throw std::invalid_argument("hoeffding_samples: eps outside (0, 1)");
  const double n = std::log(2.0 / eps) / (2.0 * delta * delta);
  if (n > 9.0e18) throw std::overflow_error("hoeffding_samples: count overflows");
  return (long long)(std::ceil(n));
}

long long scheme_samples(double eta, int m, Scheme scheme, double eps) {
  if (eta <= 0.0) throw std::invalid_argument("scheme_samples: eta must be positive");
  if (m < 1) throw std::invalid_argument("scheme_samples: m must be >= 1");
  double delta;
  if (scheme == Scheme::repetitive) {
    delta = (4.0 / std::sqrt(2.0 * kPi)) * eta * eta * std::pow(double(m), 1.5);
  } else {
    delta = (2.0 * kPi * kPi * (std::ldexp(1.0, 2 * m) - 1.0) / 3.0) * eta * eta;
  }
  return hoeffding_samples(delta, eps);
}

std::pair<double, double> scaling_fit(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("scaling_fit: need at least 3 points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [t, d] : points) {
    if (t <= 0.0 || d <= 0.0) throw std::domain_error("scaling_fit: nonpositive value");
    const double x = std::log(t), y = std::log(d);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = double(points.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

} // namespace iterqpe::analysis
