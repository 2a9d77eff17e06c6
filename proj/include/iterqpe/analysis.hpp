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

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "iterqpe/sampler.hpp"

namespace iterqpe::analysis {

using channel::RimSettings;
using model::SpectralOperator;
using sampler::AdaptivePlan;

/// Exact repetitive statistic distribution:
/// p(f0) = sum_k Tr(P_k rho0) Binom(m, m f0; p0k) with
/// p0k = [1 - cos(2 v_k tau + phi)] / 2. Exact because cross terms
/// Tr(P_k rho P_l), k != l, never enter the identity functional.
DistributionTable repetitive_pdf(const SpectralOperator& v, const Matrix& rho0, int m,
                                 const RimSettings& s);

/// Exact adaptive statistic distribution on the 2^m grid:
/// p(a) = sum_k Tr(P_k rho0) F_{2^m}(a - vbar_k) / 2^m normalization built in,
/// vbar_k = v_k / scale. Rejects scale < ||V||.
DistributionTable adaptive_pdf(const SpectralOperator& v, const Matrix& rho0,
                               const AdaptivePlan& plan);

/// Fejer-type kernel F_N(x) = [sin(N pi x) / (N sin(pi x))]^2, period 1,
/// removable singularities at integers evaluate to 1.
double fejer(int n, double x);

/// S(F||F') = sum f_i ln(f_i / f'_i). Throws when F' vanishes on the
/// support of F.
double relative_entropy(const std::vector<double>& f, const std::vector<double>& fp);

/// Gaussian approximation to one binomial peak of the repetitive statistic:
/// mean mu = [1 - cos(2 omega tau + phi)] / 2, sigma = sqrt(mu (1 - mu) / m),
/// normalized so the m-grid sum approaches 1. Throws at degenerate mu.
double gaussian_kernel(double f0, double omega, int m, double tau, double phi);

/// Minimum repetitive round count separating two binomial peaks at ratio eta:
/// ceil of (1/2)|ln eta| (sqrt(p0k p1k) + sqrt(p0l p1l))^2 / (p0k - p0l)^2.
long long separation_m(double p0k, double p0l, double eta);

struct PeakOptions {
  int expected_peaks = -1;     // keep the s most prominent when >= 0
  double prominence_floor = 0.0;
  int smoothing_window = 3;
};

struct Peak {
  double location = 0.0;  // mass-weighted centroid of the peak's partition cell
  double mass = 0.0;      // fraction of total counts in the cell
  int index = 0;          // grid index of the smoothed local maximum
  double prominence = 0.0;
};

/// Moving-average smoothing, local maxima, prominence threshold
/// max(5 sqrt(n pbar (1 - pbar)), floor) with pbar the mean bin probability;
/// midpoint partition and per-cell mass-weighted centroids. Circular grids
/// (adaptive statistic) wrap at the boundary.
std::vector<Peak> find_peaks(const OutcomeHistogram& h, const PeakOptions& opt = {},
                             bool circular = false);

struct EstimationResult {
  std::vector<double> estimates; // ascending
  std::vector<double> weights;   // peak masses, same order
  double delta = 0.0;            // mean abs error vs truth; NaN without truth
  std::vector<int> matching;     // estimate index -> truth index, -1 unmatched
};

/// Invert each peak centroid through p0 = [1 - cos(2 v tau + phi)] / 2 on the
/// principal arccos branch. With truth provided, configurations leaving the
/// branch (2 max|v| tau + phi > pi) are rejected as aliased.
EstimationResult estimate_repetitive(const OutcomeHistogram& h, double tau, double phi,
                                     const std::vector<double>* truth = nullptr,
                                     const PeakOptions& opt = {});

/// Peak locations scaled by tau0. In signed mode the grid is first folded by
/// the kernel's periodicity: a > 1/2 reads as a - 1. Truth matching is
/// circular with period tau0.
EstimationResult estimate_adaptive(const OutcomeHistogram& h, double tau0, bool signed_mode,
                                   const std::vector<double>* truth = nullptr,
                                   const PeakOptions& opt = {});

/// Delta-comb response function: (v_k, Tr(P_k rho0)) per eigenspace.
std::vector<std::pair<double, double>> response_function(const SpectralOperator& v,
                                                         const Matrix& rho0);

/// N = ceil(ln(2/eps) / (2 delta^2)).
long long hoeffding_samples(double delta, double eps);

/// Scheme-specific Hoeffding count at histogram precision target eta:
/// repetitive uses delta = (4/sqrt(2 pi)) eta^2 m^{3/2} (p0 = 1/2 worst case),
/// adaptive uses delta = (2 pi^2 (2^{2m} - 1) / 3) eta^2.
long long scheme_samples(double eta, int m, Scheme scheme, double eps = 0.05);

/// Least-squares slope/intercept of ln(delta) against ln(t).
std::pair<double, double> scaling_fit(const std::vector<std::pair<double, double>>& points);

} // namespace iterqpe::analysis
