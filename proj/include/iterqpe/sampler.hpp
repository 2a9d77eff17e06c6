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
#include <tuple>
#include <vector>

#include "iterqpe/channel.hpp"
#include "iterqpe/distribution.hpp"

namespace iterqpe::sampler {

using channel::KrausPair;
using channel::RimSettings;
using model::NoiseSpec;
using model::SpectralOperator;

struct InitialState {
  enum class Kind { equal_superposition, maximally_mixed, custom };
  Kind kind = Kind::equal_superposition;
  Matrix density; // custom only

  static InitialState equal_superposition() { return {Kind::equal_superposition, {}}; }
  static InitialState maximally_mixed() { return {Kind::maximally_mixed, {}}; }
  static InitialState custom(Matrix rho);

  /// Target density matrix. The equal superposition is the pure state built
  /// from one unit-norm representative per eigenspace (the eigenvector of
  /// each projector with unit eigenvalue, first by index order).
  Matrix realize(const SpectralOperator& v) const;
};

struct TrajectoryRecord {
  std::vector<std::uint8_t> bits; // measurement order a_1 .. a_m
  double statistic = 0.0;         // f0 or a
  double log_probability = 0.0;
  Matrix final_state;             // empty unless requested
};

/// Adaptive round plan: tau_i = 2^{m-i} pi / scale with scale >= ||V||, and
/// phi_i = pi - 2 pi (0.0 a_{i-1} ... a_1). Worked 3-bit example: outcomes
/// (a_1, a_2, a_3) = (1, 0, 1) give a = 0.a_3 a_2 a_1 = 0.101b = 0.625 and
/// phi_3 = pi - 2 pi (0.001b) = pi - pi/4.
struct AdaptivePlan {
  int rounds = 1;     // m
  double scale = 1.0; // tau_0 frequency bound

  double tau(int round) const; // round in 1..m
  double phase(const std::vector<std::uint8_t>& history) const;
  double statistic(const std::vector<std::uint8_t>& bits) const; // a = 0.a_m...a_1
  double total_time() const;   // (2^m - 1) pi / scale
  void validate(const SpectralOperator& v) const;
};

struct SampleBatch {
  Scheme scheme = Scheme::repetitive;
  std::vector<TrajectoryRecord> records;
  std::uint64_t seed = 0;
  std::uint64_t fingerprint = 0;
};

struct SamplerOptions {
  int workers = 1;
  bool keep_final_state = false;
  std::uint64_t fingerprint = 0;
};

/// One conditioned measurement update: outcome 0 iff u < p0, with
/// rho' = M_a rho M_a^dag / p_a. Throws when the branch probability
/// underflows (numerically impossible trajectory).
std::tuple<int, Matrix, double> rim_cycle_update(const Matrix& rho, const KrausPair& kp, double u);

SampleBatch sample_repetitive(const SpectralOperator& v, const NoiseSpec& noise,
                              const RimSettings& s, int m, int n_samples,
                              const InitialState& init, std::uint64_t seed,
                              const SamplerOptions& opt = {});

SampleBatch sample_adaptive(const SpectralOperator& v, const NoiseSpec& noise,
                            const AdaptivePlan& plan, int n_samples, const InitialState& init,
                            std::uint64_t seed, const SamplerOptions& opt = {});

/// Exact distribution over the statistic, from all 2^m trajectories.
DistributionTable enumerate_repetitive(const SpectralOperator& v, const NoiseSpec& noise,
                                       const RimSettings& s, int m, const InitialState& init);
DistributionTable enumerate_adaptive(const SpectralOperator& v, const NoiseSpec& noise,
                                     const AdaptivePlan& plan, const InitialState& init);

OutcomeHistogram histogram(const SampleBatch& batch, int m);

} // namespace iterqpe::sampler
