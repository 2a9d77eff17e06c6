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

#include <optional>
#include <vector>

#include "iterqpe/model.hpp"

namespace iterqpe::channel {

using model::NoiseSpec;
using model::SpectralOperator;

struct RimSettings {
  double tau = 0.0; // free evolution time
  double phi = 0.0; // readout rotation axis angle

  void validate() const {
    if (tau <= 0.0) throw std::invalid_argument("rim settings: tau must be positive");
  }
};

/// Kraus pair (M_0, M_1) of one noiseless RIM cycle, normal and commuting:
/// M_a = sum_k lambda_{a k} P_k with
/// lambda_{a k} = [e^{-i v_k tau} - (-1)^a e^{i (phi + v_k tau)}] / 2.
struct KrausPair {
  Matrix m0, m1;
  Eigen::Matrix2Xcd lambdas; // column k: (lambda_{0k}, lambda_{1k})

  double completeness_defect() const; // ||M0^dag M0 + M1^dag M1 - I||
};

KrausPair build_rim_kraus(const SpectralOperator& v, const RimSettings& s);

/// Throws when any two of the per-eigenspace lambda vectors are parallel,
/// i.e. when the asymptotic subspace is larger than the fixed-point set.
void check_nonparallel_lambdas(const SpectralOperator& v, const RimSettings& s, double tol = 1e-12);

/// Natural representation M0 (x) M0^* + M1 (x) M1^* on vectorized states.
Matrix natural_rep(const KrausPair& kp);

/// Closed form of the whole sequence: sum_{k,l} prod_i cos[(v_k - v_l) tau_i]
/// P_k (x) P_l^*; phase angles drop out at the channel level.
Matrix compose_sequence(const SpectralOperator& v, const std::vector<RimSettings>& settings);

/// sum_k P_k (x) P_k^*. When settings are given, the lambda non-parallelism
/// precondition is checked first.
Matrix asymptotic_projector(const SpectralOperator& v, const RimSettings* settings = nullptr);

/// One RIM cycle as its pair of conditional completely positive maps, with or
/// without target noise. Immutable after construction.
class RimCycle {
 public:
  static RimCycle closed_form(const SpectralOperator& v, const RimSettings& s);
  /// Exact Stinespring circuit with the composite 2d propagator of
  /// H = sz (x) V + I (x) C; each outcome map has a single Kraus operator.
  static RimCycle coherent(const SpectralOperator& v, const Matrix& c, const RimSettings& s);
  /// Lindblad evolution of the joint ancilla-target system during the free
  /// evolution window; outcome maps are general CP maps on the target.
  static RimCycle lindblad(const SpectralOperator& v, const NoiseSpec& noise, const RimSettings& s);
  static RimCycle for_noise(const SpectralOperator& v, const NoiseSpec& noise, const RimSettings& s);

  bool kraus_form() const { return kraus_form_; }
  const Matrix& kraus(int outcome) const;
  /// Unnormalized conditional state for the given outcome.
  Matrix apply(const Matrix& rho, int outcome) const;
  double outcome0_probability(const Matrix& rho) const;
  /// Natural representation of the unconditioned channel E_0 + E_1.
  Matrix superop() const;
  Eigen::Index dim() const { return dim_; }

 private:
  RimCycle() = default;
  bool kraus_form_ = true;
  Eigen::Index dim_ = 0;
  Matrix k0_, k1_; // kraus form
  Matrix e0_, e1_; // superop form, d^2 x d^2
};

/// Natural representation of the full noisy cycle channel.
Matrix noisy_rim_superop(const SpectralOperator& v, const NoiseSpec& noise, const RimSettings& s);

enum class PointClass { fixed, rotating, metastable, decaying };

const char* to_string(PointClass c);

struct ChannelSpectrum {
  Vector eigenvalues;              // sorted by |lambda| descending
  std::vector<PointClass> classes; // same order
  Matrix right, left;              // biorthonormal eigenvectors, same order
  double m_low = 0.0;              // decaying points negligible above this
  double m_high = 0.0;             // metastable points persist below this

  bool window_nonempty() const { return m_low < m_high; }
};

/// Spectral classification of a channel superoperator. s_hint is the number
/// of near-unit eigenvalues expected to act as fixed points; separation is
/// the factor implementing the strict "much less than" of the metastable
/// window (m_low, m_high) = (c / |ln|l_{s+1}||, 1 / (c |ln|l_s||)).
ChannelSpectrum channel_spectrum(const Matrix& superop, int s_hint, double separation = 10.0,
                                 double tol = 1e-9);

/// Choi matrix (reshuffled superoperator); its eigenvalues certify complete
/// positivity. Test-time diagnostic.
Matrix choi_matrix(const Matrix& superop);

} // namespace iterqpe::channel
