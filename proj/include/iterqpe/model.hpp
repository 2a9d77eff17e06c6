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

#include <utility>
#include <vector>

#include "iterqpe/algebra.hpp"

namespace iterqpe::model {

/// Hermitian target operator V stored as distinct eigenvalues with orthogonal
/// projectors: V = sum_k v_k P_k, sum_k P_k = I.
struct SpectralOperator {
  Eigen::Index dim = 0;
  std::vector<double> eigenvalues; // distinct, ascending
  std::vector<Matrix> projectors;

  std::size_t size() const { return eigenvalues.size(); } // s <= dim
  double operator_norm() const;                           // max_k |v_k|
  Matrix dense() const;                                   // sum_k v_k P_k
  /// Eigenspace weights Tr(P_k rho) for a density matrix.
  std::vector<double> weights(const Matrix& rho) const;
};

/// Group eigenvalues closer than tol into one eigenspace. tol < 0 selects the
/// default 1e-9 * operator norm.
SpectralOperator spectral_from_dense(const Matrix& h, double tol = -1.0);

struct SpinStarParams {
  std::vector<double> couplings;       // A_j, rad/time
  std::vector<Eigen::Vector3d> axes;   // unit vectors n_j
  // With the shift each single-qubit term is A_j(sigma.n + I)/4, spectrum
  // {0, A_j/2}; without it A_j(sigma.n)/4, spectrum {-A_j/4, +A_j/4}.
  bool positivity_shift = true;

  std::size_t qubits() const { return couplings.size(); }
  void validate() const;
};

SpectralOperator build_spin_star(const SpinStarParams& p);

/// C = sum_j omega_j (sigma_j^z + I)/2, diagonal in the computational basis.
Matrix build_coherent_noise(const std::vector<double>& omega);

struct NoiseSpec {
  Matrix coherent;                                  // 0x0 when absent
  std::vector<std::pair<Matrix, double>> lindblad;  // (jump L_k, rate >= 0)

  bool has_coherent() const { return coherent.size() > 0; }
  bool has_lindblad() const { return !lindblad.empty(); }
  bool empty() const { return !has_coherent() && !has_lindblad(); }
  /// Relative coherent strength gamma = ||C|| / ||V||.
  double gamma(const SpectralOperator& v) const;
  void validate(Eigen::Index dim) const;
};

/// N-pulse CPMG block: pi flips at t_l = (2l-1) tau_p, total time 2 N tau_p.
struct CpmgSequence {
  int pulses = 1;     // N
  double tau_p = 0.0; // half period

  double total_time() const { return 2.0 * pulses * tau_p; }
  void validate() const;
};

/// Toggling sign f(t): +1 on [0, tau_p), flipping at each pulse.
int cpmg_modulation(const CpmgSequence& seq, double t);

/// Filter function F(omega, t) = int_0^t f(t') e^{i omega t'} dt', closed form.
Complex cpmg_filter(const CpmgSequence& seq, double omega);

/// Resonant (2 tau_p = pi/omega) first-order effective conditional unitary
/// for the ancilla-(+1) branch, built from F V(omega) + F* V(omega)^dag:
/// prod_j exp[-i theta_j (cos k_j sx_j - sin k_j sy_j)] with
/// theta_j = A_j^perp |F(omega, t)| / 4, A_j^perp = A_j sqrt((n_j^x)^2 +
/// (n_j^y)^2) and k_j = arg F - atan2(n_j^y, n_j^x). At resonance
/// |F| = 2N/omega, so theta_j = A_j^perp N / (2 omega).
Matrix cpmg_effective_unitary(const SpinStarParams& p, const CpmgSequence& seq, double omega);

/// Hermitian exponent G with cpmg_effective_unitary == exp(-i G); feeding
/// -G / total_time as the target operator reuses the static-V pipeline.
Matrix cpmg_effective_generator(const SpinStarParams& p, const CpmgSequence& seq, double omega);

// Pauli helpers on a K-qubit register (qubit index 0 is the leftmost factor).
Matrix pauli_on(std::size_t qubits, std::size_t index, const Matrix& op);
Matrix sigma_x();
Matrix sigma_y();
Matrix sigma_z();
Matrix sigma_minus();
Matrix sigma_plus();

} // namespace iterqpe::model
