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

#include "iterqpe/model.hpp"

#include <cmath>
#include <numbers>

namespace iterqpe::model {

using algebra::kron;

namespace {
constexpr Complex kI{0.0, 1.0};
constexpr double kPi = std::numbers::pi;
} // namespace

Matrix sigma_x() {
  Matrix s(2, 2);
  s << 0, 1, 1, 0;
  return s;
}

Matrix sigma_y() {
  Matrix s(2, 2);
  s << 0, -kI, kI, 0;
  return s;
}

Matrix sigma_z() {
  Matrix s(2, 2);
  s << 1, 0, 0, -1;
  return s;
}

Matrix sigma_minus() {
  Matrix s = Matrix::Zero(2, 2);
  s(1, 0) = 1; // |1><0|
  return s;
}

Matrix sigma_plus() {
  Matrix s = Matrix::Zero(2, 2);
  s(0, 1) = 1;
  return s;
}

Matrix pauli_on(std::size_t qubits, std::size_t index, const Matrix& op) {
  if (index >= qubits) throw std::invalid_argument("pauli_on: qubit index out of range");
  Matrix out = Matrix::Identity(1, 1);
  for (std::size_t j = 0; j < qubits; ++j)
    out = kron(out, j == index ? op : Matrix::Identity(2, 2));
  return out;
}

double SpectralOperator::operator_norm() const {
  double n = 0.0;
  for (double v : eigenvalues) n = std::max(n, std::abs(v));
  return n;
}

Matrix SpectralOperator::dense() const {
  Matrix out = Matrix::Zero(dim, dim);
  for (std::size_t k = 0; k < eigenvalues.size(); ++k) out += eigenvalues[k] * projectors[k];
  return out;
}

std::vector<double> SpectralOperator::weights(const Matrix& rho) const {
  std::vector<double> w(size());
  for (std::size_t k = 0; k < size(); ++k) w[k] = (projectors[k] * rho).trace().real();
  return w;
}

SpectralOperator spectral_from_dense(const Matrix& h, double tol) {
  const auto eig = algebra::eig_hermitian(h);
  const Eigen::Index d = h.rows();
  if (tol < 0.0) {
    const double norm = eig.values.cwiseAbs().maxCoeff();
    tol = 1e-9 * std::max(norm, 1.0);
  }

  SpectralOperator out;
  out.dim = d;
  Eigen::Index i = 0;
  while (i < d) {
    Eigen::Index j = i + 1;
    while (j < d && eig.values(j) - eig.values(j - 1) <= tol) ++j;
    Matrix p = Matrix::Zero(d, d);
    double mean = 0.0;
    for (Eigen::Index c = i; c < j; ++c) {
      p += eig.vectors.col(c) * eig.vectors.col(c).adjoint();
      mean += eig.values(c);
    }
    out.eigenvalues.push_back(mean / double(j - i));
    out.projectors.push_back((p + p.adjoint()) / 2.0); // exactly Hermitian storage
    i = j;
  }
  return out;
}

void SpinStarParams::validate() const {
  if (couplings.empty()) throw std::invalid_argument("spin star: at least one qubit required");
  if (couplings.size() != axes.size())
    throw std::invalid_argument("spin star: couplings and axes length mismatch");
  for (const auto& n : axes)
    if (std::abs(n.norm() - 1.0) > 1e-12)
      throw std::invalid_argument("spin star: axes must be unit vectors");
}

SpectralOperator build_spin_star(const SpinStarParams& p) {
  p.validate();
  const std::size_t k = p.qubits();
  const Eigen::Index d = Eigen::Index(1) << k;
  Matrix v = Matrix::Zero(d, d);
  for (std::size_t j = 0; j < k; ++j) {
    Matrix local = p.axes[j].x() * sigma_x() + p.axes[j].y() * sigma_y() + p.axes[j].z() * sigma_z();
    if (p.positivity_shift) local += Matrix::Identity(2, 2);
    v += (p.couplings[j] / 4.0) * pauli_on(k, j, local);
  }
  return spectral_from_dense((v + v.adjoint()) / 2.0);
}

Matrix build_coherent_noise(const std::vector<double>& omega) {
  const std::size_t k = omega.size();
  if (k == 0) throw std::invalid_argument("coherent noise: empty frequency list");
  const Eigen::Index d = Eigen::Index(1) << k;
  Matrix c = Matrix::Zero(d, d);
  for (std::size_t j = 0; j < k; ++j)
    c += (omega[j] / 2.0) * pauli_on(k, j, sigma_z() + Matrix::Identity(2, 2));
  return c;
}

double NoiseSpec::gamma(const SpectralOperator& v) const {
  if (!has_coherent()) return 0.0;
  const auto eig = algebra::eig_hermitian(coherent);
  return eig.values.cwiseAbs().maxCoeff() / v.operator_norm();
}

void NoiseSpec::validate(Eigen::Index dim) const {
  if (has_coherent() && (coherent.rows() != dim || coherent.cols() != dim))
    throw std::invalid_argument("noise: coherent operator dimension mismatch");
  for (const auto& [jump, rate] : lindblad) {
    if (jump.rows() != dim || jump.cols() != dim)
      throw std::invalid_argument("noise: jump operator dimension mismatch");
    if (rate < 0.0) throw std::invalid_argument("noise: negative Lindblad rate");
  }
}

void CpmgSequence::validate() const {
  if (pulses < 1) throw std::invalid_argument("cpmg: pulse count must be >= 1");
  if (tau_p <= 0.0) throw std::invalid_argument("cpmg: half period must be positive");
}

int cpmg_modulation(const CpmgSequence& seq, double t) {
  seq.validate();
  if (t < 0.0 || t > seq.total_time()) throw std::invalid_argument("cpmg_modulation: time out of range");
  // Number of flip times (2l-1) tau_p <= t.
  const int flips = std::min(seq.pulses, int(std::floor((t / seq.tau_p + 1.0) / 2.0)));
  return flips % 2 == 0 ? 1 : -1;
}

Complex cpmg_filter(const CpmgSequence& seq, double omega) {
  seq.validate();
  const double t_end = seq.total_time();
  if (std::abs(omega) < 1e-14) {
    // int f dt: the + and - segments cancel exactly for full CPMG blocks.
    double acc = 0.0, prev = 0.0;
    int sign = 1;
    for (int l = 1; l <= seq.pulses; ++l) {
      const double tl = (2.0 * l - 1.0) * seq.tau_p;
      acc += sign * (tl - prev);
      prev = tl;
      sign = -sign;
    }
    acc += sign * (t_end - prev);
    return acc;
  }
  Complex acc = 0.0;
  double prev = 0.0;
  int sign = 1;
  const auto segment = [omega](double a, double b) {
    return (std::exp(kI * omega * b) - std::exp(kI * omega * a)) / (kI * omega);
  };
  for (int l = 1; l <= seq.pulses; ++l) {
    const double tl = (2.0 * l - 1.0) * seq.tau_p;
    acc += double(sign) * segment(prev, tl);
    prev = tl;
    sign = -sign;
  }
  acc += double(sign) * segment(prev, t_end);
  return acc;
}

namespace {

// Per-qubit rotation generators theta_j (cos k_j sx - sin k_j sy).
std::vector<Matrix> effective_terms(const SpinStarParams& p, const CpmgSequence& seq, double omega) {
  p.validate();
  seq.validate();
  const Complex f = cpmg_filter(seq, omega);
  std::vector<Matrix> terms;
  for (std::size_t j = 0; j < p.qubits(); ++j) {
    const auto& n = p.axes[j];
    // First-order term F V(omega) + F* V(omega)^dag per qubit: the raising
    // part of (A_j/4) sigma.n_j carries (A_j/4) (n^x - i n^y). At resonance
    // |F| = 2N/omega, so theta_j = A_j |n_j^perp| N / (2 omega).
    const double a_perp = p.couplings[j] * std::hypot(n.x(), n.y());
    const double theta = a_perp * std::abs(f) / 4.0;
    // Sign convention makes exp(-iG) the ancilla-(+1) conditional
    // propagator; see README on the kappa_j convention.
    const double kappa = std::arg(f) - std::atan2(n.y(), n.x());
    terms.push_back(theta * (std::cos(kappa) * sigma_x() - std::sin(kappa) * sigma_y()));
  }
  return terms;
}

} // namespace

Matrix cpmg_effective_unitary(const SpinStarParams& p, const CpmgSequence& seq, double omega) {
  const auto terms = effective_terms(p, seq, omega);
  Matrix u = Matrix::Identity(1, 1);
  for (const auto& g : terms) u = kron(u, algebra::expm_hermitian_propagator(g, 1.0));
  return u;
}

Matrix cpmg_effective_generator(const SpinStarParams& p, const CpmgSequence& seq, double omega) {
  const auto terms = effective_terms(p, seq, omega);
  const std::size_t k = p.qubits();
  const Eigen::Index d = Eigen::Index(1) << k;
  Matrix g = Matrix::Zero(d, d);
  for (std::size_t j = 0; j < k; ++j) g += pauli_on(k, j, terms[j]);
  return g;
}

} // namespace iterqpe::model
