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

#include "iterqpe/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace iterqpe::channel {

using algebra::devectorize;
using algebra::kron;
using algebra::vectorize;

namespace {
constexpr Complex kI{0.0, 1.0};

// R_phi(pi/2) = exp(-i (cos phi sx - sin phi sy) pi/4); the sign of the
// sy component makes <0|R_phi pick up e^{i(phi + v tau)} as in the
// lambda closed form.
Matrix half_pi_rotation(double phi) {
  Matrix axis = std::cos(phi) * model::sigma_x() - std::sin(phi) * model::sigma_y();
  return (Matrix::Identity(2, 2) - kI * axis) / std::sqrt(2.0);
}

// Ancilla state R_0(pi/2)|0> = (|0> - i |1>)/sqrt(2).
Vector prepared_ancilla() {
  Vector psi(2);
  psi << 1.0 / std::sqrt(2.0), -kI / std::sqrt(2.0);
  return psi;
}
} // namespace

double KrausPair::completeness_defect() const {
  const Matrix sum = m0.adjoint() * m0 + m1.adjoint() * m1;
  return (sum - Matrix::Identity(sum.rows(), sum.cols())).norm();
}

KrausPair build_rim_kraus(const SpectralOperator& v, const RimSettings& s) {
  s.validate();
  KrausPair kp;
  const auto n = Eigen::Index(v.size());
  kp.lambdas.resize(2, n);
  kp.m0 = Matrix::Zero(v.dim, v.dim);
  kp.m1 = Matrix::Zero(v.dim, v.dim);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double vk = v.eigenvalues[std::size_t(k)];
    const Complex forward = std::exp(-kI * vk * s.tau);
    const Complex backward = std::exp(kI * (s.phi + vk * s.tau));
    kp.lambdas(0, k) = (forward - backward) / 2.0;
    kp.lambdas(1, k) = (forward + backward) / 2.0;
    kp.m0 += kp.lambdas(0, k) * v.projectors[std::size_t(k)];
    kp.m1 += kp.lambdas(1, k) * v.projectors[std::size_t(k)];
  }
  return kp;
}

void check_nonparallel_lambdas(const SpectralOperator& v, const RimSettings& s, double tol) {
  const auto kp = build_rim_kraus(v, s);
  const auto n = kp.lambdas.cols();
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = k + 1; l < n; ++l) {
      const Complex ip = kp.lambdas.col(l).dot(kp.lambdas.col(k));
      if (std::abs(std::abs(ip) - 1.0) < tol)
        throw std::runtime_error(
            "degenerate lambda vectors: asymptotic subspace larger than the fixed-point set");
    }
}

Matrix natural_rep(const KrausPair& kp) {
  return kron(kp.m0, kp.m0.conjugate()) + kron(kp.m1, kp.m1.conjugate());
}

Matrix compose_sequence(const SpectralOperator& v, const std::vector<RimSettings>& settings) {
  if (settings.empty()) throw std::invalid_argument("compose_sequence: empty settings list");
  const auto s = v.size();
  Matrix out = Matrix::Zero(v.dim * v.dim, v.dim * v.dim);
  for (std::size_t k = 0; k < s; ++k)
    for (std::size_t l = 0; l < s; ++l) {
      double factor = 1.0;
      for (const auto& st : settings)
        factor *= std::cos((v.eigenvalues[k] - v.eigenvalues[l]) * st.tau);
      out += factor * kron(v.projectors[k], v.projectors[l].conjugate());
    }
  return out;
}

Matrix asymptotic_projector(const SpectralOperator& v, const RimSettings* settings) {
  if (settings != nullptr) check_nonparallel_lambdas(v, *settings);
  Matrix out = Matrix::Zero(v.dim * v.dim, v.dim * v.dim);
  for (std::size_t k = 0; k < v.size(); ++k)
    out += kron(v.projectors[k], v.projectors[k].conjugate());
  return out;
}

RimCycle RimCycle::closed_form(const SpectralOperator& v, const RimSettings& s) {
  const auto kp = build_rim_kraus(v, s);
  RimCycle c;
  c.kraus_form_ = true;
  c.dim_ = v.dim;
  c.k0_ = kp.m0;
  c.k1_ = kp.m1;
  return c;
}

RimCycle RimCycle::coherent(const SpectralOperator& v, const Matrix& c, const RimSettings& s) {
  s.validate();
  const Eigen::Index d = v.dim;
  const Matrix h = kron(model::sigma_z(), v.dense()) + kron(Matrix::Identity(2, 2), c);
  const Matrix u = algebra::expm_hermitian_propagator(h, s.tau);
  const Matrix g = u * kron(prepared_ancilla(), Matrix::Identity(d, d));
  const Matrix r = half_pi_rotation(s.phi);

  RimCycle cyc;
  cyc.kraus_form_ = true;
  cyc.dim_ = d;
  cyc.k0_ = r(0, 0) * g.topRows(d) + r(0, 1) * g.bottomRows(d);
  cyc.k1_ = r(1, 0) * g.topRows(d) + r(1, 1) * g.bottomRows(d);
  return cyc;
}

RimCycle RimCycle::lindblad(const SpectralOperator& v, const NoiseSpec& noise, const RimSettings& s) {
  s.validate();
  noise.validate(v.dim);
  const Eigen::Index d = v.dim;
  const Eigen::Index dc = 2 * d;
  const Matrix idc = Matrix::Identity(dc, dc);

  Matrix h = kron(model::sigma_z(), v.dense());
  if (noise.has_coherent()) h += kron(Matrix::Identity(2, 2), noise.coherent);

  Matrix liouville = -kI * (kron(h, idc) - kron(idc, h.transpose()));
  for (const auto& [jump, rate] : noise.lindblad) {
    const Matrix l = kron(Matrix::Identity(2, 2), jump);
    const Matrix ldl = l.adjoint() * l;
    liouville += rate * (kron(l, l.conjugate()) -
                         0.5 * (kron(ldl, idc) + kron(idc, ldl.transpose())));
  }
  const Matrix propagator = algebra::expm_general(liouville * s.tau);

  const Vector psi = prepared_ancilla();
  const Matrix rho_q = psi * psi.adjoint();
  const Matrix r_full = kron(half_pi_rotation(s.phi), Matrix::Identity(d, d));

  RimCycle cyc;
  cyc.kraus_form_ = false;
  cyc.dim_ = d;
  cyc.e0_ = Matrix::Zero(d * d, d * d);
  cyc.e1_ = Matrix::Zero(d * d, d * d);
  Matrix basis = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      basis(i, j) = 1.0;
      const Matrix evolved = devectorize(propagator * vectorize(kron(rho_q, basis)));
      const Matrix rotated = r_full * evolved * r_full.adjoint();
      cyc.e0_.col(i * d + j) = vectorize(rotated.topLeftCorner(d, d));
      cyc.e1_.col(i * d + j) = vectorize(rotated.bottomRightCorner(d, d));
      basis(i, j) = 0.0;
    }
  return cyc;
}

RimCycle RimCycle::for_noise(const SpectralOperator& v, const NoiseSpec& noise, const RimSettings& s) {
  if (noise.has_lindblad()) return lindblad(v, noise, s);
  if (noise.has_coherent()) return coherent(v, noise.coherent, s);
  return closed_form(v, s);
}

const Matrix& RimCycle::kraus(int outcome) const {
  if (!kraus_form_) throw std::logic_error("RimCycle: no Kraus form for Lindblad cycles");
  return outcome == 0 ? k0_ : k1_;
}

Matrix RimCycle::apply(const Matrix& rho, int outcome) const {
  if (kraus_form_) {
    const Matrix& k = outcome == 0 ? k0_ : k1_;
    return k * rho * k.adjoint();
  }
  const Matrix& e = outcome == 0 ? e0_ : e1_;
  return devectorize(e * vectorize(rho));
}

double RimCycle::outcome0_probability(const Matrix& rho) const {
  return apply(rho, 0).trace().real();
}

Matrix RimCycle::superop() const {
  if (kraus_form_) return kron(k0_, k0_.conjugate()) + kron(k1_, k1_.conjugate());
  return e0_ + e1_;
}

Matrix noisy_rim_superop(const SpectralOperator& v, const NoiseSpec& noise, const RimSettings& s) {
  return RimCycle::for_noise(v, noise, s).superop();
}

const char* to_string(PointClass c) {
  switch (c) {
    case PointClass::fixed: return "fixed";
    case PointClass::rotating: return "rotating";
    case PointClass::metastable: return "metastable";
    case PointClass::decaying: return "decaying";
  }
  return "unknown";
}

ChannelSpectrum channel_spectrum(const Matrix& superop, int s_hint, double separation, double tol) {
  if (superop.rows() != superop.cols())
    throw std::invalid_argument("channel_spectrum: non-square superoperator");
  if (s_hint < 1) throw std::invalid_argument("channel_spectrum: s_hint must be >= 1");

  const auto eig = algebra::eig_general(superop);
  const auto n = eig.values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(eig.values(a)) > std::abs(eig.values(b));
  });

  ChannelSpectrum spec;
  spec.eigenvalues.resize(n);
  spec.right.resize(n, n);
  spec.left.resize(n, n);
  spec.classes.resize(std::size_t(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Complex lambda = eig.values(order[std::size_t(i)]);
    spec.eigenvalues(i) = lambda;
    spec.right.col(i) = eig.right.col(order[std::size_t(i)]);
    spec.left.col(i) = eig.left.col(order[std::size_t(i)]);
    if (std::abs(lambda - 1.0) <= tol)
      spec.classes[std::size_t(i)] = PointClass::fixed;
    else if (std::abs(lambda) >= 1.0 - tol)
      spec.classes[std::size_t(i)] = PointClass::rotating;
    else if (i < s_hint)
      spec.classes[std::size_t(i)] = PointClass::metastable;
    else
      spec.classes[std::size_t(i)] = PointClass::decaying;
  }

  const auto decay_scale = [&](Eigen::Index idx) {
    // 1 / |ln |lambda_idx||, infinite for unit-modulus eigenvalues.
    if (idx >= n) return 0.0;
    const double mod = std::abs(spec.eigenvalues(idx));
    if (mod >= 1.0 - tol) return std::numeric_limits<double>::infinity();
    if (mod <= 0.0) return 0.0;
    return 1.0 / std::abs(std::log(mod));
  };
  // 1-based lambda_s and lambda_{s+1} of the stated window.
  spec.m_low = s_hint < n ? separation * decay_scale(s_hint) : 0.0;
  spec.m_high = decay_scale(s_hint - 1) / separation;
  return spec;
}

Matrix choi_matrix(const Matrix& superop) {
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(double(superop.rows()))));
  if (d * d != superop.rows()) throw std::invalid_argument("choi_matrix: bad dimension");
  Matrix choi(d * d, d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index k = 0; k < d; ++k)
        for (Eigen::Index l = 0; l < d; ++l)
          choi(i * d + k, j * d + l) = superop(i * d + j, k * d + l);
  return choi;
}

} // namespace iterqpe::channel
