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

#include "iterqpe/algebra.hpp"

#include <cmath>

namespace iterqpe::algebra {

Tolerances& tolerances() {
  static Tolerances tol;
  return tol;
}

bool is_finite(const Matrix& m) { return m.allFinite(); }

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Vector vectorize(const Matrix& x) {
  Vector v(x.size());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) v(i * x.cols() + j) = x(i, j);
  return v;
}

Matrix devectorize(const Vector& v) {
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(double(v.size()))));
  if (d * d != v.size())
    throw std::invalid_argument("devectorize: length is not a perfect square");
  Matrix x(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = v(i * d + j);
  return x;
}

HermitianEig eig_hermitian(const Matrix& h) {
  if (h.rows() != h.cols()) throw std::invalid_argument("eig_hermitian: non-square input");
  const double scale = std::max(h.norm(), 1e-300);
  if ((h - h.adjoint()).norm() > tolerances().hermiticity * scale)
    throw std::invalid_argument("eig_hermitian: input is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> solver((h + h.adjoint()) / 2.0);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eig_hermitian: solver failed to converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

EigenDecomposition eig_general(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("eig_general: non-square input");
  Eigen::ComplexEigenSolver<Matrix> solver(m, /*computeEigenvectors=*/true);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eig_general: failed to converge");
  const Matrix right = solver.eigenvectors();

  Eigen::JacobiSVD<Matrix> svd(right);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (smin <= 0.0 || sv(0) / smin > tolerances().defective_condition)
    throw std::runtime_error("eig_general: near-defective matrix (eigenvector condition above threshold)");

  // Rows of right^{-1} are the left eigenvectors; store them as columns so
  // that left.col(i)^dag * right.col(j) = delta_ij.
  const Matrix rinv = right.inverse();
  return {solver.eigenvalues(), right, rinv.adjoint()};
}

Matrix expm_hermitian_propagator(const Matrix& h, double t) {
  const auto eig = eig_hermitian(h);
  Vector phases(eig.values.size());
  for (Eigen::Index i = 0; i < eig.values.size(); ++i)
    phases(i) = std::exp(Complex(0.0, -eig.values(i) * t));
  return eig.vectors * phases.asDiagonal() * eig.vectors.adjoint();
}

Matrix expm_general(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("expm_general: non-square input");
  const Eigen::Index d = m.rows();
  const Matrix id = Matrix::Identity(d, d);

  // Degree-13 Pade with norm-based scaling (Higham 2005 coefficients).
  static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                             1187353796428800.0,  129060195264000.0,   10559470521600.0,
                             670442572800.0,      33522128640.0,       1323241920.0,
                             40840800.0,          960960.0,            16380.0,
                             182.0,               1.0};
  const double theta13 = 5.371920351148152;

  const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
  if (!std::isfinite(norm1)) throw std::runtime_error("expm_general: non-finite input");
  int squarings = 0;
  if (norm1 > theta13)
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  const Matrix a = m / std::pow(2.0, squarings);

  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const Matrix u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) +
                        b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) +
                   b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;

  Matrix f = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) f = f * f;
  if (!is_finite(f)) throw std::runtime_error("expm_general: overflow for extreme norm");
  return f;
}

} // namespace iterqpe::algebra
