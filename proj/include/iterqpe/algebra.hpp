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

#include <complex>
#include <stdexcept>

#include <Eigen/Dense>

namespace iterqpe {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

namespace algebra {

/// Module-wide numerical tolerances. Mutable so configuration can override.
struct Tolerances {
  double hermiticity = 1e-10;       // relative ||h - h^dag|| bound
  double orthonormality = 1e-10;
  double reconstruction = 1e-8;     // relative, general eigendecomposition
  double defective_condition = 1e8; // eigenvector matrix condition cutoff
};

Tolerances& tolerances();

bool is_finite(const Matrix& m);

Matrix kron(const Matrix& a, const Matrix& b);

// Row-major stacking: |X>> carries x_ij at index i*cols+j, so
// <<Y|X>> = Tr(Y^dag X) and vec(A X B) = (A (x) B^T) vec(X).
Vector vectorize(const Matrix& x);
Matrix devectorize(const Vector& v); // square matrices only

struct HermitianEig {
  RealVector values; // ascending
  Matrix vectors;    // orthonormal columns
};

struct EigenDecomposition {
  Vector values;
  Matrix right; // columns r_i
  Matrix left;  // columns l_i, with l_i^dag r_j = delta_ij
};

/// Throws std::invalid_argument when ||h - h^dag|| > tol * ||h||.
HermitianEig eig_hermitian(const Matrix& h);

/// General (non-normal) eigendecomposition with biorthonormal left/right
/// vectors. Throws std::runtime_error on convergence failure or when the
/// eigenvector matrix condition exceeds the defective cutoff.
EigenDecomposition eig_general(const Matrix& m);

/// exp(-i h t) for Hermitian h, by spectral decomposition.
Matrix expm_hermitian_propagator(const Matrix& h, double t);

/// Matrix exponential via scaling-and-squaring with a degree-13 Pade core.
Matrix expm_general(const Matrix& m);

} // namespace algebra
} // namespace iterqpe
