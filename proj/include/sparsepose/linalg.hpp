// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

namespace sparsepose::linalg {

using Mat23 = Eigen::Matrix<double, 2, 3>;
using Mat32 = Eigen::Matrix<double, 3, 2>;

// Thin SVD of a 2x3 matrix: X = left * diag(singulars) * right^T.
struct ThinSvd {
  Eigen::Matrix2d left;       // orthogonal
  Eigen::Vector2d singulars;  // nonincreasing, nonnegative
  Mat32 right;                // orthonormal columns

  Mat23 reconstruct() const;
};

// Closed-form thin SVD built from the 2x2 Gram matrix X X^T. The left
// factor comes from a single Jacobi rotation, the right factor from X^T P.
// A zero input yields identity factors and zero singular values.
// Throws InvalidInputError on non-finite entries.
ThinSvd thin_svd(const Mat23& x);

double spectral_norm(const Mat23& x);
double nuclear_norm(const Mat23& x);

// Euclidean projection of v onto {w : ||w||_1 <= radius} (sort-based).
// Throws InvalidParameterError if radius <= 0.
Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double radius);

// Soft-threshold level theta used by project_l1_ball; 0 when v is inside.
double l1_ball_threshold(const Eigen::VectorXd& v, double radius);

// argmin_X 0.5 ||X - vp||_F^2 + lam ||X||_2, evaluated through the Moreau
// decomposition against the nuclear-norm ball:
//   P diag(sigma - lam * proj_l1(sigma / lam)) Q^T.
// lam == 0 returns vp unchanged. Throws InvalidParameterError if lam < 0.
Mat23 prox_spectral(const Mat23& vp, double lam);

}  // namespace sparsepose::linalg
