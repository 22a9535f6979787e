// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsepose/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "sparsepose/errors.hpp"

namespace sparsepose::linalg {

namespace {

// Unit vector orthogonal to `u` (|u| == 1), built from the coordinate axis
// least aligned with it.
Eigen::Vector3d orthogonal_complement(const Eigen::Vector3d& u) {
  Eigen::Index axis = 0;
  u.cwiseAbs().minCoeff(&axis);
  Eigen::Vector3d e = Eigen::Vector3d::Unit(axis);
  Eigen::Vector3d w = e - u.dot(e) * u;
  return w.normalized();
}

}  // namespace

Mat23 ThinSvd::reconstruct() const {
  return left * singulars.asDiagonal() * right.transpose();
}

ThinSvd thin_svd(const Mat23& x) {
  if (!x.allFinite()) {
    throw InvalidInputError("thin_svd: input has non-finite entries");
  }
  ThinSvd out;
  if (x.isZero(0.0)) {
    out.left.setIdentity();
    out.singulars.setZero();
    out.right = Mat32::Identity();
    return out;
  }

  const double g11 = x.row(0).squaredNorm();
  const double g22 = x.row(1).squaredNorm();
  const double g12 = x.row(0).dot(x.row(1));

  // One Jacobi rotation diagonalizes the symmetric 2x2 Gram matrix; this
  // angle puts the larger eigenvalue in the first column.
  const double theta = 0.5 * std::atan2(2.0 * g12, g11 - g22);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  out.left << c, -s, s, c;

  const Mat32 w = x.transpose() * out.left;
  Eigen::Vector3d w1 = w.col(0);
  Eigen::Vector3d w2 = w.col(1);

  double s1 = w1.norm();
  Eigen::Vector3d q1;
  if (s1 > 0.0) {
    q1 = w1 / s1;
  } else {
    // Only reachable when rounding moved all energy into w2.
    std::swap(w1, w2);
    out.left.col(0).swap(out.left.col(1));
    s1 = w1.norm();
    q1 = w1 / s1;
  }

  Eigen::Vector3d w2_orth = w2 - q1.dot(w2) * q1;
  const double s2 = w2_orth.norm();
  const Eigen::Vector3d q2 = s2 > 0.0 ? Eigen::Vector3d(w2_orth / s2)
                                      : orthogonal_complement(q1);

  out.singulars << s1, s2;
  out.right.col(0) = q1;
  out.right.col(1) = q2;
  if (s2 > s1) {
    std::swap(out.singulars(0), out.singulars(1));
    out.left.col(0).swap(out.left.col(1));
    out.right.col(0).swap(out.right.col(1));
  }
  return out;
}

double spectral_norm(const Mat23& x) { return thin_svd(x).singulars(0); }

double nuclear_norm(const Mat23& x) { return thin_svd(x).singulars.sum(); }

double l1_ball_threshold(const Eigen::VectorXd& v, double radius) {
  if (!(radius > 0.0)) {
    throw InvalidParameterError("project_l1_ball: radius must be > 0");
  }
  if (v.lpNorm<1>() <= radius) return 0.0;

  std::vector<double> u(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) u[i] = std::abs(v(i));
  std::sort(u.begin(), u.end(), std::greater<>());

  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumsum += u[j];
    const double candidate = (cumsum - radius) / static_cast<double>(j + 1);
    if (u[j] > candidate) {
      theta = candidate;
    } else {
      break;
    }
  }
  return std::max(theta, 0.0);
}

Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double radius) {
  const double theta = l1_ball_threshold(v, radius);
  if (theta == 0.0) return v;
  Eigen::VectorXd w(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::max(std::abs(v(i)) - theta, 0.0);
    w(i) = std::copysign(mag, v(i));
  }
  return w;
}

Mat23 prox_spectral(const Mat23& vp, double lam) {
  if (!(lam >= 0.0)) {
    throw InvalidParameterError("prox_spectral: lambda must be >= 0");
  }
  if (lam == 0.0) return vp;
  const ThinSvd svd = thin_svd(vp);
  if (svd.singulars(0) == 0.0) return Mat23::Zero();

  const Eigen::VectorXd scaled = svd.singulars / lam;
  const Eigen::VectorXd dual = project_l1_ball(scaled, 1.0);
  Eigen::Vector2d shrunk = svd.singulars - lam * dual;
  shrunk = shrunk.cwiseMax(0.0);
  return svd.left * shrunk.asDiagonal() * svd.right.transpose();
}

}  // namespace sparsepose::linalg
