// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

// Independent reference computations used by the tests. They deliberately
// avoid the library's own kernels (Eigen's Jacobi SVD, bisection, dense
// decompositions and finite differences instead).

#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace sparsepose::testing {

using Mat23 = Eigen::Matrix<double, 2, 3>;

// sqrt of the largest eigenvalue of the 2x2 Gram matrix, in closed form.
inline double oracle_spectral_norm(const Mat23& x) {
  const Eigen::Matrix2d g = x * x.transpose();
  const double half_trace = 0.5 * (g(0, 0) + g(1, 1));
  const double half_gap = 0.5 * (g(0, 0) - g(1, 1));
  return std::sqrt(std::max(0.0, half_trace + std::hypot(half_gap, g(0, 1))));
}

inline double prox_objective(const Mat23& x, const Mat23& vp, double lam) {
  return 0.5 * (x - vp).squaredNorm() + lam * oracle_spectral_norm(x);
}

// Subgradient descent on the 1-strongly convex prox objective with step
// 2/(t+2); returns the best objective over the iterates and their weighted
// running average.
inline double subgradient_prox_oracle(const Mat23& vp, double lam, int steps = 100000) {
  Mat23 x = vp;
  Mat23 avg = vp;
  double best = prox_objective(x, vp, lam);
  for (int t = 0; t < steps; ++t) {
    Eigen::JacobiSVD<Mat23> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat23 g = x - vp;
    if (svd.singularValues()(0) > 0.0) {
      g += lam * svd.matrixU().col(0) * svd.matrixV().col(0).transpose();
    }
    x -= (2.0 / (t + 2.0)) * g;
    const double w = 2.0 / (t + 3.0);
    avg = (1.0 - w) * avg + w * x;
    best = std::min({best, prox_objective(x, vp, lam), prox_objective(avg, vp, lam)});
  }
  return best;
}

// Soft-threshold level theta >= 0 with sum max(|v_i| - theta, 0) = radius,
// found by bisection (0 when v is already inside the ball).
inline double bisect_l1_threshold(const Eigen::VectorXd& v, double radius) {
  if (v.cwiseAbs().sum() <= radius) return 0.0;
  double lo = 0.0;
  double hi = v.cwiseAbs().maxCoeff();
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double mass = (v.cwiseAbs().array() - mid).max(0.0).sum();
    (mass > radius ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Largest violation of the soft-threshold characterization of the l1-ball
// projection w of v: w = v inside the ball, otherwise ||w||_1 = radius and
// w_i = sign(v_i) max(|v_i| - theta, 0) for one theta >= 0.
inline double l1_projection_kkt_violation(const Eigen::VectorXd& v, double radius,
                                          const Eigen::VectorXd& w) {
  if (v.cwiseAbs().sum() <= radius) return (w - v).cwiseAbs().maxCoeff();
  const double theta = bisect_l1_threshold(v, radius);
  double violation = std::abs(w.cwiseAbs().sum() - radius);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double sign = v(i) > 0 ? 1.0 : (v(i) < 0 ? -1.0 : 0.0);
    violation = std::max(violation, std::abs(w(i) - sign * std::max(std::abs(v(i)) - theta, 0.0)));
  }
  return violation;
}

// V-dependent part of the augmented Lagrangian:
// 0.5||Y - V B||^2 + <U, M - V> + mu/2 ||M - V||^2, with V, M, U 2 x 3D and
// B the 3D x p stacked dictionary.
inline double lagrangian_v(const Eigen::Matrix2Xd& v, const Eigen::Matrix2Xd& y,
                           const Eigen::MatrixXd& stacked, const Eigen::Matrix2Xd& m,
                           const Eigen::Matrix2Xd& u, double mu) {
  return 0.5 * (y - v * stacked).squaredNorm() + (u.array() * (m - v).array()).sum() +
         0.5 * mu * (m - v).squaredNorm();
}

// Central-difference gradient of lagrangian_v.
inline Eigen::Matrix2Xd finite_difference_gradient(const Eigen::Matrix2Xd& v,
                                                   const Eigen::Matrix2Xd& y,
                                                   const Eigen::MatrixXd& stacked,
                                                   const Eigen::Matrix2Xd& m,
                                                   const Eigen::Matrix2Xd& u, double mu,
                                                   double h = 1e-5) {
  Eigen::Matrix2Xd grad(2, v.cols());
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    for (Eigen::Index r = 0; r < 2; ++r) {
      Eigen::Matrix2Xd plus = v, minus = v;
      plus(r, c) += h;
      minus(r, c) -= h;
      grad(r, c) = (lagrangian_v(plus, y, stacked, m, u, mu) -
                    lagrangian_v(minus, y, stacked, m, u, mu)) /
                   (2.0 * h);
    }
  }
  return grad;
}

// Minimum-norm least-squares V for Y ~ V B.
inline Eigen::Matrix2Xd least_squares_v(const Eigen::Matrix2Xd& y,
                                        const Eigen::MatrixXd& stacked) {
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(stacked.transpose());
  return cod.solve(y.transpose()).transpose();
}

}  // namespace sparsepose::testing
