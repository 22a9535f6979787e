// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include <Eigen/Core>

#include "sparsepose/linalg.hpp"

namespace sparsepose {

// 3D landmark shape S (3 x p), p >= 3, finite.
class Pose3D {
 public:
  Pose3D() = default;
  explicit Pose3D(Eigen::Matrix3Xd points);

  const Eigen::Matrix3Xd& points() const { return points_; }
  Eigen::Index landmark_count() const { return points_.cols(); }

 private:
  Eigen::Matrix3Xd points_;
};

// 2D landmark observation Y (2 x p), p >= 1, finite.
class Pose2D {
 public:
  Pose2D() = default;
  explicit Pose2D(Eigen::Matrix2Xd points);

  const Eigen::Matrix2Xd& points() const { return points_; }
  Eigen::Index landmark_count() const { return points_.cols(); }

 private:
  Eigen::Matrix2Xd points_;
};

// D basis shapes B_i (3 x p) whose coordinate rows all have squared norm phi.
struct PoseDictionary {
  std::vector<Eigen::Matrix3Xd> bases;
  double phi = 1.0;

  Eigen::Index size() const { return static_cast<Eigen::Index>(bases.size()); }
  Eigen::Index landmark_count() const { return bases.empty() ? 0 : bases.front().cols(); }

  // Bases stacked vertically into a (3D x p) matrix.
  Eigen::MatrixXd stacked() const;

  // Throws ValidationError naming the first offending basis when D < 1,
  // landmark counts disagree, entries are non-finite, or a row's squared
  // norm differs from phi by more than tol.
  void validate(double tol = 1e-8) const;
};

// D affine matrices M_i (2 x 3) stored side by side as one 2 x 3D block, so
// sum_i M_i B_i is a single product with the stacked dictionary.
class AffineStack {
 public:
  AffineStack() = default;
  explicit AffineStack(Eigen::Index size) : data_(Eigen::Matrix2Xd::Zero(2, 3 * size)) {}
  explicit AffineStack(Eigen::Matrix2Xd data);

  static AffineStack from_matrices(const std::vector<linalg::Mat23>& matrices);

  Eigen::Index size() const { return data_.cols() / 3; }

  auto operator[](Eigen::Index i) { return data_.middleCols<3>(3 * i); }
  auto operator[](Eigen::Index i) const { return data_.middleCols<3>(3 * i); }
  linalg::Mat23 matrix(Eigen::Index i) const { return data_.middleCols<3>(3 * i); }

  Eigen::Matrix2Xd& data() { return data_; }
  const Eigen::Matrix2Xd& data() const { return data_; }

  // Spectral norm of every M_i.
  Eigen::VectorXd spectral_norms() const;

 private:
  Eigen::Matrix2Xd data_;
};

}  // namespace sparsepose
