// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsepose/pose_types.hpp"

#include <cmath>
#include <string>

#include "sparsepose/errors.hpp"

namespace sparsepose {

Pose3D::Pose3D(Eigen::Matrix3Xd points) : points_(std::move(points)) {
  if (points_.cols() < 3) {
    throw InvalidInputError("Pose3D needs at least 3 landmarks, got " +
                            std::to_string(points_.cols()));
  }
  if (!points_.allFinite()) throw InvalidInputError("Pose3D has non-finite coordinates");
}

Pose2D::Pose2D(Eigen::Matrix2Xd points) : points_(std::move(points)) {
  if (points_.cols() < 1) throw InvalidInputError("Pose2D needs at least 1 landmark");
  if (!points_.allFinite()) throw InvalidInputError("Pose2D has non-finite coordinates");
}

Eigen::MatrixXd PoseDictionary::stacked() const {
  const Eigen::Index p = landmark_count();
  Eigen::MatrixXd out(3 * size(), p);
  for (Eigen::Index i = 0; i < size(); ++i) out.middleRows<3>(3 * i) = bases[i];
  return out;
}

void PoseDictionary::validate(double tol) const {
  if (bases.empty()) throw ValidationError("dictionary size must be >= 1");
  if (!(phi > 0.0) || !std::isfinite(phi)) {
    throw ValidationError("dictionary phi must be positive and finite");
  }
  const Eigen::Index p = landmark_count();
  for (std::size_t i = 0; i < bases.size(); ++i) {
    const auto& b = bases[i];
    if (b.cols() != p) {
      throw ValidationError("basis " + std::to_string(i) + " has " +
                            std::to_string(b.cols()) + " landmarks, expected " +
                            std::to_string(p));
    }
    if (!b.allFinite()) {
      throw ValidationError("basis " + std::to_string(i) + " has non-finite entries");
    }
    for (int r = 0; r < 3; ++r) {
      const double sq = b.row(r).squaredNorm();
      if (std::abs(sq - phi) > tol * std::max(1.0, phi)) {
        throw ValidationError("basis " + std::to_string(i) + " row " + std::to_string(r) +
                              " has squared norm " + std::to_string(sq) +
                              ", expected phi = " + std::to_string(phi));
      }
    }
  }
}

AffineStack::AffineStack(Eigen::Matrix2Xd data) : data_(std::move(data)) {
  if (data_.cols() % 3 != 0) {
    throw DimensionError("AffineStack data must have 3*D columns, got " +
                         std::to_string(data_.cols()));
  }
}

AffineStack AffineStack::from_matrices(const std::vector<linalg::Mat23>& matrices) {
  AffineStack out(static_cast<Eigen::Index>(matrices.size()));
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = matrices[i];
  }
  return out;
}

Eigen::VectorXd AffineStack::spectral_norms() const {
  Eigen::VectorXd norms(size());
  for (Eigen::Index i = 0; i < size(); ++i) norms(i) = linalg::spectral_norm(matrix(i));
  return norms;
}

}  // namespace sparsepose
