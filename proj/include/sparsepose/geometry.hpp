// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "sparsepose/linalg.hpp"
#include "sparsepose/pose_types.hpp"

namespace sparsepose::geometry {

// Weak-perspective camera: Y = Pi (R S + T 1^T), Pi = [[w,0,0],[0,w,0]].
struct CameraModel {
  double omega = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  // Throws InvalidParameterError unless omega > 0 and rotation is in SO(3)
  // to 1e-10.
  void validate() const;
};

linalg::Mat23 projection_matrix(double omega);

// Rotation by `angle` radians about the vertical (y) axis.
Eigen::Matrix3d rotation_y(double angle);

// Uniformly distributed element of SO(3).
Eigen::Matrix3d random_rotation(std::mt19937_64& rng);

// Whether R^T R = I and det R = 1 within tol.
bool is_rotation(const Eigen::Matrix3d& r, double tol = 1e-10);

Pose2D project(const Pose3D& shape, const CameraModel& camera);

struct Centralized {
  Pose2D pose;
  Eigen::Vector2d mean;
};

// Subtracts the per-row landmark mean.
Centralized centralize(const Pose2D& pose);
Eigen::Matrix3Xd centralize(const Eigen::Matrix3Xd& points);

// `count` angles evenly spaced over [0, 2*pi).
std::vector<double> uniform_angles(int count);

// One centralized view per angle: y-axis rotation, projection, centering.
std::vector<Pose2D> synthesize_views(const Pose3D& shape, std::span<const double> angles,
                                     double omega = 1.0);

// S + sigma * mean(|S|) * G with G standard normal, drawn from `seed`.
Pose3D add_shape_noise(const Pose3D& shape, double sigma, std::uint64_t seed);

struct RotationRecovery {
  double coefficient = 0.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
};

// Splits M ~ c Pi R into c = ||M||_2 and the rotation whose first two rows
// are the nearest orthonormal frame P Q^T to M; the third row is their cross
// product. A zero M gives c = 0 and R = I.
RotationRecovery recover_rotation(const linalg::Mat23& m);

// Relative cut-off below which a basis is treated as inactive.
inline constexpr double kActiveThreshold = 1e-6;

// S_hat = sum_i c_i R_i B_i over bases with c_i >= threshold * max_j c_j.
// Throws DimensionError when the stack and dictionary sizes differ.
Pose3D reconstruct_shape(const AffineStack& stack, const PoseDictionary& dictionary,
                         double active_threshold = kActiveThreshold);

struct SimilarityTransform {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Matrix3Xd apply(const Eigen::Matrix3Xd& points) const;
};

// Similarity transform minimizing ||s R target + t - reference||_F (s fixed
// to 1 when with_scale is false). Throws DimensionError on landmark mismatch
// and DegenerateError when the target points all coincide.
SimilarityTransform fit_similarity(const Pose3D& reference, const Pose3D& target,
                                   bool with_scale = true);

Pose3D procrustes_align(const Pose3D& reference, const Pose3D& target);

// ||S_hat - S||_F, optionally after aligning S_hat onto S. A fully
// collapsed S_hat aligns to the centroid of S.
double recovery_error(const Pose3D& s_hat, const Pose3D& s, bool align);

}  // namespace sparsepose::geometry
