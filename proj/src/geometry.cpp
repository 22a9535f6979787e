// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsepose/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Geometry>

#include "sparsepose/errors.hpp"

namespace sparsepose::geometry {

void CameraModel::validate() const {
  if (!(omega > 0.0) || !std::isfinite(omega)) {
    throw InvalidParameterError("camera omega must be positive");
  }
  if (!is_rotation(rotation, 1e-10)) {
    throw InvalidParameterError("camera rotation is not in SO(3)");
  }
  if (!translation.allFinite()) throw InvalidParameterError("camera translation not finite");
}

linalg::Mat23 projection_matrix(double omega) {
  linalg::Mat23 pi;
  pi << omega, 0.0, 0.0, 0.0, omega, 0.0;
  return pi;
}

Eigen::Matrix3d rotation_y(double angle) {
  return Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitY()).toRotationMatrix();
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Quaterniond q;
  do {
    q.coeffs() << normal(rng), normal(rng), normal(rng), normal(rng);
  } while (q.coeffs().norm() < 1e-8);
  q.normalize();
  return q.toRotationMatrix();
}

bool is_rotation(const Eigen::Matrix3d& r, double tol) {
  if (!r.allFinite()) return false;
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

Pose2D project(const Pose3D& shape, const CameraModel& camera) {
  camera.validate();
  Eigen::Matrix3Xd world = camera.rotation * shape.points();
  world.colwise() += camera.translation;
  return Pose2D(projection_matrix(camera.omega) * world);
}

Centralized centralize(const Pose2D& pose) {
  const Eigen::Vector2d mean = pose.points().rowwise().mean();
  Eigen::Matrix2Xd centered = pose.points().colwise() - mean;
  return {Pose2D(std::move(centered)), mean};
}

Eigen::Matrix3Xd centralize(const Eigen::Matrix3Xd& points) {
  const Eigen::Vector3d mean = points.rowwise().mean();
  return points.colwise() - mean;
}

std::vector<double> uniform_angles(int count) {
  std::vector<double> angles;
  angles.reserve(count > 0 ? count : 0);
  for (int k = 0; k < count; ++k) {
    angles.push_back(2.0 * std::numbers::pi * static_cast<double>(k) / count);
  }
  return angles;
}

std::vector<Pose2D> synthesize_views(const Pose3D& shape, std::span<const double> angles,
                                     double omega) {
  if (angles.empty()) throw InvalidParameterError("synthesize_views: no angles given");
  std::vector<Pose2D> views;
  views.reserve(angles.size());
  for (double angle : angles) {
    CameraModel camera;
    camera.omega = omega;
    camera.rotation = rotation_y(angle);
    views.push_back(centralize(project(shape, camera)).pose);
  }
  return views;
}

Pose3D add_shape_noise(const Pose3D& shape, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InvalidParameterError("noise sigma must be >= 0");
  if (sigma == 0.0) return shape;
  const double scale = sigma * shape.points().cwiseAbs().mean();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Matrix3Xd noisy = shape.points();
  for (Eigen::Index k = 0; k < noisy.size(); ++k) noisy.data()[k] += scale * normal(rng);
  return Pose3D(std::move(noisy));
}

RotationRecovery recover_rotation(const linalg::Mat23& m) {
  const linalg::ThinSvd svd = linalg::thin_svd(m);
  RotationRecovery out;
  out.coefficient = svd.singulars(0);
  if (out.coefficient == 0.0) return out;
  const linalg::Mat23 frame = svd.left * svd.right.transpose();
  const Eigen::Vector3d r0 = frame.row(0).transpose();
  const Eigen::Vector3d r1 = frame.row(1).transpose();
  out.rotation.row(0) = r0.transpose();
  out.rotation.row(1) = r1.transpose();
  out.rotation.row(2) = r0.cross(r1).transpose();
  return out;
}

Pose3D reconstruct_shape(const AffineStack& stack, const PoseDictionary& dictionary,
                         double active_threshold) {
  if (stack.size() != dictionary.size()) {
    throw DimensionError("reconstruct_shape: stack has " + std::to_string(stack.size()) +
                         " matrices, dictionary has " + std::to_string(dictionary.size()) +
                         " bases");
  }
  std::vector<RotationRecovery> parts(static_cast<std::size_t>(stack.size()));
  double largest = 0.0;
  for (Eigen::Index i = 0; i < stack.size(); ++i) {
    parts[i] = recover_rotation(stack.matrix(i));
    largest = std::max(largest, parts[i].coefficient);
  }
  Eigen::Matrix3Xd shape = Eigen::Matrix3Xd::Zero(3, dictionary.landmark_count());
  if (largest == 0.0) return Pose3D(std::move(shape));
  const double cutoff = active_threshold * largest;
  for (Eigen::Index i = 0; i < stack.size(); ++i) {
    if (parts[i].coefficient < cutoff) continue;
    shape.noalias() += parts[i].coefficient * parts[i].rotation * dictionary.bases[i];
  }
  return Pose3D(std::move(shape));
}

Eigen::Matrix3Xd SimilarityTransform::apply(const Eigen::Matrix3Xd& points) const {
  Eigen::Matrix3Xd out = scale * rotation * points;
  out.colwise() += translation;
  return out;
}

SimilarityTransform fit_similarity(const Pose3D& reference, const Pose3D& target,
                                   bool with_scale) {
  if (reference.landmark_count() != target.landmark_count()) {
    throw DimensionError("procrustes: reference has " +
                         std::to_string(reference.landmark_count()) +
                         " landmarks, target has " + std::to_string(target.landmark_count()));
  }
  const Eigen::Matrix3Xd centered = centralize(target.points());
  if (centered.squaredNorm() <= 1e-24 * std::max(1.0, target.points().squaredNorm())) {
    throw DegenerateError("procrustes: target landmarks coincide, alignment undefined");
  }
  // Rotation from Umeyama; scale and translation in closed form so a
  // collapsed reference yields scale 0 instead of a division by zero.
  const Eigen::Matrix4d t = Eigen::umeyama(target.points(), reference.points(), false);
  SimilarityTransform out;
  out.rotation = t.topLeftCorner<3, 3>();
  const Eigen::Vector3d target_mean = target.points().rowwise().mean();
  const Eigen::Vector3d reference_mean = reference.points().rowwise().mean();
  const Eigen::Matrix3Xd reference_centered = reference.points().colwise() - reference_mean;
  out.scale = with_scale ? (out.rotation * centered).cwiseProduct(reference_centered).sum() /
                               centered.squaredNorm()
                         : 1.0;
  out.translation = reference_mean - out.scale * out.rotation * target_mean;
  return out;
}

Pose3D procrustes_align(const Pose3D& reference, const Pose3D& target) {
  return Pose3D(fit_similarity(reference, target).apply(target.points()));
}

double recovery_error(const Pose3D& s_hat, const Pose3D& s, bool align) {
  if (s_hat.landmark_count() != s.landmark_count()) {
    throw DimensionError("recovery_error: " + std::to_string(s_hat.landmark_count()) +
                         " vs " + std::to_string(s.landmark_count()) + " landmarks");
  }
  if (!align) return (s_hat.points() - s.points()).norm();
  try {
    return (procrustes_align(s, s_hat).points() - s.points()).norm();
  } catch (const DegenerateError&) {
    return centralize(s.points()).norm();
  }
}

}  // namespace sparsepose::geometry
