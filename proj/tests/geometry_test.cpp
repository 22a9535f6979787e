// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsepose/geometry.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "sparsepose/dictionary.hpp"
#include "sparsepose/errors.hpp"

namespace sparsepose::geometry {
namespace {

Eigen::Matrix3Xd random_points(std::mt19937_64& rng, Eigen::Index p) {
  std::normal_distribution<double> normal;
  Eigen::Matrix3Xd s(3, p);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = normal(rng);
  return s;
}

TEST(CameraTest, ValidateRejectsBadRotation) {
  CameraModel camera;
  camera.rotation(0, 0) = 2.0;
  EXPECT_THROW(camera.validate(), InvalidParameterError);
  CameraModel zero_scale;
  zero_scale.omega = 0.0;
  EXPECT_THROW(zero_scale.validate(), InvalidParameterError);
}

TEST(ProjectTest, OriginMapsToZero) {
  CameraModel camera;
  std::mt19937_64 rng(1);
  camera.rotation = random_rotation(rng);
  const Pose2D y = project(Pose3D(Eigen::Matrix3Xd::Zero(3, 5)), camera);
  EXPECT_EQ(y.points(), Eigen::Matrix2Xd::Zero(2, 5));
}

TEST(ProjectTest, ScaledRepeatedPoint) {
  CameraModel camera;
  camera.omega = 2.0;
  const Pose2D y = project(Pose3D(Eigen::Vector3d(1, 2, 3).replicate(1, 4)), camera);
  for (Eigen::Index j = 0; j < 4; ++j) EXPECT_EQ(y.points().col(j), Eigen::Vector2d(2, 4));
}

TEST(ProjectTest, QuarterTurnAboutZ) {
  std::mt19937_64 rng(2);
  const Eigen::Matrix3Xd s = random_points(rng, 6);
  CameraModel camera;
  camera.rotation = Eigen::AngleAxisd(std::numbers::pi / 2, Eigen::Vector3d::UnitZ()).matrix();
  const Pose2D y = project(Pose3D(s), camera);
  EXPECT_LE((y.points().row(0) + s.row(1)).norm(), 1e-12);
  EXPECT_LE((y.points().row(1) - s.row(0)).norm(), 1e-12);
}

TEST(ProjectTest, TranslationShiftsColumns) {
  CameraModel camera;
  camera.translation = Eigen::Vector3d(1, -2, 5);
  const Pose2D y = project(Pose3D(Eigen::Matrix3Xd::Zero(3, 3)), camera);
  EXPECT_EQ(y.points().col(2), Eigen::Vector2d(1, -2));
}

TEST(CentralizeTest, Examples) {
  Eigen::Matrix2Xd y(2, 2);
  y << 1, 3, 1, 3;
  const auto c = centralize(Pose2D(y));
  Eigen::Matrix2Xd expected(2, 2);
  expected << -1, 1, -1, 1;
  EXPECT_EQ(c.pose.points(), expected);
  EXPECT_EQ(c.mean, Eigen::Vector2d(2, 2));

  const auto again = centralize(c.pose);
  EXPECT_EQ(again.pose.points(), expected);
  EXPECT_EQ(again.mean, Eigen::Vector2d::Zero());

  const auto single = centralize(Pose2D(Eigen::Vector2d(5, 7)));
  EXPECT_EQ(single.pose.points(), Eigen::Matrix2Xd::Zero(2, 1));
  EXPECT_EQ(single.mean, Eigen::Vector2d(5, 7));
}

TEST(SynthesizeViewsTest, AngleZeroIsCenteredTopRows) {
  std::mt19937_64 rng(3);
  const Eigen::Matrix3Xd s = random_points(rng, 7);
  const std::vector<double> angles = {0.0};
  const auto views = synthesize_views(Pose3D(s), angles);
  ASSERT_EQ(views.size(), 1u);
  const Eigen::Matrix2Xd expected = s.topRows<2>().colwise() - s.topRows<2>().rowwise().mean();
  EXPECT_LE((views[0].points() - expected).norm(), 1e-12);
}

TEST(SynthesizeViewsTest, PeriodicAndCount) {
  std::mt19937_64 rng(4);
  const Pose3D s(random_points(rng, 7));
  const std::vector<double> angles = {0.0, 2.0 * std::numbers::pi};
  const auto views = synthesize_views(s, angles);
  EXPECT_LE((views[0].points() - views[1].points()).norm(), 1e-12);
  const auto many = uniform_angles(36);
  EXPECT_EQ(synthesize_views(s, many).size(), 36u);
  EXPECT_LT(many.back(), 2.0 * std::numbers::pi);
  EXPECT_THROW(synthesize_views(s, {}), InvalidParameterError);
}

TEST(ShapeNoiseTest, ZeroSigmaAndDeterminism) {
  std::mt19937_64 rng(5);
  const Pose3D s(random_points(rng, 10));
  EXPECT_EQ(add_shape_noise(s, 0.0, 9).points(), s.points());
  EXPECT_EQ(add_shape_noise(s, 0.1, 9).points(), add_shape_noise(s, 0.1, 9).points());
  EXPECT_NE(add_shape_noise(s, 0.1, 9).points(), add_shape_noise(s, 0.1, 10).points());
  EXPECT_THROW(add_shape_noise(s, -0.1, 9), InvalidParameterError);
}

TEST(ShapeNoiseTest, EmpiricalStandardDeviation) {
  std::mt19937_64 rng(6);
  const Pose3D s(random_points(rng, 3334));  // 10002 entries
  const double sigma = 0.1;
  const Eigen::Matrix3Xd diff = add_shape_noise(s, sigma, 21).points() - s.points();
  const double mean = diff.mean();
  const double sd = std::sqrt((diff.array() - mean).square().sum() / (diff.size() - 1));
  const double expected = sigma * s.points().cwiseAbs().mean();
  EXPECT_NEAR(sd / expected, 1.0, 0.05);
}

TEST(RecoverRotationTest, Examples) {
  linalg::Mat23 m;
  m << 1, 0, 0, 0, 1, 0;
  auto r = recover_rotation(m);
  EXPECT_NEAR(r.coefficient, 1.0, 1e-12);
  EXPECT_LE((r.rotation - Eigen::Matrix3d::Identity()).norm(), 1e-12);

  r = recover_rotation(linalg::Mat23::Zero());
  EXPECT_EQ(r.coefficient, 0.0);
  EXPECT_EQ(r.rotation, Eigen::Matrix3d::Identity());
}

TEST(RecoverRotationTest, ForwardConstructions) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coeff(0.01, 100.0);
  for (int k = 0; k < 1000; ++k) {
    const double c = coeff(rng);
    const Eigen::Matrix3d rot = random_rotation(rng);
    const auto r = recover_rotation(c * projection_matrix(1.0) * rot);
    EXPECT_NEAR(r.coefficient, c, 1e-10 * std::max(1.0, c));
    EXPECT_LE((r.rotation.topRows<2>() - rot.topRows<2>()).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_TRUE(is_rotation(r.rotation, 1e-8));
  }
}

TEST(RecoverRotationTest, NoisyInputGivesNearestRotation) {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 100; ++k) {
    linalg::Mat23 m;
    std::normal_distribution<double> normal;
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    const auto r = recover_rotation(m);
    EXPECT_TRUE(is_rotation(r.rotation, 1e-8));
    EXPECT_NEAR(r.coefficient, Eigen::JacobiSVD<linalg::Mat23>(m).singularValues()(0), 1e-12);
  }
}

TEST(ReconstructShapeTest, SumsScaledRotatedBases) {
  const PoseDictionary dict = dictionary::random_dictionary(4, 6, 1.0, 3);
  std::mt19937_64 rng(9);
  const Eigen::Matrix3d r0 = random_rotation(rng);
  const Eigen::Matrix3d r2 = random_rotation(rng);
  AffineStack stack(4);
  stack[0] = 2.0 * projection_matrix(1.0) * r0;
  stack[2] = 0.5 * projection_matrix(1.0) * r2;
  const Pose3D s = reconstruct_shape(stack, dict);
  const Eigen::Matrix3Xd expected = 2.0 * r0 * dict.bases[0] + 0.5 * r2 * dict.bases[2];
  EXPECT_LE((s.points() - expected).norm(), 1e-10);
  // Projection of the reconstruction equals sum M_i B_i.
  Eigen::Matrix2Xd y = Eigen::Matrix2Xd::Zero(2, 6);
  for (Eigen::Index i = 0; i < 4; ++i) y += stack.matrix(i) * dict.bases[i];
  EXPECT_LE((s.points().topRows<2>() - y).norm(), 1e-10);
  EXPECT_THROW(reconstruct_shape(AffineStack(3), dict), DimensionError);
}

TEST(ProcrustesTest, RecoversSimilarity) {
  std::mt19937_64 rng(10);
  const Eigen::Matrix3Xd s = random_points(rng, 9);
  const Eigen::Matrix3d rot = random_rotation(rng);
  Eigen::Matrix3Xd moved = 0.3 * rot * s;
  moved.colwise() += Eigen::Vector3d(1, 2, 3);
  const Pose3D aligned = procrustes_align(Pose3D(s), Pose3D(moved));
  EXPECT_LE((aligned.points() - s).norm(), 1e-10);
  EXPECT_NEAR(recovery_error(Pose3D(moved), Pose3D(s), true), 0.0, 1e-10);
  EXPECT_NEAR(recovery_error(Pose3D(s), Pose3D(s), false), 0.0, 0.0);
}

TEST(ProcrustesTest, DegenerateTargets) {
  std::mt19937_64 rng(11);
  const Eigen::Matrix3Xd s = random_points(rng, 5);
  const Pose3D collapsed(Eigen::Matrix3Xd::Zero(3, 5));
  EXPECT_THROW(procrustes_align(Pose3D(s), collapsed), DegenerateError);
  const Eigen::Matrix3Xd centered = s.colwise() - s.rowwise().mean();
  EXPECT_NEAR(recovery_error(collapsed, Pose3D(s), true), centered.norm(), 1e-12);
  EXPECT_THROW(recovery_error(collapsed, Pose3D(random_points(rng, 4)), true), DimensionError);
}

}  // namespace
}  // namespace sparsepose::geometry
