// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsepose/pose_io.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "sparsepose/errors.hpp"
#include "test_util.hpp"

namespace sparsepose::io {
namespace {

using sparsepose::testing::TempDir;
using sparsepose::testing::write_file;

TEST(FormatDoubleTest, RoundTrips) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 1e3);
  for (int k = 0; k < 1000; ++k) {
    const double v = normal(rng) * std::pow(10.0, k % 20 - 10);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(-2.0), "-2");
}

TEST(PoseIoTest, RoundTripMultiFrame3d) {
  TempDir dir;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  PoseSequence3D seq;
  seq.has_frame_column = true;
  seq.landmark_names = {"head", "neck", "hip", "knee"};
  for (long f : {3L, 7L}) {
    Eigen::Matrix3Xd p(3, 4);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = normal(rng);
    seq.frame_ids.push_back(f);
    seq.poses.emplace_back(p);
  }
  write_poses_3d(dir / "poses.csv", seq);
  const auto back = read_poses_3d(dir / "poses.csv");
  EXPECT_TRUE(back.has_frame_column);
  EXPECT_EQ(back.frame_ids, seq.frame_ids);
  EXPECT_EQ(back.landmark_names, seq.landmark_names);
  ASSERT_EQ(back.poses.size(), 2u);
  EXPECT_EQ(back.poses[1].points(), seq.poses[1].points());
}

TEST(PoseIoTest, SingleFrame2d) {
  TempDir dir;
  write_file(dir / "y.csv", "landmark,x,y\na,1,2\nb,3,4\r\n\nc,-1,0.5\n");
  const auto seq = read_poses_2d(dir / "y.csv");
  EXPECT_FALSE(seq.has_frame_column);
  EXPECT_EQ(seq.frame_ids, std::vector<long>{0});
  ASSERT_EQ(seq.poses.size(), 1u);
  EXPECT_EQ(seq.poses[0].landmark_count(), 3);
  EXPECT_EQ(seq.poses[0].points()(1, 2), 0.5);
}

TEST(PoseIoTest, MissingFileIsIoError) {
  EXPECT_THROW(read_poses_3d("/nonexistent/poses.csv"), IoError);
}

TEST(PoseIoTest, MalformedNumberNamesLine) {
  TempDir dir;
  write_file(dir / "bad.csv", "landmark,x,y,z\na,1,2,3\nb,1,oops,3\nc,0,0,0\n");
  try {
    read_poses_3d(dir / "bad.csv");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.csv:3"), std::string::npos) << e.what();
  }
}

TEST(PoseIoTest, StructuralErrors) {
  TempDir dir;
  write_file(dir / "header.csv", "name,x,y,z\na,1,2,3\n");
  EXPECT_THROW(read_poses_3d(dir / "header.csv"), ParseError);
  write_file(dir / "fields.csv", "landmark,x,y\na,1\n");
  EXPECT_THROW(read_poses_2d(dir / "fields.csv"), ParseError);
  write_file(dir / "split.csv", "frame,landmark,x,y\n0,a,1,1\n1,a,2,2\n0,b,3,3\n");
  EXPECT_THROW(read_poses_2d(dir / "split.csv"), ParseError);
  write_file(dir / "names.csv", "frame,landmark,x,y\n0,a,1,1\n0,b,1,1\n1,a,2,2\n1,c,3,3\n");
  EXPECT_THROW(read_poses_2d(dir / "names.csv"), ParseError);
  write_file(dir / "empty.csv", "landmark,x,y\n");
  EXPECT_THROW(read_poses_2d(dir / "empty.csv"), ParseError);
  write_file(dir / "few.csv", "landmark,x,y,z\na,1,2,3\nb,1,2,3\n");
  EXPECT_THROW(read_poses_3d(dir / "few.csv"), ValidationError);
}

TEST(PoseTypesTest, Invariants) {
  EXPECT_THROW(Pose3D(Eigen::Matrix3Xd::Zero(3, 2)), InvalidInputError);
  Eigen::Matrix3Xd bad = Eigen::Matrix3Xd::Zero(3, 4);
  bad(0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(Pose3D{bad}, InvalidInputError);
  EXPECT_THROW(Pose2D(Eigen::Matrix2Xd::Zero(2, 0)), InvalidInputError);
  EXPECT_THROW(AffineStack(Eigen::Matrix2Xd::Zero(2, 4)), DimensionError);
}

TEST(PoseTypesTest, DictionaryValidationNamesBasis) {
  PoseDictionary dict;
  dict.phi = 1.0;
  Eigen::Matrix3Xd good = Eigen::Matrix3Xd::Zero(3, 3);
  good.diagonal().setOnes();
  dict.bases = {good, 2.0 * good};
  try {
    dict.validate();
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("basis 1"), std::string::npos) << e.what();
  }
  dict.bases[1] = good;
  EXPECT_NO_THROW(dict.validate());
  EXPECT_EQ(dict.stacked().rows(), 6);
}

}  // namespace
}  // namespace sparsepose::io
