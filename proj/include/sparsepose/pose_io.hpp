// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sparsepose/pose_types.hpp"

namespace sparsepose::io {

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

// Rows of a pose CSV grouped by frame. Single-frame files (no "frame"
// column) produce one frame with id 0 and has_frame_column == false.
template <typename Pose>
struct PoseSequence {
  std::vector<long> frame_ids;
  std::vector<Pose> poses;
  std::vector<std::string> landmark_names;
  bool has_frame_column = false;
};

using PoseSequence3D = PoseSequence<Pose3D>;
using PoseSequence2D = PoseSequence<Pose2D>;

// Header "landmark,x,y,z" or "frame,landmark,x,y,z". Rows of one frame must
// be contiguous and every frame must list the same landmarks in the same
// order. Throws IoError if unreadable and ParseError (with path:line) on
// malformed content.
PoseSequence3D read_poses_3d(const std::filesystem::path& path);
// Header "landmark,x,y" or "frame,landmark,x,y".
PoseSequence2D read_poses_2d(const std::filesystem::path& path);

void write_poses_3d(const std::filesystem::path& path, const PoseSequence3D& sequence);
void write_poses_2d(const std::filesystem::path& path, const PoseSequence2D& sequence);

// Landmark names "0".."p-1".
std::vector<std::string> default_landmark_names(Eigen::Index count);

}  // namespace sparsepose::io
