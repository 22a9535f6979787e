// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsepose/pose_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "sparsepose/errors.hpp"

namespace sparsepose::io {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.pop_back();
    std::size_t start = field.find_first_not_of(' ');
    fields.push_back(start == std::string::npos ? std::string() : field.substr(start));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

template <int Dim>
struct RawFrame {
  long id = 0;
  std::vector<std::string> names;
  std::vector<Eigen::Matrix<double, Dim, 1>> columns;
};

template <int Dim>
std::vector<RawFrame<Dim>> read_frames(const std::filesystem::path& path, bool& has_frame) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pose file '" + path.string() + "'");

  const std::vector<std::string> axes = Dim == 3 ? std::vector<std::string>{"x", "y", "z"}
                                                 : std::vector<std::string>{"x", "y"};
  auto fail = [&path](std::size_t line_no, const std::string& what) -> void {
    throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + what);
  };

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    header = split_csv_line(line);
    break;
  }
  if (header.empty()) fail(line_no, "missing header row");

  std::vector<std::string> expected{"landmark"};
  expected.insert(expected.end(), axes.begin(), axes.end());
  std::vector<std::string> expected_frame{"frame"};
  expected_frame.insert(expected_frame.end(), expected.begin(), expected.end());
  if (header == expected) {
    has_frame = false;
  } else if (header == expected_frame) {
    has_frame = true;
  } else {
    std::string want;
    for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
    fail(line_no, "unexpected header, want '" + want + "' with optional leading 'frame'");
  }

  std::vector<RawFrame<Dim>> frames;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      fail(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    }
    std::size_t k = 0;
    long frame_id = 0;
    if (has_frame) {
      const auto& f = fields[k++];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), frame_id);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        fail(line_no, "field 'frame' is not an integer: '" + f + "'");
      }
    }
    const std::string name = fields[k++];
    if (name.empty()) fail(line_no, "empty landmark field");
    Eigen::Matrix<double, Dim, 1> column;
    for (int a = 0; a < Dim; ++a, ++k) {
      const auto& f = fields[k];
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        fail(line_no, "field '" + axes[a] + "' is not a number: '" + f + "'");
      }
      column(a) = value;
    }
    if (frames.empty() || frames.back().id != frame_id) {
      for (const auto& fr : frames) {
        if (fr.id == frame_id) {
          fail(line_no, "rows of frame " + std::to_string(frame_id) + " are not contiguous");
        }
      }
      frames.push_back({frame_id, {}, {}});
    }
    frames.back().names.push_back(name);
    frames.back().columns.push_back(column);
  }
  if (frames.empty()) fail(line_no, "no landmark rows");
  for (const auto& fr : frames) {
    if (fr.names != frames.front().names) {
      throw ParseError(path.string() + ": frame " + std::to_string(fr.id) +
                       " lists different landmarks than frame " +
                       std::to_string(frames.front().id));
    }
  }
  return frames;
}

template <typename Pose, int Dim>
PoseSequence<Pose> read_sequence(const std::filesystem::path& path) {
  bool has_frame = false;
  auto frames = read_frames<Dim>(path, has_frame);
  PoseSequence<Pose> out;
  out.has_frame_column = has_frame;
  out.landmark_names = frames.front().names;
  for (auto& fr : frames) {
    Eigen::Matrix<double, Dim, Eigen::Dynamic> points(Dim, fr.columns.size());
    for (std::size_t c = 0; c < fr.columns.size(); ++c) {
      points.col(static_cast<Eigen::Index>(c)) = fr.columns[c];
    }
    try {
      out.poses.emplace_back(std::move(points));
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ": frame " + std::to_string(fr.id) + ": " +
                            e.what());
    }
    out.frame_ids.push_back(fr.id);
  }
  return out;
}

template <typename Pose>
void write_sequence(const std::filesystem::path& path, const PoseSequence<Pose>& seq,
                    int dim) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write pose file '" + path.string() + "'");
  const bool with_frame = seq.has_frame_column || seq.poses.size() > 1;
  if (with_frame) out << "frame,";
  out << (dim == 3 ? "landmark,x,y,z\n" : "landmark,x,y\n");
  for (std::size_t f = 0; f < seq.poses.size(); ++f) {
    const auto& pts = seq.poses[f].points();
    const auto names = seq.landmark_names.size() == static_cast<std::size_t>(pts.cols())
                           ? seq.landmark_names
                           : default_landmark_names(pts.cols());
    const long id = f < seq.frame_ids.size() ? seq.frame_ids[f] : static_cast<long>(f);
    for (Eigen::Index c = 0; c < pts.cols(); ++c) {
      if (with_frame) out << id << ',';
      out << names[c];
      for (int a = 0; a < dim; ++a) out << ',' << format_double(pts(a, c));
      out << '\n';
    }
  }
  if (!out) throw IoError("failed writing pose file '" + path.string() + "'");
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::vector<std::string> default_landmark_names(Eigen::Index count) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index i = 0; i < count; ++i) names.push_back(std::to_string(i));
  return names;
}

PoseSequence3D read_poses_3d(const std::filesystem::path& path) {
  return read_sequence<Pose3D, 3>(path);
}

PoseSequence2D read_poses_2d(const std::filesystem::path& path) {
  return read_sequence<Pose2D, 2>(path);
}

void write_poses_3d(const std::filesystem::path& path, const PoseSequence3D& sequence) {
  write_sequence(path, sequence, 3);
}

void write_poses_2d(const std::filesystem::path& path, const PoseSequence2D& sequence) {
  write_sequence(path, sequence, 2);
}

}  // namespace sparsepose::io
