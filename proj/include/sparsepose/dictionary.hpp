// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sparsepose/pose_types.hpp"

namespace sparsepose::dictionary {

struct LearnOptions {
  Eigen::Index size = 128;
  // Defaults to 0.1 * mean_j ||B^T x_j||_inf measured on the initial bases.
  std::optional<double> sparsity_lambda;
  int iterations = 50;
  double phi = 1.0;
  std::uint64_t seed = 0;
  int jobs = 1;
  double lasso_tol = 1e-8;
  int lasso_max_passes = 10000;
  // Relative std of the Gaussian perturbation applied to the seed samples.
  double init_noise = 0.01;
};

// Training objective 0.5 ||X - B C||_F^2 + lambda ||C||_1 after each step
// of one alternation.
struct LearnStep {
  int iteration = 0;
  double after_coding = 0.0;
  double after_update = 0.0;
  double after_normalization = 0.0;
};

struct LearnResult {
  PoseDictionary dictionary;
  Eigen::MatrixXd codes;  // D x N
  double sparsity_lambda = 0.0;
  std::vector<LearnStep> trace;
  std::vector<std::string> warnings;
};

// Alternates per-sample lasso coding (coordinate descent) and a joint
// least-squares basis update, then rescales every basis row to squared
// norm phi. The corpus should already be centered and pre-aligned (see
// prepare_corpus). Deterministic for a fixed seed.
// Throws InvalidInputError on an empty corpus or mixed landmark counts and
// InvalidParameterError when size < 1.
LearnResult learn_dictionary(std::span<const Pose3D> corpus, const LearnOptions& options);

// Centers every pose and rigidly aligns it to the first one.
std::vector<Pose3D> prepare_corpus(std::span<const Pose3D> corpus);

// argmin_c 0.5 c^T G c - c^T corr + lambda ||c||_1 by cyclic coordinate
// descent, starting from `warm` (same size as corr).
Eigen::VectorXd lasso_coordinate_descent(const Eigen::MatrixXd& gram,
                                         const Eigen::VectorXd& corr, double lambda,
                                         Eigen::VectorXd warm, double tol = 1e-8,
                                         int max_passes = 10000);

// Scales each coordinate row of every basis to squared norm phi.
// Throws DegenerateError naming the basis when a row is all zero.
PoseDictionary normalize_rows(const PoseDictionary& dictionary, double phi);

// Row-centered Gaussian bases normalized to phi. Centering keeps the span
// compatible with centralized observations.
PoseDictionary random_dictionary(Eigen::Index size, Eigen::Index landmarks, double phi,
                                 std::uint64_t seed);

// JSON: {"version":1,"landmark_count":p,"phi":phi,"bases":[[3p row-major],...]}.
void save_dictionary(const PoseDictionary& dictionary, const std::filesystem::path& path);
// Throws IoError when unreadable, ParseError (with line or field context)
// on malformed content and ValidationError naming the basis index when
// invariants fail.
PoseDictionary load_dictionary(const std::filesystem::path& path);

}  // namespace sparsepose::dictionary
