// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "sparsepose/pose_types.hpp"
#include "sparsepose/regularizers.hpp"
#include "sparsepose/solver.hpp"

namespace sparsepose::experiments {

// Parameters of a generated random dictionary (used when no path is given).
struct GenerateSpec {
  Eigen::Index size = 32;
  Eigen::Index landmarks = 30;
  double phi = 1.0;
};

enum class TruthMode { kSparseSynthetic, kCorpus };

struct LabeledRegularizer {
  std::string label;
  regularizers::RegularizerSpec spec;
};

struct ExperimentSpec {
  std::optional<std::filesystem::path> dictionary_path;
  GenerateSpec generate;

  TruthMode truth_mode = TruthMode::kSparseSynthetic;
  Eigen::Index active = 3;
  double coefficient_min = 10.0;
  double coefficient_max = 20.0;
  bool shared_rotation = true;
  std::optional<std::filesystem::path> corpus_path;

  std::vector<double> angles;  // radians; empty means 36 uniform angles
  double noise_sigma = 0.0;
  double omega = 1.0;
  std::vector<LabeledRegularizer> regularizers;
  solver::SolverConfig solver;
  int trials = 10;
  std::uint64_t seed = 0;
  double epsilon = 0.1;
  bool align = true;
  int jobs = 1;

  // Throws InvalidParameterError / InvalidInputError on inconsistent fields.
  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentSpec& spec);
void from_json(const nlohmann::json& j, ExperimentSpec& spec);
// Relative dictionary and corpus paths resolve against the spec's directory.
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

struct SparseTruth {
  Pose3D shape;                           // S = sum_i c_i R_i B_i
  AffineStack stack;                      // M_i = c_i Pi R_i, zero when inactive
  Eigen::VectorXd coefficients;           // c, zero when inactive
  std::vector<Eigen::Matrix3d> rotations;  // R_i (identity when inactive)
  std::vector<Eigen::Index> active;       // sorted active indices
};

// Draws `active` distinct bases, coefficients uniform in [lo, hi] and one
// shared (or per-basis) random rotation. Throws InvalidParameterError unless
// 1 <= active <= D and 0 < lo <= hi.
SparseTruth generate_sparse_truth(const PoseDictionary& dictionary, Eigen::Index active,
                                  double coefficient_min, double coefficient_max,
                                  std::uint64_t seed, bool shared_rotation = true,
                                  double omega = 1.0);

// Truth affine stack seen by a camera rotated about y by `angle`:
// c_i Pi_omega R_y(angle) R_i.
AffineStack view_truth(const SparseTruth& truth, double angle, double omega = 1.0);

// One (regularizer, trial) cell, averaged over views. Curves have one entry
// per stage run; shorter per-view runs are padded with their final value.
struct TrialResult {
  std::string label;
  int trial = 0;
  double shape_norm = 0.0;              // ||S||_F of the centered truth
  double initial_recovery_error = 0.0;  // error of the zero shape
  std::vector<double> recovery_curve;   // absolute, per stage
  double final_recovery_error = 0.0;
  double final_relative_error = 0.0;
  // Estimation error sqrt(sum ||M_i - M_hat_i||_2^2); empty without truth.
  std::optional<double> initial_estimation_error;
  std::vector<double> estimation_curve;      // mean over views
  std::vector<double> estimation_curve_max;  // worst view
  // 1-based count of stages until recovery_curve <= epsilon * initial.
  std::optional<int> stages_to_epsilon;
  // max over views and iterations of objective / (0.5 ||Y||_F^2).
  double max_objective_ratio = 0.0;
  bool finite = true;
  double seconds = 0.0;
};

struct ArmSummary {
  std::string label;
  int trials = 0;
  double median_relative_error = 0.0;
  double q1_relative_error = 0.0;
  double q3_relative_error = 0.0;
  // Unreached trials count as +inf.
  double median_stages_to_epsilon = 0.0;
  int reached = 0;
  double median_seconds = 0.0;
};

struct ComparisonRow {
  std::string lcnr_label;
  std::string l1_label;
  double lcnr_median_stages = 0.0;
  double l1_median_stages = 0.0;
  bool lcnr_not_slower = false;
};

struct ExperimentReport {
  std::vector<std::string> labels;  // arm order
  std::vector<TrialResult> results;  // arm-major, then trial
  std::vector<ArmSummary> summaries;
  std::vector<ComparisonRow> comparison;
  double epsilon = 0.1;
  double total_seconds = 0.0;
};

// Runs every trial x regularizer arm (concurrently up to spec.jobs) and
// aggregates; identical specs give identical reports apart from timings.
ExperimentReport run_experiment(const ExperimentSpec& spec);
// Same, with an already loaded dictionary (overrides the spec's source).
ExperimentReport run_experiment(const ExperimentSpec& spec, const PoseDictionary& dictionary);

// Median of the per-trial curves of one arm (stage-wise, padded with the
// final value).
std::vector<double> median_curve(const ExperimentReport& report, const std::string& label,
                                 bool estimation);

// Writes curves.csv, summary.csv, comparison.csv, plot.svg and runtime.json
// into `dir` (created if missing). Throws IoError naming the path.
void export_report(const ExperimentReport& report, const std::filesystem::path& dir);

// Per-trial seed derived from the experiment seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace sparsepose::experiments
