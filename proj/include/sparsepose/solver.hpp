// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <json.hpp>

#include "sparsepose/pose_types.hpp"
#include "sparsepose/regularizers.hpp"

namespace sparsepose::solver {

// Residual balancing for the ADMM penalty mu.
struct MuAdaptation {
  bool enabled = true;
  double factor = 2.0;
  double ratio = 10.0;
};

// Order of the V and U steps inside one sweep. kStandard is M, V, U; the
// alternative updates the dual before V.
enum class UpdateOrder { kStandard, kDualBeforeV };

struct SolverConfig {
  regularizers::RegularizerSpec regularizer = regularizers::RegularizerSpec::lcnr(1.0, 0.25, 1.0);
  // When > 0 and the regularizer has a threshold, tau is reset once after
  // the first stage to the k-th largest spectral norm and then frozen.
  int tau_top_k = 10;
  int max_stages = 15;
  int inner_iterations = 20;
  double mu_init = 1.0;
  MuAdaptation mu_adapt;
  double primal_tol = 1e-6;
  double dual_tol = 1e-6;
  std::uint64_t seed = 0;
  UpdateOrder update_order = UpdateOrder::kStandard;

  // Throws InvalidParameterError on non-positive tolerances, mu or counts.
  void validate() const;
};

void to_json(nlohmann::json& j, const SolverConfig& config);
// Missing fields keep their defaults. Throws ParseError on mistyped or
// unknown fields and InvalidParameterError on invalid values.
void from_json(const nlohmann::json& j, SolverConfig& config);
SolverConfig load_config(const std::filesystem::path& path);

struct AdmmState {
  AffineStack m;
  AffineStack v;
  AffineStack u;  // unscaled multiplier
  double mu = 1.0;

  static AdmmState zeros(Eigen::Index size, double mu);
};

struct IterationRecord {
  int stage = 0;
  int iteration = 0;
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double mu = 0.0;
};

struct StageRecord {
  int stage = 0;
  double tau = 0.0;
  Eigen::VectorXd weights;
  Eigen::VectorXd norms;  // ||M_i||_2 of the stage solution
  AffineStack solution;
  int iterations = 0;
  bool converged = false;
  double seconds = 0.0;
};

struct SolveTrace {
  std::vector<IterationRecord> iterations;
  std::vector<StageRecord> stages;
};

// Columns: stage,iteration,objective,primal_residual,dual_residual,mu, with a
// leading frame column when frame ids are given (one trace per frame).
void write_trace_csv(const std::filesystem::path& path, std::span<const SolveTrace> traces,
                     std::span<const long> frame_ids = {});

struct RecoveryResult {
  AffineStack affine_stack;
  Eigen::VectorXd coefficients;
  std::vector<Eigen::Matrix3d> rotations;
  Pose3D shape;
  SolveTrace trace;
  double final_objective = 0.0;
};

// Data shared by every sweep on one observation: Y B^T, the stacked Gram
// matrix B B^T and a Cholesky factor of B B^T + mu I cached per mu.
class StageProblem {
 public:
  StageProblem(const Pose2D& observation, const PoseDictionary& dictionary);

  Eigen::Index size() const { return size_; }
  const Eigen::Matrix2Xd& observation() const { return y_; }

  // V = rhs (B B^T + mu I)^-1 for a 2 x 3D right-hand side.
  Eigen::Matrix2Xd solve_v(const Eigen::Matrix2Xd& rhs, double mu);
  const Eigen::Matrix2Xd& y_bt() const { return y_bt_; }

  // 0.5 ||Y - sum_i V_i B_i||_F^2.
  double data_term(const AffineStack& v) const;
  // data_term(v) + sum_i weights_i ||M_i||_2.
  double stage_objective(const AffineStack& m, const AffineStack& v,
                         const Eigen::VectorXd& weights) const;

 private:
  Eigen::Index size_;
  Eigen::Matrix2Xd y_;
  Eigen::MatrixXd stacked_;  // 3D x p
  Eigen::MatrixXd gram_;     // 3D x 3D
  Eigen::Matrix2Xd y_bt_;
  double cached_mu_ = -1.0;
  Eigen::LLT<Eigen::MatrixXd> factor_;
};

struct SweepResiduals {
  double primal = 0.0;
  double dual = 0.0;
};

// One ADMM sweep on the augmented Lagrangian
//   0.5||Y - sum V_i B_i||^2 + sum lam_i ||M_i||_2 + <U, M - V> + mu/2 ||M - V||^2:
// M_i <- prox(V_i - U_i/mu, lam_i/mu); V <- (Y B^T + mu M + U)(B B^T + mu I)^-1
// jointly over all bases; U <- U + mu (M - V).
SweepResiduals admm_iterate(StageProblem& problem, const regularizers::SurrogateWeights& weights,
                            AdmmState& state, UpdateOrder order = UpdateOrder::kStandard);
SweepResiduals admm_iterate(const Pose2D& observation, const PoseDictionary& dictionary,
                            const regularizers::SurrogateWeights& weights, AdmmState& state);

// mu * factor when primal > ratio * dual, mu / factor when dual > ratio *
// primal, otherwise mu. The stored multiplier is unscaled, so it needs no
// rescaling when mu changes.
double adapt_mu(double mu, double primal_residual, double dual_residual,
                const MuAdaptation& params);

// Runs sweeps from `state` until both residuals fall below tolerance or the
// inner budget is spent. The stage solution is the M copy.
StageRecord solve_stage(StageProblem& problem, const regularizers::SurrogateWeights& weights,
                        AdmmState& state, const SolverConfig& config,
                        std::vector<IterationRecord>* iterations = nullptr);

// Multi-stage majorize-minimize loop with weight recalibration from the
// spectral norms of each stage solution. Throws DimensionError when the
// observation and dictionary landmark counts differ.
RecoveryResult multistage_solve(const Pose2D& observation, const PoseDictionary& dictionary,
                                const SolverConfig& config);

// sqrt(sum_{i in subset} ||truth_i - stack_i||_2^2); all indices when the
// subset is empty. Throws DimensionError / InvalidParameterError.
double estimation_error(const AffineStack& stack, const AffineStack& truth,
                        std::span<const Eigen::Index> subset = {});

}  // namespace sparsepose::solver
