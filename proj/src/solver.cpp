// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsepose/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "sparsepose/errors.hpp"
#include "sparsepose/geometry.hpp"
#include "sparsepose/linalg.hpp"
#include "sparsepose/pose_io.hpp"

namespace sparsepose::solver {

using regularizers::RegularizerSpec;
using regularizers::SurrogateWeights;

void SolverConfig::validate() const {
  regularizer.validate();
  if (tau_top_k < 0) throw InvalidParameterError("tau_top_k must be >= 0");
  if (max_stages < 1) throw InvalidParameterError("max_stages must be >= 1");
  if (inner_iterations < 1) throw InvalidParameterError("inner_iterations must be >= 1");
  if (!(mu_init > 0.0) || !std::isfinite(mu_init)) throw InvalidParameterError("mu must be > 0");
  if (!(primal_tol > 0.0) || !(dual_tol > 0.0)) {
    throw InvalidParameterError("tolerances must be > 0");
  }
  if (mu_adapt.enabled && (!(mu_adapt.factor > 1.0) || !(mu_adapt.ratio > 1.0))) {
    throw InvalidParameterError("mu adaptation factor and ratio must be > 1");
  }
}

void to_json(nlohmann::json& j, const SolverConfig& c) {
  j = nlohmann::json{
      {"regularizer", c.regularizer},
      {"tau_top_k", c.tau_top_k},
      {"max_stages", c.max_stages},
      {"inner_iterations", c.inner_iterations},
      {"mu_init", c.mu_init},
      {"mu_adapt", {{"enabled", c.mu_adapt.enabled},
                    {"factor", c.mu_adapt.factor},
                    {"ratio", c.mu_adapt.ratio}}},
      {"primal_tol", c.primal_tol},
      {"dual_tol", c.dual_tol},
      {"seed", c.seed},
      {"update_order", c.update_order == UpdateOrder::kStandard ? "m-v-u" : "m-u-v"},
  };
}

namespace {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  const auto& v = j[key];
  bool ok = false;
  if constexpr (std::is_same_v<T, bool>) {
    ok = v.is_boolean();
  } else if constexpr (std::is_integral_v<T>) {
    ok = v.is_number_integer();
  } else {
    ok = v.is_number();
  }
  if (!ok) throw ParseError(std::string("solver config: field '") + key + "' has wrong type");
  dst = v.get<T>();
}

}  // namespace

void from_json(const nlohmann::json& j, SolverConfig& config) {
  if (!j.is_object()) throw ParseError("solver config must be a JSON object");
  static const std::vector<std::string> known = {
      "regularizer", "tau_top_k", "max_stages", "inner_iterations", "mu_init", "mu_adapt",
      "primal_tol",  "dual_tol",  "seed",       "update_order"};
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw ParseError("solver config: unknown field '" + item.key() + "'");
    }
  }
  SolverConfig out = config;
  if (j.contains("regularizer")) out.regularizer = j["regularizer"].get<RegularizerSpec>();
  read_field(j, "tau_top_k", out.tau_top_k);
  read_field(j, "max_stages", out.max_stages);
  read_field(j, "inner_iterations", out.inner_iterations);
  read_field(j, "mu_init", out.mu_init);
  read_field(j, "primal_tol", out.primal_tol);
  read_field(j, "dual_tol", out.dual_tol);
  read_field(j, "seed", out.seed);
  if (j.contains("mu_adapt")) {
    const auto& m = j["mu_adapt"];
    if (!m.is_object()) throw ParseError("solver config: 'mu_adapt' must be an object");
    read_field(m, "enabled", out.mu_adapt.enabled);
    read_field(m, "factor", out.mu_adapt.factor);
    read_field(m, "ratio", out.mu_adapt.ratio);
  }
  if (j.contains("update_order")) {
    const auto& o = j["update_order"];
    if (o == "m-v-u") {
      out.update_order = UpdateOrder::kStandard;
    } else if (o == "m-u-v") {
      out.update_order = UpdateOrder::kDualBeforeV;
    } else {
      throw ParseError("solver config: update_order must be 'm-v-u' or 'm-u-v'");
    }
  }
  out.validate();
  config = out;
}

SolverConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": malformed JSON (" + e.what() + ")");
  }
  SolverConfig config;
  try {
    from_json(j, config);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return config;
}

AdmmState AdmmState::zeros(Eigen::Index size, double mu) {
  return AdmmState{AffineStack(size), AffineStack(size), AffineStack(size), mu};
}

void write_trace_csv(const std::filesystem::path& path, std::span<const SolveTrace> traces,
                     std::span<const long> frame_ids) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trace '" + path.string() + "'");
  const bool with_frame = !frame_ids.empty();
  if (with_frame) out << "frame,";
  out << "stage,iteration,objective,primal_residual,dual_residual,mu\n";
  for (std::size_t t = 0; t < traces.size(); ++t) {
    for (const auto& r : traces[t].iterations) {
      if (with_frame) out << frame_ids[t] << ',';
      out << r.stage << ',' << r.iteration << ',' << io::format_double(r.objective) << ','
          << io::format_double(r.primal_residual) << ','
          << io::format_double(r.dual_residual) << ',' << io::format_double(r.mu) << '\n';
    }
  }
  if (!out) throw IoError("failed writing trace '" + path.string() + "'");
}

StageProblem::StageProblem(const Pose2D& observation, const PoseDictionary& dictionary)
    : size_(dictionary.size()), y_(observation.points()) {
  if (dictionary.size() < 1) throw ValidationError("dictionary is empty");
  if (observation.landmark_count() != dictionary.landmark_count()) {
    throw DimensionError("observation has " + std::to_string(observation.landmark_count()) +
                         " landmarks but the dictionary has " +
                         std::to_string(dictionary.landmark_count()));
  }
  stacked_ = dictionary.stacked();
  gram_ = stacked_ * stacked_.transpose();
  y_bt_ = y_ * stacked_.transpose();
}

Eigen::Matrix2Xd StageProblem::solve_v(const Eigen::Matrix2Xd& rhs, double mu) {
  if (!(mu > 0.0)) throw InvalidParameterError("mu must be > 0");
  if (mu != cached_mu_) {
    Eigen::MatrixXd shifted = gram_;
    shifted.diagonal().array() += mu;
    factor_.compute(shifted);
    cached_mu_ = mu;
  }
  // Symmetric system: V^T = (B B^T + mu I)^-1 rhs^T.
  return factor_.solve(rhs.transpose()).transpose();
}

double StageProblem::data_term(const AffineStack& v) const {
  return 0.5 * (y_ - v.data() * stacked_).squaredNorm();
}

double StageProblem::stage_objective(const AffineStack& m, const AffineStack& v,
                                     const Eigen::VectorXd& weights) const {
  double penalty = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (weights(i) != 0.0) penalty += weights(i) * linalg::spectral_norm(m.matrix(i));
  }
  return data_term(v) + penalty;
}

SweepResiduals admm_iterate(StageProblem& problem, const SurrogateWeights& weights,
                            AdmmState& state, UpdateOrder order) {
  const Eigen::Index d = problem.size();
  if (weights.weights.size() != d || state.m.size() != d || state.v.size() != d ||
      state.u.size() != d) {
    throw DimensionError("admm_iterate: state or weights do not match dictionary size " +
                         std::to_string(d));
  }
  const double mu = state.mu;
  if (!(mu > 0.0)) throw InvalidParameterError("admm_iterate: mu must be > 0");

  for (Eigen::Index i = 0; i < d; ++i) {
    const linalg::Mat23 target = state.v.matrix(i) - state.u.matrix(i) / mu;
    state.m[i] = linalg::prox_spectral(target, weights.weights(i) / mu);
  }
  const Eigen::Matrix2Xd v_prev = state.v.data();
  if (order == UpdateOrder::kStandard) {
    state.v.data() = problem.solve_v(problem.y_bt() + mu * state.m.data() + state.u.data(), mu);
    state.u.data() += mu * (state.m.data() - state.v.data());
  } else {
    state.u.data() += mu * (state.m.data() - state.v.data());
    state.v.data() = problem.solve_v(problem.y_bt() + mu * state.m.data() + state.u.data(), mu);
  }
  SweepResiduals r;
  r.primal = (state.m.data() - state.v.data()).norm();
  r.dual = mu * (state.v.data() - v_prev).norm();
  return r;
}

SweepResiduals admm_iterate(const Pose2D& observation, const PoseDictionary& dictionary,
                            const SurrogateWeights& weights, AdmmState& state) {
  StageProblem problem(observation, dictionary);
  return admm_iterate(problem, weights, state);
}

double adapt_mu(double mu, double primal_residual, double dual_residual,
                const MuAdaptation& params) {
  if (!params.enabled) return mu;
  if (primal_residual > params.ratio * dual_residual) return mu * params.factor;
  if (dual_residual > params.ratio * primal_residual) return mu / params.factor;
  return mu;
}

StageRecord solve_stage(StageProblem& problem, const SurrogateWeights& weights,
                        AdmmState& state, const SolverConfig& config,
                        std::vector<IterationRecord>* iterations) {
  const auto start = std::chrono::steady_clock::now();
  StageRecord record;
  record.stage = weights.stage;
  record.weights = weights.weights;
  for (int t = 0; t < config.inner_iterations; ++t) {
    const double mu = state.mu;
    const SweepResiduals r = admm_iterate(problem, weights, state, config.update_order);
    record.iterations = t + 1;
    if (iterations) {
      iterations->push_back({weights.stage, t,
                             problem.stage_objective(state.m, state.v, weights.weights),
                             r.primal, r.dual, mu});
    }
    if (r.primal <= config.primal_tol && r.dual <= config.dual_tol) {
      record.converged = true;
      break;
    }
    state.mu = adapt_mu(state.mu, r.primal, r.dual, config.mu_adapt);
  }
  record.solution = state.m;
  record.norms = state.m.spectral_norms();
  record.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record;
}

namespace {

// k-th largest entry (1-based, clamped to the vector size).
double kth_largest(Eigen::VectorXd values, int k) {
  std::vector<double> v(values.data(), values.data() + values.size());
  std::sort(v.begin(), v.end(), std::greater<>());
  const std::size_t idx = std::min<std::size_t>(static_cast<std::size_t>(k), v.size()) - 1;
  return v[idx];
}

}  // namespace

RecoveryResult multistage_solve(const Pose2D& observation, const PoseDictionary& dictionary,
                                const SolverConfig& config) {
  config.validate();
  StageProblem problem(observation, dictionary);
  const Eigen::Index d = dictionary.size();

  RegularizerSpec spec = config.regularizer;
  AdmmState state = AdmmState::zeros(d, config.mu_init);
  RecoveryResult result;
  Eigen::VectorXd prev_norms = Eigen::VectorXd::Zero(d);

  for (int stage = 0; stage < config.max_stages; ++stage) {
    const SurrogateWeights weights = regularizers::surrogate_weights(spec, prev_norms, stage);
    StageRecord record = solve_stage(problem, weights, state, config, &result.trace.iterations);

    if (stage == 0 && config.tau_top_k > 0 && spec.uses_tau()) {
      const double kth = kth_largest(record.norms, config.tau_top_k);
      if (kth > 0.0) spec.tau = kth;
    }
    record.tau = spec.uses_tau() ? spec.tau : 0.0;

    double movement = 0.0;
    if (stage > 0) {
      const AffineStack& previous = result.trace.stages.back().solution;
      for (Eigen::Index i = 0; i < d; ++i) {
        movement += linalg::spectral_norm(record.solution.matrix(i) - previous.matrix(i));
      }
    }
    prev_norms = record.norms;
    result.trace.stages.push_back(std::move(record));
    if (stage > 0 && movement <= config.primal_tol) break;
  }

  const StageRecord& last = result.trace.stages.back();
  result.affine_stack = last.solution;
  result.final_objective = problem.stage_objective(state.m, state.v, last.weights);
  result.coefficients.resize(d);
  result.rotations.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto rec = geometry::recover_rotation(result.affine_stack.matrix(i));
    result.coefficients(i) = rec.coefficient;
    result.rotations.push_back(rec.rotation);
  }
  result.shape = geometry::reconstruct_shape(result.affine_stack, dictionary);
  return result;
}

double estimation_error(const AffineStack& stack, const AffineStack& truth,
                        std::span<const Eigen::Index> subset) {
  if (stack.size() != truth.size()) {
    throw DimensionError("estimation_error: stack sizes " + std::to_string(stack.size()) +
                         " and " + std::to_string(truth.size()) + " differ");
  }
  double total = 0.0;
  auto add = [&](Eigen::Index i) {
    const double s = linalg::spectral_norm(truth.matrix(i) - stack.matrix(i));
    total += s * s;
  };
  if (subset.empty()) {
    for (Eigen::Index i = 0; i < stack.size(); ++i) add(i);
  } else {
    for (Eigen::Index i : subset) {
      if (i < 0 || i >= stack.size()) {
        throw InvalidParameterError("estimation_error: subset index " + std::to_string(i) +
                                    " out of range [0, " + std::to_string(stack.size()) + ")");
      }
      add(i);
    }
  }
  return std::sqrt(total);
}

}  // namespace sparsepose::solver
