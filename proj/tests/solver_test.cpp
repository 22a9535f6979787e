// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsepose/solver.hpp"

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sparsepose/dictionary.hpp"
#include "sparsepose/errors.hpp"
#include "sparsepose/experiments.hpp"
#include "sparsepose/geometry.hpp"
#include "sparsepose/linalg.hpp"
#include "test_util.hpp"

namespace sparsepose::solver {
namespace {

using regularizers::RegularizerSpec;
using regularizers::SurrogateWeights;
using sparsepose::testing::TempDir;
using sparsepose::testing::write_file;

struct Instance {
  PoseDictionary dictionary;
  experiments::SparseTruth truth;
  AffineStack truth_stack;
  Pose2D observation;
};

Instance make_instance(Eigen::Index size, Eigen::Index landmarks, std::uint64_t seed,
                       double angle = 0.3) {
  Instance out;
  out.dictionary = dictionary::random_dictionary(size, landmarks, 1.0, seed);
  out.truth = experiments::generate_sparse_truth(out.dictionary, 3, 10.0, 20.0, seed + 1);
  out.truth_stack = experiments::view_truth(out.truth, angle);
  out.observation = Pose2D(Eigen::Matrix2Xd(out.truth_stack.data() * out.dictionary.stacked()));
  return out;
}

Eigen::Matrix2Xd random_matrix(Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::Matrix2Xd m(2, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

TEST(SolverConfigTest, ValidateRejectsBadValues) {
  SolverConfig c;
  EXPECT_NO_THROW(c.validate());
  c.max_stages = 0;
  EXPECT_THROW(c.validate(), InvalidParameterError);
  c = {};
  c.inner_iterations = 0;
  EXPECT_THROW(c.validate(), InvalidParameterError);
  c = {};
  c.mu_init = -1.0;
  EXPECT_THROW(c.validate(), InvalidParameterError);
  c = {};
  c.primal_tol = 0.0;
  EXPECT_THROW(c.validate(), InvalidParameterError);
  c = {};
  c.tau_top_k = -1;
  EXPECT_THROW(c.validate(), InvalidParameterError);
  c = {};
  c.mu_adapt.factor = 1.0;
  EXPECT_THROW(c.validate(), InvalidParameterError);
  c = {};
  c.regularizer.beta = 2.0;
  EXPECT_THROW(c.validate(), InvalidParameterError);
}

TEST(SolverConfigTest, JsonRoundTrip) {
  SolverConfig c;
  c.regularizer = RegularizerSpec::capped_l1(0.5, 3.0);
  c.tau_top_k = 0;
  c.max_stages = 4;
  c.inner_iterations = 7;
  c.mu_init = 2.5;
  c.mu_adapt.enabled = false;
  c.primal_tol = 1e-9;
  c.seed = 42;
  c.update_order = UpdateOrder::kDualBeforeV;
  const nlohmann::json j = c;
  EXPECT_EQ(j["update_order"], "m-u-v");
  const auto back = j.get<SolverConfig>();
  EXPECT_EQ(back.regularizer, c.regularizer);
  EXPECT_EQ(back.tau_top_k, 0);
  EXPECT_EQ(back.max_stages, 4);
  EXPECT_EQ(back.inner_iterations, 7);
  EXPECT_EQ(back.mu_init, 2.5);
  EXPECT_FALSE(back.mu_adapt.enabled);
  EXPECT_EQ(back.primal_tol, 1e-9);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.update_order, UpdateOrder::kDualBeforeV);
}

TEST(SolverConfigTest, PartialAndInvalidJson) {
  const auto partial = nlohmann::json::parse(R"({"max_stages": 3})").get<SolverConfig>();
  EXPECT_EQ(partial.max_stages, 3);
  EXPECT_EQ(partial.inner_iterations, SolverConfig{}.inner_iterations);
  EXPECT_THROW(nlohmann::json::parse(R"({"stages": 3})").get<SolverConfig>(), ParseError);
  EXPECT_THROW(nlohmann::json::parse(R"({"max_stages": "3"})").get<SolverConfig>(), ParseError);
  EXPECT_THROW(nlohmann::json::parse(R"({"update_order": "v-m-u"})").get<SolverConfig>(),
               ParseError);
  EXPECT_THROW(nlohmann::json::parse(R"({"max_stages": 0})").get<SolverConfig>(),
               InvalidParameterError);
}

TEST(SolverConfigTest, LoadConfigFile) {
  TempDir dir;
  write_file(dir / "c.json", R"({"regularizer": {"kind": "l1", "lambda": 0.3}, "seed": 5})");
  const SolverConfig c = load_config(dir / "c.json");
  EXPECT_EQ(c.regularizer.kind, regularizers::Kind::kL1);
  EXPECT_EQ(c.regularizer.lambda, 0.3);
  EXPECT_EQ(c.seed, 5u);
  write_file(dir / "bad.json", "{ nope");
  EXPECT_THROW(load_config(dir / "bad.json"), ParseError);
  EXPECT_THROW(load_config(dir / "missing.json"), IoError);
}

TEST(AdmmTest, MUpdateIsProxAndVUpdateZeroesGradient) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const Instance inst = make_instance(6, 8, 100 + trial);
    StageProblem problem(inst.observation, inst.dictionary);
    const Eigen::Index d = inst.dictionary.size();
    AdmmState state = AdmmState::zeros(d, 0.7 + trial * 0.3);
    state.v.data() = random_matrix(3 * d, rng);
    state.u.data() = random_matrix(3 * d, rng);
    SurrogateWeights weights;
    weights.weights = Eigen::VectorXd::LinSpaced(d, 0.5, 3.0);
    const AdmmState before = state;

    admm_iterate(problem, weights, state);

    for (Eigen::Index i = 0; i < d; ++i) {
      const linalg::Mat23 expected =
          linalg::prox_spectral(before.v.matrix(i) - before.u.matrix(i) / before.mu,
                                weights.weights(i) / before.mu);
      EXPECT_LT((state.m.matrix(i) - expected).norm(), 1e-12);
    }
    const Eigen::Matrix2Xd grad = sparsepose::testing::finite_difference_gradient(
        state.v.data(), inst.observation.points(), inst.dictionary.stacked(), state.m.data(),
        before.u.data(), before.mu);
    const double scale = problem.y_bt().norm() + before.mu * state.m.data().norm() +
                         before.u.data().norm();
    EXPECT_LE(grad.norm() / scale, 1e-6);
    // Dual ascent on the coupling constraint.
    EXPECT_LT((state.u.data() - before.u.data() -
               before.mu * (state.m.data() - state.v.data()))
                  .norm(),
              1e-10);
  }
}

TEST(AdmmTest, ZeroWeightsFitTheData) {
  const Instance inst = make_instance(6, 8, 7);
  StageProblem problem(inst.observation, inst.dictionary);
  AdmmState state = AdmmState::zeros(6, 1.0);
  SurrogateWeights weights;
  weights.weights = Eigen::VectorXd::Zero(6);
  for (int it = 0; it < 500; ++it) admm_iterate(problem, weights, state);
  EXPECT_LT(problem.data_term(state.m), 1e-10 * inst.observation.points().squaredNorm());
  const Eigen::Matrix2Xd ls =
      sparsepose::testing::least_squares_v(inst.observation.points(), inst.dictionary.stacked());
  EXPECT_NEAR(problem.data_term(AffineStack(ls)), 0.0, 1e-12);
}

TEST(AdmmTest, DictionaryOverloadMatchesProblemOverload) {
  const Instance inst = make_instance(5, 7, 8);
  SurrogateWeights weights;
  weights.weights = Eigen::VectorXd::Constant(5, 0.5);
  AdmmState a = AdmmState::zeros(5, 1.0);
  AdmmState b = a;
  StageProblem problem(inst.observation, inst.dictionary);
  const auto ra = admm_iterate(problem, weights, a);
  const auto rb = admm_iterate(inst.observation, inst.dictionary, weights, b);
  EXPECT_EQ(a.m.data(), b.m.data());
  EXPECT_EQ(a.v.data(), b.v.data());
  EXPECT_EQ(ra.primal, rb.primal);
  EXPECT_EQ(ra.dual, rb.dual);
}

TEST(AdmmTest, AdaptMu) {
  const MuAdaptation params;
  EXPECT_EQ(adapt_mu(1.0, 100.0, 1.0, params), 2.0);
  EXPECT_EQ(adapt_mu(1.0, 1.0, 100.0, params), 0.5);
  EXPECT_EQ(adapt_mu(1.0, 5.0, 1.0, params), 1.0);
  MuAdaptation off = params;
  off.enabled = false;
  EXPECT_EQ(adapt_mu(1.0, 100.0, 1.0, off), 1.0);
}

TEST(AdmmTest, SolveStageRecordsIterations) {
  const Instance inst = make_instance(8, 10, 9);
  StageProblem problem(inst.observation, inst.dictionary);
  AdmmState state = AdmmState::zeros(8, 1.0);
  SurrogateWeights weights;
  weights.weights = Eigen::VectorXd::Constant(8, 1.0);
  SolverConfig config;
  config.inner_iterations = 2000;
  std::vector<IterationRecord> records;
  const StageRecord stage = solve_stage(problem, weights, state, config, &records);
  EXPECT_TRUE(stage.converged);
  EXPECT_EQ(stage.iterations, static_cast<int>(records.size()));
  EXPECT_LT(stage.iterations, 2000);
  EXPECT_EQ(stage.solution.data(), state.m.data());
  EXPECT_LE(records.back().primal_residual, config.primal_tol);
  EXPECT_LE(records.back().dual_residual, config.dual_tol);
  EXPECT_EQ(stage.norms.size(), 8);

  config.inner_iterations = 3;
  AdmmState fresh = AdmmState::zeros(8, 1.0);
  const StageRecord capped = solve_stage(problem, weights, fresh, config);
  EXPECT_EQ(capped.iterations, 3);
  EXPECT_FALSE(capped.converged);
}

TEST(MultistageTest, RecoversNoiselessShape) {
  const Instance inst = make_instance(32, 30, 31);
  const RecoveryResult result = multistage_solve(inst.observation, inst.dictionary, {});
  const Pose3D clean(geometry::rotation_y(0.3) * inst.truth.shape.points());
  EXPECT_LT(geometry::recovery_error(result.shape, clean, true) / clean.points().norm(), 1e-2);
  EXPECT_LT(estimation_error(result.affine_stack, inst.truth_stack),
            1e-2 * estimation_error(AffineStack(32), inst.truth_stack));
  for (const auto& r : result.rotations) EXPECT_TRUE(geometry::is_rotation(r));
  EXPECT_EQ(result.coefficients.size(), 32);
  EXPECT_FALSE(result.trace.stages.empty());
  EXPECT_LE(result.trace.stages.size(), 15u);
  EXPECT_TRUE(std::isfinite(result.final_objective));
}

TEST(MultistageTest, AdaptiveTauIsFrozenAfterFirstStage) {
  const Instance inst = make_instance(16, 12, 41);
  SolverConfig config;
  config.tau_top_k = 4;
  config.primal_tol = 1e-14;  // keep all stages
  config.max_stages = 4;
  const RecoveryResult result = multistage_solve(inst.observation, inst.dictionary, config);
  ASSERT_GE(result.trace.stages.size(), 2u);
  Eigen::VectorXd norms = result.trace.stages[0].norms;
  std::sort(norms.data(), norms.data() + norms.size(), std::greater<>());
  const double tau = result.trace.stages[1].tau;
  EXPECT_EQ(tau, norms(3));
  for (std::size_t s = 2; s < result.trace.stages.size(); ++s) {
    EXPECT_EQ(result.trace.stages[s].tau, tau);
  }
}

TEST(MultistageTest, DegenerateFamiliesAgree) {
  const Instance inst = make_instance(12, 12, 51);
  SolverConfig a;
  SolverConfig b;
  a.regularizer = RegularizerSpec::lcnr(0.8, 0.8, 2.0);
  b.regularizer = RegularizerSpec::l1(0.8);
  const auto ra = multistage_solve(inst.observation, inst.dictionary, a);
  const auto rb = multistage_solve(inst.observation, inst.dictionary, b);
  EXPECT_LE((ra.coefficients - rb.coefficients).cwiseAbs().maxCoeff(), 1e-12);
  a.regularizer = RegularizerSpec::lcnr(0.8, 0.0, 2.0);
  b.regularizer = RegularizerSpec::capped_l1(0.8, 2.0);
  const auto rc = multistage_solve(inst.observation, inst.dictionary, a);
  const auto rd = multistage_solve(inst.observation, inst.dictionary, b);
  EXPECT_LE((rc.coefficients - rd.coefficients).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MultistageTest, DeterministicAndUpdateOrderVariantConverges) {
  const Instance inst = make_instance(12, 12, 61);
  SolverConfig config;
  const auto a = multistage_solve(inst.observation, inst.dictionary, config);
  const auto b = multistage_solve(inst.observation, inst.dictionary, config);
  EXPECT_EQ(a.affine_stack.data(), b.affine_stack.data());
  config.update_order = UpdateOrder::kDualBeforeV;
  config.inner_iterations = 200;
  const auto c = multistage_solve(inst.observation, inst.dictionary, config);
  EXPECT_TRUE(c.affine_stack.data().allFinite());
}

TEST(MultistageTest, LandmarkMismatch) {
  const Instance inst = make_instance(4, 8, 71);
  const Pose2D wrong(Eigen::Matrix2Xd::Ones(2, 9));
  EXPECT_THROW(multistage_solve(wrong, inst.dictionary, {}), DimensionError);
}

TEST(EstimationErrorTest, SubsetsAndErrors) {
  AffineStack a(3);
  AffineStack b(3);
  a[0] << 3, 0, 0, 0, 0, 0;  // spectral norm 3
  a[2] << 0, 4, 0, 0, 0, 0;  // spectral norm 4
  EXPECT_DOUBLE_EQ(estimation_error(a, b), 5.0);
  const std::vector<Eigen::Index> subset{2};
  EXPECT_DOUBLE_EQ(estimation_error(a, b, subset), 4.0);
  const std::vector<Eigen::Index> bad{3};
  EXPECT_THROW(estimation_error(a, b, bad), InvalidParameterError);
  EXPECT_THROW(estimation_error(a, AffineStack(2)), DimensionError);
}

TEST(TraceCsvTest, WritesFrameColumn) {
  TempDir dir;
  SolveTrace t;
  t.iterations.push_back({1, 2, 0.5, 0.25, 0.125, 1.0});
  const std::vector<SolveTrace> traces{t, t};
  const std::vector<long> frames{4, 9};
  write_trace_csv(dir / "t.csv", traces, frames);
  EXPECT_EQ(sparsepose::testing::read_file(dir / "t.csv"),
            "frame,stage,iteration,objective,primal_residual,dual_residual,mu\n"
            "4,1,2,0.5,0.25,0.125,1\n9,1,2,0.5,0.25,0.125,1\n");
  write_trace_csv(dir / "u.csv", std::span(traces).first(1));
  EXPECT_EQ(sparsepose::testing::read_file(dir / "u.csv"),
            "stage,iteration,objective,primal_residual,dual_residual,mu\n1,2,0.5,0.25,0.125,1\n");
}

}  // namespace
}  // namespace sparsepose::solver
