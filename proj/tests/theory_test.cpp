// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsepose/theory.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "sparsepose/dictionary.hpp"
#include "sparsepose/errors.hpp"
#include "sparsepose/experiments.hpp"

namespace sparsepose::theory {
namespace {

using regularizers::RegularizerSpec;

TheoryOptions fast_options() {
  TheoryOptions o;
  o.kappa_samples = 2000;
  o.seed = 3;
  return o;
}

TEST(KappaTest, LiesWithinSingularValueBounds) {
  const PoseDictionary dict = dictionary::random_dictionary(6, 9, 1.0, 4);
  const Eigen::VectorXd kappa = estimate_kappa(dict, 3000, 1);
  ASSERT_EQ(kappa.size(), 6);
  for (Eigen::Index i = 0; i < 6; ++i) {
    // sigma_min(B) ||M||_F <= ||M B||_F <= ||B||_2 ||M||_F and
    // ||M||_* / sqrt(2) <= ||M||_F <= ||M||_* for 2 x 3 M.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(dict.bases[i]);
    const Eigen::VectorXd s = svd.singularValues();
    EXPECT_GE(kappa(i), s(2) / std::sqrt(2.0) - 1e-12);
    EXPECT_LE(kappa(i), s(0) + 1e-12);
  }
  EXPECT_EQ(kappa, estimate_kappa(dict, 3000, 1));
  EXPECT_THROW(estimate_kappa(dict, 0, 1), InvalidParameterError);
}

TEST(KappaTest, OrthogonalRowsGiveTightRange) {
  // Rows orthogonal with squared norm phi: ||M B||_F = sqrt(phi) ||M||_F.
  PoseDictionary dict;
  dict.phi = 4.0;
  Eigen::Matrix3Xd b = Eigen::Matrix3Xd::Zero(3, 4);
  b(0, 0) = b(1, 1) = b(2, 2) = 2.0;
  dict.bases = {b};
  const double kappa = estimate_kappa(dict, 5000, 2)(0);
  EXPECT_GE(kappa, 2.0 / std::sqrt(2.0) - 1e-12);
  EXPECT_LE(kappa, 2.0 + 1e-12);
  EXPECT_LT(kappa, 1.6);  // many samples approach the rank-2 extreme
}

TEST(TheoryReportTest, ClosedFormQuantitiesWithoutTruth) {
  const PoseDictionary dict = dictionary::random_dictionary(8, 10, 1.0, 5);
  const auto spec = RegularizerSpec::lcnr(1.0, 0.25, 10.0);
  const TheoryReport r = theory_report(dict, spec, std::nullopt, fast_options());
  EXPECT_EQ(r.dictionary_size, 8);
  EXPECT_DOUBLE_EQ(r.gate_half, std::sqrt(4.0) / 2.0);
  EXPECT_DOUBLE_EQ(r.gate_eighth, std::sqrt(4.0) / 8.0);
  EXPECT_TRUE(r.passes_gate_half);
  EXPECT_NEAR(r.probability_bound,
              1.0 - 16.0 * std::exp(-0.5 * (1.0 - 3.0 * std::log(4.0 / 3.0))), 1e-14);
  ASSERT_TRUE(r.kappa.has_value());
  EXPECT_EQ(*r.kappa, r.kappa_per_basis.minCoeff());
  const double denom = *r.kappa * *r.kappa * 10.0;
  ASSERT_TRUE(r.a && r.b);
  EXPECT_NEAR(*r.a, 1.25 / denom, 1e-14);
  EXPECT_NEAR(*r.b, (1.25 * std::sqrt(8.0) + 1.0 * std::sqrt(8.0) + 0.25 * std::sqrt(8.0)) / denom,
              1e-12);
  EXPECT_TRUE(r.b_is_upper_bound);
  EXPECT_FALSE(r.initial_error.has_value());
  EXPECT_TRUE(r.bound_curve.empty());
  EXPECT_EQ(r.vacuous, *r.a >= 1.0);
}

TEST(TheoryReportTest, TruthSetsAndBoundCurve) {
  const PoseDictionary dict = dictionary::random_dictionary(8, 10, 1.0, 6);
  const auto truth = experiments::generate_sparse_truth(dict, 3, 10.0, 20.0, 7);
  const AffineStack stack = experiments::view_truth(truth, 0.4);
  TheoryOptions options = fast_options();
  options.curve_stages = 5;
  const double tau = 100.0;
  const auto spec = RegularizerSpec::lcnr(1.0, 0.25, tau);
  const TheoryReport r = theory_report(dict, spec, stack, options);
  ASSERT_TRUE(r.support_size && r.small_set_size && r.initial_error);
  EXPECT_EQ(*r.support_size, 3);
  // Every norm is at most c_i <= 20 <= 2 tau.
  EXPECT_EQ(*r.small_set_size, 8);
  EXPECT_FALSE(r.b_is_upper_bound);
  double sq = 0.0;
  for (double c : truth.coefficients) sq += c * c;
  EXPECT_NEAR(*r.initial_error, std::sqrt(sq), 1e-9);
  const double denom = *r.kappa * *r.kappa * tau;
  EXPECT_NEAR(*r.b, (1.25 * std::sqrt(8.0) + std::sqrt(8.0) + 0.25 * std::sqrt(3.0)) / denom,
              1e-12);
  ASSERT_FALSE(r.vacuous);
  ASSERT_EQ(r.bound_curve.size(), 6u);
  for (int l = 0; l <= 5; ++l) {
    EXPECT_NEAR(r.bound_curve[l], std::pow(*r.a, l) * *r.initial_error + *r.b / (1.0 - *r.a),
                1e-9);
  }
  EXPECT_THROW(theory_report(dict, spec, AffineStack(7), options), DimensionError);
}

TEST(TheoryReportTest, PenaltyMappingAndVacuity) {
  const PoseDictionary dict = dictionary::random_dictionary(4, 6, 1.0, 8);
  const TheoryOptions options = fast_options();
  const TheoryReport l1 = theory_report(dict, RegularizerSpec::l1(0.5), std::nullopt, options);
  EXPECT_EQ(l1.alpha, 0.5);
  EXPECT_EQ(l1.beta, 0.5);
  const TheoryReport capped =
      theory_report(dict, RegularizerSpec::capped_l1(0.7, 2.0), std::nullopt, options);
  EXPECT_EQ(capped.alpha, 0.7);
  EXPECT_EQ(capped.beta, 0.0);
  const TheoryReport small_tau =
      theory_report(dict, RegularizerSpec::lcnr(1.0, 0.25, 0.01), std::nullopt, options);
  EXPECT_TRUE(small_tau.vacuous);
  EXPECT_NE(format_report(small_tau).find("vacuous"), std::string::npos);
  EXPECT_THROW(theory_report(dict, RegularizerSpec::logarithm(1.0, 1.0), std::nullopt, options),
               InvalidParameterError);
  TheoryOptions bad = options;
  bad.e = 0.0;
  EXPECT_THROW(theory_report(dict, RegularizerSpec::l1(1.0), std::nullopt, bad),
               InvalidParameterError);
}

TEST(TheoryReportTest, FormatMentionsKeyQuantities) {
  const PoseDictionary dict = dictionary::random_dictionary(4, 6, 1.0, 9);
  const TheoryReport r =
      theory_report(dict, RegularizerSpec::lcnr(1.0, 0.25, 10.0), std::nullopt, fast_options());
  const std::string text = format_report(r);
  EXPECT_NE(text.find("kappa"), std::string::npos);
  EXPECT_NE(text.find("a = "), std::string::npos);
  EXPECT_NE(text.find("upper bound"), std::string::npos);
}

}  // namespace
}  // namespace sparsepose::theory
