// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sparsepose/pose_types.hpp"
#include "sparsepose/solver.hpp"

namespace sparsepose::theory {

struct TheoryOptions {
  // Slack e of the chi-squared tail bound.
  double e = 1.0;
  int kappa_samples = 10000;
  std::uint64_t seed = 0;
  // Number of points l = 0..stages of the predicted bound curve.
  int curve_stages = 15;
};

// Diagnostic quantities of the convergence analysis for one dictionary and
// regularizer. The analysis is stated for the leaky capped penalty; l1 maps
// to alpha = beta = lambda and capped l1 to beta = 0.
struct TheoryReport {
  double phi = 0.0;
  Eigen::Index dictionary_size = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double tau = 0.0;
  double e = 0.0;

  // (alpha + beta) >= phi sqrt(3 + e) / 2 and the looser / 8 variant.
  double gate_half = 0.0;
  double gate_eighth = 0.0;
  bool passes_gate_half = false;
  bool passes_gate_eighth = false;
  // 1 - 2 D exp(-(e - 3 ln(1 + e/3)) / 2); may be negative (vacuous).
  double probability_bound = 0.0;

  // Sample minimum of ||M B_i||_F / ||M||_* over random 2x3 M; an estimate,
  // not a certified constant. Empty when estimation failed.
  std::optional<double> kappa;
  Eigen::VectorXd kappa_per_basis;
  std::string kappa_note;

  // a = (alpha + beta) / (kappa^2 tau),
  // b = ((alpha + beta) sqrt(D) + alpha sqrt(|F|) + beta sqrt(|E|)) / (kappa^2 tau).
  std::optional<double> a;
  std::optional<double> b;
  // Without truth |E| = |F| = D, which makes b an upper bound.
  bool b_is_upper_bound = true;
  std::optional<Eigen::Index> support_size;    // |E|: ||M_i|| != 0
  std::optional<Eigen::Index> small_set_size;  // |F|: ||M_i|| <= 2 tau
  // True when a >= 1 (tau <= (alpha + beta) / kappa^2) or kappa is missing.
  bool vacuous = true;

  // Error at the zero initialization and a^l L0 + b / (1 - a) for
  // l = 0..curve_stages; filled only with truth and a < 1.
  std::optional<double> initial_error;
  std::vector<double> bound_curve;
};

// Throws InvalidParameterError for penalties outside the analysis
// (logarithm, Laplace) and DimensionError when truth has the wrong size.
TheoryReport theory_report(const PoseDictionary& dictionary,
                           const regularizers::RegularizerSpec& regularizer,
                           const std::optional<AffineStack>& truth = std::nullopt,
                           const TheoryOptions& options = {});

// Per-basis sampled condition constant.
Eigen::VectorXd estimate_kappa(const PoseDictionary& dictionary, int samples,
                               std::uint64_t seed);

// Human-readable multi-line rendering, including the line
// "a = (alpha+beta)/(kappa^2 tau) = <value>".
std::string format_report(const TheoryReport& report);

}  // namespace sparsepose::theory
