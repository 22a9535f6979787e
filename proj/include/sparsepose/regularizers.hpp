// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>
#include <json.hpp>

namespace sparsepose::regularizers {

enum class Kind { kL1, kCappedL1, kLcnr, kLogarithm, kLaplace };

std::string_view kind_name(Kind kind);
// Throws ParseError for unknown names.
Kind parse_kind(std::string_view name);

// One penalty family with its parameters. Fields not used by `kind` are
// ignored. Construct through the factories, which validate.
struct RegularizerSpec {
  Kind kind = Kind::kLcnr;
  double alpha = 1.0;
  double beta = 0.25;
  double tau = 1.0;
  double lambda = 1.0;
  double gamma = 1.0;

  static RegularizerSpec l1(double lambda);
  static RegularizerSpec capped_l1(double alpha, double tau);
  static RegularizerSpec lcnr(double alpha, double beta, double tau);
  static RegularizerSpec logarithm(double lambda, double gamma);
  static RegularizerSpec laplace(double lambda, double gamma);

  // Throws InvalidParameterError when the parameters break the family's
  // constraints (e.g. LCNR needs 0 <= beta <= alpha and tau > 0).
  void validate() const;

  // Whether stage weights depend on a threshold tau.
  bool uses_tau() const { return kind == Kind::kLcnr || kind == Kind::kCappedL1; }

  friend bool operator==(const RegularizerSpec&, const RegularizerSpec&) = default;
};

void to_json(nlohmann::json& j, const RegularizerSpec& spec);
// Throws ParseError for unknown kinds or missing/mistyped fields and
// InvalidParameterError for out-of-range values.
void from_json(const nlohmann::json& j, RegularizerSpec& spec);

struct SurrogateWeights {
  Eigen::VectorXd weights;
  int stage = 0;
};

// Scalar penalty R(t) for a single magnitude t >= 0.
double scalar_penalty(const RegularizerSpec& spec, double t);
// Right derivative R'(t) for t >= 0 (the multi-stage tangent slope).
double scalar_slope(const RegularizerSpec& spec, double t);

// H(c) = sum_i R(|c_i|). When expected_size is set, c must match it.
double eval_penalty(const RegularizerSpec& spec, const Eigen::VectorXd& c,
                    std::optional<Eigen::Index> expected_size = std::nullopt);

// Stage weights lambda^l. Stage 0 gives the light start (beta for LCNR,
// alpha when beta == 0, lambda for L1, R'(0) for logarithm/Laplace).
// Later stages apply the threshold rule alpha*1(n <= tau) + beta*1(n > tau)
// for LCNR and capped l1, and the tangent slope R'(n) for the smooth
// penalties. Throws InvalidInputError on negative norms.
SurrogateWeights surrogate_weights(const RegularizerSpec& spec,
                                   const Eigen::VectorXd& prev_norms, int stage);

// sum_i |c_i| * weights_i. Throws DimensionError on size mismatch.
double surrogate_value(const SurrogateWeights& weights, const Eigen::VectorXd& c);

}  // namespace sparsepose::regularizers
