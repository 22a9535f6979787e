// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsepose/regularizers.hpp"

#include <cmath>

#include "sparsepose/errors.hpp"

namespace sparsepose::regularizers {

std::string_view kind_name(Kind kind) {
  switch (kind) {
    case Kind::kL1: return "l1";
    case Kind::kCappedL1: return "capped_l1";
    case Kind::kLcnr: return "lcnr";
    case Kind::kLogarithm: return "logarithm";
    case Kind::kLaplace: return "laplace";
  }
  return "unknown";
}

Kind parse_kind(std::string_view name) {
  if (name == "l1") return Kind::kL1;
  if (name == "capped_l1" || name == "capped-l1" || name == "capped") return Kind::kCappedL1;
  if (name == "lcnr") return Kind::kLcnr;
  if (name == "logarithm" || name == "log") return Kind::kLogarithm;
  if (name == "laplace") return Kind::kLaplace;
  throw ParseError("unknown regularizer kind '" + std::string(name) + "'");
}

RegularizerSpec RegularizerSpec::l1(double lambda) {
  RegularizerSpec s;
  s.kind = Kind::kL1;
  s.lambda = lambda;
  s.validate();
  return s;
}

RegularizerSpec RegularizerSpec::capped_l1(double alpha, double tau) {
  RegularizerSpec s;
  s.kind = Kind::kCappedL1;
  s.alpha = alpha;
  s.beta = 0.0;
  s.tau = tau;
  s.validate();
  return s;
}

RegularizerSpec RegularizerSpec::lcnr(double alpha, double beta, double tau) {
  RegularizerSpec s;
  s.kind = Kind::kLcnr;
  s.alpha = alpha;
  s.beta = beta;
  s.tau = tau;
  s.validate();
  return s;
}

RegularizerSpec RegularizerSpec::logarithm(double lambda, double gamma) {
  RegularizerSpec s;
  s.kind = Kind::kLogarithm;
  s.lambda = lambda;
  s.gamma = gamma;
  s.validate();
  return s;
}

RegularizerSpec RegularizerSpec::laplace(double lambda, double gamma) {
  RegularizerSpec s;
  s.kind = Kind::kLaplace;
  s.lambda = lambda;
  s.gamma = gamma;
  s.validate();
  return s;
}

void RegularizerSpec::validate() const {
  auto fail = [this](const std::string& what) {
    throw InvalidParameterError(std::string(kind_name(kind)) + ": " + what);
  };
  switch (kind) {
    case Kind::kL1:
      if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail("lambda must be >= 0");
      break;
    case Kind::kCappedL1:
      if (!(alpha > 0.0) || !std::isfinite(alpha)) fail("alpha must be > 0");
      if (!(tau > 0.0)) fail("tau must be > 0");
      break;
    case Kind::kLcnr:
      if (!(beta >= 0.0)) fail("beta must be >= 0");
      if (!(beta <= alpha) || !std::isfinite(alpha)) fail("beta must not exceed alpha");
      if (!(tau > 0.0)) fail("tau must be > 0");
      break;
    case Kind::kLogarithm:
    case Kind::kLaplace:
      if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail("lambda must be >= 0");
      if (!(gamma > 0.0) || !std::isfinite(gamma)) fail("gamma must be > 0");
      break;
  }
}

void to_json(nlohmann::json& j, const RegularizerSpec& spec) {
  j = nlohmann::json{{"kind", std::string(kind_name(spec.kind))}};
  switch (spec.kind) {
    case Kind::kL1:
      j["lambda"] = spec.lambda;
      break;
    case Kind::kCappedL1:
      j["alpha"] = spec.alpha;
      j["tau"] = spec.tau;
      break;
    case Kind::kLcnr:
      j["alpha"] = spec.alpha;
      j["beta"] = spec.beta;
      j["tau"] = spec.tau;
      break;
    case Kind::kLogarithm:
    case Kind::kLaplace:
      j["lambda"] = spec.lambda;
      j["gamma"] = spec.gamma;
      break;
  }
}

void from_json(const nlohmann::json& j, RegularizerSpec& spec) {
  if (!j.is_object()) throw ParseError("regularizer must be a JSON object");
  if (!j.contains("kind") || !j["kind"].is_string()) {
    throw ParseError("regularizer: missing string field 'kind'");
  }
  RegularizerSpec out;
  out.kind = parse_kind(j["kind"].get<std::string>());
  if (out.kind == Kind::kCappedL1) out.beta = 0.0;
  auto read = [&j](const char* key, double& dst) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) {
      throw ParseError(std::string("regularizer: field '") + key + "' must be a number");
    }
    dst = j[key].get<double>();
  };
  read("alpha", out.alpha);
  read("beta", out.beta);
  read("tau", out.tau);
  read("lambda", out.lambda);
  read("gamma", out.gamma);
  if (out.kind == Kind::kCappedL1) out.beta = 0.0;
  out.validate();
  spec = out;
}

double scalar_penalty(const RegularizerSpec& spec, double t) {
  t = std::abs(t);
  switch (spec.kind) {
    case Kind::kL1:
      return spec.lambda * t;
    case Kind::kCappedL1:
      return spec.alpha * std::min(t, spec.tau);
    case Kind::kLcnr:
      return spec.alpha * std::min(t, spec.tau) + spec.beta * std::max(t, spec.tau);
    case Kind::kLogarithm:
      return spec.lambda / std::log(spec.gamma + 1.0) * std::log1p(spec.gamma * t);
    case Kind::kLaplace:
      return spec.lambda * (1.0 - std::exp(-t / spec.gamma));
  }
  return 0.0;
}

double scalar_slope(const RegularizerSpec& spec, double t) {
  t = std::abs(t);
  switch (spec.kind) {
    case Kind::kL1:
      return spec.lambda;
    case Kind::kCappedL1:
    case Kind::kLcnr:
      // The boundary t == tau takes the heavy branch.
      return t <= spec.tau ? spec.alpha : spec.beta;
    case Kind::kLogarithm:
      return spec.lambda * spec.gamma /
             (std::log(spec.gamma + 1.0) * (spec.gamma * t + 1.0));
    case Kind::kLaplace:
      return spec.lambda / spec.gamma * std::exp(-t / spec.gamma);
  }
  return 0.0;
}

double eval_penalty(const RegularizerSpec& spec, const Eigen::VectorXd& c,
                    std::optional<Eigen::Index> expected_size) {
  if (expected_size && c.size() != *expected_size) {
    throw DimensionError("eval_penalty: expected " + std::to_string(*expected_size) +
                         " coefficients, got " + std::to_string(c.size()));
  }
  if (!c.allFinite()) throw InvalidInputError("eval_penalty: non-finite coefficient");
  double total = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) total += scalar_penalty(spec, c(i));
  return total;
}

SurrogateWeights surrogate_weights(const RegularizerSpec& spec,
                                   const Eigen::VectorXd& prev_norms, int stage) {
  if (stage < 0) throw InvalidParameterError("surrogate_weights: stage must be >= 0");
  for (Eigen::Index i = 0; i < prev_norms.size(); ++i) {
    if (!(prev_norms(i) >= 0.0) || !std::isfinite(prev_norms(i))) {
      throw InvalidInputError("surrogate_weights: norm " + std::to_string(i) +
                              " is negative or non-finite");
    }
  }
  SurrogateWeights out;
  out.stage = stage;
  const Eigen::Index d = prev_norms.size();
  if (stage == 0) {
    double light = 0.0;
    switch (spec.kind) {
      case Kind::kL1: light = spec.lambda; break;
      case Kind::kCappedL1: light = spec.alpha; break;
      case Kind::kLcnr: light = spec.beta > 0.0 ? spec.beta : spec.alpha; break;
      case Kind::kLogarithm:
      case Kind::kLaplace: light = scalar_slope(spec, 0.0); break;
    }
    out.weights = Eigen::VectorXd::Constant(d, light);
    return out;
  }
  out.weights.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) out.weights(i) = scalar_slope(spec, prev_norms(i));
  return out;
}

double surrogate_value(const SurrogateWeights& weights, const Eigen::VectorXd& c) {
  if (weights.weights.size() != c.size()) {
    throw DimensionError("surrogate_value: " + std::to_string(weights.weights.size()) +
                         " weights vs " + std::to_string(c.size()) + " coefficients");
  }
  return weights.weights.dot(c.cwiseAbs());
}

}  // namespace sparsepose::regularizers
