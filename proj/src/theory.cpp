// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsepose/theory.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "sparsepose/errors.hpp"
#include "sparsepose/linalg.hpp"
#include "sparsepose/pose_io.hpp"

namespace sparsepose::theory {

using regularizers::Kind;

Eigen::VectorXd estimate_kappa(const PoseDictionary& dictionary, int samples,
                               std::uint64_t seed) {
  if (samples < 1) throw InvalidParameterError("kappa samples must be >= 1");
  Eigen::VectorXd kappa(dictionary.size());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < dictionary.size(); ++i) {
    const Eigen::Matrix3Xd& basis = dictionary.bases[static_cast<std::size_t>(i)];
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
      linalg::Mat23 m;
      for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = normal(rng);
      const double nuclear = linalg::nuclear_norm(m);
      if (nuclear <= 0.0) continue;
      best = std::min(best, (m * basis).norm() / nuclear);
    }
    kappa(i) = best;
  }
  return kappa;
}

TheoryReport theory_report(const PoseDictionary& dictionary,
                           const regularizers::RegularizerSpec& regularizer,
                           const std::optional<AffineStack>& truth,
                           const TheoryOptions& options) {
  regularizer.validate();
  if (!(options.e > 0.0)) throw InvalidParameterError("e must be > 0");
  if (options.curve_stages < 0) throw InvalidParameterError("curve_stages must be >= 0");
  if (dictionary.size() < 1) throw ValidationError("dictionary is empty");

  TheoryReport r;
  r.phi = dictionary.phi;
  r.dictionary_size = dictionary.size();
  r.e = options.e;
  r.tau = regularizer.tau;
  switch (regularizer.kind) {
    case Kind::kLcnr:
      r.alpha = regularizer.alpha;
      r.beta = regularizer.beta;
      break;
    case Kind::kCappedL1:
      r.alpha = regularizer.alpha;
      r.beta = 0.0;
      break;
    case Kind::kL1:
      r.alpha = regularizer.lambda;
      r.beta = regularizer.lambda;
      break;
    default:
      throw InvalidParameterError("theory diagnostics support l1, capped-l1 and lcnr, not " +
                                  std::string(regularizers::kind_name(regularizer.kind)));
  }

  const double sum = r.alpha + r.beta;
  const double d = static_cast<double>(r.dictionary_size);
  r.gate_half = r.phi * std::sqrt(3.0 + r.e) / 2.0;
  r.gate_eighth = r.phi * std::sqrt(3.0 + r.e) / 8.0;
  r.passes_gate_half = sum >= r.gate_half;
  r.passes_gate_eighth = sum >= r.gate_eighth;
  const double theta = r.e - 3.0 * std::log1p(r.e / 3.0);
  r.probability_bound = 1.0 - 2.0 * d * std::exp(-0.5 * theta);

  r.kappa_per_basis = estimate_kappa(dictionary, options.kappa_samples, options.seed);
  const double kappa = r.kappa_per_basis.minCoeff();
  if (std::isfinite(kappa) && kappa > 0.0) {
    r.kappa = kappa;
  } else {
    r.kappa_note = "kappa estimate unavailable (degenerate basis or no valid samples)";
  }

  Eigen::Index support = r.dictionary_size;
  Eigen::Index small = r.dictionary_size;
  if (truth) {
    if (truth->size() != r.dictionary_size) {
      throw DimensionError("truth has " + std::to_string(truth->size()) +
                           " affine matrices but the dictionary has " +
                           std::to_string(r.dictionary_size));
    }
    const Eigen::VectorXd norms = truth->spectral_norms();
    support = (norms.array() != 0.0).count();
    small = (norms.array() <= 2.0 * r.tau).count();
    r.support_size = support;
    r.small_set_size = small;
    r.b_is_upper_bound = false;
    r.initial_error = solver::estimation_error(AffineStack(r.dictionary_size), *truth);
  }

  if (r.kappa) {
    const double denom = (*r.kappa) * (*r.kappa) * r.tau;
    r.a = sum / denom;
    r.b = (sum * std::sqrt(d) + r.alpha * std::sqrt(static_cast<double>(small)) +
           r.beta * std::sqrt(static_cast<double>(support))) /
          denom;
    r.vacuous = *r.a >= 1.0;
  }
  if (!r.vacuous && r.initial_error) {
    const double floor = *r.b / (1.0 - *r.a);
    for (int l = 0; l <= options.curve_stages; ++l) {
      r.bound_curve.push_back(std::pow(*r.a, l) * (*r.initial_error) + floor);
    }
  }
  return r;
}

std::string format_report(const TheoryReport& r) {
  using io::format_double;
  std::ostringstream out;
  out << "phi = " << format_double(r.phi) << '\n';
  out << "D = " << r.dictionary_size << '\n';
  out << "alpha = " << format_double(r.alpha) << ", beta = " << format_double(r.beta)
      << ", tau = " << format_double(r.tau) << '\n';
  out << "e = " << format_double(r.e) << '\n';
  out << "gate (alpha+beta) >= phi*sqrt(3+e)/2 = " << format_double(r.gate_half) << ": "
      << (r.passes_gate_half ? "pass" : "fail") << '\n';
  out << "gate (alpha+beta) >= phi*sqrt(3+e)/8 = " << format_double(r.gate_eighth) << ": "
      << (r.passes_gate_eighth ? "pass" : "fail") << '\n';
  out << "probability bound = " << format_double(r.probability_bound)
      << (r.probability_bound <= 0.0 ? " (vacuous)" : "") << '\n';
  if (r.kappa) {
    out << "kappa_hat = " << format_double(*r.kappa) << " (sampled estimate)\n";
    out << "a = (alpha+beta)/(kappa_hat^2*tau) = " << format_double(*r.a) << '\n';
    out << "b = ((alpha+beta)*sqrt(D) + alpha*sqrt(|F|) + beta*sqrt(|E|))/(kappa_hat^2*tau) = "
        << format_double(*r.b) << (r.b_is_upper_bound ? " (upper bound, |E| = |F| = D)" : "")
        << '\n';
  } else {
    out << "kappa_hat = unavailable: " << r.kappa_note << '\n';
  }
  if (r.support_size) out << "|E| = " << *r.support_size << '\n';
  if (r.small_set_size) out << "|F| = " << *r.small_set_size << '\n';
  if (r.vacuous) {
    out << "decay bound vacuous for these parameters";
    if (r.kappa) {
      out << " (tau <= (alpha+beta)/kappa_hat^2 = "
          << format_double((r.alpha + r.beta) / ((*r.kappa) * (*r.kappa)))
          << ')';
    }
    out << '\n';
  }
  if (r.initial_error) out << "L0 = " << format_double(*r.initial_error) << '\n';
  for (std::size_t l = 0; l < r.bound_curve.size(); ++l) {
    out << "bound[" << l << "] = " << format_double(r.bound_curve[l]) << '\n';
  }
  return out.str();
}

}  // namespace sparsepose::theory
