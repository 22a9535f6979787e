// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsepose/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/QR>
#include <json.hpp>

#include "sparsepose/errors.hpp"
#include "sparsepose/geometry.hpp"
#include "sparsepose/parallel.hpp"

namespace sparsepose::dictionary {

namespace {

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// Flattens column-major 3 x p shapes into the columns of a 3p x N matrix.
Eigen::MatrixXd flatten(std::span<const Pose3D> corpus) {
  const Eigen::Index p = corpus.front().landmark_count();
  Eigen::MatrixXd x(3 * p, static_cast<Eigen::Index>(corpus.size()));
  for (std::size_t j = 0; j < corpus.size(); ++j) {
    x.col(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const Eigen::VectorXd>(corpus[j].points().data(), 3 * p);
  }
  return x;
}

Eigen::Matrix3Xd unflatten(const Eigen::VectorXd& v) {
  return Eigen::Map<const Eigen::Matrix3Xd>(v.data(), 3, v.size() / 3);
}

double objective(const Eigen::MatrixXd& x, const Eigen::MatrixXd& atoms,
                 const Eigen::MatrixXd& codes, double lambda) {
  return 0.5 * (x - atoms * codes).squaredNorm() + lambda * codes.cwiseAbs().sum();
}

// Per-row rescaling of one flattened atom to squared norm phi. Returns false
// if some row is zero.
bool normalize_atom(Eigen::Ref<Eigen::VectorXd> atom, double phi) {
  const Eigen::Index p = atom.size() / 3;
  Eigen::Map<Eigen::Matrix3Xd> m(atom.data(), 3, p);
  for (int r = 0; r < 3; ++r) {
    const double n = m.row(r).norm();
    if (!(n > 0.0)) return false;
  }
  for (int r = 0; r < 3; ++r) m.row(r) *= std::sqrt(phi) / m.row(r).norm();
  return true;
}

void center_atom(Eigen::Ref<Eigen::VectorXd> atom) {
  Eigen::Map<Eigen::Matrix3Xd> m(atom.data(), 3, atom.size() / 3);
  const Eigen::Vector3d mean = m.rowwise().mean();
  m.colwise() -= mean;
}

}  // namespace

Eigen::VectorXd lasso_coordinate_descent(const Eigen::MatrixXd& gram,
                                         const Eigen::VectorXd& corr, double lambda,
                                         Eigen::VectorXd warm, double tol, int max_passes) {
  const Eigen::Index d = corr.size();
  Eigen::VectorXd c = std::move(warm);
  if (c.size() != d) c = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd gc = gram * c;
  for (int pass = 0; pass < max_passes; ++pass) {
    double max_delta = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double gii = gram(i, i);
      const double old = c(i);
      double updated = 0.0;
      if (gii > 0.0) {
        const double rho = corr(i) - gc(i) + gii * old;
        updated = soft_threshold(rho, lambda) / gii;
      }
      const double delta = updated - old;
      if (delta != 0.0) {
        c(i) = updated;
        gc.noalias() += gram.col(i) * delta;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    if (max_delta <= tol * std::max(1.0, c.cwiseAbs().maxCoeff())) break;
  }
  return c;
}

PoseDictionary normalize_rows(const PoseDictionary& dictionary, double phi) {
  if (!(phi > 0.0)) throw InvalidParameterError("normalize_rows: phi must be > 0");
  PoseDictionary out = dictionary;
  out.phi = phi;
  for (std::size_t i = 0; i < out.bases.size(); ++i) {
    for (int r = 0; r < 3; ++r) {
      const double n = out.bases[i].row(r).norm();
      if (!(n > 0.0)) {
        throw DegenerateError("basis " + std::to_string(i) + " row " + std::to_string(r) +
                              " is zero and cannot be normalized");
      }
      out.bases[i].row(r) *= std::sqrt(phi) / n;
    }
  }
  return out;
}

PoseDictionary random_dictionary(Eigen::Index size, Eigen::Index landmarks, double phi,
                                 std::uint64_t seed) {
  if (size < 1) throw InvalidParameterError("dictionary size must be >= 1");
  if (landmarks < 3) throw InvalidParameterError("dictionary needs at least 3 landmarks");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  PoseDictionary dict;
  dict.phi = phi;
  dict.bases.reserve(static_cast<std::size_t>(size));
  for (Eigen::Index i = 0; i < size; ++i) {
    Eigen::Matrix3Xd b(3, landmarks);
    for (Eigen::Index k = 0; k < b.size(); ++k) b.data()[k] = normal(rng);
    dict.bases.push_back(geometry::centralize(b));
  }
  return normalize_rows(dict, phi);
}

std::vector<Pose3D> prepare_corpus(std::span<const Pose3D> corpus) {
  std::vector<Pose3D> out;
  out.reserve(corpus.size());
  if (corpus.empty()) return out;
  const Pose3D reference(geometry::centralize(corpus.front().points()));
  for (const auto& pose : corpus) {
    const Pose3D centered(geometry::centralize(pose.points()));
    const auto t = geometry::fit_similarity(reference, centered, false);
    out.emplace_back(geometry::centralize(t.apply(centered.points())));
  }
  return out;
}

LearnResult learn_dictionary(std::span<const Pose3D> corpus, const LearnOptions& options) {
  if (corpus.empty()) throw InvalidInputError("learn_dictionary: corpus is empty");
  if (options.size < 1) throw InvalidParameterError("dictionary size must be >= 1");
  if (!(options.phi > 0.0)) throw InvalidParameterError("phi must be > 0");
  if (options.iterations < 0) throw InvalidParameterError("iterations must be >= 0");
  const Eigen::Index p = corpus.front().landmark_count();
  for (std::size_t j = 0; j < corpus.size(); ++j) {
    if (corpus[j].landmark_count() != p) {
      throw InvalidInputError("learn_dictionary: pose " + std::to_string(j) + " has " +
                              std::to_string(corpus[j].landmark_count()) +
                              " landmarks, expected " + std::to_string(p));
    }
  }

  LearnResult result;
  const Eigen::Index n = static_cast<Eigen::Index>(corpus.size());
  const Eigen::Index d = options.size;
  const Eigen::MatrixXd x = flatten(corpus);
  const Eigen::Index rank_bound = std::min<Eigen::Index>(n, 3 * (p - 1));
  if (d > rank_bound) {
    result.warnings.push_back("dictionary size " + std::to_string(d) +
                              " exceeds the corpus rank bound " + std::to_string(rank_bound) +
                              "; bases will be redundant");
  }

  // Seed samples without replacement (with replacement once exhausted).
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Eigen::MatrixXd atoms(3 * p, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const Eigen::Index src = i < n ? order[static_cast<std::size_t>(i)]
                                   : std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
    Eigen::VectorXd atom = x.col(src);
    const double rms = std::max(atom.norm() / std::sqrt(static_cast<double>(atom.size())), 1e-12);
    for (Eigen::Index k = 0; k < atom.size(); ++k) atom(k) += options.init_noise * rms * normal(rng);
    center_atom(atom);
    if (!normalize_atom(atom, options.phi)) {
      throw DegenerateError("learn_dictionary: initial basis " + std::to_string(i) +
                            " has a zero row");
    }
    atoms.col(i) = atom;
  }

  double lambda = 0.0;
  if (options.sparsity_lambda) {
    lambda = *options.sparsity_lambda;
    if (!(lambda >= 0.0)) throw InvalidParameterError("sparsity lambda must be >= 0");
  } else {
    const Eigen::MatrixXd corr = atoms.transpose() * x;
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) total += corr.col(j).cwiseAbs().maxCoeff();
    lambda = 0.1 * total / static_cast<double>(n);
  }
  result.sparsity_lambda = lambda;

  Eigen::MatrixXd codes = Eigen::MatrixXd::Zero(d, n);
  for (int it = 0; it < options.iterations; ++it) {
    LearnStep step;
    step.iteration = it;

    // (a) coding; samples are independent given the atoms.
    const Eigen::MatrixXd gram = atoms.transpose() * atoms;
    const Eigen::MatrixXd corr = atoms.transpose() * x;
    parallel_for(static_cast<std::size_t>(n), options.jobs, [&](std::size_t j) {
      const auto col = static_cast<Eigen::Index>(j);
      codes.col(col) = lasso_coordinate_descent(gram, corr.col(col), lambda, codes.col(col),
                                                options.lasso_tol, options.lasso_max_passes);
    });
    step.after_coding = objective(x, atoms, codes, lambda);

    // (b) least-squares update of the atoms that carry any code.
    std::vector<Eigen::Index> used;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (codes.row(i).cwiseAbs().maxCoeff() > 0.0) used.push_back(i);
    }
    if (!used.empty()) {
      const Eigen::Index u = static_cast<Eigen::Index>(used.size());
      Eigen::MatrixXd codes_used(u, n);
      for (Eigen::Index k = 0; k < u; ++k) codes_used.row(k) = codes.row(used[k]);
      const Eigen::MatrixXd solved =
          codes_used.transpose().completeOrthogonalDecomposition().solve(x.transpose());
      Eigen::MatrixXd candidate = atoms;
      for (Eigen::Index k = 0; k < u; ++k) candidate.col(used[k]) = solved.row(k).transpose();
      // Keep the update only if it does not lose accuracy to rounding.
      if (objective(x, candidate, codes, lambda) <= step.after_coding) atoms = candidate;
    }
    step.after_update = objective(x, atoms, codes, lambda);

    // (c) row normalization; codes are rescaled by the Frobenius ratio.
    for (Eigen::Index i = 0; i < d; ++i) {
      Eigen::VectorXd atom = atoms.col(i);
      const double before = atom.norm();
      if (!normalize_atom(atom, options.phi)) {
        // Collapsed atom: restart it from a random sample.
        const Eigen::Index src = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
        atom = x.col(src);
        for (Eigen::Index k = 0; k < atom.size(); ++k) {
          atom(k) += options.init_noise * normal(rng);
        }
        center_atom(atom);
        if (!normalize_atom(atom, options.phi)) continue;
        codes.row(i).setZero();
      } else if (atom.norm() > 0.0) {
        codes.row(i) *= before / atom.norm();
      }
      atoms.col(i) = atom;
    }
    step.after_normalization = objective(x, atoms, codes, lambda);
    result.trace.push_back(step);
  }

  result.dictionary.phi = options.phi;
  result.dictionary.bases.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) result.dictionary.bases.push_back(unflatten(atoms.col(i)));
  result.codes = std::move(codes);
  return result;
}

void save_dictionary(const PoseDictionary& dictionary, const std::filesystem::path& path) {
  dictionary.validate();
  nlohmann::json j;
  j["version"] = 1;
  j["landmark_count"] = dictionary.landmark_count();
  j["phi"] = dictionary.phi;
  nlohmann::json bases = nlohmann::json::array();
  for (const auto& b : dictionary.bases) {
    nlohmann::json flat = nlohmann::json::array();
    for (int r = 0; r < 3; ++r) {
      for (Eigen::Index k = 0; k < b.cols(); ++k) flat.push_back(b(r, k));
    }
    bases.push_back(std::move(flat));
  }
  j["bases"] = std::move(bases);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dictionary '" + path.string() + "'");
  out << j.dump() << '\n';
  if (!out) throw IoError("failed writing dictionary '" + path.string() + "'");
}

PoseDictionary load_dictionary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dictionary '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
    throw ParseError(path.string() + ":" + std::to_string(line) + ": malformed JSON (" +
                     e.what() + ")");
  }
  auto fail = [&path](const std::string& what) {
    throw ParseError(path.string() + ": " + what);
  };
  if (!j.is_object()) fail("top level must be an object");
  if (!j.contains("version") || !j["version"].is_number_integer() || j["version"] != 1) {
    fail("field 'version' must be 1");
  }
  if (!j.contains("landmark_count") || !j["landmark_count"].is_number_integer()) {
    fail("field 'landmark_count' must be an integer");
  }
  if (!j.contains("phi") || !j["phi"].is_number()) fail("field 'phi' must be a number");
  if (!j.contains("bases") || !j["bases"].is_array()) fail("field 'bases' must be an array");

  const auto p = j["landmark_count"].get<Eigen::Index>();
  if (p < 3) throw ValidationError(path.string() + ": landmark_count must be >= 3");
  PoseDictionary dict;
  dict.phi = j["phi"].get<double>();
  const auto& bases = j["bases"];
  for (std::size_t i = 0; i < bases.size(); ++i) {
    const auto& flat = bases[i];
    if (!flat.is_array() || static_cast<Eigen::Index>(flat.size()) != 3 * p) {
      fail("bases[" + std::to_string(i) + "] must hold " + std::to_string(3 * p) + " numbers");
    }
    Eigen::Matrix3Xd b(3, p);
    for (int r = 0; r < 3; ++r) {
      for (Eigen::Index k = 0; k < p; ++k) {
        const auto& v = flat[static_cast<std::size_t>(r * p + k)];
        if (!v.is_number()) {
          fail("bases[" + std::to_string(i) + "][" + std::to_string(r * p + k) +
               "] is not a number");
        }
        b(r, k) = v.get<double>();
      }
    }
    dict.bases.push_back(std::move(b));
  }
  try {
    dict.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return dict;
}

}  // namespace sparsepose::dictionary
