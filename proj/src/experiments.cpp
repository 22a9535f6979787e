// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsepose/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>

#include "sparsepose/dictionary.hpp"
#include "sparsepose/errors.hpp"
#include "sparsepose/geometry.hpp"
#include "sparsepose/parallel.hpp"
#include "sparsepose/pose_io.hpp"

namespace sparsepose::experiments {

using regularizers::Kind;
using regularizers::RegularizerSpec;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined state.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void ExperimentSpec::validate() const {
  if (trials < 1) throw InvalidParameterError("trials must be >= 1");
  if (regularizers.empty()) throw InvalidParameterError("at least one regularizer is required");
  std::set<std::string> seen;
  for (const auto& r : regularizers) {
    r.spec.validate();
    if (r.label.empty()) throw InvalidParameterError("regularizer labels must be non-empty");
    if (!seen.insert(r.label).second) {
      throw InvalidParameterError("duplicate regularizer label '" + r.label + "'");
    }
  }
  if (!dictionary_path) {
    if (generate.size < 1) throw InvalidParameterError("dictionary size must be >= 1");
    if (generate.landmarks < 3) throw InvalidParameterError("landmarks must be >= 3");
    if (!(generate.phi > 0.0)) throw InvalidParameterError("phi must be > 0");
  }
  if (truth_mode == TruthMode::kSparseSynthetic) {
    if (active < 1) throw InvalidParameterError("active basis count must be >= 1");
    if (!dictionary_path && active > generate.size) {
      throw InvalidParameterError("active basis count " + std::to_string(active) +
                                  " exceeds dictionary size " + std::to_string(generate.size));
    }
    if (!(coefficient_min > 0.0) || !(coefficient_max >= coefficient_min)) {
      throw InvalidParameterError("coefficient range must satisfy 0 < min <= max");
    }
  } else if (!corpus_path) {
    throw InvalidParameterError("corpus truth mode requires a corpus path");
  }
  for (double a : angles) {
    if (!std::isfinite(a)) throw InvalidParameterError("angles must be finite");
  }
  if (!(noise_sigma >= 0.0)) throw InvalidParameterError("noise_sigma must be >= 0");
  if (!(omega > 0.0)) throw InvalidParameterError("omega must be > 0");
  if (!(epsilon > 0.0)) throw InvalidParameterError("epsilon must be > 0");
  if (jobs < 0) throw InvalidParameterError("jobs must be >= 0");
  solver.validate();
}

void to_json(nlohmann::json& j, const ExperimentSpec& spec) {
  j = nlohmann::json::object();
  if (spec.dictionary_path) {
    j["dictionary"] = spec.dictionary_path->string();
  } else {
    j["dictionary"] = {{"generate",
                        {{"size", spec.generate.size},
                         {"landmarks", spec.generate.landmarks},
                         {"phi", spec.generate.phi}}}};
  }
  if (spec.truth_mode == TruthMode::kSparseSynthetic) {
    j["truth"] = {{"mode", "sparse-synthetic"},
                  {"active", spec.active},
                  {"coefficient_range", {spec.coefficient_min, spec.coefficient_max}},
                  {"shared_rotation", spec.shared_rotation}};
  } else {
    j["truth"] = {{"mode", "corpus"}, {"path", spec.corpus_path->string()}};
  }
  if (spec.angles.empty()) {
    j["angles"] = 36;
  } else {
    j["angles"] = spec.angles;
  }
  j["noise_sigma"] = spec.noise_sigma;
  j["omega"] = spec.omega;
  nlohmann::json regs = nlohmann::json::array();
  for (const auto& r : spec.regularizers) {
    nlohmann::json item = r.spec;
    item["label"] = r.label;
    regs.push_back(item);
  }
  j["regularizers"] = regs;
  j["solver"] = spec.solver;
  j["trials"] = spec.trials;
  j["seed"] = spec.seed;
  j["epsilon"] = spec.epsilon;
  j["align"] = spec.align;
  j["jobs"] = spec.jobs;
}

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw ParseError("experiment spec: field '" + field + "' " + what);
}

double get_number(const nlohmann::json& j, const std::string& field) {
  if (!j.is_number()) field_error(field, "must be a number");
  return j.get<double>();
}

long long get_integer(const nlohmann::json& j, const std::string& field) {
  if (!j.is_number_integer()) field_error(field, "must be an integer");
  return j.get<long long>();
}

bool get_bool(const nlohmann::json& j, const std::string& field) {
  if (!j.is_boolean()) field_error(field, "must be a boolean");
  return j.get<bool>();
}

}  // namespace

void from_json(const nlohmann::json& j, ExperimentSpec& spec) {
  if (!j.is_object()) throw ParseError("experiment spec must be a JSON object");
  static const std::set<std::string> known = {
      "dictionary", "truth",  "angles",  "noise_sigma", "omega", "regularizers",
      "solver",     "trials", "seed",    "epsilon",     "align", "jobs"};
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) field_error(item.key(), "is not recognized");
  }
  ExperimentSpec out;
  if (j.contains("dictionary")) {
    const auto& d = j["dictionary"];
    if (d.is_string()) {
      out.dictionary_path = d.get<std::string>();
    } else if (d.is_object() && d.contains("generate") && d["generate"].is_object()) {
      const auto& g = d["generate"];
      if (g.contains("size")) out.generate.size = get_integer(g["size"], "dictionary.generate.size");
      if (g.contains("landmarks")) {
        out.generate.landmarks = get_integer(g["landmarks"], "dictionary.generate.landmarks");
      }
      if (g.contains("phi")) out.generate.phi = get_number(g["phi"], "dictionary.generate.phi");
    } else {
      field_error("dictionary", "must be a path or {\"generate\": {...}}");
    }
  }
  if (j.contains("truth")) {
    const auto& t = j["truth"];
    if (!t.is_object()) field_error("truth", "must be an object");
    const std::string mode = t.value("mode", std::string("sparse-synthetic"));
    if (mode == "sparse-synthetic") {
      out.truth_mode = TruthMode::kSparseSynthetic;
      if (t.contains("active")) out.active = get_integer(t["active"], "truth.active");
      if (t.contains("coefficient_range")) {
        const auto& r = t["coefficient_range"];
        if (!r.is_array() || r.size() != 2) {
          field_error("truth.coefficient_range", "must be a [min, max] pair");
        }
        out.coefficient_min = get_number(r[0], "truth.coefficient_range");
        out.coefficient_max = get_number(r[1], "truth.coefficient_range");
      }
      if (t.contains("shared_rotation")) {
        out.shared_rotation = get_bool(t["shared_rotation"], "truth.shared_rotation");
      }
    } else if (mode == "corpus") {
      out.truth_mode = TruthMode::kCorpus;
      if (!t.contains("path") || !t["path"].is_string()) {
        field_error("truth.path", "must be a string for corpus mode");
      }
      out.corpus_path = t["path"].get<std::string>();
    } else {
      field_error("truth.mode", "must be 'sparse-synthetic' or 'corpus'");
    }
  }
  if (j.contains("angles")) {
    const auto& a = j["angles"];
    if (a.is_number_integer()) {
      const long long count = a.get<long long>();
      if (count < 1) throw InvalidParameterError("angle count must be >= 1");
      out.angles = geometry::uniform_angles(static_cast<int>(count));
    } else if (a.is_array()) {
      for (const auto& v : a) out.angles.push_back(get_number(v, "angles"));
      if (out.angles.empty()) throw InvalidParameterError("angle list must be non-empty");
    } else {
      field_error("angles", "must be a count or a list of radians");
    }
  }
  if (j.contains("noise_sigma")) out.noise_sigma = get_number(j["noise_sigma"], "noise_sigma");
  if (j.contains("omega")) out.omega = get_number(j["omega"], "omega");
  if (j.contains("regularizers")) {
    const auto& regs = j["regularizers"];
    if (!regs.is_array()) field_error("regularizers", "must be an array");
    for (const auto& r : regs) {
      LabeledRegularizer item;
      item.spec = r.get<RegularizerSpec>();
      if (r.contains("label")) {
        if (!r["label"].is_string()) field_error("regularizers.label", "must be a string");
        item.label = r["label"].get<std::string>();
      } else {
        item.label = std::string(regularizers::kind_name(item.spec.kind));
      }
      out.regularizers.push_back(std::move(item));
    }
  } else {
    out.regularizers.push_back({"lcnr", out.solver.regularizer});
  }
  if (j.contains("solver")) out.solver = j["solver"].get<solver::SolverConfig>();
  if (j.contains("trials")) out.trials = static_cast<int>(get_integer(j["trials"], "trials"));
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) field_error("seed", "must be a non-negative integer");
    out.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("epsilon")) out.epsilon = get_number(j["epsilon"], "epsilon");
  if (j.contains("align")) out.align = get_bool(j["align"], "align");
  if (j.contains("jobs")) out.jobs = static_cast<int>(get_integer(j["jobs"], "jobs"));
  out.validate();
  spec = std::move(out);
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open experiment spec '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": malformed JSON (" + e.what() + ")");
  }
  ExperimentSpec spec;
  try {
    spec = j.get<ExperimentSpec>();
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  const auto base = path.parent_path();
  if (spec.dictionary_path && spec.dictionary_path->is_relative()) {
    spec.dictionary_path = base / *spec.dictionary_path;
  }
  if (spec.corpus_path && spec.corpus_path->is_relative()) {
    spec.corpus_path = base / *spec.corpus_path;
  }
  return spec;
}

SparseTruth generate_sparse_truth(const PoseDictionary& dictionary, Eigen::Index active,
                                  double coefficient_min, double coefficient_max,
                                  std::uint64_t seed, bool shared_rotation, double omega) {
  const Eigen::Index d = dictionary.size();
  if (active < 1 || active > d) {
    throw InvalidParameterError("active basis count must be in [1, " + std::to_string(d) +
                                "], got " + std::to_string(active));
  }
  if (!(coefficient_min > 0.0) || !(coefficient_max >= coefficient_min)) {
    throw InvalidParameterError("coefficient range must satisfy 0 < min <= max");
  }
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) order[i] = i;
  // Partial Fisher-Yates; explicit so the draw does not depend on the
  // standard library's shuffle.
  for (Eigen::Index i = 0; i < active; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(d - i));
    std::swap(order[i], order[j]);
  }
  SparseTruth truth;
  truth.active.assign(order.begin(), order.begin() + active);
  std::sort(truth.active.begin(), truth.active.end());
  truth.coefficients = Eigen::VectorXd::Zero(d);
  truth.rotations.assign(static_cast<std::size_t>(d), Eigen::Matrix3d::Identity());
  truth.stack = AffineStack(d);
  std::uniform_real_distribution<double> coeff(coefficient_min, coefficient_max);
  const Eigen::Matrix3d shared = geometry::random_rotation(rng);
  const linalg::Mat23 pi = geometry::projection_matrix(omega);
  Eigen::Matrix3Xd shape = Eigen::Matrix3Xd::Zero(3, dictionary.landmark_count());
  for (Eigen::Index i : truth.active) {
    const double c = coeff(rng);
    const Eigen::Matrix3d r = shared_rotation ? shared : geometry::random_rotation(rng);
    truth.coefficients(i) = c;
    truth.rotations[static_cast<std::size_t>(i)] = r;
    truth.stack[i] = c * pi * r;
    shape.noalias() += c * r * dictionary.bases[static_cast<std::size_t>(i)];
  }
  truth.shape = Pose3D(std::move(shape));
  return truth;
}

AffineStack view_truth(const SparseTruth& truth, double angle, double omega) {
  const Eigen::Index d = truth.coefficients.size();
  AffineStack out(d);
  const linalg::Mat23 camera = geometry::projection_matrix(omega) * geometry::rotation_y(angle);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (truth.coefficients(i) == 0.0) continue;
    out[i] = truth.coefficients(i) * camera * truth.rotations[static_cast<std::size_t>(i)];
  }
  return out;
}

namespace {

// One trial's inputs, shared by all arms.
struct TrialInput {
  Pose3D shape;                      // clean truth, centered
  std::vector<Pose2D> views;         // from the (possibly noisy) shape
  std::vector<Pose3D> view_shapes;   // clean truth in each camera frame
  std::vector<AffineStack> view_stacks;  // empty in corpus mode
};

std::vector<double> padded_mean(const std::vector<std::vector<double>>& curves, bool take_max) {
  std::size_t len = 0;
  for (const auto& c : curves) len = std::max(len, c.size());
  std::vector<double> out(len, take_max ? -std::numeric_limits<double>::infinity() : 0.0);
  for (const auto& c : curves) {
    for (std::size_t s = 0; s < len; ++s) {
      const double v = s < c.size() ? c[s] : c.back();
      out[s] = take_max ? std::max(out[s], v) : out[s] + v;
    }
  }
  if (!take_max && !curves.empty()) {
    for (double& v : out) v /= static_cast<double>(curves.size());
  }
  return out;
}

TrialResult run_cell(const TrialInput& input, const PoseDictionary& dictionary,
                     const LabeledRegularizer& arm, const ExperimentSpec& spec, int trial) {
  const auto start = std::chrono::steady_clock::now();
  solver::SolverConfig config = spec.solver;
  config.regularizer = arm.spec;

  TrialResult out;
  out.label = arm.label;
  out.trial = trial;
  const bool has_truth = !input.view_stacks.empty();
  std::vector<std::vector<double>> recovery, estimation;
  double initial_recovery = 0.0;
  double shape_norm = 0.0;
  double initial_estimation = 0.0;
  for (std::size_t v = 0; v < input.views.size(); ++v) {
    const Pose3D& target = input.view_shapes[v];
    const auto result = solver::multistage_solve(input.views[v], dictionary, config);
    std::vector<double> rec, est;
    for (const auto& stage : result.trace.stages) {
      const Pose3D shape = geometry::reconstruct_shape(stage.solution, dictionary);
      rec.push_back(geometry::recovery_error(shape, target, spec.align));
      if (has_truth) est.push_back(solver::estimation_error(stage.solution, input.view_stacks[v]));
    }
    const double y_energy = 0.5 * input.views[v].points().squaredNorm();
    for (const auto& it : result.trace.iterations) {
      if (!std::isfinite(it.objective)) out.finite = false;
      if (y_energy > 0.0) {
        out.max_objective_ratio = std::max(out.max_objective_ratio, it.objective / y_energy);
      }
    }
    const Pose3D zero(Eigen::Matrix3Xd::Zero(3, target.landmark_count()));
    initial_recovery += geometry::recovery_error(zero, target, spec.align);
    shape_norm += geometry::centralize(target.points()).norm();
    if (has_truth) {
      initial_estimation +=
          solver::estimation_error(AffineStack(dictionary.size()), input.view_stacks[v]);
    }
    recovery.push_back(std::move(rec));
    if (has_truth) estimation.push_back(std::move(est));
  }
  const double views = static_cast<double>(input.views.size());
  out.recovery_curve = padded_mean(recovery, false);
  out.initial_recovery_error = initial_recovery / views;
  out.shape_norm = shape_norm / views;
  out.final_recovery_error = out.recovery_curve.back();
  out.final_relative_error =
      out.shape_norm > 0.0 ? out.final_recovery_error / out.shape_norm : out.final_recovery_error;
  if (has_truth) {
    out.initial_estimation_error = initial_estimation / views;
    out.estimation_curve = padded_mean(estimation, false);
    out.estimation_curve_max = padded_mean(estimation, true);
  }
  for (std::size_t s = 0; s < out.recovery_curve.size(); ++s) {
    if (out.recovery_curve[s] <= spec.epsilon * out.initial_recovery_error) {
      out.stages_to_epsilon = static_cast<int>(s) + 1;
      break;
    }
  }
  for (double v : out.recovery_curve) {
    if (!std::isfinite(v)) out.finite = false;
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// Linear-interpolated quantile of a sorted sample (q in [0, 1]).
double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return values[lo];
  if (std::isinf(values[hi])) return values[hi];
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  PoseDictionary dictionary;
  if (spec.dictionary_path) {
    dictionary = dictionary::load_dictionary(*spec.dictionary_path);
  } else {
    dictionary = dictionary::random_dictionary(spec.generate.size, spec.generate.landmarks,
                                               spec.generate.phi, derive_seed(spec.seed, 0));
  }
  return run_experiment(spec, dictionary);
}

ExperimentReport run_experiment(const ExperimentSpec& spec, const PoseDictionary& dictionary) {
  const auto start = std::chrono::steady_clock::now();
  spec.validate();
  dictionary.validate();
  if (spec.truth_mode == TruthMode::kSparseSynthetic && spec.active > dictionary.size()) {
    throw InvalidParameterError("active basis count " + std::to_string(spec.active) +
                                " exceeds dictionary size " + std::to_string(dictionary.size()));
  }
  const std::vector<double> angles =
      spec.angles.empty() ? geometry::uniform_angles(36) : spec.angles;

  std::vector<Pose3D> corpus;
  if (spec.truth_mode == TruthMode::kCorpus) {
    corpus = io::read_poses_3d(*spec.corpus_path).poses;
    if (corpus.empty()) throw InvalidInputError("corpus '" + spec.corpus_path->string() + "' is empty");
    for (const auto& pose : corpus) {
      if (pose.landmark_count() != dictionary.landmark_count()) {
        throw DimensionError("corpus pose has " + std::to_string(pose.landmark_count()) +
                             " landmarks but the dictionary has " +
                             std::to_string(dictionary.landmark_count()));
      }
    }
  }

  std::vector<TrialInput> inputs(static_cast<std::size_t>(spec.trials));
  for (int t = 0; t < spec.trials; ++t) {
    TrialInput& in = inputs[static_cast<std::size_t>(t)];
    const std::uint64_t truth_seed = derive_seed(spec.seed, 2 * static_cast<std::uint64_t>(t) + 1);
    const std::uint64_t noise_seed = derive_seed(spec.seed, 2 * static_cast<std::uint64_t>(t) + 2);
    std::optional<SparseTruth> truth;
    if (spec.truth_mode == TruthMode::kSparseSynthetic) {
      truth = generate_sparse_truth(dictionary, spec.active, spec.coefficient_min,
                                    spec.coefficient_max, truth_seed, spec.shared_rotation);
      in.shape = truth->shape;
    } else {
      const auto pick = truth_seed % corpus.size();
      in.shape = Pose3D(geometry::centralize(corpus[pick].points()));
    }
    const Pose3D observed = geometry::add_shape_noise(in.shape, spec.noise_sigma, noise_seed);
    in.views = geometry::synthesize_views(observed, angles, spec.omega);
    for (double angle : angles) {
      in.view_shapes.emplace_back(spec.omega * geometry::rotation_y(angle) * in.shape.points());
      if (truth) in.view_stacks.push_back(view_truth(*truth, angle, spec.omega));
    }
  }

  ExperimentReport report;
  report.epsilon = spec.epsilon;
  for (const auto& r : spec.regularizers) report.labels.push_back(r.label);
  const std::size_t arms = spec.regularizers.size();
  const auto trials = static_cast<std::size_t>(spec.trials);
  report.results.resize(arms * trials);
  parallel_for(arms * trials, spec.jobs, [&](std::size_t k) {
    const std::size_t arm = k / trials;
    const std::size_t trial = k % trials;
    report.results[k] = run_cell(inputs[trial], dictionary, spec.regularizers[arm], spec,
                                 static_cast<int>(trial));
  });

  for (std::size_t arm = 0; arm < arms; ++arm) {
    ArmSummary s;
    s.label = spec.regularizers[arm].label;
    s.trials = spec.trials;
    std::vector<double> rel, stages, secs;
    for (std::size_t t = 0; t < trials; ++t) {
      const TrialResult& r = report.results[arm * trials + t];
      rel.push_back(r.final_relative_error);
      secs.push_back(r.seconds);
      if (r.stages_to_epsilon) {
        stages.push_back(*r.stages_to_epsilon);
        ++s.reached;
      } else {
        stages.push_back(std::numeric_limits<double>::infinity());
      }
    }
    s.median_relative_error = quantile(rel, 0.5);
    s.q1_relative_error = quantile(rel, 0.25);
    s.q3_relative_error = quantile(rel, 0.75);
    s.median_stages_to_epsilon = quantile(stages, 0.5);
    s.median_seconds = quantile(secs, 0.5);
    report.summaries.push_back(s);
  }
  for (std::size_t a = 0; a < arms; ++a) {
    if (spec.regularizers[a].spec.kind != Kind::kLcnr) continue;
    for (std::size_t b = 0; b < arms; ++b) {
      if (spec.regularizers[b].spec.kind != Kind::kL1) continue;
      ComparisonRow row;
      row.lcnr_label = report.summaries[a].label;
      row.l1_label = report.summaries[b].label;
      row.lcnr_median_stages = report.summaries[a].median_stages_to_epsilon;
      row.l1_median_stages = report.summaries[b].median_stages_to_epsilon;
      row.lcnr_not_slower = row.lcnr_median_stages <= row.l1_median_stages;
      report.comparison.push_back(row);
    }
  }
  report.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::vector<double> median_curve(const ExperimentReport& report, const std::string& label,
                                 bool estimation) {
  std::vector<const std::vector<double>*> curves;
  std::size_t len = 0;
  for (const auto& r : report.results) {
    if (r.label != label) continue;
    const auto& c = estimation ? r.estimation_curve : r.recovery_curve;
    if (c.empty()) continue;
    curves.push_back(&c);
    len = std::max(len, c.size());
  }
  std::vector<double> out;
  for (std::size_t s = 0; s < len; ++s) {
    std::vector<double> column;
    for (const auto* c : curves) column.push_back(s < c->size() ? (*c)[s] : c->back());
    out.push_back(quantile(column, 0.5));
  }
  return out;
}

}  // namespace sparsepose::experiments
