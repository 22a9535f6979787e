// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sparsepose/dictionary.hpp"
#include "sparsepose/errors.hpp"
#include "sparsepose/experiments.hpp"
#include "sparsepose/geometry.hpp"
#include "sparsepose/parallel.hpp"
#include "sparsepose/pose_io.hpp"
#include "sparsepose/solver.hpp"
#include "sparsepose/theory.hpp"

namespace sparsepose::cli {
namespace {

namespace fs = std::filesystem;
using io::format_double;

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

class Logger {
 public:
  explicit Logger(std::ostream& err) : err_(err) {
    const char* env = std::getenv("SPARSEPOSE_LOG");
    const std::string value = env ? env : "";
    if (value == "error") level_ = Level::kError;
    if (value == "info") level_ = Level::kInfo;
    if (value == "debug") level_ = Level::kDebug;
  }
  void warn(const std::string& msg) const { log(Level::kWarn, "warning: ", msg); }
  void info(const std::string& msg) const { log(Level::kInfo, "", msg); }
  void debug(const std::string& msg) const { log(Level::kDebug, "debug: ", msg); }
  void error(const std::string& msg) const { log(Level::kError, "error: ", msg); }

 private:
  void log(Level level, const char* prefix, const std::string& msg) const {
    if (level <= level_) err_ << prefix << msg << '\n';
  }
  std::ostream& err_;
  Level level_ = Level::kWarn;
};

// Flags shared by subcommands that build a solver configuration.
struct SolverFlags {
  std::string config;
  std::string regularizer;
  std::optional<double> alpha, beta, tau, lambda, gamma, mu;
  std::optional<int> tau_top_k, stages, inner_iters;

  void add_to(CLI::App* app, bool with_config = true) {
    if (with_config) {
      app->add_option("--config", config, "Solver configuration JSON")->check(CLI::ExistingFile);
    }
    app->add_option("--regularizer", regularizer,
                    "Penalty kind: l1, capped-l1, lcnr, logarithm, laplace");
    app->add_option("--alpha", alpha, "Light/heavy weight alpha (lcnr, capped-l1)");
    app->add_option("--beta", beta, "Leak weight beta (lcnr)");
    app->add_option("--tau", tau, "Threshold tau (lcnr, capped-l1)");
    app->add_option("--tau-top-k", tau_top_k, "Reset tau to the k-th largest norm (0 = fixed)");
    app->add_option("--lambda", lambda, "Weight lambda (l1, logarithm, laplace)");
    app->add_option("--gamma", gamma, "Shape gamma (logarithm, laplace)");
    app->add_option("--stages", stages, "Maximum number of stages");
    app->add_option("--inner-iters", inner_iters, "ADMM sweeps per stage");
    app->add_option("--mu", mu, "Initial ADMM penalty mu");
  }

  // Defaults < config file < flags.
  solver::SolverConfig resolve() const {
    solver::SolverConfig cfg;
    if (!config.empty()) cfg = solver::load_config(config);
    apply(cfg);
    return cfg;
  }

  void apply(solver::SolverConfig& cfg) const {
    regularizers::RegularizerSpec& r = cfg.regularizer;
    if (!regularizer.empty()) {
      const auto kind = regularizers::parse_kind(regularizer);
      if (kind != r.kind) {
        r = regularizers::RegularizerSpec{};
        r.kind = kind;
        if (kind == regularizers::Kind::kCappedL1) r.beta = 0.0;
      }
    }
    if (alpha) r.alpha = *alpha;
    if (beta) r.beta = *beta;
    if (tau) r.tau = *tau;
    if (lambda) r.lambda = *lambda;
    if (gamma) r.gamma = *gamma;
    if (tau_top_k) cfg.tau_top_k = *tau_top_k;
    if (stages) cfg.max_stages = *stages;
    if (inner_iters) cfg.inner_iterations = *inner_iters;
    if (mu) cfg.mu_init = *mu;
    r.validate();
    cfg.validate();
  }
};

// "36" is a count of uniform angles; "0,1.57" (or any value with a comma or
// decimal point) is an explicit list of radians.
std::vector<double> parse_angles(const std::string& text) {
  if (text.find_first_of(",.eE") == std::string::npos) {
    int count = 0;
    try {
      std::size_t used = 0;
      count = std::stoi(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
    } catch (const std::exception&) {
      throw ParseError("--angles: '" + text + "' is neither a count nor a list of radians");
    }
    if (count < 1) throw InvalidParameterError("--angles: count must be >= 1");
    return geometry::uniform_angles(count);
  }
  std::vector<double> angles;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    const std::string token = text.substr(start, end - start);
    try {
      std::size_t used = 0;
      angles.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw ParseError("--angles: '" + token + "' is not a number");
    }
    start = end + 1;
  }
  return angles;
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

// ---------------------------------------------------------------- learn-dict

struct LearnArgs {
  std::string corpus;
  std::string out;
  Eigen::Index size = 128;
  std::optional<double> lambda;
  int iterations = 50;
  double phi = 1.0;
  bool no_prepare = false;
};

int cmd_learn_dict(const LearnArgs& args, std::uint64_t seed, int jobs, std::ostream& out,
                   const Logger& log) {
  const auto sequence = io::read_poses_3d(args.corpus);
  log.info("read " + std::to_string(sequence.poses.size()) + " poses from " + args.corpus);
  dictionary::LearnOptions options;
  options.size = args.size;
  options.sparsity_lambda = args.lambda;
  options.iterations = args.iterations;
  options.phi = args.phi;
  options.seed = seed;
  options.jobs = jobs;
  const std::vector<Pose3D> corpus =
      args.no_prepare ? sequence.poses : dictionary::prepare_corpus(sequence.poses);
  const auto result = dictionary::learn_dictionary(corpus, options);
  for (const auto& w : result.warnings) log.warn(w);
  out << "iteration,after_coding,after_update,after_normalization\n";
  for (const auto& step : result.trace) {
    out << step.iteration << ',' << format_double(step.after_coding) << ','
        << format_double(step.after_update) << ',' << format_double(step.after_normalization)
        << '\n';
  }
  const fs::path target(args.out);
  if (target.has_parent_path()) ensure_directory(target.parent_path());
  dictionary::save_dictionary(result.dictionary, target);
  log.info("wrote " + args.out + " (D = " + std::to_string(result.dictionary.size()) +
           ", lambda = " + format_double(result.sparsity_lambda) + ")");
  return kExitOk;
}

// ------------------------------------------------------------------- recover

struct RecoverArgs {
  std::string poses;
  std::string dict;
  std::string out;
  std::string truth;
  bool align = true;
};

int cmd_recover(const RecoverArgs& args, const SolverFlags& flags, std::uint64_t seed, int jobs,
                std::ostream& out, const Logger& log) {
  solver::SolverConfig config = flags.resolve();
  config.seed = seed;
  const PoseDictionary dict = dictionary::load_dictionary(args.dict);
  const auto input = io::read_poses_2d(args.poses);
  for (const auto& pose : input.poses) {
    if (pose.landmark_count() != dict.landmark_count()) {
      throw DimensionError("2D pose has " + std::to_string(pose.landmark_count()) +
                           " landmarks but the dictionary has " +
                           std::to_string(dict.landmark_count()));
    }
  }
  std::optional<io::PoseSequence3D> truth;
  if (!args.truth.empty()) {
    truth = io::read_poses_3d(args.truth);
    if (truth->poses.size() != input.poses.size()) {
      throw DimensionError("truth has " + std::to_string(truth->poses.size()) +
                           " frames but the input has " + std::to_string(input.poses.size()));
    }
    for (const auto& pose : truth->poses) {
      if (pose.landmark_count() != dict.landmark_count()) {
        throw DimensionError("truth pose has " + std::to_string(pose.landmark_count()) +
                             " landmarks but the dictionary has " +
                             std::to_string(dict.landmark_count()));
      }
    }
  }

  const std::size_t frames = input.poses.size();
  std::vector<solver::RecoveryResult> results(frames);
  parallel_for(frames, jobs, [&](std::size_t f) {
    const Pose2D centered = geometry::centralize(input.poses[f]).pose;
    results[f] = solver::multistage_solve(centered, dict, config);
  });

  const fs::path dir(args.out);
  ensure_directory(dir);
  io::PoseSequence3D shapes;
  shapes.frame_ids = input.frame_ids;
  shapes.landmark_names = input.landmark_names;
  shapes.has_frame_column = true;
  std::vector<solver::SolveTrace> traces;
  for (const auto& r : results) {
    shapes.poses.push_back(r.shape);
    traces.push_back(r.trace);
  }
  io::write_poses_3d(dir / "shape.csv", shapes);

  {
    const fs::path path = dir / "coefficients.csv";
    auto csv = open_output(path);
    csv << "frame,basis,coefficient\n";
    for (std::size_t f = 0; f < frames; ++f) {
      for (Eigen::Index i = 0; i < results[f].coefficients.size(); ++i) {
        csv << input.frame_ids[f] << ',' << i << ','
            << format_double(results[f].coefficients(i)) << '\n';
      }
    }
    if (!csv) throw IoError("failed writing '" + path.string() + "'");
  }
  {
    const fs::path path = dir / "rotations.csv";
    auto csv = open_output(path);
    csv << "frame,basis,r00,r01,r02,r10,r11,r12,r20,r21,r22\n";
    for (std::size_t f = 0; f < frames; ++f) {
      for (std::size_t i = 0; i < results[f].rotations.size(); ++i) {
        csv << input.frame_ids[f] << ',' << i;
        const Eigen::Matrix3d& r = results[f].rotations[i];
        for (int a = 0; a < 3; ++a) {
          for (int b = 0; b < 3; ++b) csv << ',' << format_double(r(a, b));
        }
        csv << '\n';
      }
    }
    if (!csv) throw IoError("failed writing '" + path.string() + "'");
  }
  solver::write_trace_csv(dir / "trace.csv", traces, input.frame_ids);

  for (std::size_t f = 0; f < frames; ++f) {
    const auto& r = results[f];
    const Eigen::Index active = (r.coefficients.array() > 0.0).count();
    out << "frame " << input.frame_ids[f] << ": stages " << r.trace.stages.size()
        << ", final objective " << format_double(r.final_objective) << ", nonzero bases "
        << active << '/' << r.coefficients.size();
    if (truth) {
      const Pose3D reference(geometry::centralize(truth->poses[f].points()));
      const double norm = reference.points().norm();
      const double aligned = args.align ? geometry::recovery_error(r.shape, reference, true) : 0.0;
      const double raw = geometry::recovery_error(r.shape, reference, false);
      if (args.align) {
        out << ", error aligned " << format_double(aligned) << " (relative "
            << format_double(norm > 0 ? aligned / norm : aligned) << ")";
      }
      out << ", error unaligned " << format_double(raw) << " (relative "
          << format_double(norm > 0 ? raw / norm : raw) << ")";
    }
    out << '\n';
  }
  log.info("wrote results for " + std::to_string(frames) + " frame(s) to " + dir.string());
  return kExitOk;
}

// --------------------------------------------------------------------- synth

struct SynthArgs {
  std::string out;
  std::string dict;
  Eigen::Index size = 32;
  Eigen::Index landmarks = 30;
  double phi = 1.0;
  Eigen::Index active = 3;
  double coefficient_min = 10.0;
  double coefficient_max = 20.0;
  bool per_basis_rotation = false;
  std::string angles = "36";
  double noise_sigma = 0.0;
  double omega = 1.0;
};

int cmd_synth(const SynthArgs& args, std::uint64_t seed, std::ostream& out, const Logger& log) {
  const fs::path dir(args.out);
  const std::vector<double> angles = parse_angles(args.angles);
  if (!(args.omega > 0.0)) throw InvalidParameterError("--omega must be > 0");
  PoseDictionary dict;
  if (!args.dict.empty()) {
    dict = dictionary::load_dictionary(args.dict);
  } else {
    dict = dictionary::random_dictionary(args.size, args.landmarks, args.phi,
                                         experiments::derive_seed(seed, 0));
  }
  const auto truth = experiments::generate_sparse_truth(
      dict, args.active, args.coefficient_min, args.coefficient_max,
      experiments::derive_seed(seed, 1), !args.per_basis_rotation);
  const Pose3D observed =
      geometry::add_shape_noise(truth.shape, args.noise_sigma, experiments::derive_seed(seed, 2));
  const auto views = geometry::synthesize_views(observed, angles, args.omega);

  ensure_directory(dir);
  if (args.dict.empty()) dictionary::save_dictionary(dict, dir / "dictionary.json");
  const auto names = io::default_landmark_names(dict.landmark_count());

  io::PoseSequence3D shape;
  shape.frame_ids = {0};
  shape.poses = {truth.shape};
  shape.landmark_names = names;
  io::write_poses_3d(dir / "shape.csv", shape);

  io::PoseSequence2D observations;
  io::PoseSequence3D view_shapes;
  observations.landmark_names = view_shapes.landmark_names = names;
  observations.has_frame_column = view_shapes.has_frame_column = true;
  for (std::size_t v = 0; v < views.size(); ++v) {
    observations.frame_ids.push_back(static_cast<long>(v));
    observations.poses.push_back(views[v]);
    view_shapes.frame_ids.push_back(static_cast<long>(v));
    view_shapes.poses.emplace_back(args.omega * geometry::rotation_y(angles[v]) *
                                   truth.shape.points());
  }
  io::write_poses_2d(dir / "observations.csv", observations);
  io::write_poses_3d(dir / "views_3d.csv", view_shapes);

  {
    const fs::path path = dir / "truth_coefficients.csv";
    auto csv = open_output(path);
    csv << "basis,coefficient\n";
    for (Eigen::Index i = 0; i < truth.coefficients.size(); ++i) {
      csv << i << ',' << format_double(truth.coefficients(i)) << '\n';
    }
    if (!csv) throw IoError("failed writing '" + path.string() + "'");
  }
  out << "wrote " << views.size() << " view(s), " << truth.active.size()
      << " active bases, to " << dir.string() << '\n';
  log.info("active bases:" + [&] {
    std::string s;
    for (auto i : truth.active) s += " " + std::to_string(i);
    return s;
  }());
  return kExitOk;
}

// ------------------------------------------------------------------- compare

struct CompareArgs {
  std::string spec;
  std::string out;
  std::optional<int> trials;
  std::optional<double> noise_sigma;
  std::string angles;
};

int cmd_compare(const CompareArgs& args, const SolverFlags& flags, std::optional<std::uint64_t> seed,
                std::optional<int> jobs, std::optional<bool> align, std::ostream& out,
                const Logger& log) {
  experiments::ExperimentSpec spec = experiments::load_experiment_spec(args.spec);
  flags.apply(spec.solver);
  if (args.trials) spec.trials = *args.trials;
  if (args.noise_sigma) spec.noise_sigma = *args.noise_sigma;
  if (!args.angles.empty()) spec.angles = parse_angles(args.angles);
  if (seed) spec.seed = *seed;
  if (jobs) spec.jobs = *jobs;
  if (align) spec.align = *align;
  spec.validate();
  log.info("running " + std::to_string(spec.trials) + " trial(s) x " +
           std::to_string(spec.regularizers.size()) + " regularizer(s)");
  const auto report = experiments::run_experiment(spec);
  experiments::export_report(report, args.out);
  out << "regularizer,median_relative_error,q1,q3,median_stages_to_epsilon,reached\n";
  for (const auto& s : report.summaries) {
    out << s.label << ',' << format_double(s.median_relative_error) << ','
        << format_double(s.q1_relative_error) << ',' << format_double(s.q3_relative_error) << ','
        << format_double(s.median_stages_to_epsilon) << ',' << s.reached << '/' << s.trials
        << '\n';
  }
  for (const auto& c : report.comparison) {
    out << "stages-to-epsilon " << c.lcnr_label << " vs " << c.l1_label << ": "
        << format_double(c.lcnr_median_stages) << " vs " << format_double(c.l1_median_stages)
        << (c.lcnr_not_slower ? "" : " (lcnr slower)") << '\n';
  }
  return kExitOk;
}

// -------------------------------------------------------------------- theory

struct TheoryArgs {
  std::string dict;
  double e = 1.0;
  int kappa_samples = 10000;
};

int cmd_theory(const TheoryArgs& args, const SolverFlags& flags, std::uint64_t seed,
               std::ostream& out) {
  const solver::SolverConfig config = flags.resolve();
  const PoseDictionary dict = dictionary::load_dictionary(args.dict);
  theory::TheoryOptions options;
  options.e = args.e;
  options.kappa_samples = args.kappa_samples;
  options.seed = seed;
  options.curve_stages = config.max_stages;
  const auto report = theory::theory_report(dict, config.regularizer, std::nullopt, options);
  out << theory::format_report(report);
  if (config.tau_top_k > 0 && config.regularizer.uses_tau()) {
    out << "note: tau is reset by the top-" << config.tau_top_k
        << " rule during solves; values above use the configured tau\n";
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const Logger log(err);
  CLI::App app{"Sparse 3D pose recovery from 2D landmarks"};
  app.name("sparsepose");
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int jobs = 1;

  LearnArgs learn;
  auto* learn_cmd = app.add_subcommand("learn-dict", "Learn a pose dictionary from a 3D corpus");
  learn_cmd->add_option("corpus", learn.corpus, "3D pose CSV")->required();
  learn_cmd->add_option("--size,-D", learn.size, "Number of bases")->capture_default_str();
  learn_cmd->add_option("--out", learn.out, "Output dictionary JSON")->required();
  learn_cmd->add_option("--lambda", learn.lambda, "Sparsity weight (default: data driven)");
  learn_cmd->add_option("--iterations", learn.iterations, "Alternations")->capture_default_str();
  learn_cmd->add_option("--phi", learn.phi, "Squared row norm of every basis")
      ->capture_default_str();
  learn_cmd->add_flag("--no-prepare", learn.no_prepare,
                      "Skip centering and rigid pre-alignment of the corpus");

  RecoverArgs recover;
  SolverFlags recover_flags;
  auto* recover_cmd = app.add_subcommand("recover", "Recover 3D poses from 2D landmarks");
  recover_cmd->add_option("poses", recover.poses, "2D pose CSV (one or more frames)")->required();
  recover_cmd->add_option("--dict", recover.dict, "Dictionary JSON")->required();
  recover_cmd->add_option("--out", recover.out, "Output directory")->required();
  recover_cmd->add_option("--truth", recover.truth, "Ground-truth 3D CSV for error reporting");
  recover_cmd->add_flag("--align,!--no-align", recover.align,
                        "Report the error after similarity alignment");
  recover_flags.add_to(recover_cmd);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Synthesize sparse ground truth and 2D views");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--dict", synth.dict, "Dictionary JSON (default: random)");
  synth_cmd->add_option("--size", synth.size, "Random dictionary size")->capture_default_str();
  synth_cmd->add_option("--landmarks", synth.landmarks, "Random dictionary landmarks")
      ->capture_default_str();
  synth_cmd->add_option("--phi", synth.phi, "Random dictionary row norm")->capture_default_str();
  synth_cmd->add_option("--active", synth.active, "Active bases")->capture_default_str();
  synth_cmd->add_option("--coefficient-min", synth.coefficient_min)->capture_default_str();
  synth_cmd->add_option("--coefficient-max", synth.coefficient_max)->capture_default_str();
  synth_cmd->add_flag("--per-basis-rotation", synth.per_basis_rotation,
                      "Draw one rotation per active basis");
  synth_cmd->add_option("--angles", synth.angles, "View count or comma-separated radians")
      ->capture_default_str();
  synth_cmd->add_option("--noise-sigma", synth.noise_sigma, "Relative shape noise")
      ->capture_default_str();
  synth_cmd->add_option("--omega", synth.omega, "Projection scale")->capture_default_str();

  CompareArgs compare;
  SolverFlags compare_flags;
  std::optional<std::uint64_t> compare_seed;
  std::optional<int> compare_jobs;
  bool compare_align = true;
  auto* compare_cmd = app.add_subcommand("compare", "Run a regularizer comparison experiment");
  compare_cmd->add_option("spec", compare.spec, "Experiment spec JSON")->required();
  compare_cmd->add_option("--out", compare.out, "Output directory")->required();
  compare_cmd->add_option("--trials", compare.trials, "Override the trial count");
  compare_cmd->add_option("--noise-sigma", compare.noise_sigma, "Override the shape noise");
  compare_cmd->add_option("--angles", compare.angles, "View count or comma-separated radians");
  auto* compare_align_opt = compare_cmd->add_flag(
      "--align,!--no-align", compare_align, "Measure recovery error after alignment");
  compare_flags.add_to(compare_cmd, false);

  TheoryArgs theory_args;
  SolverFlags theory_flags;
  auto* theory_cmd = app.add_subcommand("theory", "Print convergence-theory diagnostics");
  theory_cmd->add_option("--dict", theory_args.dict, "Dictionary JSON")->required();
  theory_cmd->add_option("--e", theory_args.e, "Slack e of the probability bound")
      ->capture_default_str();
  theory_cmd->add_option("--kappa-samples", theory_args.kappa_samples,
                         "Random directions per basis for kappa")
      ->capture_default_str();
  theory_flags.add_to(theory_cmd);

  for (auto* sub : {learn_cmd, recover_cmd, synth_cmd, compare_cmd, theory_cmd}) {
    sub->add_option("--seed", seed, "Seed for all randomness")->capture_default_str();
    sub->add_option("--jobs", jobs, "Worker threads (0 = all cores)")->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitInput;
  }

  try {
    if (jobs < 0) throw InvalidParameterError("--jobs must be >= 0");
    if (*learn_cmd) return cmd_learn_dict(learn, seed, jobs, out, log);
    if (*recover_cmd) return cmd_recover(recover, recover_flags, seed, jobs, out, log);
    if (*synth_cmd) return cmd_synth(synth, seed, out, log);
    if (*compare_cmd) {
      const auto* seed_opt = compare_cmd->get_option("--seed");
      const auto* jobs_opt = compare_cmd->get_option("--jobs");
      if (seed_opt->count()) compare_seed = seed;
      if (jobs_opt->count()) compare_jobs = jobs;
      std::optional<bool> align;
      if (compare_align_opt->count()) align = compare_align;
      return cmd_compare(compare, compare_flags, compare_seed, compare_jobs, align, out, log);
    }
    if (*theory_cmd) return cmd_theory(theory_args, theory_flags, seed, out);
  } catch (const ParseError& e) {
    log.error(e.what());
    return kExitInput;
  } catch (const IoError& e) {
    log.error(e.what());
    return kExitInput;
  } catch (const ValidationError& e) {
    log.error(e.what());
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    log.error(std::string("malformed JSON content: ") + e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    log.error(std::string("internal error: ") + e.what());
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace sparsepose::cli
