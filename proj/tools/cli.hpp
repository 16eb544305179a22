#pragma once

// The `sdr` command line: train / eval / density / joint / residual /
// sample / gradcheck.
//
// Exit codes: 0 success, 1 numerical check failure or numerical abort,
// 2 usage error (bad flags, malformed points), 3 IO error (missing or
// unwritable files), 4 invalid file content (bad config or checkpoint).

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sdr/sdr.hpp"
#include "sdr/gradcheck.hpp"

namespace sdr::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kNumerical = 1, kUsage = 2, kIo = 3, kFormat = 4 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Eigen::VectorXd parse_point(const std::string& text, int d) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("malformed point '" + text + "'");
    }
  }
  if (static_cast<int>(values.size()) != d)
    throw UsageError("point '" + text + "' has " + std::to_string(values.size()) + " coordinates, problem needs " +
                     std::to_string(d));
  return Eigen::Map<Eigen::VectorXd>(values.data(), d);
}

inline std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

/// A loaded checkpoint with its problem, exposing the surrogate as a field.
struct Surrogate {
  Checkpoint checkpoint;
  ProblemSpec problem;

  explicit Surrogate(const std::filesystem::path& path) : checkpoint(load_checkpoint(path)) {
    try {
      problem = make_problem(checkpoint.problem_id, checkpoint.problem_dim);
    } catch (const InvalidArgument& e) {
      throw FormatError(std::string("checkpoint names an invalid problem: ") + e.what());
    }
    if (checkpoint.surrogate == "network" && checkpoint.params.input_dim() != problem.input_dim())
      throw FormatError("checkpoint network input size does not match its problem");
  }

  template <class Fn>
  decltype(auto) visit(Fn&& fn) const {
    if (checkpoint.surrogate == "exact") return fn(ExactField(problem));
    return fn(NetworkField(checkpoint.params));
  }
};

inline void write_or_print(const std::string& out, const std::string& text, std::ostream& os) {
  if (out.empty()) {
    os << text;
    return;
  }
  const std::filesystem::path p(out);
  if (p.has_parent_path()) ensure_directory(p.parent_path());
  write_text_atomic(p, text);
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string out = "run";
  std::optional<std::uint64_t> seed;
};

inline int cmd_train(const TrainArgs& a, std::ostream& os) {
  TrainConfig cfg = load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  const std::filesystem::path dir(a.out);
  ensure_directory(dir);
  const std::string started = timestamp();

  const auto finish = [&](const Checkpoint& ckpt, const LossHistory& history, const std::string& status) {
    save_checkpoint(dir / "checkpoint.json", ckpt);
    write_text_atomic(dir / "loss_history.csv", history_to_csv(history));
    nlohmann::json manifest = {{"format_version", kFormatVersion},
                               {"code_version", kVersion},
                               {"command", "train"},
                               {"status", status},
                               {"seed", cfg.seed},
                               {"config", config_to_json(cfg)},
                               {"started", started},
                               {"finished", timestamp()},
                               {"files", {"checkpoint.json", "loss_history.csv", "manifest.json"}}};
    write_text_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  };

  TrainHooks hooks;
  hooks.on_checkpoint = [&](const Checkpoint& c) { save_checkpoint(dir / "checkpoint.json", c); };
  hooks.on_record = [&](const LossRecord& r) {
    os << "iter " << r.iteration << " loss " << format_double(r.loss) << " lr " << r.lr;
    if (r.rel_l2_error) os << " rel_l2_error " << *r.rel_l2_error;
    os << std::endl;
  };
  try {
    const TrainResult result = train(cfg, hooks);
    finish(result.checkpoint, result.history, "completed");
  } catch (const TrainingAborted& e) {
    finish(e.last_good(), e.history(), "aborted");
    std::cerr << "training aborted: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}

struct EvalArgs {
  std::string checkpoint;
  long samples = 100000;
  std::string out;
  std::uint64_t seed = 0;
};

inline int cmd_eval(const EvalArgs& a, std::ostream& os) {
  const Surrogate s(a.checkpoint);
  const EvalReport report = s.visit([&](const auto& field) {
    return relative_l2_error(s.problem, field, a.samples, RngStream(a.seed, StreamId::eval));
  });
  nlohmann::json j = report_to_json(report);
  j["checkpoint"] = a.checkpoint;
  write_or_print(a.out, j.dump(2) + "\n", os);
  return kOk;
}

struct DensityArgs {
  std::string checkpoint;
  std::string point;
  long samples = 100000;
  int grid = 256;
  std::string out;
  std::uint64_t seed = 0;
};

/// CSV columns: u,density,exact_density. The exact column is a KDE of the
/// exact solution on the same Z draws and grid.
inline int cmd_density(const DensityArgs& a, std::ostream& os) {
  const Surrogate s(a.checkpoint);
  const Eigen::VectorXd x = parse_point(a.point, s.problem.d);
  RngStream rng(a.seed, StreamId::cli);
  const Eigen::VectorXd approx =
      s.visit([&](const auto& field) { return marginal_samples(s.problem, field, x, a.samples, rng); });
  RngStream same(a.seed, StreamId::cli);
  const Eigen::VectorXd exact = marginal_samples(s.problem, ExactField(s.problem), x, a.samples, same);
  const std::span<const double> av(approx.data(), approx.size()), ev(exact.data(), exact.size());
  const Eigen::VectorXd grid = kde_grid(av, a.grid);
  const DensityExport learned = kde_pdf(av, grid);
  const DensityExport reference = kde_pdf(ev, grid);
  std::string csv = "u,density,exact_density\n";
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    csv += format_double(grid(i)) + ',' + format_double(learned.density(i)) + ',' +
           format_double(reference.density(i)) + '\n';
  write_or_print(a.out, csv, os);
  return kOk;
}

struct JointArgs {
  std::string checkpoint;
  std::string p1, p2;
  int bins = 64;
  long samples = 100000;
  std::string out;
  std::uint64_t seed = 0;
};

/// CSV columns: u1,u2,mass,density with one row per bin (bin centres).
inline int cmd_joint(const JointArgs& a, std::ostream& os) {
  const Surrogate s(a.checkpoint);
  const Eigen::VectorXd x1 = parse_point(a.p1, s.problem.d);
  const Eigen::VectorXd x2 = parse_point(a.p2, s.problem.d);
  RngStream rng(a.seed, StreamId::cli);
  const JointHistogram h = s.visit(
      [&](const auto& field) { return joint_histogram(s.problem, field, x1, x2, a.samples, a.bins, rng); });
  std::string csv = "u1,u2,mass,density\n";
  for (int i = 0; i < h.bins; ++i)
    for (int j = 0; j < h.bins; ++j)
      csv += format_double(h.center1(i)) + ',' + format_double(h.center2(j)) + ',' + format_double(h.mass(i, j)) +
             ',' + format_double(h.density(i, j)) + '\n';
  write_or_print(a.out, csv, os);
  return kOk;
}

struct ResidualArgs {
  std::string checkpoint;
  int directions = 10;
  long samples = 100000;
  std::string out;
  std::uint64_t seed = 0;
};

inline int cmd_residual(const ResidualArgs& a, std::ostream& os) {
  const Surrogate s(a.checkpoint);
  std::vector<DirectionField> dirs;
  for (int k = 0; k < a.directions; ++k) dirs.push_back(make_test_direction(s.problem, a.seed, k));
  RngStream rng(a.seed, StreamId::cli);
  const auto estimates =
      s.visit([&](const auto& field) { return gateaux_residuals(s.problem, field, dirs, a.samples, rng); });
  nlohmann::json j = {{"format_version", kFormatVersion}, {"problem_id", s.problem.id}, {"n_samples", a.samples}};
  j["directions"] = nlohmann::json::array();
  os << "direction,estimate,std_error,z_score\n";
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    const auto& e = estimates[k];
    const double z = e.std_error > 0 ? e.estimate / e.std_error : 0.0;
    os << k << ',' << format_double(e.estimate) << ',' << format_double(e.std_error) << ',' << z << '\n';
    j["directions"].push_back({{"index", k}, {"estimate", e.estimate}, {"std_error", e.std_error}, {"z_score", z}});
  }
  if (!a.out.empty()) write_or_print(a.out, j.dump(2) + "\n", os);
  return kOk;
}

struct SampleArgs {
  std::string sampler;
  int dim = 1;
  long n = 1;
  std::uint64_t seed = 0;
  std::string out;
};

/// One point per CSV row, no header.
inline int cmd_sample(const SampleArgs& a, std::ostream& os) {
  RngStream rng(a.seed, StreamId::cli);
  Eigen::MatrixXd pts;
  if (a.sampler == "box") pts = uniform_box(rng, 0.0, 1.0, a.dim, a.n);
  else if (a.sampler == "boundary") pts = box_boundary(rng, 0.0, 1.0, a.dim, a.n);
  else if (a.sampler == "ball") pts = uniform_ball(rng, a.dim, a.n);
  else if (a.sampler == "sphere") pts = uniform_sphere(rng, a.dim, a.n);
  else if (a.sampler == "normal") pts = standard_normal_vec(rng, a.dim, a.n);
  else throw UsageError("unknown sampler '" + a.sampler + "'");
  std::string csv;
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    for (Eigen::Index i = 0; i < pts.rows(); ++i) csv += (i ? "," : "") + format_double(pts(i, j));
    csv += '\n';
  }
  write_or_print(a.out, csv, os);
  return kOk;
}

struct GradcheckArgs {
  std::string config;
  bool corrupt = false;
};

inline constexpr double kParamGradTolerance = 1e-5;
inline constexpr double kSpatialGradTolerance = 1e-6;

/// Checks the reverse-mode gradient of the configured problem on a seeded
/// [d+K, 8, 8, 1] network and a batch of 4.
inline int cmd_gradcheck(const GradcheckArgs& a, std::ostream& os) {
  const TrainConfig cfg = load_config(a.config);
  const ProblemSpec problem = make_problem(cfg.problem_id, cfg.d, ProblemOptions{cfg.quadrature_nodes});
  const MlpParams params = init_params({problem.input_dim(), 8, 8, 1}, cfg.seed);
  BatchStreams streams(cfg.seed);
  const Batch batch = sample_batch(problem, 4, streams);
  FlatGradient g = grad_params(problem, params, batch);
  if (a.corrupt) g(0) += 1e-2 * std::max(1.0, std::abs(g(0)));
  const GradcheckReport r = check_gradients(problem, params, batch, g);
  os << "problem " << problem.id << " parameters " << r.parameters << '\n'
     << "max_param_rel_error " << r.max_param_rel_error << '\n'
     << "max_spatial_rel_error " << r.max_spatial_rel_error << '\n';
  const bool ok = r.max_param_rel_error <= kParamGradTolerance && r.max_spatial_rel_error <= kSpatialGradTolerance;
  os << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kOk : kNumerical;
}

// ---------------------------------------------------------------------------

/// Parses argv and runs one subcommand. Output goes to `os`, diagnostics to
/// std::cerr.
inline int run(int argc, const char* const* argv, std::ostream& os = std::cout) {
  CLI::App app{"Stochastic deep-Ritz solver"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a network on a built-in problem");
  train_cmd->add_option("--config", train_args.config, "Config JSON")->required();
  train_cmd->add_option("--out", train_args.out, "Output directory");
  train_cmd->add_option("--seed", train_args.seed, "Override train.seed");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Relative L2 mean error of a checkpoint");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint)->required();
  eval_cmd->add_option("--samples", eval_args.samples);
  eval_cmd->add_option("--out", eval_args.out, "Report JSON (default: stdout)");
  eval_cmd->add_option("--seed", eval_args.seed);

  DensityArgs density_args;
  auto* density_cmd = app.add_subcommand("density", "KDE of u(x, Z) at a fixed point");
  density_cmd->add_option("--checkpoint", density_args.checkpoint)->required();
  density_cmd->add_option("--point", density_args.point, "Comma-separated coordinates")->required();
  density_cmd->add_option("--samples", density_args.samples);
  density_cmd->add_option("--grid", density_args.grid);
  density_cmd->add_option("--out", density_args.out);
  density_cmd->add_option("--seed", density_args.seed);

  JointArgs joint_args;
  auto* joint_cmd = app.add_subcommand("joint", "Joint histogram of u at two points");
  joint_cmd->add_option("--checkpoint", joint_args.checkpoint)->required();
  joint_cmd->add_option("--p1", joint_args.p1)->required();
  joint_cmd->add_option("--p2", joint_args.p2)->required();
  joint_cmd->add_option("--bins", joint_args.bins);
  joint_cmd->add_option("--samples", joint_args.samples);
  joint_cmd->add_option("--out", joint_args.out);
  joint_cmd->add_option("--seed", joint_args.seed);

  ResidualArgs residual_args;
  auto* residual_cmd = app.add_subcommand("residual", "Gateaux residual along random test directions");
  residual_cmd->add_option("--checkpoint", residual_args.checkpoint)->required();
  residual_cmd->add_option("--directions", residual_args.directions);
  residual_cmd->add_option("--samples", residual_args.samples);
  residual_cmd->add_option("--out", residual_args.out);
  residual_cmd->add_option("--seed", residual_args.seed);

  SampleArgs sample_args;
  auto* sample_cmd = app.add_subcommand("sample", "Draw points from a sampler as CSV");
  sample_cmd->add_option("--sampler", sample_args.sampler)
      ->required()
      ->check(CLI::IsMember({"box", "boundary", "ball", "sphere", "normal"}));
  sample_cmd->add_option("--dim", sample_args.dim)->required();
  sample_cmd->add_option("-n", sample_args.n)->required();
  sample_cmd->add_option("--seed", sample_args.seed);
  sample_cmd->add_option("--out", sample_args.out);

  GradcheckArgs gradcheck_args;
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference check of network derivatives");
  gradcheck_cmd->add_option("--config", gradcheck_args.config)->required();
  gradcheck_cmd->add_flag("--corrupt", gradcheck_args.corrupt, "Perturb the gradient (negative control)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_args, os);
    if (*eval_cmd) return cmd_eval(eval_args, os);
    if (*density_cmd) return cmd_density(density_args, os);
    if (*joint_cmd) return cmd_joint(joint_args, os);
    if (*residual_cmd) return cmd_residual(residual_args, os);
    if (*sample_cmd) return cmd_sample(sample_args, os);
    if (*gradcheck_cmd) return cmd_gradcheck(gradcheck_args, os);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kIo;
  } catch (const FormatError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kFormat;
  } catch (const InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}

}  // namespace sdr::cli
