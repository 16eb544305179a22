#pragma once

// Stochastic deep-Ritz training loop: sample a batch, take the exact
// gradient of the penalised batch loss, apply an Adam step with a staircase
// learning rate.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdr/error.hpp"
#include "sdr/evaluation.hpp"
#include "sdr/field.hpp"
#include "sdr/loss.hpp"
#include "sdr/mlp.hpp"
#include "sdr/problems.hpp"

namespace sdr {

struct TrainConfig {
  std::string problem_id = "p3_dirichlet";
  int d = 2;
  std::vector<int> layer_sizes{4, 64, 64, 64, 64, 1};
  long iterations = 1000;
  long batch_size = 256;
  double lr_initial = 1e-3;
  double lr_decay_factor = 0.1;
  long lr_decay_every = 100000;
  /// Unset: the problem's default (0 for natural-BC problems).
  std::optional<double> penalty_beta;
  std::uint64_t seed = 0;
  long eval_every = 100;
  long eval_samples = 0;
  bool deterministic = true;
  /// 0 disables intermediate checkpoints.
  long checkpoint_every = 0;
  int quadrature_nodes = 1024;

  void validate() const {
    if (iterations < 1) throw InvalidArgument("train.iterations must be >= 1");
    if (batch_size < 1) throw InvalidArgument("train.batch_size must be >= 1");
    if (!(lr_initial > 0.0)) throw InvalidArgument("train.lr_initial must be > 0");
    if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0))
      throw InvalidArgument("train.lr_decay_factor must lie in (0, 1]");
    if (lr_decay_every < 1) throw InvalidArgument("train.lr_decay_every must be >= 1");
    if (eval_every < 1) throw InvalidArgument("eval.every must be >= 1");
    if (eval_samples < 0) throw InvalidArgument("eval.samples must be >= 0");
    if (checkpoint_every < 0) throw InvalidArgument("checkpoint interval must be >= 0");
    validate_layer_sizes(layer_sizes);
  }

  ProblemSpec make_problem() const {
    ProblemSpec p = sdr::make_problem(problem_id, d, ProblemOptions{quadrature_nodes});
    if (penalty_beta) p.penalty_beta = *penalty_beta;
    p.validate();
    if (layer_sizes.front() != p.input_dim())
      throw InvalidArgument("network input size " + std::to_string(layer_sizes.front()) + " != d + K = " +
                            std::to_string(p.input_dim()) + " for " + problem_id);
    return p;
  }
};

/// eta0 * factor^floor(n / every), n counted from 0.
inline double lr_schedule(long n, const TrainConfig& cfg) {
  if (n < 0) throw InvalidArgument("iteration must be >= 0");
  return cfg.lr_initial * std::pow(cfg.lr_decay_factor, static_cast<double>(n / cfg.lr_decay_every));
}

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))), v(m) {}
};

/// One bias-corrected Adam update of `theta`. A non-finite gradient throws
/// before anything is modified.
inline void adam_update(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, AdamState& s, double lr) {
  if (grad.size() != theta.size() || s.m.size() != theta.size() || s.v.size() != theta.size())
    throw InvalidArgument("Adam state, gradient and parameters differ in length");
  if (!grad.allFinite()) throw NumericalError("non-finite gradient passed to Adam");
  s.t += 1;
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * grad;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  theta.array() -= lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + s.eps);
}

inline void adam_step(MlpParams& params, const FlatGradient& grad, AdamState& state, double lr) {
  Eigen::VectorXd theta = flatten(params);
  adam_update(theta, grad, state, lr);
  unflatten(theta, params);
}

struct LossRecord {
  long iteration = 0;
  double loss = 0.0;
  double lr = 0.0;
  std::optional<double> rel_l2_error;

  bool operator==(const LossRecord&) const = default;
};

class LossHistory {
 public:
  void append(const LossRecord& r) {
    if (!records_.empty() && r.iteration <= records_.back().iteration)
      throw InvalidArgument("loss history iterations must be strictly increasing");
    records_.push_back(r);
  }
  const std::vector<LossRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool operator==(const LossHistory&) const = default;

 private:
  std::vector<LossRecord> records_;
};

struct Checkpoint {
  MlpParams params;
  AdamState adam;
  long iteration = 0;
  std::uint64_t seed = 0;
  std::string problem_id;
  int problem_dim = 0;
  /// "network", or "exact" for a reference checkpoint that stands for the
  /// problem's exact solution (used to validate the evaluation pipeline).
  std::string surrogate = "network";
};

struct TrainResult {
  Checkpoint checkpoint;
  LossHistory history;
};

/// Raised when a step produces a NaN/Inf. Carries the state before the
/// failing step.
class TrainingAborted : public NumericalError {
 public:
  TrainingAborted(const std::string& what, Checkpoint last_good, LossHistory history)
      : NumericalError(what), last_good_(std::move(last_good)), history_(std::move(history)) {}
  const Checkpoint& last_good() const { return last_good_; }
  const LossHistory& history() const { return history_; }

 private:
  Checkpoint last_good_;
  LossHistory history_;
};

struct TrainHooks {
  /// Called with every intermediate checkpoint (cfg.checkpoint_every).
  std::function<void(const Checkpoint&)> on_checkpoint;
  /// Called after each logged record.
  std::function<void(const LossRecord&)> on_record;
  /// Test hook: may rewrite the gradient of iteration n before the update.
  std::function<void(long n, FlatGradient&)> gradient_hook;
};

inline TrainResult train(const TrainConfig& cfg, const TrainHooks& hooks = {}) {
  cfg.validate();
  const ProblemSpec problem = cfg.make_problem();

  TrainResult result;
  Checkpoint& ckpt = result.checkpoint;
  ckpt.params = init_params(cfg.layer_sizes, cfg.seed);
  ckpt.adam = AdamState(ckpt.params.parameter_count());
  ckpt.seed = cfg.seed;
  ckpt.problem_id = cfg.problem_id;
  ckpt.problem_dim = cfg.d;

  std::optional<ErrorProbe> probe;
  if (cfg.eval_samples > 0) probe.emplace(problem, cfg.eval_samples, RngStream(cfg.seed, StreamId::eval));
  const auto measure = [&]() -> std::optional<double> {
    if (!probe) return std::nullopt;
    return probe->measure(NetworkField(ckpt.params)).rel_l2_error;
  };

  BatchStreams streams(cfg.seed);
  GradOptions grad_options;
  grad_options.deterministic = cfg.deterministic;

  double window_loss = 0.0;
  long window_count = 0;
  for (long n = 0; n < cfg.iterations; ++n) {
    const double lr = lr_schedule(n, cfg);
    const Batch batch = sample_batch(problem, cfg.batch_size, streams);
    LossAndGradient lg;
    try {
      lg = loss_and_grad(problem, ckpt.params, batch, grad_options);
      if (hooks.gradient_hook) hooks.gradient_hook(n, lg.gradient);
      if (n == 0) {
        result.history.append({0, lg.loss, lr, measure()});
        if (hooks.on_record) hooks.on_record(result.history.records().back());
      }
      adam_step(ckpt.params, lg.gradient, ckpt.adam, lr);
    } catch (const NumericalError& e) {
      throw TrainingAborted("iteration " + std::to_string(n) + ": " + e.what(), ckpt, result.history);
    }
    ckpt.iteration = n + 1;
    window_loss += lg.loss;
    ++window_count;

    if (ckpt.iteration % cfg.eval_every == 0 || ckpt.iteration == cfg.iterations) {
      result.history.append({ckpt.iteration, window_loss / window_count, lr, measure()});
      if (hooks.on_record) hooks.on_record(result.history.records().back());
      window_loss = 0.0;
      window_count = 0;
    }
    if (cfg.checkpoint_every > 0 && ckpt.iteration % cfg.checkpoint_every == 0 && hooks.on_checkpoint)
      hooks.on_checkpoint(ckpt);
  }
  return result;
}

}  // namespace sdr
