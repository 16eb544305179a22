#pragma once

// Penalised Monte-Carlo loss of a network on a batch and its exact parameter
// gradient.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdr/error.hpp"
#include "sdr/mlp.hpp"
#include "sdr/parallel.hpp"
#include "sdr/problem_spec.hpp"

namespace sdr {

inline void require_finite_terms(const LagrangianTerms& t, std::size_t sample) {
  if (!std::isfinite(t.value) || !std::isfinite(t.d_u) || !t.d_grad.allFinite())
    throw NumericalError("non-finite Lagrangian evaluation", sample);
}

/// Loss contribution of one (x, s, z) triple:
/// I(x, u, grad u; kappa) + beta |u(s, z) - g(s, z)|^2. The boundary term is
/// skipped for natural-BC problems and `s` is then ignored.
inline double sample_loss(const ProblemSpec& problem, const MlpParams& params, const ConstVec& x,
                          const ConstVec& s, const ConstVec& z) {
  if (x.size() != problem.d || z.size() != problem.K)
    throw InvalidArgument("sample point dimensions do not match the problem");
  Eigen::VectorXd input(problem.input_dim());
  input << x, z;
  const NetworkEval eval = forward_with_spatial_grad(params, {input.data(), static_cast<std::size_t>(input.size())}, problem.d);
  const LagrangianTerms terms = problem.lagrangian(x, z, eval.value, eval.spatial_grad);
  if (!std::isfinite(terms.value)) throw NumericalError("non-finite Lagrangian evaluation");
  double loss = terms.value;
  if (problem.has_dirichlet() && problem.penalty_beta > 0.0) {
    if (s.size() != problem.d) throw InvalidArgument("boundary point dimension does not match the problem");
    input << s, z;
    const double misfit = forward(params, {input.data(), static_cast<std::size_t>(input.size())}) -
                          (*problem.boundary_data)(s, z);
    loss += problem.penalty_beta * misfit * misfit;
  }
  if (!std::isfinite(loss)) throw NumericalError("non-finite sample loss");
  return loss;
}

struct GradOptions {
  /// Fixed chunking (independent of worker count) and in-order reduction.
  /// When false the batch is split evenly over the workers, so results can
  /// vary with SDR_THREADS by floating-point reassociation.
  bool deterministic = true;
  unsigned workers = 0;  // 0: worker_count()
  Eigen::Index chunk = 64;
};

struct LossAndGradient {
  double loss = 0.0;
  FlatGradient gradient;
};

namespace detail {

// Sums (not means) of loss and gradient over batch columns [begin, begin+count),
// each sample weighted by `weight`.
inline LossAndGradient chunk_loss_and_grad(const ProblemSpec& problem, const MlpParams& params,
                                           const Batch& batch, Eigen::Index begin, Eigen::Index count,
                                           double weight) {
  LossAndGradient out;
  out.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.parameter_count()));
  const int d = problem.d;
  const auto Xc = batch.X.middleCols(begin, count);
  const auto Zc = batch.Z.middleCols(begin, count);

  const ExtendedTape tape = forward_extended(params, network_inputs(Xc, Zc), d);
  Eigen::VectorXd value_adj(count);
  Eigen::MatrixXd grad_adj(d, count);
  double loss = 0.0;
  for (Eigen::Index m = 0; m < count; ++m) {
    const LagrangianTerms t =
        problem.lagrangian(Xc.col(m), Zc.col(m), tape.values(m), tape.spatial_grads.col(m));
    require_finite_terms(t, static_cast<std::size_t>(begin + m));
    loss += t.value;
    value_adj(m) = weight * t.d_u;
    grad_adj.col(m) = weight * t.d_grad;
  }
  backward_extended(params, tape, value_adj, grad_adj, out.gradient);

  if (problem.has_dirichlet() && problem.penalty_beta > 0.0) {
    const auto Sc = batch.S.middleCols(begin, count);
    const ExtendedTape edge = forward_extended(params, network_inputs(Sc, Zc), 0);
    Eigen::VectorXd edge_adj(count);
    const double beta = problem.penalty_beta;
    for (Eigen::Index m = 0; m < count; ++m) {
      const double misfit = edge.values(m) - (*problem.boundary_data)(Sc.col(m), Zc.col(m));
      if (!std::isfinite(misfit)) throw NumericalError("non-finite boundary misfit", begin + m);
      loss += beta * misfit * misfit;
      edge_adj(m) = weight * 2.0 * beta * misfit;
    }
    backward_extended(params, edge, edge_adj, Eigen::MatrixXd(0, count), out.gradient);
  }
  out.loss = loss;
  return out;
}

}  // namespace detail

/// Batch-mean loss and its gradient with respect to every network parameter,
/// by reverse accumulation through the extended forward pass (so the path
/// through grad_x u is included exactly).
inline LossAndGradient loss_and_grad(const ProblemSpec& problem, const MlpParams& params,
                                     const Batch& batch, const GradOptions& options = {}) {
  batch.validate(problem);
  if (params.input_dim() != problem.input_dim())
    throw InvalidArgument("network input dimension " + std::to_string(params.input_dim()) +
                          " != d + K = " + std::to_string(problem.input_dim()));
  const Eigen::Index n = batch.size();
  const unsigned workers = options.workers ? options.workers : worker_count();
  const Eigen::Index chunk =
      options.deterministic ? std::max<Eigen::Index>(1, options.chunk)
                            : (n + workers - 1) / static_cast<Eigen::Index>(workers);
  const auto chunks = static_cast<std::size_t>((n + chunk - 1) / chunk);
  const double weight = 1.0 / static_cast<double>(n);

  std::vector<LossAndGradient> parts(chunks);
  for_each_chunk(chunks, workers, [&](std::size_t c) {
    const Eigen::Index begin = static_cast<Eigen::Index>(c) * chunk;
    parts[c] = detail::chunk_loss_and_grad(problem, params, batch, begin, std::min(chunk, n - begin), weight);
  });

  LossAndGradient total{0.0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.parameter_count()))};
  for (const auto& part : parts) {
    total.loss += part.loss;
    total.gradient += part.gradient;
  }
  total.loss *= weight;
  if (!std::isfinite(total.loss)) throw NumericalError("non-finite batch loss");
  if (!total.gradient.allFinite()) throw NumericalError("non-finite parameter gradient");
  return total;
}

inline FlatGradient grad_params(const ProblemSpec& problem, const MlpParams& params, const Batch& batch,
                                const GradOptions& options = {}) {
  return loss_and_grad(problem, params, batch, options).gradient;
}

/// Batch-mean loss without the reverse pass.
inline double batch_loss(const ProblemSpec& problem, const MlpParams& params, const Batch& batch) {
  batch.validate(problem);
  double sum = 0.0;
  for (Eigen::Index m = 0; m < batch.size(); ++m) {
    const Eigen::VectorXd s = batch.has_boundary() ? Eigen::VectorXd(batch.S.col(m)) : Eigen::VectorXd();
    sum += sample_loss(problem, params, batch.X.col(m), s, batch.Z.col(m));
  }
  return sum / static_cast<double>(batch.size());
}

}  // namespace sdr
