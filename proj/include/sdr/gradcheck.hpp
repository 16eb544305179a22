#pragma once

// Finite-difference checks of the analytic derivatives: parameter gradients
// of the batch loss and spatial gradients of the network.

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "sdr/loss.hpp"
#include "sdr/mlp.hpp"
#include "sdr/problem_spec.hpp"

namespace sdr {

/// Fourth-order central difference of f at t with step h.
template <class F>
double central_difference(F&& f, double t, double h) {
  return (-f(t + 2.0 * h) + 8.0 * f(t + h) - 8.0 * f(t - h) + f(t - 2.0 * h)) / (12.0 * h);
}

/// |a - b| / max(|a|, |b|, floor).
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

struct GradcheckReport {
  double max_param_rel_error = 0.0;
  double max_spatial_rel_error = 0.0;
  Eigen::Index worst_param = -1;
  std::size_t parameters = 0;
};

/// Compares `analytic` (a flat parameter gradient of the batch loss) with
/// finite differences of batch_loss, and forward_with_spatial_grad with
/// finite differences of forward at every batch point. Steps are relative:
/// 1e-4 max(1, |theta_i|) for parameters, 1e-5 max(1, |x_i|) for inputs.
inline GradcheckReport check_gradients(const ProblemSpec& problem, const MlpParams& params, const Batch& batch,
                                       const FlatGradient& analytic) {
  GradcheckReport report;
  const Eigen::VectorXd theta = flatten(params);
  report.parameters = static_cast<std::size_t>(theta.size());
  MlpParams probe = params;
  Eigen::VectorXd shifted = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const auto loss_at = [&](double t) {
      shifted(i) = t;
      unflatten(shifted, probe);
      return batch_loss(problem, probe, batch);
    };
    const double fd = central_difference(loss_at, theta(i), 1e-4 * std::max(1.0, std::abs(theta(i))));
    shifted(i) = theta(i);
    const double err = relative_error(analytic(i), fd);
    if (err > report.max_param_rel_error) {
      report.max_param_rel_error = err;
      report.worst_param = i;
    }
  }

  for (Eigen::Index m = 0; m < batch.size(); ++m) {
    Eigen::VectorXd input(problem.input_dim());
    input << batch.X.col(m), batch.Z.col(m);
    const NetworkEval eval =
        forward_with_spatial_grad(params, {input.data(), static_cast<std::size_t>(input.size())}, problem.d);
    for (int j = 0; j < problem.d; ++j) {
      Eigen::VectorXd moved = input;
      const auto value_at = [&](double t) {
        moved(j) = t;
        return forward(params, {moved.data(), static_cast<std::size_t>(moved.size())});
      };
      const double fd = central_difference(value_at, input(j), 1e-5 * std::max(1.0, std::abs(input(j))));
      report.max_spatial_rel_error = std::max(report.max_spatial_rel_error, relative_error(eval.spatial_grad(j), fd));
    }
  }
  return report;
}

}  // namespace sdr
