#pragma once

// Spatial fields u(x, z) that can be evaluated on batches together with
// their x-gradients: trained networks, exact solutions, and the perturbed
// and test-direction fields used by the residual diagnostics.

#include <concepts>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdr/mlp.hpp"
#include "sdr/problem_spec.hpp"

namespace sdr {

/// Values (n) and spatial gradients (d x n) of a field on n points.
struct FieldBatch {
  Eigen::VectorXd values;
  Eigen::MatrixXd grads;
};

/// `x` is (d x n), `z` is (K x n). `with_grad = false` lets implementations
/// skip gradient work; `grads` is then left empty.
template <class F>
concept SpatialField = requires(const F& f, const Eigen::MatrixXd& x, const Eigen::MatrixXd& z, bool g) {
  { f.evaluate(x, z, g) } -> std::same_as<FieldBatch>;
};

class NetworkField {
 public:
  explicit NetworkField(const MlpParams& params) : params_(&params) {}

  FieldBatch evaluate(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z, bool with_grad) const {
    const Eigen::MatrixXd in = network_inputs(x, z);
    if (!with_grad) return {forward_batch(*params_, in), {}};
    ExtendedTape tape = forward_extended(*params_, in, static_cast<int>(x.rows()));
    return {std::move(tape.values), std::move(tape.spatial_grads)};
  }

  const MlpParams& params() const { return *params_; }

 private:
  const MlpParams* params_;
};

class ExactField {
 public:
  explicit ExactField(const ProblemSpec& problem) : problem_(&problem) {
    if (!problem.exact_solution) throw InvalidArgument("problem " + problem.id + " has no exact solution");
  }

  FieldBatch evaluate(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z, bool with_grad) const {
    FieldBatch out;
    out.values.resize(x.cols());
    if (with_grad) out.grads.resize(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const FieldEval e = problem_->exact_solution(x.col(j), z.col(j));
      out.values(j) = e.value;
      if (with_grad) out.grads.col(j) = e.spatial_grad;
    }
    return out;
  }

 private:
  const ProblemSpec* problem_;
};

/// c * u.
template <SpatialField U>
class ScaledField {
 public:
  ScaledField(U u, double scale) : u_(std::move(u)), scale_(scale) {}

  FieldBatch evaluate(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z, bool with_grad) const {
    FieldBatch out = u_.evaluate(x, z, with_grad);
    out.values *= scale_;
    if (with_grad) out.grads *= scale_;
    return out;
  }

 private:
  U u_;
  double scale_;
};

/// u + eps * v.
template <SpatialField U, SpatialField V>
class PerturbedField {
 public:
  PerturbedField(U u, double eps, V v) : u_(std::move(u)), eps_(eps), v_(std::move(v)) {}

  FieldBatch evaluate(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z, bool with_grad) const {
    FieldBatch out = u_.evaluate(x, z, with_grad);
    const FieldBatch dv = v_.evaluate(x, z, with_grad);
    out.values += eps_ * dv.values;
    if (with_grad) out.grads += eps_ * dv.grads;
    return out;
  }

 private:
  U u_;
  double eps_;
  V v_;
};

class ZeroField {
 public:
  FieldBatch evaluate(const Eigen::MatrixXd& x, const Eigen::MatrixXd&, bool with_grad) const {
    FieldBatch out{Eigen::VectorXd::Zero(x.cols()), {}};
    if (with_grad) out.grads = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    return out;
  }
};

/// Test direction v(x, z) = scale * phi(x) * w(x, z): a seeded random
/// network w, optionally multiplied by the domain cutoff phi (zero on the
/// boundary) so that v is admissible for Dirichlet problems.
class DirectionField {
 public:
  DirectionField(MlpParams net, DomainDescriptor domain, bool use_cutoff, double scale)
      : net_(std::move(net)), domain_(domain), use_cutoff_(use_cutoff), scale_(scale) {}

  FieldBatch evaluate(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z, bool with_grad) const {
    FieldBatch out = NetworkField(net_).evaluate(x, z, with_grad);
    if (use_cutoff_) {
      Eigen::VectorXd dphi(x.rows());
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double phi = domain_.cutoff(x.col(j), dphi);
        if (with_grad) out.grads.col(j) = phi * out.grads.col(j) + out.values(j) * dphi;
        out.values(j) *= phi;
      }
    }
    out.values *= scale_;
    if (with_grad) out.grads *= scale_;
    return out;
  }

  double scale() const { return scale_; }

 private:
  MlpParams net_;
  DomainDescriptor domain_;
  bool use_cutoff_;
  double scale_;
};

}  // namespace sdr
