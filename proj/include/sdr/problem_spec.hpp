#pragma once

#include <functional>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "sdr/error.hpp"
#include "sdr/mlp.hpp"
#include "sdr/rng.hpp"
#include "sdr/sampling.hpp"

namespace sdr {

using ConstVec = Eigen::Ref<const Eigen::VectorXd>;

/// Law of the stochastic input Z.
struct ZLaw {
  enum class Kind { standard_normal, uniform_box, uniform_scalar };

  Kind kind = Kind::standard_normal;
  int dim = 1;
  double a = 0.0;
  double b = 1.0;

  static ZLaw standard_normal(int k) { return {Kind::standard_normal, k, 0.0, 1.0}; }
  static ZLaw uniform_box(double a, double b, int k) { return {Kind::uniform_box, k, a, b}; }
  static ZLaw uniform_scalar(double a, double b) { return {Kind::uniform_scalar, 1, a, b}; }

  Eigen::MatrixXd sample(RngStream& rng, long n) const {
    if (kind == Kind::standard_normal) return standard_normal_vec(rng, dim, n);
    return sdr::uniform_box(rng, a, b, dim, n);
  }

  bool in_support(const ConstVec& z) const {
    if (kind == Kind::standard_normal) return z.allFinite();
    return (z.array() >= a).all() && (z.array() <= b).all();
  }
};

/// Interior integrand I(x, u, grad u; kappa) and its partial derivatives in
/// u and grad u (the reverse pass needs both).
struct LagrangianTerms {
  double value = 0.0;
  double d_u = 0.0;
  Eigen::VectorXd d_grad;
};

using KappaFn = std::function<double(const ConstVec& x, const ConstVec& z)>;
using LagrangianFn =
    std::function<LagrangianTerms(const ConstVec& x, const ConstVec& z, double u, const ConstVec& grad)>;
using BoundaryFn = std::function<double(const ConstVec& s, const ConstVec& z)>;
using ExactFn = std::function<FieldEval(const ConstVec& x, const ConstVec& z)>;

/// One stochastic variational problem: minimise
///   E[ I(X, u, grad u; kappa(X, Z)) ] + beta E[ |u(S, Z) - g(S, Z)|^2 ]
/// over u, with X uniform in D, S uniform on its boundary and Z from z_law.
/// Problems without boundary data impose the natural (zero-flux) condition
/// and carry beta = 0.
struct ProblemSpec {
  std::string id;
  int d = 1;
  int K = 1;
  DomainDescriptor domain;
  ZLaw z_law;
  KappaFn kappa;
  LagrangianFn lagrangian;
  std::optional<BoundaryFn> boundary_data;
  double penalty_beta = 0.0;
  ExactFn exact_solution;

  bool has_dirichlet() const { return boundary_data.has_value(); }
  int input_dim() const { return d + K; }

  void validate() const {
    domain.validate();
    if (domain.dim != d) throw InvalidArgument("domain dimension does not match problem dimension");
    if (z_law.dim != K) throw InvalidArgument("Z-law dimension does not match K");
    if (!kappa || !lagrangian) throw InvalidArgument("problem " + id + " lacks kappa or lagrangian");
    if (!(penalty_beta >= 0.0) || !std::isfinite(penalty_beta))
      throw InvalidArgument("penalty coefficient must be finite and >= 0");
    if (!has_dirichlet() && penalty_beta != 0.0)
      throw InvalidArgument("problem " + id + " has natural boundary conditions; penalty must be 0");
  }
};

/// A mini-batch of interior points X (d x n), boundary points S (d x n, or
/// zero columns for natural-BC problems) and stochastic vectors Z (K x n).
struct Batch {
  Eigen::MatrixXd X;
  Eigen::MatrixXd S;
  Eigen::MatrixXd Z;

  Eigen::Index size() const { return X.cols(); }
  bool has_boundary() const { return S.cols() > 0; }

  void validate(const ProblemSpec& problem) const {
    if (X.cols() < 1) throw InvalidArgument("batch must be nonempty");
    if (X.rows() != problem.d || Z.rows() != problem.K || Z.cols() != X.cols())
      throw InvalidArgument("batch shapes do not match the problem");
    if (problem.has_dirichlet() && (S.rows() != problem.d || S.cols() != X.cols()))
      throw InvalidArgument("batch lacks boundary points for a Dirichlet problem");
  }
};

/// Stacks spatial and stochastic coordinates into network inputs [x; z].
inline Eigen::MatrixXd network_inputs(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z) {
  Eigen::MatrixXd in(x.rows() + z.rows(), x.cols());
  in.topRows(x.rows()) = x;
  in.bottomRows(z.rows()) = z;
  return in;
}

/// Independent interior / boundary / stochastic streams for one run.
struct BatchStreams {
  RngStream interior;
  RngStream boundary;
  RngStream stochastic;

  explicit BatchStreams(std::uint64_t seed)
      : interior(seed, StreamId::interior),
        boundary(seed, StreamId::boundary),
        stochastic(seed, StreamId::stochastic) {}
};

inline Batch sample_batch(const ProblemSpec& problem, long n, BatchStreams& streams) {
  if (n < 1) throw InvalidArgument("batch size must be >= 1");
  Batch batch;
  batch.X = problem.domain.sample_interior(streams.interior, n);
  if (problem.has_dirichlet()) batch.S = problem.domain.sample_boundary(streams.boundary, n);
  else batch.S.resize(problem.d, 0);
  batch.Z = problem.z_law.sample(streams.stochastic, n);
  return batch;
}

}  // namespace sdr
