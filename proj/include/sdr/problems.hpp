#pragma once

// Built-in benchmark problems and their exact solutions.
//
//   p1_1d_lognormal  D = (-1, 1), kappa = exp(0.1 V) with V a 5-mode random
//                    Fourier field, I = kappa u'^2 / 2, u(-1) = 0, u(1) = 1.
//   p2_neumann       D = [0, 1]^d, kappa = d + 1 + sum z, reaction-diffusion
//                    energy with zero-flux boundary.
//   p3_dirichlet     D = [0, 1]^2, kappa = 3 + z1 + z2, homogeneous Dirichlet.
//   p4_langevin      D = unit ball in R^d, kappa = exp(-z (1 + |x|^2)),
//                    u = exp(2z) on the sphere.

#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdr/error.hpp"
#include "sdr/problem_spec.hpp"
#include "sdr/quadrature.hpp"

namespace sdr {

inline constexpr const char* kProblemIds[] = {"p1_1d_lognormal", "p2_neumann", "p3_dirichlet",
                                              "p4_langevin"};

struct ProblemOptions {
  /// Total Gauss-Legendre nodes per integral for the p1 exact solution.
  int quadrature_nodes = 1024;
  int quadrature_panels = 8;
};

// ---------------------------------------------------------------------------
// p1 random field

inline constexpr int kP1Modes = 5;
inline constexpr double kP1Amplitude = 0.1;

/// V(x, Z) = n^{-1/2} sum_k (A_k cos(pi k x) + B_k sin(pi k x)) with
/// Z = (A_1..A_n, B_1..B_n).
inline double p1_potential(double x, const ConstVec& z) {
  const double c1 = std::cos(std::numbers::pi * x);
  const double s1 = std::sin(std::numbers::pi * x);
  double c = c1, s = s1, sum = 0.0;
  for (int k = 0; k < kP1Modes; ++k) {
    sum += z(k) * c + z(kP1Modes + k) * s;
    const double cn = c * c1 - s * s1;
    s = s * c1 + c * s1;
    c = cn;
  }
  return sum / std::sqrt(static_cast<double>(kP1Modes));
}

inline double p1_kappa(double x, const ConstVec& z) { return std::exp(kP1Amplitude * p1_potential(x, z)); }

/// Covariance of V between two points: n^{-1} sum_k cos(pi k (x2 - x1)).
inline double p1_covariance(double x1, double x2) {
  double sum = 0.0;
  for (int k = 1; k <= kP1Modes; ++k) sum += std::cos(std::numbers::pi * k * (x2 - x1));
  return sum / kP1Modes;
}

/// Monte-Carlo estimate of Cov(V(x1, Z), V(x2, Z)) (V has zero mean, so the
/// plain second moment is used).
inline double covariance_check_p1(double x1, double x2, long n_mc, RngStream& rng) {
  if (n_mc < 2) throw InvalidArgument("need at least two Monte-Carlo samples");
  double sum = 0.0;
  Eigen::VectorXd z(2 * kP1Modes);
  for (long i = 0; i < n_mc; ++i) {
    for (int k = 0; k < 2 * kP1Modes; ++k) z(k) = rng.normal();
    sum += p1_potential(x1, z) * p1_potential(x2, z);
  }
  return sum / static_cast<double>(n_mc);
}

// ---------------------------------------------------------------------------
// 1D two-point solution u(x) = int_{-1}^x 1/kappa / int_{-1}^1 1/kappa

/// Composite Gauss-Legendre evaluation of the 1D solution for a coefficient
/// given as a function of x. Both integrals use the same panel count, so
/// u(1) = 1 exactly and u(-1) = 0 exactly.
class TwoPointQuadrature {
 public:
  explicit TwoPointQuadrature(int n_nodes, int panels = 8) : panels_(panels), rule_(per_panel(n_nodes, panels)) {}

  template <class Kappa>
  FieldEval solve(Kappa&& kappa, double x) const {
    if (!(x >= -1.0 && x <= 1.0)) throw InvalidArgument("x must lie in [-1, 1]");
    const auto inv = [&](double t) { return 1.0 / kappa(t); };
    const double total = rule_.integrate(inv, -1.0, 1.0, panels_);
    const double partial = (x == 1.0) ? total : rule_.integrate(inv, -1.0, x, panels_);
    FieldEval out;
    out.value = partial / total;
    out.spatial_grad = Eigen::VectorXd::Constant(1, inv(x) / total);
    return out;
  }

 private:
  static int per_panel(int n_nodes, int panels) {
    if (n_nodes < 64) throw InvalidArgument("quadrature needs at least 64 nodes");
    if (panels < 1) throw InvalidArgument("quadrature needs at least one panel");
    return (n_nodes + panels - 1) / panels;
  }

  int panels_;
  GaussLegendre rule_;
};

/// u(x, z) for the p1 field.
inline double exact_1d_quadrature(const ConstVec& z, double x, int n_nodes) {
  const TwoPointQuadrature quad(n_nodes);
  return quad.solve([&](double t) { return p1_kappa(t, z); }, x).value;
}

// ---------------------------------------------------------------------------

namespace detail {

inline constexpr double pi = std::numbers::pi;
inline constexpr double pi2 = pi * pi;

inline double cos_sum(const ConstVec& x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += std::cos(std::numbers::pi * x(i));
  return s;
}

inline ProblemSpec make_p1(const ProblemOptions& options) {
  ProblemSpec p;
  p.id = "p1_1d_lognormal";
  p.d = 1;
  p.K = 2 * kP1Modes;
  p.domain = DomainDescriptor::interval(-1.0, 1.0);
  p.z_law = ZLaw::standard_normal(p.K);
  p.kappa = [](const ConstVec& x, const ConstVec& z) { return p1_kappa(x(0), z); };
  p.lagrangian = [](const ConstVec& x, const ConstVec& z, double, const ConstVec& grad) {
    const double k = p1_kappa(x(0), z);
    return LagrangianTerms{0.5 * k * grad.squaredNorm(), 0.0, k * grad};
  };
  p.boundary_data = [](const ConstVec& s, const ConstVec&) { return 0.5 * (s(0) + 1.0); };
  p.penalty_beta = 50.0;
  auto quad = std::make_shared<const TwoPointQuadrature>(options.quadrature_nodes, options.quadrature_panels);
  p.exact_solution = [quad](const ConstVec& x, const ConstVec& z) {
    return quad->solve([&](double t) { return p1_kappa(t, z); }, x(0));
  };
  return p;
}

inline ProblemSpec make_p2(int d) {
  ProblemSpec p;
  p.id = "p2_neumann";
  p.d = d;
  p.K = d;
  p.domain = DomainDescriptor::hypercube(0.0, 1.0, d);
  p.z_law = ZLaw::uniform_box(0.0, 1.0, d);
  p.kappa = [d](const ConstVec&, const ConstVec& z) { return d + 1.0 + z.sum(); };
  // Potential form: I = kappa |grad u|^2 / 2 + pi^2 kappa u^2 / 2 - 2 pi^2 (sum cos(pi x_i)) u.
  p.lagrangian = [d](const ConstVec& x, const ConstVec& z, double u, const ConstVec& grad) {
    const double k = d + 1.0 + z.sum();
    const double source = 2.0 * pi2 * cos_sum(x);
    return LagrangianTerms{0.5 * k * grad.squaredNorm() + 0.5 * pi2 * k * u * u - source * u,
                           pi2 * k * u - source, k * grad};
  };
  p.penalty_beta = 0.0;
  p.exact_solution = [d](const ConstVec& x, const ConstVec& z) {
    const double k = d + 1.0 + z.sum();
    FieldEval e;
    e.value = cos_sum(x) / k;
    e.spatial_grad = (-pi / k) * (pi * x.array()).sin().matrix();
    return e;
  };
  return p;
}

inline ProblemSpec make_p3() {
  ProblemSpec p;
  p.id = "p3_dirichlet";
  p.d = 2;
  p.K = 2;
  p.domain = DomainDescriptor::hypercube(0.0, 1.0, 2);
  p.z_law = ZLaw::uniform_box(-1.0, 1.0, 2);
  p.kappa = [](const ConstVec&, const ConstVec& z) { return 3.0 + z(0) + z(1); };
  p.lagrangian = [](const ConstVec& x, const ConstVec& z, double u, const ConstVec& grad) {
    const double k = 3.0 + z(0) + z(1);
    const double f = 2.0 * pi * pi * std::sin(pi * x(0)) * std::sin(pi * x(1));
    return LagrangianTerms{0.5 * k * grad.squaredNorm() - f * u, -f, k * grad};
  };
  p.boundary_data = [](const ConstVec&, const ConstVec&) { return 0.0; };
  p.penalty_beta = 500.0;
  p.exact_solution = [](const ConstVec& x, const ConstVec& z) {
    const double k = 3.0 + z(0) + z(1);
    const double s0 = std::sin(pi * x(0)), s1 = std::sin(pi * x(1));
    FieldEval e;
    e.value = s0 * s1 / k;
    e.spatial_grad.resize(2);
    e.spatial_grad << pi * std::cos(pi * x(0)) * s1 / k, pi * s0 * std::cos(pi * x(1)) / k;
    return e;
  };
  return p;
}

inline ProblemSpec make_p4(int d) {
  ProblemSpec p;
  p.id = "p4_langevin";
  p.d = d;
  p.K = 1;
  p.domain = DomainDescriptor::unit_ball(d);
  p.z_law = ZLaw::uniform_scalar(0.0, 1.0);
  p.kappa = [](const ConstVec& x, const ConstVec& z) { return std::exp(-z(0) * (1.0 + x.squaredNorm())); };
  // f = -2 d z, the forcing for which exp(V) solves -div(kappa grad u) = f.
  p.lagrangian = [d](const ConstVec& x, const ConstVec& z, double u, const ConstVec& grad) {
    const double k = std::exp(-z(0) * (1.0 + x.squaredNorm()));
    const double minus_f = 2.0 * d * z(0);
    return LagrangianTerms{0.5 * k * grad.squaredNorm() + minus_f * u, minus_f, k * grad};
  };
  p.boundary_data = [](const ConstVec&, const ConstVec& z) { return std::exp(2.0 * z(0)); };
  p.penalty_beta = 500.0;
  p.exact_solution = [](const ConstVec& x, const ConstVec& z) {
    const double u = std::exp(z(0) * (1.0 + x.squaredNorm()));
    return FieldEval{u, (2.0 * z(0) * u) * x};
  };
  return p;
}

}  // namespace detail

/// Builds a built-in problem. `d` must be 1 for p1 and 2 for p3; p2 and p4
/// accept any d >= 1.
inline ProblemSpec make_problem(const std::string& id, int d, const ProblemOptions& options = {}) {
  if (d < 1) throw InvalidArgument("dimension must be >= 1");
  ProblemSpec p;
  if (id == "p1_1d_lognormal") {
    if (d != 1) throw InvalidArgument("p1_1d_lognormal is one-dimensional");
    p = detail::make_p1(options);
  } else if (id == "p2_neumann") {
    p = detail::make_p2(d);
  } else if (id == "p3_dirichlet") {
    if (d != 2) throw InvalidArgument("p3_dirichlet is two-dimensional");
    p = detail::make_p3();
  } else if (id == "p4_langevin") {
    p = detail::make_p4(d);
  } else {
    throw InvalidArgument("unknown problem id '" + id + "'");
  }
  p.validate();
  return p;
}

/// Default spatial dimension for ids that fix it, else `fallback`.
inline int default_dimension(const std::string& id, int fallback = 2) {
  if (id == "p1_1d_lognormal") return 1;
  if (id == "p3_dirichlet") return 2;
  return fallback;
}

}  // namespace sdr
