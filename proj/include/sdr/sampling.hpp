#pragma once

// Samplers for boxes, box boundaries, the unit ball and the unit sphere.
// Every sampler returns a (dim x n) matrix with one point per column.

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "sdr/error.hpp"
#include "sdr/rng.hpp"

namespace sdr {

namespace detail {

inline void require_count(int d, long n) {
  if (d < 1) throw InvalidArgument("sampler dimension must be >= 1, got " + std::to_string(d));
  if (n < 1) throw InvalidArgument("sample count must be >= 1, got " + std::to_string(n));
}

inline void require_bounds(double a, double b) {
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
    throw InvalidArgument("box bounds need finite a < b");
}

}  // namespace detail

/// i.i.d. uniform points in the open box (a, b)^d.
inline Eigen::MatrixXd uniform_box(RngStream& rng, double a, double b, int d, long n) {
  detail::require_bounds(a, b);
  detail::require_count(d, n);
  Eigen::MatrixXd out(d, n);
  for (long j = 0; j < n; ++j)
    for (int i = 0; i < d; ++i) out(i, j) = rng.uniform(a, b);
  return out;
}

/// Uniform points on the surface of [a, b]^d: a facet is picked uniformly
/// among the 2d (all have equal area), then a point uniformly on it. For d = 1
/// this is a fair choice between a and b.
inline Eigen::MatrixXd box_boundary(RngStream& rng, double a, double b, int d, long n) {
  detail::require_bounds(a, b);
  detail::require_count(d, n);
  Eigen::MatrixXd out(d, n);
  for (long j = 0; j < n; ++j) {
    const auto facet = rng.below(2 * static_cast<std::uint64_t>(d));
    const int axis = static_cast<int>(facet / 2);
    for (int i = 0; i < d; ++i) out(i, j) = (i == axis) ? (facet % 2 == 0 ? a : b) : rng.uniform(a, b);
  }
  return out;
}

/// i.i.d. standard normal vectors in R^k.
inline Eigen::MatrixXd standard_normal_vec(RngStream& rng, int k, long n) {
  detail::require_count(k, n);
  Eigen::MatrixXd out(k, n);
  for (long j = 0; j < n; ++j)
    for (int i = 0; i < k; ++i) out(i, j) = rng.normal();
  return out;
}

/// Uniform points on the unit sphere in R^d, from normalised Gaussian vectors.
/// A Gaussian vector with norm below 1e-100 is redrawn.
inline Eigen::MatrixXd uniform_sphere(RngStream& rng, int d, long n) {
  detail::require_count(d, n);
  Eigen::MatrixXd out(d, n);
  Eigen::VectorXd g(d);
  for (long j = 0; j < n; ++j) {
    double norm = 0.0;
    do {
      for (int i = 0; i < d; ++i) g(i) = rng.normal();
      norm = g.norm();
    } while (norm < 1e-100);
    out.col(j) = g / norm;
  }
  return out;
}

/// Uniform points in the open unit ball: a sphere direction scaled by
/// R = U^{1/d}, so that P(|X| <= r) = r^d. Same law as the
/// auxiliary-variable ball point picking construction, with one draw fewer
/// per point.
inline Eigen::MatrixXd uniform_ball(RngStream& rng, int d, long n) {
  detail::require_count(d, n);
  Eigen::MatrixXd out(d, n);
  Eigen::VectorXd g(d);
  for (long j = 0; j < n; ++j) {
    double norm = 0.0;
    do {
      for (int i = 0; i < d; ++i) g(i) = rng.normal();
      norm = g.norm();
    } while (norm < 1e-100);
    const double radius = std::pow(rng.uniform(), 1.0 / d);
    out.col(j) = (radius / norm) * g;
  }
  return out;
}

/// The spatial domain D together with interior and boundary samplers.
struct DomainDescriptor {
  enum class Kind { interval, hypercube, unit_ball };

  Kind kind = Kind::hypercube;
  double a = 0.0;
  double b = 1.0;
  int dim = 1;

  static DomainDescriptor interval(double a, double b) { return make(Kind::interval, a, b, 1); }
  static DomainDescriptor hypercube(double a, double b, int d) { return make(Kind::hypercube, a, b, d); }
  static DomainDescriptor unit_ball(int d) { return make(Kind::unit_ball, -1.0, 1.0, d); }

  void validate() const {
    if (dim < 1) throw InvalidArgument("domain dimension must be >= 1");
    if (kind == Kind::interval && dim != 1) throw InvalidArgument("interval domain must have dim 1");
    if (kind != Kind::unit_ball) detail::require_bounds(a, b);
  }

  Eigen::MatrixXd sample_interior(RngStream& rng, long n) const {
    if (kind == Kind::unit_ball) return uniform_ball(rng, dim, n);
    return uniform_box(rng, a, b, dim, n);
  }

  Eigen::MatrixXd sample_boundary(RngStream& rng, long n) const {
    if (kind == Kind::unit_ball) return uniform_sphere(rng, dim, n);
    return box_boundary(rng, a, b, dim, n);
  }

  template <class Vec>
  bool contains(const Vec& x) const {
    if (kind == Kind::unit_ball) return x.squaredNorm() < 1.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (!(x(i) > a && x(i) < b)) return false;
    return true;
  }

  /// Polynomial cutoff that is positive inside D and vanishes on its boundary:
  /// prod_i (x_i - a)(b - x_i) on boxes and 1 - |x|^2 on the ball. Writes the
  /// spatial gradient into `grad`.
  template <class Vec, class Out>
  double cutoff(const Vec& x, Out&& grad) const {
    if (kind == Kind::unit_ball) {
      grad = -2.0 * x;
      return 1.0 - x.squaredNorm();
    }
    const Eigen::Index d = x.size();
    Eigen::VectorXd factor(d), dfactor(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      factor(i) = (x(i) - a) * (b - x(i));
      dfactor(i) = (b - x(i)) - (x(i) - a);
    }
    double value = 1.0;
    for (Eigen::Index i = 0; i < d; ++i) value *= factor(i);
    for (Eigen::Index i = 0; i < d; ++i) {
      double others = 1.0;
      for (Eigen::Index k = 0; k < d; ++k)
        if (k != i) others *= factor(k);
      grad(i) = dfactor(i) * others;
    }
    return value;
  }

 private:
  static DomainDescriptor make(Kind kind, double a, double b, int d) {
    DomainDescriptor out{kind, a, b, d};
    out.validate();
    return out;
  }
};

}  // namespace sdr
