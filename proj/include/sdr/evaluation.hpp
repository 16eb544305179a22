#pragma once

// Accuracy and distribution diagnostics for trained surrogates.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdr/error.hpp"
#include "sdr/field.hpp"
#include "sdr/parallel.hpp"
#include "sdr/problem_spec.hpp"
#include "sdr/rng.hpp"

namespace sdr {

inline constexpr Eigen::Index kEvalChunk = 4096;

/// Evaluates `field` on the columns of (X, Z) in fixed chunks so that large
/// sample sets do not materialise full network tapes.
template <SpatialField F>
FieldBatch evaluate_chunked(const F& field, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z, bool with_grad) {
  const Eigen::Index n = X.cols();
  FieldBatch out;
  out.values.resize(n);
  if (with_grad) out.grads.resize(X.rows(), n);
  const auto chunks = static_cast<std::size_t>((n + kEvalChunk - 1) / kEvalChunk);
  for_each_chunk(chunks, worker_count(), [&](std::size_t c) {
    const Eigen::Index begin = static_cast<Eigen::Index>(c) * kEvalChunk;
    const Eigen::Index count = std::min(kEvalChunk, n - begin);
    const FieldBatch part =
        field.evaluate(Eigen::MatrixXd(X.middleCols(begin, count)), Eigen::MatrixXd(Z.middleCols(begin, count)),
                       with_grad);
    out.values.segment(begin, count) = part.values;
    if (with_grad) out.grads.middleCols(begin, count) = part.grads;
  });
  return out;
}

/// Sample mean and its standard error.
struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

inline McEstimate mean_and_error(const Eigen::VectorXd& samples) {
  const auto n = static_cast<double>(samples.size());
  const double mean = samples.mean();
  if (samples.size() < 2) return {mean, 0.0};
  const double var = (samples.array() - mean).square().sum() / (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

// ---------------------------------------------------------------------------
// Relative L2 mean error

struct EvalReport {
  std::string problem_id;
  long n_samples = 0;
  double rel_l2_error = 0.0;
  double numerator = 0.0;
  double numerator_se = 0.0;
  double denominator = 0.0;
  double denominator_se = 0.0;
  double wall_seconds = 0.0;
  // The stream both expectations were estimated from.
  std::uint64_t stream_seed = 0;
  std::uint64_t stream_id = 0;
};

/// A fixed set of (X, Z) draws with the exact solution tabulated on it, so
/// repeated error measurements (e.g. during training) compare on identical
/// samples and pay for the exact solution once.
class ErrorProbe {
 public:
  ErrorProbe(const ProblemSpec& problem, long n, RngStream rng)
      : problem_id_(problem.id), seed_(rng.seed()), stream_id_(rng.stream_id()) {
    if (n < 1) throw InvalidArgument("error probe needs at least one sample");
    X_ = problem.domain.sample_interior(rng, n);
    Z_ = problem.z_law.sample(rng, n);
    exact_ = evaluate_chunked(ExactField(problem), X_, Z_, false).values;
  }

  template <SpatialField F>
  EvalReport measure(const F& field) const {
    const auto start = std::chrono::steady_clock::now();
    const Eigen::VectorXd approx = evaluate_chunked(field, X_, Z_, false).values;
    const Eigen::VectorXd num = (approx - exact_).array().square();
    const Eigen::VectorXd den = exact_.array().square();
    const McEstimate n = mean_and_error(num);
    const McEstimate d = mean_and_error(den);
    if (!(d.estimate > 0.0)) throw NumericalError("relative error denominator is zero");
    if (!std::isfinite(n.estimate)) throw NumericalError("non-finite surrogate values in error estimate");
    EvalReport r;
    r.problem_id = problem_id_;
    r.n_samples = X_.cols();
    r.numerator = n.estimate;
    r.numerator_se = n.std_error;
    r.denominator = d.estimate;
    r.denominator_se = d.std_error;
    r.rel_l2_error = n.estimate / d.estimate;
    r.stream_seed = seed_;
    r.stream_id = stream_id_;
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
  }

  const Eigen::MatrixXd& X() const { return X_; }
  const Eigen::MatrixXd& Z() const { return Z_; }
  const Eigen::VectorXd& exact_values() const { return exact_; }

 private:
  std::string problem_id_;
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  Eigen::MatrixXd X_, Z_;
  Eigen::VectorXd exact_;
};

/// E = E[|u - u*|^2] / E[|u*|^2], both expectations on the same n draws of
/// (X, Z) taken from `rng`.
template <SpatialField F>
EvalReport relative_l2_error(const ProblemSpec& problem, const F& field, long n, RngStream rng) {
  if (n < 1000) throw InvalidArgument("relative error needs n >= 1000 samples");
  return ErrorProbe(problem, n, std::move(rng)).measure(field);
}

// ---------------------------------------------------------------------------
// Marginals and densities

/// u(x, Z_i) for n draws of Z at a fixed spatial point.
template <SpatialField F>
Eigen::VectorXd marginal_samples(const ProblemSpec& problem, const F& field, const Eigen::VectorXd& x, long n,
                                 RngStream& rng) {
  if (x.size() != problem.d) throw InvalidArgument("point dimension does not match the problem");
  if (n < 1) throw InvalidArgument("need at least one sample");
  const Eigen::MatrixXd Z = problem.z_law.sample(rng, n);
  const Eigen::MatrixXd X = x.replicate(1, n);
  return evaluate_chunked(field, X, Z, false).values;
}

/// Samples without spread: a KDE would be a point mass.
class PointMassError : public InvalidArgument {
 public:
  explicit PointMassError(double value)
      : InvalidArgument("samples have zero variance (point mass at " + std::to_string(value) + ")"),
        value_(value) {}
  double value() const { return value_; }

 private:
  double value_;
};

struct DensityExport {
  Eigen::VectorXd point;  // spatial evaluation point, if any
  Eigen::VectorXd grid;
  Eigen::VectorXd density;
  double bandwidth = 0.0;
  long n_samples = 0;
};

namespace detail {

// Linear-interpolation quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

/// Silverman's rule: 0.9 min(sd, IQR / 1.34) n^{-1/5}. Falls back to the
/// standard deviation alone when the IQR is zero.
inline double silverman_bandwidth(std::span<const double> samples) {
  if (samples.size() < 2) throw InvalidArgument("bandwidth needs at least two samples");
  const auto n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  const double sd = std::sqrt(var / (n - 1.0));
  if (!(sd > 0.0)) throw PointMassError(samples[0]);
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = detail::quantile_sorted(sorted, 0.75) - detail::quantile_sorted(sorted, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(n, -0.2);
}

/// Gaussian-kernel density estimate on `grid`.
inline DensityExport kde_pdf(std::span<const double> samples, const Eigen::VectorXd& grid) {
  const double h = silverman_bandwidth(samples);
  DensityExport out;
  out.grid = grid;
  out.bandwidth = h;
  out.n_samples = static_cast<long>(samples.size());
  out.density = Eigen::VectorXd::Zero(grid.size());
  const double norm = 1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    double sum = 0.0;
    for (double s : samples) {
      const double t = (grid(g) - s) / h;
      sum += std::exp(-0.5 * t * t);
    }
    out.density(g) = norm * sum;
  }
  return out;
}

/// `points` evenly spaced values covering the sample range plus five
/// bandwidths on either side.
inline Eigen::VectorXd kde_grid(std::span<const double> samples, int points) {
  if (points < 2) throw InvalidArgument("grid needs at least two points");
  const double h = silverman_bandwidth(samples);
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  return Eigen::VectorXd::LinSpaced(points, *lo - 5.0 * h, *hi + 5.0 * h);
}

inline double trapezoid(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  double s = 0.0;
  for (Eigen::Index i = 1; i < x.size(); ++i) s += 0.5 * (x(i) - x(i - 1)) * (y(i) + y(i - 1));
  return s;
}

struct JointHistogram {
  int bins = 0;
  double lo1 = 0.0, hi1 = 0.0, lo2 = 0.0, hi2 = 0.0;
  Eigen::MatrixXd mass;     // bins x bins, sums to 1
  Eigen::MatrixXd density;  // mass / bin area
  double correlation = 0.0;  // NaN when either marginal is constant
  long n_samples = 0;

  double center1(int i) const { return lo1 + (i + 0.5) * (hi1 - lo1) / bins; }
  double center2(int j) const { return lo2 + (j + 0.5) * (hi2 - lo2) / bins; }
};

inline int sturges_bins(long n) { return static_cast<int>(std::ceil(std::log2(static_cast<double>(n)))) + 1; }

/// Normalised 2D histogram of (u(x1, Z), u(x2, Z)) over shared draws of Z.
/// `bins <= 0` selects Sturges' rule.
template <SpatialField F>
JointHistogram joint_histogram(const ProblemSpec& problem, const F& field, const Eigen::VectorXd& x1,
                               const Eigen::VectorXd& x2, long n, int bins, RngStream& rng) {
  if (x1.size() != problem.d || x2.size() != problem.d)
    throw InvalidArgument("point dimension does not match the problem");
  if (n < 2) throw InvalidArgument("joint histogram needs at least two samples");
  const Eigen::MatrixXd Z = problem.z_law.sample(rng, n);
  const Eigen::VectorXd u1 = evaluate_chunked(field, Eigen::MatrixXd(x1.replicate(1, n)), Z, false).values;
  const Eigen::VectorXd u2 = evaluate_chunked(field, Eigen::MatrixXd(x2.replicate(1, n)), Z, false).values;
  if (!u1.allFinite() || !u2.allFinite()) throw NumericalError("non-finite field values in joint histogram");

  JointHistogram h;
  h.bins = bins > 0 ? bins : sturges_bins(n);
  h.n_samples = n;
  const auto range = [](const Eigen::VectorXd& u, double& lo, double& hi) {
    lo = u.minCoeff();
    hi = u.maxCoeff();
    if (hi == lo) {
      const double pad = 0.5 * std::max(1e-12, 1e-9 * std::abs(lo));
      lo -= pad;
      hi += pad;
    }
  };
  range(u1, h.lo1, h.hi1);
  range(u2, h.lo2, h.hi2);

  h.mass = Eigen::MatrixXd::Zero(h.bins, h.bins);
  const auto index = [&](double u, double lo, double hi) {
    const auto i = static_cast<int>(std::floor((u - lo) / (hi - lo) * h.bins));
    return std::clamp(i, 0, h.bins - 1);
  };
  const double w = 1.0 / static_cast<double>(n);
  for (long m = 0; m < n; ++m) h.mass(index(u1(m), h.lo1, h.hi1), index(u2(m), h.lo2, h.hi2)) += w;
  const double area = (h.hi1 - h.lo1) * (h.hi2 - h.lo2) / (static_cast<double>(h.bins) * h.bins);
  h.density = h.mass / area;

  const Eigen::ArrayXd c1 = u1.array() - u1.mean();
  const Eigen::ArrayXd c2 = u2.array() - u2.mean();
  const double s11 = (c1 * c1).sum(), s22 = (c2 * c2).sum();
  h.correlation = (s11 > 0.0 && s22 > 0.0) ? (c1 * c2).sum() / std::sqrt(s11 * s22)
                                           : std::numeric_limits<double>::quiet_NaN();
  return h;
}

// ---------------------------------------------------------------------------
// Variational residual diagnostics

/// Interior, boundary and stochastic draws shared by all sides of a
/// comparison (common random numbers).
struct ResidualSample {
  Eigen::MatrixXd X, S, Z;

  ResidualSample(const ProblemSpec& problem, long n, RngStream& rng) {
    if (n < 2) throw InvalidArgument("residual estimates need at least two samples");
    X = problem.domain.sample_interior(rng, n);
    if (problem.has_dirichlet()) S = problem.domain.sample_boundary(rng, n);
    Z = problem.z_law.sample(rng, n);
  }
};

/// Field values on a ResidualSample: interior values and gradients plus
/// boundary values.
struct ResidualEval {
  FieldBatch interior;
  Eigen::VectorXd boundary;
};

template <SpatialField F>
ResidualEval evaluate_on(const ProblemSpec& problem, const F& field, const ResidualSample& s) {
  ResidualEval e;
  e.interior = evaluate_chunked(field, s.X, s.Z, true);
  if (problem.has_dirichlet()) e.boundary = evaluate_chunked(field, s.S, s.Z, false).values;
  return e;
}

/// Per-sample penalised loss of u + eps v, given u and v on the sample.
inline Eigen::VectorXd combined_losses(const ProblemSpec& problem, const ResidualSample& s, const ResidualEval& u,
                                       double eps, const ResidualEval& v) {
  const Eigen::Index n = s.X.cols();
  Eigen::VectorXd out(n);
  Eigen::VectorXd grad(problem.d);
  const bool penalty = problem.has_dirichlet() && problem.penalty_beta > 0.0;
  for (Eigen::Index m = 0; m < n; ++m) {
    const double value = u.interior.values(m) + eps * v.interior.values(m);
    grad = u.interior.grads.col(m) + eps * v.interior.grads.col(m);
    double loss = problem.lagrangian(s.X.col(m), s.Z.col(m), value, grad).value;
    if (penalty) {
      const double misfit =
          u.boundary(m) + eps * v.boundary(m) - (*problem.boundary_data)(s.S.col(m), s.Z.col(m));
      loss += problem.penalty_beta * misfit * misfit;
    }
    out(m) = loss;
  }
  if (!out.allFinite()) throw NumericalError("non-finite loss in residual estimate");
  return out;
}

/// Builds the `index`-th seeded admissible test direction for `problem`: a
/// random [d+K, width, width, 1] network, times the boundary cutoff for
/// Dirichlet problems, scaled so that E[v^2 + |grad v|^2] is about 1.
inline DirectionField make_test_direction(const ProblemSpec& problem, std::uint64_t seed, std::uint64_t index,
                                          int width = 16) {
  RngStream rng = RngStream::derived(seed, StreamId::direction, index);
  MlpParams net = init_params({problem.input_dim(), width, width, 1}, rng.next_u64());
  for (auto& b : net.biases) b = rng.uniform(-1.0, 1.0) * Eigen::VectorXd::Ones(b.size());
  const DirectionField raw(net, problem.domain, problem.has_dirichlet(), 1.0);
  const Eigen::MatrixXd X = problem.domain.sample_interior(rng, 4096);
  const Eigen::MatrixXd Z = problem.z_law.sample(rng, 4096);
  const FieldBatch v = raw.evaluate(X, Z, true);
  const double norm2 = (v.values.squaredNorm() + v.grads.squaredNorm()) / 4096.0;
  if (!(std::sqrt(norm2) > 1e-12)) throw NumericalError("degenerate test direction");
  return DirectionField(std::move(net), problem.domain, problem.has_dirichlet(), 1.0 / std::sqrt(norm2));
}

/// Central-difference Gateaux derivative of the penalised loss at u along
/// each direction, [J_n(u + eps v) - J_n(u - eps v)] / (2 eps), with all
/// directions sharing one sample of size n drawn from `rng`.
template <SpatialField U, SpatialField V>
std::vector<McEstimate> gateaux_residuals(const ProblemSpec& problem, const U& u, const std::vector<V>& directions,
                                          long n, RngStream& rng, double eps = 1e-4) {
  const ResidualSample sample(problem, n, rng);
  const ResidualEval ue = evaluate_on(problem, u, sample);
  std::vector<McEstimate> out;
  out.reserve(directions.size());
  for (const auto& v : directions) {
    const ResidualEval ve = evaluate_on(problem, v, sample);
    const Eigen::VectorXd diff =
        (combined_losses(problem, sample, ue, eps, ve) - combined_losses(problem, sample, ue, -eps, ve)) /
        (2.0 * eps);
    out.push_back(mean_and_error(diff));
  }
  return out;
}

template <SpatialField U, SpatialField V>
McEstimate gateaux_residual(const ProblemSpec& problem, const U& u, const V& v, long n, RngStream& rng,
                            double eps = 1e-4) {
  return gateaux_residuals(problem, u, std::vector<V>{v}, n, rng, eps).front();
}

/// J_n(u + eps v) - J_n(u) on common samples, with its standard error.
template <SpatialField U, SpatialField V>
McEstimate loss_gap(const ProblemSpec& problem, const U& u, const V& v, double eps, long n, RngStream& rng) {
  const ResidualSample sample(problem, n, rng);
  const ResidualEval ue = evaluate_on(problem, u, sample);
  const ResidualEval ve = evaluate_on(problem, v, sample);
  const Eigen::VectorXd base = combined_losses(problem, sample, ue, 0.0, ve);
  return mean_and_error(combined_losses(problem, sample, ue, eps, ve) - base);
}

}  // namespace sdr
