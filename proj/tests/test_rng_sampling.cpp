#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "test_support.hpp"

namespace sdr {
namespace {

TEST(RngStream, EqualSeedAndStreamGiveEqualSequences) {
  RngStream a(42, StreamId::interior), b(42, StreamId::interior);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.normal(), b.normal());
}

TEST(RngStream, DifferentStreamsDiffer) {
  RngStream a(42, StreamId::interior), b(42, StreamId::boundary), c(43, StreamId::interior);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next_u64();
    same_ab += x == b.next_u64();
    same_ac += x == c.next_u64();
  }
  EXPECT_EQ(same_ab, 0);
  EXPECT_EQ(same_ac, 0);
}

TEST(RngStream, DerivedStreamsAreDistinctFromBaseIds) {
  RngStream base(1, StreamId::direction);
  RngStream d0 = RngStream::derived(1, StreamId::direction, 0);
  RngStream d1 = RngStream::derived(1, StreamId::direction, 1);
  EXPECT_NE(base.stream_id(), d0.stream_id());
  EXPECT_NE(d0.next_u64(), d1.next_u64());
}

TEST(RngStream, UniformIsOpenInterval) {
  RngStream r(3, StreamId::cli);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(RngStream, BelowCoversRangeEvenly) {
  RngStream r(5, StreamId::cli);
  std::array<long, 6> counts{};
  const long n = 60000;
  for (long i = 0; i < n; ++i) ++counts[r.below(6)];
  const double p = 1.0 / 6.0, sigma = std::sqrt(n * p * (1 - p));
  for (long c : counts) EXPECT_LT(std::abs(c - n * p), 4 * sigma);
}

// --- uniform_box ------------------------------------------------------------

TEST(UniformBox, CoordinatesInsideBox) {
  RngStream r(1, StreamId::interior);
  const Eigen::MatrixXd x = uniform_box(r, 0.0, 1.0, 2, 1000);
  EXPECT_GT(x.minCoeff(), 0.0);
  EXPECT_LT(x.maxCoeff(), 1.0);
}

TEST(UniformBox, MeanWithinFourSigma) {
  RngStream r(2, StreamId::interior);
  const long n = 100000;
  const double a = -2.0, b = 3.0;
  const Eigen::MatrixXd x = uniform_box(r, a, b, 1, n);
  const double sigma = (b - a) / std::sqrt(12.0 * n);
  EXPECT_LT(std::abs(x.mean() - 0.5 * (a + b)), 4 * sigma);
}

TEST(UniformBox, ReproducibleFromStream) {
  RngStream r1(9, StreamId::interior), r2(9, StreamId::interior);
  EXPECT_EQ(uniform_box(r1, 0, 1, 3, 50), uniform_box(r2, 0, 1, 3, 50));
}

TEST(UniformBox, RejectsInvalidArguments) {
  RngStream r(1, StreamId::interior);
  EXPECT_THROW(uniform_box(r, 1.0, 1.0, 2, 10), InvalidArgument);
  EXPECT_THROW(uniform_box(r, 2.0, 1.0, 2, 10), InvalidArgument);
  EXPECT_THROW(uniform_box(r, 0.0, 1.0, 0, 10), InvalidArgument);
  EXPECT_THROW(uniform_box(r, 0.0, 1.0, 2, 0), InvalidArgument);
}

// --- box_boundary ------------------------------------------------------------

TEST(BoxBoundary, OneDimensionalIsEndpoints) {
  RngStream r(1, StreamId::boundary);
  const Eigen::MatrixXd s = box_boundary(r, -1.0, 1.0, 1, 1000);
  int lo = 0, hi = 0;
  for (Eigen::Index j = 0; j < s.cols(); ++j) {
    ASSERT_TRUE(s(0, j) == -1.0 || s(0, j) == 1.0);
    (s(0, j) < 0 ? lo : hi)++;
  }
  EXPECT_GT(lo, 0);
  EXPECT_GT(hi, 0);
}

TEST(BoxBoundary, ExactlyOneCoordinateOnAFacet) {
  RngStream r(2, StreamId::boundary);
  const Eigen::MatrixXd s = box_boundary(r, 0.0, 1.0, 2, 2000);
  for (Eigen::Index j = 0; j < s.cols(); ++j) {
    int on = 0;
    for (int i = 0; i < 2; ++i) on += (s(i, j) == 0.0 || s(i, j) == 1.0);
    ASSERT_EQ(on, 1) << "column " << j;
  }
}

TEST(BoxBoundary, FacetCountsWithinBinomialBounds) {
  RngStream r(3, StreamId::boundary);
  const long n = 100000;
  const Eigen::MatrixXd s = box_boundary(r, 0.0, 1.0, 2, n);
  std::array<long, 4> counts{};
  for (Eigen::Index j = 0; j < s.cols(); ++j) {
    for (int i = 0; i < 2; ++i) {
      if (s(i, j) == 0.0) ++counts[2 * i];
      if (s(i, j) == 1.0) ++counts[2 * i + 1];
    }
  }
  const double sigma = std::sqrt(n * 0.25 * 0.75);
  for (long c : counts) EXPECT_LT(std::abs(c - n / 4.0), 4 * sigma);
}

// --- sphere / ball / normal ---------------------------------------------------

TEST(UniformSphere, UnitNorm) {
  RngStream r(1, StreamId::boundary);
  for (int d : {1, 2, 3, 10, 50}) {
    const Eigen::MatrixXd s = uniform_sphere(r, d, 10000);
    for (Eigen::Index j = 0; j < s.cols(); ++j) ASSERT_NEAR(s.col(j).norm(), 1.0, 1e-12);
  }
}

TEST(UniformSphere, OneDimensionalIsSign) {
  RngStream r(2, StreamId::boundary);
  const Eigen::MatrixXd s = uniform_sphere(r, 1, 500);
  for (Eigen::Index j = 0; j < s.cols(); ++j) ASSERT_TRUE(s(0, j) == 1.0 || s(0, j) == -1.0);
}

TEST(UniformSphere, CoordinateMeansNearZero) {
  RngStream r(3, StreamId::boundary);
  const long n = 100000;
  const Eigen::MatrixXd s = uniform_sphere(r, 3, n);
  for (int i = 0; i < 3; ++i) EXPECT_LT(std::abs(s.row(i).mean()), 4.0 / std::sqrt(n));
}

TEST(UniformBall, InsideUnitBall) {
  RngStream r(1, StreamId::interior);
  const Eigen::MatrixXd x = uniform_ball(r, 4, 10000);
  for (Eigen::Index j = 0; j < x.cols(); ++j) ASSERT_LT(x.col(j).norm(), 1.0);
}

TEST(UniformBall, RadiusPowerIsUniformKs) {
  RngStream r(2, StreamId::interior);
  const int d = 10;
  const long n = 100000;
  const Eigen::MatrixXd x = uniform_ball(r, d, n);
  std::vector<double> u(n);
  for (long j = 0; j < n; ++j) u[j] = std::pow(x.col(j).norm(), d);
  EXPECT_LT(test::ks_uniform(u), test::ks_critical_001(n));
}

TEST(UniformBall, KsDetectsWrongRadiusLaw) {
  // Negative control: radius drawn uniformly is not uniform in the ball.
  RngStream r(2, StreamId::interior);
  const long n = 100000;
  std::vector<double> u(n);
  for (long j = 0; j < n; ++j) u[j] = std::pow(r.uniform(), 10);
  EXPECT_GT(test::ks_uniform(u), test::ks_critical_001(n));
}

TEST(UniformBall, OneDimensionalMean) {
  RngStream r(3, StreamId::interior);
  const long n = 100000;
  const Eigen::MatrixXd x = uniform_ball(r, 1, n);
  EXPECT_LT(std::abs(x.mean()), 4.0 * std::sqrt(1.0 / 3.0 / n));
}

TEST(StandardNormal, MomentsAndReproducibility) {
  RngStream r(1, StreamId::stochastic), r2(1, StreamId::stochastic);
  const long n = 100000;
  const Eigen::MatrixXd z = standard_normal_vec(r, 1, n);
  const double mean = z.mean();
  const double var = (z.array() - mean).square().sum() / (n - 1);
  EXPECT_LT(std::abs(mean), 4.0 / std::sqrt(n));
  EXPECT_GE(var, 0.98);
  EXPECT_LE(var, 1.02);
  EXPECT_EQ(z, standard_normal_vec(r2, 1, n));
}

// --- domains ------------------------------------------------------------------

TEST(Domain, CutoffVanishesOnBoundaryAndMatchesFiniteDifferences) {
  RngStream r(4, StreamId::cli);
  for (const auto& dom : {DomainDescriptor::hypercube(0.0, 1.0, 2), DomainDescriptor::interval(-1.0, 1.0),
                          DomainDescriptor::unit_ball(3)}) {
    Eigen::VectorXd g(dom.dim);
    const Eigen::MatrixXd s = dom.sample_boundary(r, 50);
    for (Eigen::Index j = 0; j < s.cols(); ++j) EXPECT_NEAR(dom.cutoff(Eigen::VectorXd(s.col(j)), g), 0.0, 1e-12);
    const Eigen::MatrixXd x = dom.sample_interior(r, 20);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      Eigen::VectorXd p = x.col(j);
      const double c = dom.cutoff(p, g);
      EXPECT_GT(c, 0.0);
      EXPECT_TRUE(dom.contains(p));
      for (int i = 0; i < dom.dim; ++i) {
        Eigen::VectorXd tmp(dom.dim), q = p;
        q(i) += 1e-6;
        const double up = dom.cutoff(q, tmp);
        q(i) -= 2e-6;
        const double down = dom.cutoff(q, tmp);
        EXPECT_NEAR(g(i), (up - down) / 2e-6, 1e-8);
      }
    }
  }
}

}  // namespace
}  // namespace sdr
