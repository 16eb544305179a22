#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "sdr/error.hpp"

namespace sdr {

/// n-point Gauss-Legendre rule on [-1, 1]. Nodes come from Newton iteration
/// on P_n started at the Chebyshev-like guess cos(pi (i + 3/4) / (n + 1/2)).
class GaussLegendre {
 public:
  explicit GaussLegendre(int n) : nodes_(n), weights_(n) {
    if (n < 1) throw InvalidArgument("Gauss-Legendre order must be >= 1");
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      // Recompute the derivative at the converged node for the weight.
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double w = 2.0 / ((1.0 - x * x) * dp * dp);
      nodes_[i] = -x;
      nodes_[n - 1 - i] = x;
      weights_[i] = w;
      weights_[n - 1 - i] = w;
    }
    if (n % 2 == 1) nodes_[n / 2] = 0.0;
  }

  int order() const { return static_cast<int>(nodes_.size()); }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }

  /// Composite rule: [a, b] split into `panels` equal panels.
  template <class F>
  double integrate(F&& f, double a, double b, int panels) const {
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
      const double mid = a + (p + 0.5) * h;
      double sum = 0.0;
      for (std::size_t i = 0; i < nodes_.size(); ++i) sum += weights_[i] * f(mid + 0.5 * h * nodes_[i]);
      total += 0.5 * h * sum;
    }
    return total;
  }

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

}  // namespace sdr
