#include "ergo/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "ergo/error.hpp"

namespace ergo {

QuadratureRule gauss_legendre(std::size_t n, double a, double b) {
  require(n >= 1, "gauss_legendre: need at least one node");
  require(b > a, "gauss_legendre: empty interval");

  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);

  // Roots are symmetric; solve for the upper half and mirror.
  const std::size_t m = (n + 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      // P_n'(x) from the three-term relation.
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = mid - half * x;
    rule.nodes[n - 1 - i] = mid + half * x;
    rule.weights[i] = half * w;
    rule.weights[n - 1 - i] = half * w;
  }
  return rule;
}

TensorGrid::TensorGrid(const std::vector<double>& lengths,
                       std::size_t nodes_per_axis)
    : dim_(lengths.size()) {
  require(dim_ >= 1, "TensorGrid: empty box");
  std::vector<QuadratureRule> rules;
  rules.reserve(dim_);
  for (double len : lengths) rules.push_back(gauss_legendre(nodes_per_axis, 0.0, len));

  std::size_t total = 1;
  for (std::size_t d = 0; d < dim_; ++d) total *= nodes_per_axis;
  points_.resize(total * dim_);
  weights_.resize(total);

  std::vector<std::size_t> idx(dim_, 0);
  for (std::size_t i = 0; i < total; ++i) {
    double w = 1.0;
    for (std::size_t d = 0; d < dim_; ++d) {
      points_[i * dim_ + d] = rules[d].nodes[idx[d]];
      w *= rules[d].weights[idx[d]];
    }
    weights_[i] = w;
    // Last axis varies fastest.
    for (std::size_t d = dim_; d-- > 0;) {
      if (++idx[d] < nodes_per_axis) break;
      idx[d] = 0;
    }
  }
}

}  // namespace ergo
