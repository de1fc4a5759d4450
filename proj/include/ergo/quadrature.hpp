#pragma once

#include <cstddef>
#include <vector>

namespace ergo {

// One-dimensional quadrature rule: sum_i weights[i] * f(nodes[i]).
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre rule with n nodes on [a, b]. Nodes are found by Newton
// iteration on P_n started from the Chebyshev-like initial guesses.
QuadratureRule gauss_legendre(std::size_t n, double a, double b);

// Tensor-product grid over a box. Each node is a point of dim() coordinates
// stored contiguously in `points`.
class TensorGrid {
 public:
  TensorGrid(const std::vector<double>& lengths, std::size_t nodes_per_axis);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }
  const double* point(std::size_t i) const { return points_.data() + i * dim_; }
  double weight(std::size_t i) const { return weights_[i]; }

 private:
  std::size_t dim_;
  std::vector<double> points_;
  std::vector<double> weights_;
};

}  // namespace ergo
