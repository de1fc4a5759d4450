#include "ergo/problem.hpp"

#include "ergo/error.hpp"

namespace ergo {

Problem::Problem(BasisSet b, InfoDistribution phi, ControlBounds cb, CostParams cp)
    : basis(std::move(b)),
      info(std::move(phi)),
      phi_k(info_coeffs(basis, info)),
      bounds(cb),
      cost(cp) {
  bounds.validate();
  cost.validate();
  for (std::size_t j = 1; j < basis.size(); ++j) active_.push_back(j);
}

}  // namespace ergo
