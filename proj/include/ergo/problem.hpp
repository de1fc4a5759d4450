#pragma once

#include <string>
#include <vector>

#include "ergo/ergodic.hpp"
#include "ergo/objective.hpp"
#include "ergo/systems.hpp"

namespace ergo {

// Everything that defines one ergodic game instance: basis, target density,
// bounds and cost weights. horizon is t_f - t0 of the game solved by the
// controllers (the receding window), not the length of a simulated trial.
struct Problem {
  BasisSet basis;
  InfoDistribution info;
  CoeffVector phi_k;
  ControlBounds bounds;
  CostParams cost;

  Problem(BasisSet b, InfoDistribution phi, ControlBounds cb, CostParams cp);

  double horizon() const { return cost.horizon_duration; }

  // Modes fed to value networks: every mode except k = 0, whose augmented
  // coordinate stays identically zero for a normalized density.
  const std::vector<std::size_t>& active_modes() const { return active_; }

 private:
  std::vector<std::size_t> active_;
};

}  // namespace ergo
