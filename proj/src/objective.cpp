#include "ergo/objective.hpp"

#include <algorithm>
#include <cmath>

#include "ergo/error.hpp"

namespace ergo {

void CostParams::validate() const {
  require(q >= 0.0, "CostParams: q must be nonnegative");
  require(R > 0.0, "CostParams: R must be positive");
  require(barrier_weight >= 0.0, "CostParams: barrier_weight must be nonnegative");
  require(barrier_margin >= 0.0, "CostParams: barrier_margin must be nonnegative");
  require(horizon_duration > 0.0, "CostParams: horizon_duration must be positive");
}

double barrier(const PlantState& x, const ExplorationSpace& space, const CostParams& p) {
  const double upper = std::max(0.0, x.x1 - (space.lengths[0] - p.barrier_margin));
  const double lower = std::max(0.0, p.barrier_margin - x.x1);
  return p.barrier_weight * (upper * upper + lower * lower);
}

double barrier_grad(const PlantState& x, const ExplorationSpace& space, const CostParams& p) {
  const double upper = std::max(0.0, x.x1 - (space.lengths[0] - p.barrier_margin));
  const double lower = std::max(0.0, p.barrier_margin - x.x1);
  return 2.0 * p.barrier_weight * (upper - lower);
}

double running_cost(const PlantState& x, std::span<const double> z, double u,
                    const BasisSet& basis, const CostParams& p) {
  return p.q * weighted_square_norm(z, basis) + u * p.R * u + barrier(x, basis.space(), p);
}

double terminal_value(std::span<const double> z, const CostParams& p, const BasisSet& basis) {
  require(p.horizon_duration > 0.0, "terminal_value: horizon_duration must be positive");
  return weighted_square_norm(z, basis) / p.horizon_duration;
}

CostBreakdown trajectory_cost(const CostTrace& trace, const CostParams& p,
                              const BasisSet& basis, double normalization) {
  const std::size_t n = trace.controls.size();
  require(n >= 1, "trajectory_cost: empty rollout");
  require(trace.states.size() == n + 1 && trace.z.size() == n + 1,
          "trajectory_cost: trace lengths inconsistent");
  require(trace.dt > 0.0, "trajectory_cost: dt must be positive");
  require(normalization > 0.0, "trajectory_cost: normalization must be positive");

  CostBreakdown out;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = trace.controls[i];
    out.running_ergodic += p.q * weighted_square_norm(trace.z[i], basis) * trace.dt;
    out.control_effort += u * p.R * u * trace.dt;
    out.barrier += barrier(trace.states[i], basis.space(), p) * trace.dt;
  }
  out.running_ergodic /= normalization;
  out.control_effort /= normalization;
  out.barrier /= normalization;

  CostParams terminal = p;
  terminal.horizon_duration = trace.dt * static_cast<double>(n);
  out.terminal_ergodic = terminal_value(trace.z[n], terminal, basis);
  out.terminal_h = 0.0;
  out.total = out.running_ergodic + out.control_effort + out.barrier + out.terminal_ergodic +
              out.terminal_h;
  return out;
}

}  // namespace ergo
