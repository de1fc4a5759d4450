#include "ergo/systems.hpp"

#include <algorithm>
#include <cmath>

#include "ergo/error.hpp"

namespace ergo {

void ControlBounds::validate() const {
  require(u_max > 0.0, "ControlBounds: u_max must be positive");
  require(d_max >= 0.0, "ControlBounds: d_max must be nonnegative");
  require(d_max <= u_max, "ControlBounds: d_max must not exceed u_max");
}

ClampStats& clamp_stats() {
  thread_local ClampStats stats;
  return stats;
}

double clamp_control(double u, const ControlBounds& b) {
  if (u > b.u_max || u < -b.u_max) {
    ++clamp_stats().control_clamps;
    return std::clamp(u, -b.u_max, b.u_max);
  }
  return u;
}

double clamp_disturbance(double d, const ControlBounds& b) {
  if (d > b.d_max || d < -b.d_max) {
    ++clamp_stats().disturbance_clamps;
    return std::clamp(d, -b.d_max, b.d_max);
  }
  return d;
}

PlantState plant_deriv(const PlantState& x, double u, double d, const ControlBounds& b) {
  return PlantState{x.x2, clamp_control(u, b) + clamp_disturbance(d, b)};
}

FullState euler_step(const FullState& s, double u, double d, double dt,
                     const ControlBounds& b, const BasisSet& basis,
                     const CoeffVector& phi_k) {
  require(dt > 0.0, "euler_step: dt must be positive");
  require(s.z.size() == basis.size() && phi_k.size() == basis.size(),
          "euler_step: augmented state not aligned with basis");
  require(basis.dim() == 1, "euler_step: the plant explores a one-dimensional space");

  FullState next;
  const PlantState rate = plant_deriv(s.x, u, d, b);
  next.x.x1 = s.x.x1 + rate.x1 * dt;
  next.x.x2 = s.x.x2 + rate.x2 * dt;

  const double m = exploration_map(s.x);
  next.z.z.resize(basis.size());
  basis.eval_all(std::span<const double>(&m, 1), next.z.z);
  for (std::size_t j = 0; j < next.z.size(); ++j) {
    next.z[j] = s.z[j] + (next.z[j] - phi_k[j]) * dt;
  }
  next.t = s.t + dt;
  return next;
}

FullState initial_state(const PlantState& x0, const BasisSet& basis, double t0) {
  return FullState{x0, AugmentedState::zeros(basis.size()), t0};
}

}  // namespace ergo
