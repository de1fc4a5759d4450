#pragma once

// Single-axis double integrator with bounded control and disturbance, the
// exploration map, and the explicit-Euler step of the combined (x, z, t)
// state.

#include <array>

#include "ergo/ergodic.hpp"

namespace ergo {

struct PlantState {
  double x1 = 0.0;  // position (m)
  double x2 = 0.0;  // velocity (m/s)
};

struct ControlBounds {
  double u_max = 5.0;
  double d_max = 2.0;

  // d_max = ratio * u_max.
  static ControlBounds from_ratio(double u_max, double ratio = 0.4) {
    return ControlBounds{u_max, ratio * u_max};
  }
  void validate() const;
};

struct FullState {
  PlantState x;
  AugmentedState z;
  double t = 0.0;
};

// Counts how often plant_deriv had to clamp its inputs. Thread-local.
struct ClampStats {
  long control_clamps = 0;
  long disturbance_clamps = 0;
};
ClampStats& clamp_stats();

double clamp_control(double u, const ControlBounds& b);
double clamp_disturbance(double d, const ControlBounds& b);

// (x2, u + d) with u and d clamped to their boxes first.
PlantState plant_deriv(const PlantState& x, double u, double d, const ControlBounds& b);

// Position selection.
inline double exploration_map(const PlantState& x) { return x.x1; }

// Explicit Euler on (x, z, t). The z update uses the pre-step position.
FullState euler_step(const FullState& s, double u, double d, double dt,
                     const ControlBounds& b, const BasisSet& basis,
                     const CoeffVector& phi_k);

// Start of a rollout: z = 0 for every mode, t = t0.
FullState initial_state(const PlantState& x0, const BasisSet& basis, double t0 = 0.0);

}  // namespace ergo
