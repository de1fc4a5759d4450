#pragma once

// Running cost, boundary barrier, terminal ergodic value and whole-trajectory
// cost accounting.

#include <vector>

#include "ergo/ergodic.hpp"
#include "ergo/systems.hpp"

namespace ergo {

struct CostParams {
  double q = 1.0;                 // running ergodic weight
  double R = 0.05;                // control weight
  double barrier_weight = 100.0;
  double barrier_margin = 0.0;    // m
  double horizon_duration = 1.0;  // t_f - t0 (s)

  void validate() const;
};

struct CostBreakdown {
  double running_ergodic = 0.0;
  double control_effort = 0.0;
  double barrier = 0.0;
  double terminal_ergodic = 0.0;
  double terminal_h = 0.0;
  double total = 0.0;
};

// Squared hinge outside [margin, L - margin] on position.
double barrier(const PlantState& x, const ExplorationSpace& space, const CostParams& p);

// d barrier / d x1.
double barrier_grad(const PlantState& x, const ExplorationSpace& space, const CostParams& p);

// q sum Lambda_k z_k^2 + u R u + barrier(x).
double running_cost(const PlantState& x, std::span<const double> z, double u,
                    const BasisSet& basis, const CostParams& p);

// (1/horizon_duration) sum Lambda_k z_k^2 + h(x), with h = 0.
double terminal_value(std::span<const double> z, const CostParams& p, const BasisSet& basis);

// One closed-loop step as stored by the harness. The state is the one the
// step started from; u is the control applied during the step.
struct StepRecord {
  double t = 0.0;
  double x1 = 0.0;
  double x2 = 0.0;
  double u = 0.0;
  double d = 0.0;
  double running_cost = 0.0;
};

// Minimal trace needed for cost accounting.
struct CostTrace {
  double dt = 0.0;
  std::vector<PlantState> states;            // n + 1 states
  std::vector<std::vector<double>> z;        // n + 1 augmented states
  std::vector<double> controls;              // n controls
};

// Left-Riemann running cost (divided by `normalization`) plus the terminal
// ergodic value over the trace's duration.
CostBreakdown trajectory_cost(const CostTrace& trace, const CostParams& p,
                              const BasisSet& basis, double normalization);

}  // namespace ergo
