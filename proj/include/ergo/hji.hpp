#pragma once

// Value function approximation for the ergodic Hamilton-Jacobi-Isaacs
// equation: input layout, closed-form Hamiltonian optimizers, the
// terminal/residual losses and the backward-in-time curriculum trainer.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ergo/problem.hpp"
#include "ergo/value_net.hpp"

namespace ergo {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

// Sampling ranges for training; also defines the network's input scaling.
struct SampleBox {
  Interval x1{0.0, 1.0};
  Interval x2{-1.5, 1.5};
  Interval z{-0.5, 0.5};  // every active mode
};

// Problem configuration a trained net belongs to. Two nets are compatible
// with a problem only if fingerprint() strings match.
struct NetMetadata {
  int modes_per_axis = 2;
  std::vector<double> lengths{1.0};
  std::string info;             // InfoDistribution::describe()
  std::vector<double> phi_k;
  double u_max = 5.0;
  double d_max = 2.0;
  CostParams cost;
  double t0 = 0.0;
  double tf = 1.0;
  SampleBox box;
  std::uint64_t seed = 0;

  static NetMetadata from_problem(const Problem& p, const SampleBox& box, std::uint64_t seed);

  // Canonical text over the problem-defining fields (seed and sample box
  // excluded).
  std::string fingerprint() const;
};

// Sine network plus the problem it approximates.
struct ValueNet {
  SineNetwork net;
  NetMetadata meta;

  // Throws FingerprintMismatch if `p` is not the problem this net was built for.
  void check_compatible(const Problem& p) const;
};

// Input layout: [x1, x2, z_k for each active mode, t].
struct SamplePoint {
  PlantState x;
  std::vector<double> z;  // active modes only
  double t = 0.0;
};

struct ValueGradients {
  double value = 0.0;
  double dx1 = 0.0;
  double dx2 = 0.0;
  std::vector<double> dz;  // active modes
  double dt = 0.0;
};

Eigen::VectorXd net_input(const SamplePoint& s);
// Active-mode coordinates of a full augmented state.
std::vector<double> active_z(const Problem& p, const AugmentedState& z);

ValueNet make_value_net(const Problem& p, const SampleBox& box, std::vector<int> hidden,
                        double omega, std::uint64_t seed);

// Exact input gradients from the network's tangent propagation.
ValueGradients net_eval_with_grads(const ValueNet& net, const SamplePoint& s);

// u* = clip(-p / (2R), -u_max, u_max): unique minimizer of u R u + p u.
double opt_control_from_costate(double costate, double R, double u_max);

// -sign(u) d_max, with +d_max at u = 0 (the same tie-break as d* at a zero costate).
double worst_case_disturbance(double u_star, double d_max);

struct HamiltonianValue {
  double value = 0.0;
  double u = 0.0;
  double d = 0.0;
};

// H-hat(x, z, u, d) for explicit control and disturbance.
double hamiltonian(const SamplePoint& s, const ValueGradients& g, double u, double d,
                   const Problem& p);

// H-hat at the closed-form saddle: u* from the costate dV/dx2 and
// d* = d_max sign(dV/dx2).
HamiltonianValue hamiltonian_optimal(const SamplePoint& s, const ValueGradients& g,
                                     const Problem& p);

struct LossValue {
  double total = 0.0;
  double terminal = 0.0;      // l_B
  double differential = 0.0;  // l_D
};

// l_B: mean |V(x, z, t_f) - terminal value|; l_D: mean |dV/dt + H*| over the
// interior samples; total = l_B + lambda l_D. Throws on empty sets.
LossValue loss_total(const ValueNet& net, const std::vector<SamplePoint>& interior,
                     const std::vector<SamplePoint>& terminal, double lambda,
                     const Problem& p);

// Same loss plus its exact gradient with respect to the parameters.
LossValue loss_and_gradient(const ValueNet& net, const std::vector<SamplePoint>& interior,
                            const std::vector<SamplePoint>& terminal, double lambda,
                            const Problem& p, Eigen::VectorXd& grad);

// Mean |dV/dt + H*| over the given points.
double mean_abs_residual(const ValueNet& net, const std::vector<SamplePoint>& pts,
                         const Problem& p);

// Mean |V(., t_f) - terminal value| over the given points (their t is forced
// to t_f).
double terminal_mae(const ValueNet& net, const std::vector<SamplePoint>& pts,
                    const Problem& p);

struct TrainConfig {
  double lambda = 0.1;
  int batch_interior = 512;
  int batch_terminal = 256;
  int iterations = 20000;
  double curriculum_fraction = 0.1;  // terminal-only warm-up
  double expansion_fraction = 0.6;   // share of the rest spent widening [t_lo, t_f]
  double learning_rate = 1e-4;
  double final_learning_rate = 1e-5;  // cosine decay target
  std::uint64_t seed = 0;
  SampleBox box;
  std::vector<int> hidden = {128, 128, 128};
  double omega = 30.0;
  int log_every = 100;

  // Acceptance thresholds recorded with the run.
  double max_terminal_mae_fraction = 0.02;
  double min_residual_reduction = 10.0;

  // Earliest sampled time at a given iteration: t_f during warm-up, then a
  // linear sweep down to t0, then t0.
  double earliest_time(int iteration, double t0, double tf) const;
  double learning_rate_at(int iteration) const;
  void validate() const;
};

struct LossRecord {
  int iteration = 0;
  double total = 0.0;
  double terminal = 0.0;
  double differential = 0.0;
  double t_lo = 0.0;
};

struct TrainResult {
  ValueNet net;
  std::vector<LossRecord> history;
  double initial_residual = 0.0;  // on the fixed evaluation sample
  double final_residual = 0.0;
  double final_terminal_mae = 0.0;
  double terminal_range = 0.0;
  bool thresholds_met = false;
};

// Uniform samples from the box with t in [t_lo, t_f].
std::vector<SamplePoint> sample_points(const Problem& p, const SampleBox& box, std::size_t count,
                                       double t_lo, double t_hi, std::uint64_t seed);

using TrainProgress = std::function<void(const LossRecord&)>;

// Deterministic given cfg.seed. Throws Divergence if the loss becomes NaN.
TrainResult train(const TrainConfig& cfg, const Problem& p, TrainProgress progress = {});

void write_loss_history_csv(const std::vector<LossRecord>& history, const std::string& path);

}  // namespace ergo
