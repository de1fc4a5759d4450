#pragma once

// Receding-horizon controllers (robust ergodic MPC and its disturbance-free
// variant), the value-gradient policy, and the Policy/Adversary contracts the
// simulation harness drives.

#include <memory>
#include <string>
#include <vector>

#include "ergo/hji.hpp"
#include "ergo/problem.hpp"

namespace ergo {

struct HorizonPlan {
  std::vector<double> controls;
  std::vector<double> disturbances;

  static HorizonPlan zeros(std::size_t T) {
    return {std::vector<double>(T, 0.0), std::vector<double>(T, 0.0)};
  }
  std::size_t size() const { return controls.size(); }
};

struct ReMPCConfig {
  int T = 100;
  double dt = 0.01;
  int iters = 30;
  double step_u = 0.5;
  double step_d = 0.5;

  void validate() const;
};

// Explicit-Euler prediction from s0 under the plan:
//   sum_{tau<T} g(x_tau, z_tau, u_tau) dt + (1/(T dt)) sum Lambda z_T^2.
// Controls and disturbances are clamped to their boxes inside the model.
double pred_rollout(const FullState& s0, const HorizonPlan& plan, double dt, const Problem& p);

struct RolloutGradient {
  double cost = 0.0;
  std::vector<double> d_controls;
  std::vector<double> d_disturbances;
};

// Cost and its exact gradient (reverse sweep through the Euler recursion).
RolloutGradient pred_rollout_grad(const FullState& s0, const HorizonPlan& plan, double dt,
                                  const Problem& p);

// Cost at the start of every inner iteration plus the cost of the final plan.
struct IterateTrace {
  std::vector<double> costs;
};

struct StepResult {
  double control = 0.0;
  HorizonPlan plan;
};

// One control cycle: shift the warm start, then `iters` simultaneous
// descent (u) / projected ascent (d) updates. Returns controls[0].
StepResult rempc_step(const FullState& s, HorizonPlan plan, const ReMPCConfig& cfg,
                      const Problem& p, IterateTrace* trace = nullptr);

// Same cycle with disturbances pinned to zero.
StepResult mpc_step(const FullState& s, HorizonPlan plan, const ReMPCConfig& cfg,
                    const Problem& p, IterateTrace* trace = nullptr);

// -- closed-loop contracts ---------------------------------------------------

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual void reset() {}
  // Output lies in [-u_max, u_max].
  virtual double control(const FullState& s) = 0;
};

class Adversary {
 public:
  virtual ~Adversary() = default;
  virtual std::string name() const = 0;
  virtual void reset() {}
  // Sees the control chosen for this step. Output lies in [-d_max, d_max].
  virtual double disturbance(const FullState& s, double u) = 0;
};

class ZeroPolicy final : public Policy {
 public:
  std::string name() const override { return "zero"; }
  double control(const FullState&) override { return 0.0; }
};

class MpcPolicy final : public Policy {
 public:
  // robust = true gives reMPC, false the disturbance-free MPC.
  MpcPolicy(std::shared_ptr<const Problem> p, ReMPCConfig cfg, bool robust);
  std::string name() const override { return robust_ ? "rempc" : "mpc"; }
  void reset() override;
  double control(const FullState& s) override;
  const HorizonPlan& plan() const { return plan_; }

 private:
  std::shared_ptr<const Problem> problem_;
  ReMPCConfig cfg_;
  bool robust_;
  HorizonPlan plan_;
};

struct RangeAction {
  double control = 0.0;
  double disturbance = 0.0;
};

// u* from the costate dV/dx2 and the matching worst-case d*, evaluated at
// the configured interior query time. z is clamped to the net's sample box.
RangeAction range_policy(const ValueNet& net, const Problem& p, const FullState& s,
                         double query_time);

class RangePolicy final : public Policy {
 public:
  RangePolicy(std::shared_ptr<const ValueNet> net, std::shared_ptr<const Problem> p,
              double query_time = 0.02);
  std::string name() const override { return "range"; }
  double control(const FullState& s) override;

 private:
  std::shared_ptr<const ValueNet> net_;
  std::shared_ptr<const Problem> problem_;
  double query_time_;
};

}  // namespace ergo
