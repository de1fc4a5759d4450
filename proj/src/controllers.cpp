#include "ergo/controllers.hpp"

#include <algorithm>
#include <cmath>

#include "ergo/error.hpp"

namespace ergo {

void ReMPCConfig::validate() const {
  require(T >= 1, "ReMPCConfig: T must be >= 1");
  require(dt > 0.0, "ReMPCConfig: dt must be positive");
  require(iters >= 0, "ReMPCConfig: iters must be nonnegative");
  require(step_u >= 0.0 && step_d >= 0.0, "ReMPCConfig: step sizes must be nonnegative");
}

namespace {

struct Prediction {
  std::size_t K = 0;
  std::vector<double> x1, x2;  // T + 1
  std::vector<double> z;       // (T + 1) * K
  std::vector<double> u, d;    // T, clamped
  double cost = 0.0;
};

Prediction predict(const FullState& s0, const HorizonPlan& plan, double dt, const Problem& p) {
  const std::size_t T = plan.controls.size();
  require(T >= 1, "pred_rollout: empty plan");
  require(plan.disturbances.size() == T, "pred_rollout: plan sequences differ in length");
  require(dt > 0.0, "pred_rollout: dt must be positive");
  require(s0.z.size() == p.basis.size(), "pred_rollout: augmented state not aligned with basis");

  const std::size_t K = p.basis.size();
  Prediction pr;
  pr.K = K;
  pr.x1.resize(T + 1);
  pr.x2.resize(T + 1);
  pr.z.resize((T + 1) * K);
  pr.u.resize(T);
  pr.d.resize(T);
  pr.x1[0] = s0.x.x1;
  pr.x2[0] = s0.x.x2;
  std::copy(s0.z.z.begin(), s0.z.z.end(), pr.z.begin());

  std::vector<double> f(K);
  double running = 0.0;
  for (std::size_t tau = 0; tau < T; ++tau) {
    const double u = std::clamp(plan.controls[tau], -p.bounds.u_max, p.bounds.u_max);
    const double d = std::clamp(plan.disturbances[tau], -p.bounds.d_max, p.bounds.d_max);
    pr.u[tau] = u;
    pr.d[tau] = d;
    const double* z = pr.z.data() + tau * K;
    const PlantState x{pr.x1[tau], pr.x2[tau]};
    running += running_cost(x, std::span<const double>(z, K), u, p.basis, p.cost) * dt;

    pr.x1[tau + 1] = x.x1 + x.x2 * dt;
    pr.x2[tau + 1] = x.x2 + (u + d) * dt;
    p.basis.eval_all(std::span<const double>(&pr.x1[tau], 1), f);
    double* zn = pr.z.data() + (tau + 1) * K;
    for (std::size_t j = 0; j < K; ++j) zn[j] = z[j] + (f[j] - p.phi_k[j]) * dt;
  }
  const double horizon = static_cast<double>(T) * dt;
  const std::span<const double> zT(pr.z.data() + T * K, K);
  pr.cost = running + weighted_square_norm(zT, p.basis) / horizon;
  return pr;
}

}  // namespace

double pred_rollout(const FullState& s0, const HorizonPlan& plan, double dt, const Problem& p) {
  return predict(s0, plan, dt, p).cost;
}

RolloutGradient pred_rollout_grad(const FullState& s0, const HorizonPlan& plan, double dt,
                                  const Problem& p) {
  const Prediction pr = predict(s0, plan, dt, p);
  const std::size_t T = plan.controls.size();
  const std::size_t K = pr.K;
  const double horizon = static_cast<double>(T) * dt;

  RolloutGradient out;
  out.cost = pr.cost;
  out.d_controls.resize(T);
  out.d_disturbances.resize(T);

  // Costates of x1, x2 and z at step tau + 1, swept backwards.
  double lx1 = 0.0, lx2 = 0.0;
  std::vector<double> lz(K);
  const double* zT = pr.z.data() + T * K;
  for (std::size_t j = 0; j < K; ++j) lz[j] = 2.0 * p.basis.weight(j) * zT[j] / horizon;

  std::vector<double> f(K), df(K);
  for (std::size_t tau = T; tau-- > 0;) {
    const double u = pr.u[tau];
    const bool u_free = std::abs(plan.controls[tau]) <= p.bounds.u_max;
    const bool d_free = std::abs(plan.disturbances[tau]) <= p.bounds.d_max;
    out.d_controls[tau] = u_free ? (2.0 * p.cost.R * u * dt + lx2 * dt) : 0.0;
    out.d_disturbances[tau] = d_free ? lx2 * dt : 0.0;

    const PlantState x{pr.x1[tau], pr.x2[tau]};
    p.basis.eval_all_with_grad(std::span<const double>(&pr.x1[tau], 1), f, df);
    double transport = 0.0;
    for (std::size_t j = 0; j < K; ++j) transport += lz[j] * df[j];

    const double* z = pr.z.data() + tau * K;
    const double new_lx1 = lx1 + (transport + barrier_grad(x, p.basis.space(), p.cost)) * dt;
    const double new_lx2 = lx2 + lx1 * dt;
    for (std::size_t j = 0; j < K; ++j) {
      lz[j] += 2.0 * p.cost.q * p.basis.weight(j) * z[j] * dt;
    }
    lx1 = new_lx1;
    lx2 = new_lx2;
  }
  return out;
}

namespace {

HorizonPlan shifted(HorizonPlan plan, std::size_t T) {
  if (plan.controls.size() != T || plan.disturbances.size() != T) return HorizonPlan::zeros(T);
  std::rotate(plan.controls.begin(), plan.controls.begin() + 1, plan.controls.end());
  std::rotate(plan.disturbances.begin(), plan.disturbances.begin() + 1, plan.disturbances.end());
  plan.controls.back() = 0.0;
  plan.disturbances.back() = 0.0;
  return plan;
}

StepResult control_cycle(const FullState& s, HorizonPlan plan, const ReMPCConfig& cfg,
                         const Problem& p, bool robust, IterateTrace* trace) {
  cfg.validate();
  const auto T = static_cast<std::size_t>(cfg.T);
  plan = shifted(std::move(plan), T);
  if (!robust) std::fill(plan.disturbances.begin(), plan.disturbances.end(), 0.0);

  const double u_max = p.bounds.u_max;
  const double d_max = p.bounds.d_max;
  for (int it = 0; it < cfg.iters; ++it) {
    const RolloutGradient g = pred_rollout_grad(s, plan, cfg.dt, p);
    if (trace) trace->costs.push_back(g.cost);
    for (std::size_t i = 0; i < T; ++i) {
      plan.controls[i] = std::clamp(plan.controls[i] - cfg.step_u * g.d_controls[i], -u_max, u_max);
      if (robust) {
        plan.disturbances[i] =
            std::clamp(plan.disturbances[i] + cfg.step_d * g.d_disturbances[i], -d_max, d_max);
      }
    }
  }
  if (trace) trace->costs.push_back(pred_rollout(s, plan, cfg.dt, p));
  return StepResult{plan.controls.front(), std::move(plan)};
}

}  // namespace

StepResult rempc_step(const FullState& s, HorizonPlan plan, const ReMPCConfig& cfg,
                      const Problem& p, IterateTrace* trace) {
  return control_cycle(s, std::move(plan), cfg, p, true, trace);
}

StepResult mpc_step(const FullState& s, HorizonPlan plan, const ReMPCConfig& cfg,
                    const Problem& p, IterateTrace* trace) {
  return control_cycle(s, std::move(plan), cfg, p, false, trace);
}

MpcPolicy::MpcPolicy(std::shared_ptr<const Problem> p, ReMPCConfig cfg, bool robust)
    : problem_(std::move(p)), cfg_(cfg), robust_(robust) {
  cfg_.validate();
  reset();
}

void MpcPolicy::reset() { plan_ = HorizonPlan::zeros(static_cast<std::size_t>(cfg_.T)); }

double MpcPolicy::control(const FullState& s) {
  StepResult r = robust_ ? rempc_step(s, std::move(plan_), cfg_, *problem_)
                         : mpc_step(s, std::move(plan_), cfg_, *problem_);
  plan_ = std::move(r.plan);
  return r.control;
}

RangeAction range_policy(const ValueNet& net, const Problem& p, const FullState& s,
                         double query_time) {
  SamplePoint pt;
  pt.x = s.x;
  pt.z = active_z(p, s.z);
  for (double& z : pt.z) z = std::clamp(z, net.meta.box.z.lo, net.meta.box.z.hi);
  pt.t = query_time;
  require(static_cast<int>(pt.z.size()) + 3 == net.net.input_dim(),
          "range_policy: value net input does not match the problem");
  const ValueGradients g = net_eval_with_grads(net, pt);
  RangeAction a;
  a.control = opt_control_from_costate(g.dx2, p.cost.R, p.bounds.u_max);
  a.disturbance = g.dx2 < 0.0 ? -p.bounds.d_max : p.bounds.d_max;
  return a;
}

RangePolicy::RangePolicy(std::shared_ptr<const ValueNet> net, std::shared_ptr<const Problem> p,
                         double query_time)
    : net_(std::move(net)), problem_(std::move(p)), query_time_(query_time) {
  require(net_ != nullptr, "RangePolicy: missing value net");
  net_->check_compatible(*problem_);
}

double RangePolicy::control(const FullState& s) {
  return range_policy(*net_, *problem_, s, query_time_).control;
}

}  // namespace ergo
