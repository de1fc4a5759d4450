#include <doctest.h>

#include <cmath>
#include <random>

#include "ergo/controllers.hpp"
#include "ergo/error.hpp"

using namespace ergo;

namespace {

Problem uniform_problem(int modes = 6, double d_max = 2.0, double q = 1.0) {
  const auto space = ExplorationSpace::unit(1);
  CostParams c;
  c.q = q;
  return Problem(BasisSet(space, modes), InfoDistribution::uniform(space), ControlBounds{5.0, d_max}, c);
}

Problem bimodal_problem(double d_max = 2.0) {
  const auto space = ExplorationSpace::unit(1);
  return Problem(BasisSet(space, 4), InfoDistribution::bimodal(space), ControlBounds{5.0, d_max},
                 CostParams{});
}

// Target coefficients equal to the basis at m, so a resting agent at m has z_dot = 0.
void match_at(Problem& p, double m) {
  p.basis.eval_all(std::span<const double>(&m, 1), p.phi_k.values);
}

FullState random_state(std::mt19937_64& rng, const Problem& p) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  FullState s = initial_state(PlantState{0.1 + 0.8 * u(rng), 2.0 * u(rng) - 1.0}, p.basis);
  for (std::size_t k = 1; k < s.z.size(); ++k) s.z[k] = 0.4 * u(rng) - 0.2;
  return s;
}

HorizonPlan random_plan(std::mt19937_64& rng, const Problem& p, std::size_t T) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  HorizonPlan plan = HorizonPlan::zeros(T);
  for (std::size_t i = 0; i < T; ++i) {
    plan.controls[i] = 0.8 * p.bounds.u_max * u(rng);
    plan.disturbances[i] = 0.8 * p.bounds.d_max * u(rng);
  }
  return plan;
}

}  // namespace

TEST_CASE("one-step predicted cost by hand") {
  const Problem p = uniform_problem(6, 2.0, 0.0);
  const FullState s = initial_state(PlantState{0.5, 0.0}, p.basis);
  const double expected = (1.0 / 0.1) * (0.2 + 1.0 / 17.0) * (2.0 * 0.01);
  CHECK(pred_rollout(s, HorizonPlan::zeros(1), 0.1, p) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.05176).epsilon(1e-4));
}

TEST_CASE("matched resting agent has zero predicted cost and zero control") {
  Problem p = uniform_problem(4, 2.0, 0.0);
  match_at(p, 0.5);
  const FullState s = initial_state(PlantState{0.5, 0.0}, p.basis);
  CHECK(std::abs(pred_rollout(s, HorizonPlan::zeros(20), 0.01, p)) < 1e-20);
  ReMPCConfig cfg;
  cfg.T = 20;
  cfg.iters = 5;
  CHECK(std::abs(mpc_step(s, HorizonPlan::zeros(20), cfg, p).control) < 1e-12);
}

TEST_CASE("disturbance entries are inert when d_max = 0") {
  const Problem p = bimodal_problem(0.0);
  std::mt19937_64 rng(1);
  const FullState s = random_state(rng, p);
  HorizonPlan a = random_plan(rng, uniform_problem(), 15);
  HorizonPlan b = a;
  for (double& d : b.disturbances) d = -3.0 * d + 1.0;
  CHECK(pred_rollout(s, a, 0.01, p) == pred_rollout(s, b, 0.01, p));
}

TEST_CASE("predicted cost rejects bad plans") {
  const Problem p = bimodal_problem();
  const FullState s = initial_state(PlantState{0.5, 0.0}, p.basis);
  CHECK_THROWS_AS(pred_rollout(s, HorizonPlan::zeros(0), 0.01, p), InvalidArgument);
  HorizonPlan ragged = HorizonPlan::zeros(3);
  ragged.disturbances.pop_back();
  CHECK_THROWS_AS(pred_rollout(s, ragged, 0.01, p), InvalidArgument);
}

TEST_CASE("adjoint gradients match central differences") {
  const Problem p = bimodal_problem();
  std::mt19937_64 rng(17);
  for (int inst = 0; inst < 10; ++inst) {
    const FullState s = random_state(rng, p);
    HorizonPlan plan = random_plan(rng, p, 20);
    const RolloutGradient g = pred_rollout_grad(s, plan, 0.01, p);
    CHECK(g.cost == doctest::Approx(pred_rollout(s, plan, 0.01, p)).epsilon(1e-14));
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < 20; ++i) {
      for (int which = 0; which < 2; ++which) {
        auto& v = which == 0 ? plan.controls[i] : plan.disturbances[i];
        const double keep = v;
        v = keep + 1e-5;
        const double up = pred_rollout(s, plan, 0.01, p);
        v = keep - 1e-5;
        const double dn = pred_rollout(s, plan, 0.01, p);
        v = keep;
        const double fd = (up - dn) / 2e-5;
        const double an = which == 0 ? g.d_controls[i] : g.d_disturbances[i];
        worst = std::max(worst, std::abs(an - fd));
        scale = std::max(scale, std::abs(fd));
      }
    }
    CHECK(worst <= 1e-4 * scale);
  }
}

TEST_CASE("last control only pays its effort when q = 0") {
  const Problem p = uniform_problem(4, 2.0, 0.0);
  std::mt19937_64 rng(5);
  const FullState s = random_state(rng, p);
  const HorizonPlan plan = random_plan(rng, p, 12);
  const RolloutGradient g = pred_rollout_grad(s, plan, 0.01, p);
  CHECK(g.d_controls.back() == doctest::Approx(2.0 * p.cost.R * plan.controls.back() * 0.01).epsilon(1e-12));
  CHECK(g.d_disturbances.back() == 0.0);
}

TEST_CASE("the terminal term alone still depends on the controls") {
  const auto space = ExplorationSpace::unit(1);
  CostParams c;
  c.q = 0.0;
  c.R = 1e-12;
  c.barrier_weight = 0.0;
  const Problem p(BasisSet(space, 4), InfoDistribution::bimodal(space), ControlBounds{5.0, 2.0}, c);
  std::mt19937_64 rng(6);
  const FullState s = random_state(rng, p);
  const RolloutGradient g = pred_rollout_grad(s, HorizonPlan::zeros(10), 0.01, p);
  double mx = 0.0;
  for (double v : g.d_controls) mx = std::max(mx, std::abs(v));
  CHECK(mx > 1e-8);
}

TEST_CASE("iters = 0 returns the shifted warm start") {
  const Problem p = bimodal_problem();
  ReMPCConfig cfg;
  cfg.T = 3;
  cfg.iters = 0;
  HorizonPlan plan{{1.0, 2.0, 3.0}, {0.5, -0.5, 0.25}};
  const FullState s = initial_state(PlantState{0.3, 0.0}, p.basis);
  const StepResult r = rempc_step(s, plan, cfg, p);
  CHECK(r.control == 2.0);
  CHECK(r.plan.controls == std::vector<double>{2.0, 3.0, 0.0});
  CHECK(r.plan.disturbances == std::vector<double>{-0.5, 0.25, 0.0});
  CHECK(mpc_step(s, plan, cfg, p).plan.disturbances == std::vector<double>{0.0, 0.0, 0.0});
  // A plan of the wrong length restarts from zeros.
  CHECK(rempc_step(s, HorizonPlan::zeros(7), cfg, p).plan.size() == 3);
}

TEST_CASE("MPC descent does not increase the predicted cost for a small step") {
  const Problem p = bimodal_problem();
  std::mt19937_64 rng(8);
  ReMPCConfig cfg;
  cfg.T = 30;
  cfg.iters = 15;
  cfg.step_u = 2.0;
  for (int inst = 0; inst < 5; ++inst) {
    IterateTrace trace;
    mpc_step(random_state(rng, p), HorizonPlan::zeros(30), cfg, p, &trace);
    REQUIRE(trace.costs.size() == 16);
    for (std::size_t i = 1; i < trace.costs.size(); ++i) CHECK(trace.costs[i] <= trace.costs[i - 1] + 1e-12);
    CHECK(trace.costs.back() < trace.costs.front());
  }
}

TEST_CASE("disturbance ascent does not decrease the predicted cost for a small step") {
  const Problem p = bimodal_problem();
  std::mt19937_64 rng(9);
  ReMPCConfig cfg;
  cfg.T = 30;
  cfg.iters = 15;
  cfg.step_u = 0.0;
  cfg.step_d = 2.0;
  for (int inst = 0; inst < 5; ++inst) {
    IterateTrace trace;
    rempc_step(random_state(rng, p), HorizonPlan::zeros(30), cfg, p, &trace);
    for (std::size_t i = 1; i < trace.costs.size(); ++i) CHECK(trace.costs[i] >= trace.costs[i - 1] - 1e-12);
    CHECK(trace.costs.back() > trace.costs.front());
  }
}

TEST_CASE("reMPC reduces to MPC without disturbance authority") {
  auto p = std::make_shared<const Problem>(bimodal_problem(0.0));
  ReMPCConfig cfg;
  cfg.T = 25;
  cfg.iters = 5;
  cfg.step_u = cfg.step_d = 20.0;
  MpcPolicy robust(p, cfg, true), plain(p, cfg, false);
  FullState a = initial_state(PlantState{0.2, 0.0}, p->basis), b = a;
  for (int i = 0; i < 50; ++i) {
    const double ua = robust.control(a), ub = plain.control(b);
    CHECK(ua == ub);
    a = euler_step(a, ua, 0.0, 0.01, p->bounds, p->basis, p->phi_k);
    b = euler_step(b, ub, 0.0, 0.01, p->bounds, p->basis, p->phi_k);
  }
  CHECK(a.x.x1 == b.x.x1);
}

TEST_CASE("planned sequences stay inside their boxes") {
  const Problem p = bimodal_problem();
  std::mt19937_64 rng(10);
  ReMPCConfig cfg;
  cfg.T = 20;
  cfg.iters = 10;
  cfg.step_u = cfg.step_d = 500.0;
  const StepResult r = rempc_step(random_state(rng, p), HorizonPlan::zeros(20), cfg, p);
  for (double u : r.plan.controls) CHECK(std::abs(u) <= p.bounds.u_max);
  for (double d : r.plan.disturbances) CHECK(std::abs(d) <= p.bounds.d_max);
}

TEST_CASE("value-gradient policy") {
  auto p = std::make_shared<const Problem>(bimodal_problem());
  auto net = std::make_shared<ValueNet>(make_value_net(*p, SampleBox{}, {8, 8}, 3.0, 3));
  // Zero output layer: dV/dx2 = 0, so u* = 0 and the tie-break gives +d_max.
  net->net.mutable_parameters().tail(9).setZero();
  const FullState s = initial_state(PlantState{0.4, 0.1}, p->basis);
  const RangeAction a = range_policy(*net, *p, s, 0.02);
  CHECK(a.control == 0.0);
  CHECK(a.disturbance == p->bounds.d_max);

  auto fresh = std::make_shared<const ValueNet>(make_value_net(*p, SampleBox{}, {8, 8}, 3.0, 4));
  RangePolicy policy(fresh, p);
  CHECK(std::abs(policy.control(s)) <= p->bounds.u_max);
  auto other = std::make_shared<const Problem>(uniform_problem(4));
  CHECK_THROWS_AS(RangePolicy(fresh, other), FingerprintMismatch);
}
