#include <doctest.h>

#include <cmath>

#include "ergo/error.hpp"
#include "ergo/harness.hpp"
#include "oracles.hpp"

using namespace ergo;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.modes_per_axis = 4;
  c.mpc.T = 20;
  c.mpc.iters = 3;
  c.mpc.step_u = c.mpc.step_d = 20.0;
  c.duration = 0.5;
  c.seeds = {0, 1, 2};
  c.cost_normalization = 0.5;
  return c;
}

}  // namespace

TEST_CASE("enum names round trip") {
  for (auto k : {AdversaryKind::kZero, AdversaryKind::kUniform, AdversaryKind::kGaussian,
                 AdversaryKind::kOpposing, AdversaryKind::kRangeWorst})
    CHECK(parse_adversary(to_string(k)) == k);
  for (auto k : {ControllerKind::kZero, ControllerKind::kMpc, ControllerKind::kReMpc, ControllerKind::kRange})
    CHECK(parse_controller(to_string(k)) == k);
  CHECK_THROWS_AS(parse_adversary("sideways"), InvalidArgument);
}

TEST_CASE("adversaries") {
  const ControlBounds b{5.0, 2.0};
  const FullState s = initial_state(PlantState{0.5, 0.0}, BasisSet(ExplorationSpace::unit(1), 2));

  SUBCASE("zero") {
    auto a = make_adversary(AdversaryKind::kZero, b, 0);
    CHECK(a->disturbance(s, 3.0) == 0.0);
  }
  SUBCASE("uniform draws are centred and bounded") {
    auto a = make_adversary(AdversaryKind::kUniform, b, 11);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
      const double d = a->disturbance(s, 0.0);
      REQUIRE(std::abs(d) <= b.d_max);
      sum += d;
    }
    CHECK(std::abs(sum / 100000) <= 0.02 * b.d_max);
  }
  SUBCASE("gaussian draws are clipped with spread d_max / 2") {
    auto a = make_adversary(AdversaryKind::kGaussian, b, 12);
    double sq = 0.0;
    int clipped = 0;
    for (int i = 0; i < 100000; ++i) {
      const double d = a->disturbance(s, 0.0);
      REQUIRE(std::abs(d) <= b.d_max);
      clipped += std::abs(d) == b.d_max;
      sq += d * d;
    }
    CHECK(clipped > 0);
    CHECK(std::sqrt(sq / 100000) < 0.5 * b.d_max);
    CHECK(std::sqrt(sq / 100000) > 0.4 * b.d_max);
  }
  SUBCASE("opposing") {
    auto a = make_adversary(AdversaryKind::kOpposing, b, 0);
    CHECK(a->disturbance(s, 1.3) == -b.d_max);
    CHECK(a->disturbance(s, -0.2) == b.d_max);
    CHECK(a->disturbance(s, 0.0) == b.d_max);
  }
  SUBCASE("range-worst needs a net") {
    CHECK_THROWS_AS(make_adversary(AdversaryKind::kRangeWorst, b, 0), InvalidArgument);
  }
  SUBCASE("reset replays the stream") {
    auto a = make_adversary(AdversaryKind::kUniform, b, 3);
    const double first = a->disturbance(s, 0.0);
    a->disturbance(s, 0.0);
    a->reset();
    CHECK(a->disturbance(s, 0.0) == first);
  }
}

TEST_CASE("resting agent reproduces the hand-computed metric") {
  const auto space = ExplorationSpace::unit(1);
  const Problem p(BasisSet(space, 6), InfoDistribution::uniform(space), ControlBounds{5.0, 2.0}, CostParams{});
  ZeroPolicy policy;
  auto adv = make_adversary(AdversaryKind::kZero, p.bounds, 0);
  RolloutOptions opt;
  opt.duration = 20.0;
  const RolloutRecord r = rollout(policy, *adv, initial_state(PlantState{0.5, 0.0}, p.basis), p, opt);
  CHECK(r.steps.size() == 2000);
  CHECK(r.final_x[0] == 0.5);
  CHECK(r.metric == doctest::Approx(0.4 + 2.0 / 17.0).epsilon(1e-9));
  CHECK(recompute_metric(r, p) == doctest::Approx(r.metric).epsilon(1e-9));
}

TEST_CASE("rollouts are deterministic and their metric is reproducible") {
  const ExperimentConfig cfg = small_config();
  const Problem p = cfg.problem(cfg.distributions.front());
  auto shared = std::make_shared<const Problem>(p);
  RolloutOptions opt{1.0, 0.01, 1.0, 5};
  auto run = [&] {
    auto policy = make_policy(ControllerKind::kReMpc, shared, cfg.mpc);
    auto adv = make_adversary(AdversaryKind::kUniform, p.bounds, 5);
    return rollout(*policy, *adv, initial_state(PlantState{0.3, 0.2}, p.basis), p, opt);
  };
  const RolloutRecord a = run(), b = run();
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(a.steps[i].x1 == b.steps[i].x1);
    CHECK(a.steps[i].u == b.steps[i].u);
    CHECK(a.steps[i].d == b.steps[i].d);
    CHECK(std::abs(a.steps[i].u) <= p.bounds.u_max);
    CHECK(std::abs(a.steps[i].d) <= p.bounds.d_max);
  }
  CHECK(a.metric == b.metric);
  CHECK(recompute_metric(a, p) == doctest::Approx(a.metric).epsilon(1e-9));
  CHECK(a.cost.total > 0.0);
}

TEST_CASE("initial states depend only on the seed") {
  InitSampler s;
  const PlantState a = s.sample(4, 1.0), b = s.sample(4, 1.0), c = s.sample(5, 1.0);
  CHECK(a.x1 == b.x1);
  CHECK(a.x2 == b.x2);
  CHECK(a.x1 != c.x1);
  CHECK(a.x1 >= 0.1);
  CHECK(a.x1 <= 0.9);
}

TEST_CASE("config JSON round trip") {
  ExperimentConfig c = small_config();
  c.distributions.push_back(InfoSpec{"uniform", {{"kind", "uniform"}}});
  const nlohmann::json j = c.to_json();
  const ExperimentConfig back = ExperimentConfig::from_json(j);
  CHECK(back.to_json() == j);
  CHECK(back.modes_per_axis == 4);
  CHECK(back.seeds == c.seeds);
  CHECK(back.distributions.size() == 2);

  nlohmann::json seeds = j;
  seeds["experiment"]["seeds"] = {{"first", 10}, {"count", 3}};
  CHECK(ExperimentConfig::from_json(seeds).seeds == std::vector<std::uint64_t>{10, 11, 12});

  TrainConfig t;
  t.iterations = 123;
  t.hidden = {4, 5};
  t.box.z = {-0.2, 0.3};
  const TrainConfig tb = train_config_from_json(to_json(t));
  CHECK(tb.iterations == 123);
  CHECK(tb.hidden == t.hidden);
  CHECK(tb.box.z.hi == 0.3);
  CHECK(to_json(tb) == to_json(t));
}

TEST_CASE("information specs") {
  const auto space = ExplorationSpace::unit(1);
  CHECK(make_info({{"kind", "uniform"}}, space).kind() == InfoDistribution::Kind::kUniform);
  const InfoDistribution g = make_info(
      {{"kind", "gaussian-mixture"}, {"components", {{{"mean", {0.3}}, {"std", 0.1}, {"weight", 2.0}}}}}, space);
  REQUIRE(g.components().size() == 1);
  CHECK(g.components()[0].mean[0] == 0.3);
  CHECK_THROWS_AS(make_info({{"kind", "spiral"}}, space), InvalidArgument);
}

TEST_CASE("comparison output does not depend on the thread count") {
  const ExperimentConfig cfg = small_config();
  const CompareResult one = compare_experiment(cfg, 1);
  const CompareResult many = compare_experiment(cfg, 4);
  CHECK(one.runs.size() == 2 * 4 * 3);
  CHECK(one.cells.size() == 2 * 4);
  CHECK(compare_runs_csv(one, cfg) == compare_runs_csv(many, cfg));
  CHECK(compare_summary_csv(one, cfg) == compare_summary_csv(many, cfg));
  CHECK(compare_runs_csv(one, cfg).rfind("# config:", 0) == 0);
  const CellSummary* cell = one.find("bimodal", "mpc", "zero");
  REQUIRE(cell != nullptr);
  CHECK(cell->runs == 3);
  CHECK(cell->failures == 0);
  CHECK(cell->metric_min <= cell->metric_median);
  CHECK(cell->metric_median <= cell->metric_max);
}

TEST_CASE("median") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}

TEST_CASE("density reconstruction") {
  const auto space = ExplorationSpace::unit(1);
  const BasisSet b(space, 12);
  SUBCASE("only c_0 gives a constant") {
    CoeffVector c{std::vector<double>(12, 0.0)};
    c[0] = 1.0;
    for (double v : reconstruct_density(c, b, 50).value) CHECK(v == doctest::Approx(1.0));
  }
  SUBCASE("information coefficients reproduce the density up to truncation") {
    const InfoDistribution phi = InfoDistribution::bimodal(space);
    const DensityGrid g = reconstruct_density(info_coeffs(b, phi), b, 101);
    REQUIRE(g.m.size() == 101);
    double err = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < g.m.size(); ++i) {
      const double m = g.m[i];
      err = std::max(err, std::abs(g.value[i] - phi.density(std::span<const double>(&m, 1))));
      peak = std::max(peak, g.value[i]);
    }
    CHECK(err < 0.05 * peak);
  }
  SUBCASE("coefficients from an augmented state") {
    const CoeffVector phi{std::vector<double>(12, 0.1)};
    AugmentedState z = AugmentedState::zeros(12);
    z[3] = 2.0;
    const CoeffVector c = coeffs_from_aug(z, 4.0, phi);
    CHECK(c[3] == doctest::Approx(0.6));
    CHECK(c[0] == doctest::Approx(0.1));
  }
}

TEST_CASE("sublevel sets") {
  const auto space = ExplorationSpace::unit(1);
  const Problem p(BasisSet(space, 2), InfoDistribution::bimodal(space), ControlBounds{5.0, 2.0}, CostParams{});
  ValueNet net = make_value_net(p, SampleBox{}, {8, 8}, 3.0, 0);
  const std::vector<double> z{0.1};
  const Interval x1{0.0, 1.0}, x2{-1.0, 1.0};

  // A constant nonnegative net.
  ValueNet flat = net;
  flat.net.mutable_parameters().tail(9).setZero();
  flat.net.mutable_parameters()[flat.net.mutable_parameters().size() - 1] = 0.2;
  const LevelSetGrid empty = levelset_slice(flat, -1.0, z, 0.5, x1, x2, 11, 9);
  for (unsigned char m : empty.member) CHECK(m == 0);

  const LevelSetGrid full = levelset_slice(net, 1e9, z, 0.5, x1, x2, 11, 9);
  for (unsigned char m : full.member) CHECK(m == 1);

  const LevelSetGrid lo = levelset_slice(net, -0.05, z, 0.5, x1, x2, 21, 17);
  const LevelSetGrid hi = levelset_slice(net, 0.05, z, 0.5, x1, x2, 21, 17);
  for (std::size_t i = 0; i < lo.member.size(); ++i) CHECK((!lo.member[i] || hi.member[i]));
  CHECK(lo.x1.front() == 0.0);
  CHECK(lo.x2.back() == 1.0);
}
