#include "ergo/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <random>
#include <sstream>

#include "ergo/checkpoint.hpp"
#include "ergo/error.hpp"
#include "ergo/harness.hpp"
#include "ergo/quadrature.hpp"

namespace ergo {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

CheckReport new_report(std::string id, std::string title) {
  CheckReport r;
  r.id = std::move(id);
  r.title = std::move(title);
  return r;
}

// Pinned tolerances and sizes.
constexpr double kIdentityTol = 1e-9;
constexpr int kIdentityTrajectories = 100;
constexpr double kIdentitySeconds = 10.0;
constexpr double kStationaryTol = 1e-6;
constexpr double kAdjointTol = 1e-4;
constexpr double kAdjointFdStep = 1e-5;
constexpr int kAdjointInstances = 50;
constexpr int kAdjointHorizon = 20;
constexpr double kAdjointSeconds = 30.0;
constexpr int kMinimaxCases = 100;
constexpr int kMinimaxGrid = 201;
constexpr double kMinimaxSeconds = 10.0;
constexpr int kReductionSeeds = 8;
constexpr std::size_t kCompareMinSeeds = 16;
constexpr double kCompareUniformBand = 0.25;
constexpr double kCompareSeconds = 15.0 * 60.0;
constexpr double kPinnSeconds = 60.0 * 60.0;

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Problem unit_problem(const InfoDistribution& info, int N, ControlBounds b = {}, CostParams c = {}) {
  return Problem(BasisSet(info.space(), N), info, b, c);
}

Problem bimodal_problem(int N, ControlBounds b = ControlBounds::from_ratio(5.0, 0.4)) {
  return unit_problem(InfoDistribution::bimodal(ExplorationSpace::unit(1)), N, b);
}

// Random plant trajectory under a noisy centering controller.
struct RandomTrajectory {
  std::vector<PlantState> states;  // n + 1
  AugmentedState z;
};

RandomTrajectory random_trajectory(const Problem& p, std::uint64_t seed, int steps, double dt) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  FullState s = initial_state({0.1 + 0.8 * unit(rng), -0.5 + unit(rng)}, p.basis);
  RandomTrajectory out;
  out.states.push_back(s.x);
  for (int i = 0; i < steps; ++i) {
    const double noise = p.bounds.u_max * (2.0 * unit(rng) - 1.0);
    const double u = clamp_control(-4.0 * (s.x.x1 - 0.5) - 2.0 * s.x.x2 + noise, p.bounds);
    s = euler_step(s, u, 0.0, dt, p.bounds, p.basis, p.phi_k);
    out.states.push_back(s.x);
  }
  out.z = s.z;
  return out;
}

double spectral_from_states(const Problem& p, const std::vector<PlantState>& states, double dt) {
  SampledTrajectory traj;
  for (std::size_t i = 0; i < states.size(); ++i) {
    traj.times.push_back(static_cast<double>(i) * dt);
    traj.points.push_back({exploration_map(states[i])});
  }
  return ergodic_metric_spectral(traj_coeffs(p.basis, traj), p.phi_k, p.basis);
}

// -- criteria ----------------------------------------------------------------

CheckReport criterion_identity() {
  CheckReport r = new_report("1", "Spectral and augmented-state metrics agree");
  const auto t0 = Clock::now();
  const Problem p = bimodal_problem(6);
  constexpr double dt = 0.01;
  constexpr int steps = 2000;
  double worst = 0.0;
  for (int i = 0; i < kIdentityTrajectories; ++i) {
    const RandomTrajectory tr = random_trajectory(p, static_cast<std::uint64_t>(i), steps, dt);
    const double es = spectral_from_states(p, tr.states, dt);
    const double ea = ergodic_metric_from_aug(tr.z, steps * dt, p.basis);
    worst = std::max(worst, std::abs(es - ea) / (1.0 + es));
  }
  r.seconds = seconds_since(t0);
  r.pass = worst <= kIdentityTol && r.seconds < kIdentitySeconds;
  r.details.push_back("max |E_spec - E_aug|/(1+E) = " + fmt(worst, 3) + " over " +
                      std::to_string(kIdentityTrajectories) + " trajectories of 20 s (tol " +
                      fmt(kIdentityTol) + ")");
  r.details.push_back("runtime " + fmt(r.seconds, 3) + " s (limit " + fmt(kIdentitySeconds) + " s)");
  return r;
}

CheckReport criterion_stationary() {
  CheckReport r = new_report("2", "Stationary-agent oracle");
  const auto t0 = Clock::now();
  const Problem p = unit_problem(InfoDistribution::uniform(ExplorationSpace::unit(1)), 6);
  ZeroPolicy policy;
  auto adversary = make_adversary(AdversaryKind::kZero, p.bounds, 0);
  const RolloutRecord rec =
      rollout(policy, *adversary, initial_state({0.5, 0.0}, p.basis), p, RolloutOptions{});
  const double expected = 0.4 + 2.0 / 17.0;
  const double spectral = recompute_metric(rec, p);
  const double err = std::max(std::abs(rec.metric - expected), std::abs(spectral - expected));
  r.seconds = seconds_since(t0);
  r.pass = err <= kStationaryTol;
  r.details.push_back("augmented " + fmt(rec.metric, 10) + ", spectral " + fmt(spectral, 10) +
                      ", expected " + fmt(expected, 10) + " (tol " + fmt(kStationaryTol) + ")");
  return r;
}

CheckReport criterion_adjoint() {
  CheckReport r = new_report("3", "Adjoint gradient vs central differences");
  const auto t0 = Clock::now();
  const Problem p = bimodal_problem(6);
  constexpr double dt = 0.01;
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst = 0.0;
  for (int inst = 0; inst < kAdjointInstances; ++inst) {
    FullState s = initial_state({0.5 + 0.55 * unit(rng), unit(rng)}, p.basis);
    for (std::size_t j = 1; j < s.z.size(); ++j) s.z[j] = 0.5 * unit(rng);
    HorizonPlan plan = HorizonPlan::zeros(kAdjointHorizon);
    for (auto& u : plan.controls) u = 0.95 * p.bounds.u_max * unit(rng);
    for (auto& d : plan.disturbances) d = 0.95 * p.bounds.d_max * unit(rng);

    const RolloutGradient g = pred_rollout_grad(s, plan, dt, p);
    std::vector<double> analytic, fd;
    auto probe = [&](std::vector<double>& seq, const std::vector<double>& grad) {
      for (std::size_t i = 0; i < seq.size(); ++i) {
        const double keep = seq[i];
        seq[i] = keep + kAdjointFdStep;
        const double up = pred_rollout(s, plan, dt, p);
        seq[i] = keep - kAdjointFdStep;
        const double dn = pred_rollout(s, plan, dt, p);
        seq[i] = keep;
        fd.push_back((up - dn) / (2.0 * kAdjointFdStep));
        analytic.push_back(grad[i]);
      }
    };
    probe(plan.controls, g.d_controls);
    probe(plan.disturbances, g.d_disturbances);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i) {
      num = std::max(num, std::abs(analytic[i] - fd[i]));
      den = std::max(den, std::abs(fd[i]));
    }
    worst = std::max(worst, num / std::max(den, 1e-300));
  }
  r.seconds = seconds_since(t0);
  r.pass = worst <= kAdjointTol && r.seconds < kAdjointSeconds;
  r.details.push_back("max relative error " + fmt(worst, 3) + " over " +
                      std::to_string(kAdjointInstances) + " instances, T=" +
                      std::to_string(kAdjointHorizon) + " (tol " + fmt(kAdjointTol) + ")");
  r.details.push_back("runtime " + fmt(r.seconds, 3) + " s (limit " + fmt(kAdjointSeconds) + " s)");
  return r;
}

CheckReport criterion_minimax() {
  CheckReport r = new_report("4", "Closed-form Hamiltonian saddle vs grid minimax");
  const auto t0 = Clock::now();
  const Problem p = bimodal_problem(6);
  const double um = p.bounds.u_max, dm = p.bounds.d_max;
  const double du = 2.0 * um / (kMinimaxGrid - 1), dd = 2.0 * dm / (kMinimaxGrid - 1);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  int failures = 0;
  double worst_u = 0.0, worst_d = 0.0, worst_h = 0.0;
  std::vector<double> row(kMinimaxGrid);
  for (int c = 0; c < kMinimaxCases; ++c) {
    SamplePoint s;
    s.x = {0.5 + 0.6 * unit(rng), 1.5 * unit(rng)};
    s.z.resize(p.active_modes().size());
    for (double& z : s.z) z = 0.5 * unit(rng);
    s.t = 0.5 + 0.5 * unit(rng);
    ValueGradients g;
    g.dx1 = unit(rng);
    g.dx2 = unit(rng);
    g.dz.resize(s.z.size());
    for (double& v : g.dz) v = unit(rng);

    const HamiltonianValue closed = hamiltonian_optimal(s, g, p);
    double best = std::numeric_limits<double>::infinity(), best_u = 0.0, best_d = 0.0;
    for (int i = 0; i < kMinimaxGrid; ++i) {
      const double u = -um + i * du;
      double inner = -std::numeric_limits<double>::infinity(), arg_d = 0.0;
      for (int j = 0; j < kMinimaxGrid; ++j) {
        const double d = -dm + j * dd;
        const double h = hamiltonian(s, g, u, d, p);
        if (h > inner) {
          inner = h;
          arg_d = d;
        }
      }
      if (inner < best) {
        best = inner;
        best_u = u;
        best_d = arg_d;
      }
    }
    const double cell = (2.0 * p.cost.R * um + std::abs(g.dx2)) * du + std::abs(g.dx2) * dd;
    const double eu = std::abs(best_u - closed.u), ed = std::abs(best_d - closed.d);
    const double eh = std::abs(best - closed.value);
    worst_u = std::max(worst_u, eu / du);
    worst_d = std::max(worst_d, ed / dd);
    worst_h = std::max(worst_h, eh / cell);
    if (eu > du || ed > dd || eh > cell) ++failures;
  }
  r.seconds = seconds_since(t0);
  r.pass = failures == 0 && r.seconds < kMinimaxSeconds;
  r.details.push_back(std::to_string(failures) + "/" + std::to_string(kMinimaxCases) +
                      " cases outside one grid cell (" + std::to_string(kMinimaxGrid) + "x" +
                      std::to_string(kMinimaxGrid) + ")");
  r.details.push_back("worst |du|, |dd|, |dH| in cells: " + fmt(worst_u, 3) + ", " +
                      fmt(worst_d, 3) + ", " + fmt(worst_h, 3));
  r.details.push_back("runtime " + fmt(r.seconds, 3) + " s (limit " + fmt(kMinimaxSeconds) + " s)");
  return r;
}

CheckReport criterion_reduction(const AcceptanceContext& ctx) {
  CheckReport r = new_report("5", "reMPC reduces to MPC when d_max = 0");
  const auto t0 = Clock::now();
  ExperimentConfig cfg = ExperimentConfig::from_json(read_json_file(ctx.config_dir + "/compare.json"));
  cfg.bounds.d_max = 0.0;
  auto p = std::make_shared<const Problem>(cfg.problem(cfg.distributions.front()));
  int identical = 0;
  std::size_t steps = 0;
  for (int seed = 0; seed < kReductionSeeds; ++seed) {
    const PlantState x0 = cfg.init.sample(static_cast<std::uint64_t>(seed), cfg.space.lengths[0]);
    const RolloutOptions opt{cfg.duration, cfg.dt, cfg.cost_normalization,
                             static_cast<std::uint64_t>(seed)};
    MpcPolicy mpc(p, cfg.mpc, false), rempc(p, cfg.mpc, true);
    auto a1 = make_adversary(AdversaryKind::kUniform, cfg.bounds, static_cast<std::uint64_t>(seed));
    auto a2 = make_adversary(AdversaryKind::kUniform, cfg.bounds, static_cast<std::uint64_t>(seed));
    const RolloutRecord r1 = rollout(mpc, *a1, initial_state(x0, p->basis), *p, opt);
    const RolloutRecord r2 = rollout(rempc, *a2, initial_state(x0, p->basis), *p, opt);
    bool same = r1.steps.size() == r2.steps.size();
    for (std::size_t i = 0; same && i < r1.steps.size(); ++i) {
      same = r1.steps[i].u == r2.steps[i].u && r1.steps[i].x1 == r2.steps[i].x1;
    }
    identical += same ? 1 : 0;
    steps += r1.steps.size();
  }
  r.seconds = seconds_since(t0);
  r.pass = identical == kReductionSeeds;
  r.details.push_back(std::to_string(identical) + "/" + std::to_string(kReductionSeeds) +
                      " seeds with bit-identical control traces (" + std::to_string(steps) +
                      " steps per controller)");
  return r;
}

CheckReport criterion_compare(const AcceptanceContext& ctx) {
  CheckReport r = new_report("6", "Ordinal controller/disturbance comparison");
  const auto t0 = Clock::now();
  const ExperimentConfig cfg =
      ExperimentConfig::from_json(read_json_file(ctx.config_dir + "/compare.json"));
  const double ratio = cfg.bounds.d_max / cfg.bounds.u_max;
  const bool setup_ok = cfg.seeds.size() >= kCompareMinSeeds && std::abs(cfg.duration - 20.0) < 1e-12 &&
                        std::abs(ratio - 0.4) < 1e-12;
  r.details.push_back("setup: " + cfg.distributions.front().name + ", " +
                      std::to_string(cfg.seeds.size()) + " seeds, " + fmt(cfg.duration) +
                      " s trials, d_max/u_max = " + fmt(ratio) + (setup_ok ? "" : " (INVALID SETUP)"));

  const CompareResult res = compare_experiment(cfg, ctx.threads);
  std::filesystem::create_directories(ctx.work_dir);
  std::ofstream(ctx.work_dir + "/compare_runs.csv") << compare_runs_csv(res, cfg);
  std::ofstream(ctx.work_dir + "/compare_summary.csv") << compare_summary_csv(res, cfg);

  const std::string dist = cfg.distributions.front().name;
  auto med = [&](const char* c, const char* a) {
    const CellSummary* cell = res.find(dist, c, a);
    if (!cell || cell->failures > 0) return std::numeric_limits<double>::quiet_NaN();
    return cell->metric_median;
  };
  bool all = setup_ok;
  const double m_opp = med("mpc", "opposing"), r_opp = med("rempc", "opposing");
  const bool a = r_opp <= m_opp;
  all = all && a;
  r.details.push_back(std::string(a ? "(a) PASS" : "(a) FAIL") + " median metric under opposing: rempc " +
                      fmt(r_opp) + " <= mpc " + fmt(m_opp));
  for (const char* c : {"mpc", "rempc"}) {
    const double zero = med(c, "zero"), opp = med(c, "opposing"), uni = med(c, "uniform");
    const bool b = zero <= opp;
    const double band = std::abs(uni - zero) / zero;
    const bool cc = band <= kCompareUniformBand;
    all = all && b && cc;
    r.details.push_back(std::string(b ? "(b) PASS " : "(b) FAIL ") + c + ": zero " + fmt(zero) +
                        " <= opposing " + fmt(opp));
    r.details.push_back(std::string(cc ? "(c) PASS " : "(c) FAIL ") + c + ": |uniform - zero|/zero = " +
                        fmt(band, 3) + " (uniform " + fmt(uni) + ", band " + fmt(kCompareUniformBand) + ")");
  }
  r.seconds = seconds_since(t0);
  all = all && r.seconds < kCompareSeconds;
  r.details.push_back("runtime " + fmt(r.seconds, 4) + " s (limit " + fmt(kCompareSeconds) + " s)");
  r.pass = all;
  return r;
}

CheckReport criterion_pinn(const AcceptanceContext& ctx) {
  CheckReport r = new_report("7", "Reduced-scale value network");
  const auto t0 = Clock::now();
  const PinnConfig cfg = PinnConfig::from_json(read_json_file(ctx.config_dir + "/pinn.json"));
  const Problem problem = cfg.problem();
  const bool setup_ok = problem.basis.modes_per_axis() == 2 && problem.horizon() == 1.0 &&
                        cfg.train.seed == 0;
  r.details.push_back("setup: N=" + std::to_string(problem.basis.modes_per_axis()) + ", horizon " +
                      fmt(problem.horizon()) + " s, seed " + std::to_string(cfg.train.seed) + ", " +
                      std::to_string(cfg.train.iterations) + " iterations" +
                      (setup_ok ? "" : " (INVALID SETUP)"));

  const TrainResult tr = train(cfg.train, problem);
  std::filesystem::create_directories(ctx.work_dir);
  save_checkpoint(tr.net, ctx.work_dir + "/pinn.ergonet");
  write_loss_history_csv(tr.history, ctx.work_dir + "/pinn_loss.csv");

  const double mae_frac = tr.final_terminal_mae / tr.terminal_range;
  const bool mae_ok = mae_frac <= cfg.train.max_terminal_mae_fraction;
  const double reduction = tr.initial_residual / tr.final_residual;
  const bool res_ok = reduction >= cfg.train.min_residual_reduction;
  r.details.push_back(std::string(mae_ok ? "PASS" : "FAIL") + " terminal MAE " +
                      fmt(tr.final_terminal_mae, 4) + " = " + fmt(100.0 * mae_frac, 3) +
                      "% of range " + fmt(tr.terminal_range, 4) + " (limit " +
                      fmt(100.0 * cfg.train.max_terminal_mae_fraction) + "%)");
  r.details.push_back(std::string(res_ok ? "PASS" : "FAIL") + " mean |HJI residual| " +
                      fmt(tr.initial_residual, 4) + " -> " + fmt(tr.final_residual, 4) + " (" +
                      fmt(reduction, 3) + "x, need " + fmt(cfg.train.min_residual_reduction) + "x)");

  auto p = std::make_shared<const Problem>(problem);
  auto net = std::make_shared<const ValueNet>(tr.net);
  const RolloutOptions opt{cfg.evaluation.duration, cfg.experiment.dt, cfg.evaluation.duration, 0};
  RangePolicy policy(net, p, cfg.experiment.range_query_time);
  auto adversary = make_adversary(cfg.evaluation.adversary, p->bounds, 0, net, p,
                                  cfg.experiment.range_query_time);
  const RolloutRecord ranged = rollout(policy, *adversary, initial_state(cfg.evaluation.x0, p->basis), *p, opt);
  ZeroPolicy still;
  auto none = make_adversary(AdversaryKind::kZero, p->bounds, 0);
  const RolloutRecord baseline = rollout(still, *none, initial_state(cfg.evaluation.x0, p->basis), *p, opt);
  const double ratio = ranged.metric / baseline.metric;
  const bool roll_ok = ratio <= cfg.evaluation.max_metric_ratio;
  r.details.push_back(std::string(roll_ok ? "PASS" : "FAIL") + " range policy vs " +
                      to_string(cfg.evaluation.adversary) + " over " + fmt(cfg.evaluation.duration) +
                      " s: metric " + fmt(ranged.metric, 4) + " vs stationary " +
                      fmt(baseline.metric, 4) + " (ratio " + fmt(ratio, 3) + ", limit " +
                      fmt(cfg.evaluation.max_metric_ratio) + ")");
  r.seconds = seconds_since(t0);
  r.details.push_back("runtime " + fmt(r.seconds, 4) + " s (limit " + fmt(kPinnSeconds) + " s)");
  r.pass = setup_ok && mae_ok && res_ok && roll_ok && r.seconds < kPinnSeconds;
  return r;
}

CheckReport criterion_determinism(const AcceptanceContext& ctx) {
  CheckReport r = new_report("8", "Deterministic compare output");
  const auto t0 = Clock::now();
  const json j = read_json_file(ctx.config_dir + "/smoke.json");
  const ExperimentConfig a = ExperimentConfig::from_json(j);
  const ExperimentConfig b = ExperimentConfig::from_json(j);
  const CompareResult ra = compare_experiment(a, 1);
  const CompareResult rb = compare_experiment(b, ctx.threads > 0 ? ctx.threads : 4);
  const std::string runs_a = compare_runs_csv(ra, a), runs_b = compare_runs_csv(rb, b);
  const std::string sum_a = compare_summary_csv(ra, a), sum_b = compare_summary_csv(rb, b);
  r.pass = runs_a == runs_b && sum_a == sum_b;
  r.seconds = seconds_since(t0);
  r.details.push_back("runs CSV " + std::to_string(runs_a.size()) + " bytes " +
                      (runs_a == runs_b ? "identical" : "DIFFER") + ", summary CSV " +
                      std::to_string(sum_a.size()) + " bytes " + (sum_a == sum_b ? "identical" : "DIFFER") +
                      " (1 worker vs several)");
  return r;
}

}  // namespace

CheckReport run_criterion(int id, const AcceptanceContext& ctx) {
  try {
    switch (id) {
      case 1: return criterion_identity();
      case 2: return criterion_stationary();
      case 3: return criterion_adjoint();
      case 4: return criterion_minimax();
      case 5: return criterion_reduction(ctx);
      case 6: return criterion_compare(ctx);
      case 7: return criterion_pinn(ctx);
      case 8: return criterion_determinism(ctx);
      default: break;
    }
  } catch (const std::exception& e) {
    return CheckReport{std::to_string(id), "criterion " + std::to_string(id), false,
                       {std::string("error: ") + e.what()}, 0.0};
  }
  throw InvalidArgument("unknown acceptance criterion " + std::to_string(id));
}

// -- property checks ---------------------------------------------------------

namespace {

using CheckFn = std::function<void(CheckReport&)>;

CheckReport run_check(const std::string& id, const std::string& title, const CheckFn& fn) {
  CheckReport r = new_report(id, title);
  r.pass = true;
  const auto t0 = Clock::now();
  try {
    fn(r);
  } catch (const std::exception& e) {
    r.pass = false;
    r.details.push_back(std::string("error: ") + e.what());
  }
  r.seconds = seconds_since(t0);
  return r;
}

void expect(CheckReport& r, bool ok, const std::string& what) {
  if (!ok) r.pass = false;
  r.details.push_back(std::string(ok ? "" : "FAILED: ") + what);
}

SineNetwork small_net(int input_dim, std::uint64_t seed) {
  NetArchitecture a;
  a.input_dim = input_dim;
  a.hidden = {16, 16};
  a.omega = 3.0;
  return SineNetwork(a, seed);
}

}  // namespace

std::vector<CheckReport> run_property_checks() {
  std::vector<CheckReport> out;

  out.push_back(run_check("orthonormality", "Basis orthonormality by quadrature", [](CheckReport& r) {
    double worst = 0.0;
    for (const auto& space : {ExplorationSpace::unit(1), ExplorationSpace{{1.0, 2.0}}}) {
      const BasisSet basis(space, space.dim() == 1 ? 8 : 4);
      const TensorGrid grid(space.lengths, kQuadratureNodes);
      std::vector<double> f(basis.size());
      std::vector<double> gram(basis.size() * basis.size(), 0.0);
      for (std::size_t q = 0; q < grid.size(); ++q) {
        basis.eval_all(std::span<const double>(grid.point(q), space.dim()), f);
        for (std::size_t i = 0; i < f.size(); ++i)
          for (std::size_t j = 0; j < f.size(); ++j) gram[i * f.size() + j] += grid.weight(q) * f[i] * f[j];
      }
      for (std::size_t i = 0; i < f.size(); ++i)
        for (std::size_t j = 0; j < f.size(); ++j)
          worst = std::max(worst, std::abs(gram[i * f.size() + j] - (i == j ? 1.0 : 0.0)));
    }
    expect(r, worst <= 1e-6, "max |<F_k, F_j> - delta_kj| = " + fmt(worst, 3));
  }));

  out.push_back(run_check("weights", "Lambda_k monotone with Lambda_0 = 1", [](CheckReport& r) {
    const BasisSet basis(ExplorationSpace{{1.0, 1.0}}, 5);
    bool ok = basis.weight(0) == 1.0;
    for (std::size_t i = 0; i < basis.size(); ++i) {
      for (std::size_t j = 0; j < basis.size(); ++j) {
        auto n2 = [&](std::size_t m) {
          double s = 0.0;
          for (int k : basis.modes()[m]) s += k * k;
          return s;
        };
        if (n2(i) < n2(j) && !(basis.weight(i) > basis.weight(j))) ok = false;
      }
    }
    expect(r, ok, "strictly decreasing in |k|");
  }));

  out.push_back(run_check("conservation", "z_0 conservation and metric recomputation", [](CheckReport& r) {
    const Problem p = bimodal_problem(6);
    const RandomTrajectory tr = random_trajectory(p, 11, 2000, 0.01);
    expect(r, std::abs(tr.z[0]) <= 1e-9 * 2000, "|z_0| = " + fmt(std::abs(tr.z[0]), 3) + " after 2000 steps");
    const double es = spectral_from_states(p, tr.states, 0.01);
    const double ea = ergodic_metric_from_aug(tr.z, 20.0, p.basis);
    expect(r, es >= 0.0 && ea >= 0.0 && std::abs(es - ea) <= 1e-9 * (1.0 + es),
           "spectral " + fmt(es, 10) + " vs augmented " + fmt(ea, 10));
    CostParams cp;
    cp.horizon_duration = 1.0;
    const double tv = terminal_value(tr.z.z, cp, p.basis);
    const double e1 = ergodic_metric_from_aug(tr.z, 1.0, p.basis);
    expect(r, std::abs(tv - e1) <= 1e-12 * (1.0 + e1), "unit-horizon terminal value equals augmented metric");
  }));

  out.push_back(run_check("bounds", "Control/disturbance bounds and information advantage", [](CheckReport& r) {
    auto p = std::make_shared<const Problem>(bimodal_problem(4));
    ReMPCConfig mc;
    mc.T = 20;
    mc.iters = 5;
    MpcPolicy policy(p, mc, true);
    auto adv = make_adversary(AdversaryKind::kOpposing, p->bounds, 0);
    const RolloutRecord rec = rollout(policy, *adv, initial_state({0.3, 0.1}, p->basis), *p,
                                      RolloutOptions{2.0, 0.01, 2.0, 0});
    bool inside = true, informed = true;
    for (const auto& s : rec.steps) {
      inside = inside && std::abs(s.u) <= p->bounds.u_max && std::abs(s.d) <= p->bounds.d_max;
      informed = informed && s.d == worst_case_disturbance(s.u, p->bounds.d_max);
    }
    expect(r, inside, "every u, d inside its box over " + std::to_string(rec.steps.size()) + " steps");
    expect(r, informed, "opposing d at each step computed from that step's u");
    const PlantState dx = plant_deriv({0.0, 0.0}, 100.0, -100.0, p->bounds);
    expect(r, dx.x2 == p->bounds.u_max - p->bounds.d_max, "plant_deriv clamps its inputs");
  }));

  out.push_back(run_check("costs", "Cost nonnegativity and convexity in u", [](CheckReport& r) {
    const Problem p = bimodal_problem(6);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    bool ok = true;
    for (int i = 0; i < 1000; ++i) {
      const PlantState x{0.5 + unit(rng), unit(rng)};
      std::vector<double> z(p.basis.size());
      for (double& v : z) v = unit(rng);
      const double u1 = 5 * unit(rng), u2 = 5 * unit(rng);
      const double g1 = running_cost(x, z, u1, p.basis, p.cost);
      const double g2 = running_cost(x, z, u2, p.basis, p.cost);
      const double gm = running_cost(x, z, 0.5 * (u1 + u2), p.basis, p.cost);
      ok = ok && g1 >= 0.0 && g2 >= 0.0 && gm <= 0.5 * (g1 + g2) + 1e-12;
    }
    expect(r, ok, "1000 random triples");
  }));

  out.push_back(run_check("net-gradients", "Value-net input gradients vs finite differences", [](CheckReport& r) {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const SineNetwork net = small_net(4, seed);
      std::mt19937_64 rng(seed + 100);
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      Eigen::VectorXd x(4), g;
      for (int i = 0; i < 4; ++i) x[i] = unit(rng);
      net.eval(x, &g);
      for (int i = 0; i < 4; ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += 1e-4;
        xm[i] -= 1e-4;
        const double fd = (net.eval(xp) - net.eval(xm)) / 2e-4;
        worst = std::max(worst, std::abs(fd - g[i]) / std::max(1.0, std::abs(fd)));
      }
    }
    expect(r, worst <= 1e-4, "max relative error " + fmt(worst, 3));
  }));

  out.push_back(run_check("checkpoint", "Checkpoint round trip", [](CheckReport& r) {
    const Problem p = unit_problem(InfoDistribution::bimodal(ExplorationSpace::unit(1)), 2);
    const ValueNet v = make_value_net(p, SampleBox{}, {16, 16}, 30.0, 5);
    const std::string a = encode_checkpoint(v);
    const ValueNet w = decode_checkpoint(a);
    expect(r, encode_checkpoint(w) == a, "encode(decode(bytes)) == bytes");
    expect(r, (w.net.parameters().array() == v.net.parameters().array()).all(), "parameters bit-exact");
    bool mismatch = false;
    try {
      w.check_compatible(bimodal_problem(3));
    } catch (const FingerprintMismatch&) {
      mismatch = true;
    }
    expect(r, mismatch, "different N rejected");
  }));

  out.push_back(run_check("levelset", "Sublevel-set nesting", [](CheckReport& r) {
    const Problem p = bimodal_problem(2);
    const ValueNet v = make_value_net(p, SampleBox{}, {16, 16}, 30.0, 9);
    const std::vector<double> z{0.1};
    const auto lo = levelset_slice(v, -0.05, z, 0.0, {0, 1}, {-1, 1}, 21, 21);
    const auto hi = levelset_slice(v, 0.05, z, 0.0, {0, 1}, {-1, 1}, 21, 21);
    bool nested = true;
    for (std::size_t i = 0; i < lo.member.size(); ++i) nested = nested && (!lo.member[i] || hi.member[i]);
    expect(r, nested, "{V <= -0.05} subset of {V <= 0.05}");
  }));

  out.push_back(run_check("density", "Density reconstruction", [](CheckReport& r) {
    const Problem p = bimodal_problem(12);
    const DensityGrid g = reconstruct_density(p.phi_k, p.basis, 2001);
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < g.m.size(); ++i)
      integral += 0.5 * (g.value[i] + g.value[i + 1]) * (g.m[i + 1] - g.m[i]);
    expect(r, std::abs(integral - 1.0) <= 1e-6, "integral " + fmt(integral, 10));
  }));

  out.push_back(run_check("hamiltonian", "Hamiltonian nondecreasing in d_max", [](CheckReport& r) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    bool ok = true;
    const Problem lo = bimodal_problem(3, ControlBounds{5.0, 0.5});
    const Problem hi = bimodal_problem(3, ControlBounds{5.0, 2.0});
    for (int i = 0; i < 200; ++i) {
      SamplePoint s;
      s.x = {0.5 + 0.5 * unit(rng), unit(rng)};
      s.z = {0.3 * unit(rng), 0.3 * unit(rng)};
      ValueGradients g{0.0, unit(rng), unit(rng), {unit(rng), unit(rng)}, 0.0};
      ok = ok && hamiltonian_optimal(s, g, lo).value <= hamiltonian_optimal(s, g, hi).value + 1e-12;
    }
    expect(r, ok, "200 random gradients");
  }));

  return out;
}

std::string format_report(const CheckReport& r) {
  std::ostringstream os;
  os << (r.pass ? "PASS" : "FAIL") << "  [" << r.id << "] " << r.title << " (" << std::fixed
     << std::setprecision(2) << r.seconds << " s)";
  for (const auto& d : r.details) os << "\n        " << d;
  return os.str();
}

}  // namespace ergo
