// ergo: train value nets, simulate closed loops, run the controller comparison,
// extract value sublevel sets and run the invariant checks.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ergo/acceptance.hpp"
#include "ergo/checkpoint.hpp"
#include "ergo/error.hpp"
#include "ergo/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::string out = "out";
  std::string net;
  std::int64_t seed = -1;  // -1: keep the config's value
};

void add_common(CLI::App* app, Common& c, bool config_required) {
  auto* opt = app->add_option("--config", c.config, "JSON config file");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Seed override");
  app->add_option("--out", c.out, "Output directory");
  app->add_option("--net", c.net, "Value-net checkpoint");
}

json load_or_empty(const std::string& path) {
  return path.empty() ? json::object() : ergo::read_json_file(path);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ergo::Error("cannot open " + path.string());
  os << text;
}

int cmd_train(const Common& c, bool quiet) {
  ergo::PinnConfig cfg = ergo::PinnConfig::from_json(load_or_empty(c.config));
  if (c.seed >= 0) cfg.train.seed = static_cast<std::uint64_t>(c.seed);
  const ergo::Problem problem = cfg.problem();
  fs::create_directories(c.out);

  const auto t0 = std::chrono::steady_clock::now();
  const ergo::TrainResult r = ergo::train(cfg.train, problem, [&](const ergo::LossRecord& rec) {
    if (quiet) return;
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("iter %7d  loss %.6f  l_B %.6f  l_D %.6f  t_lo %.3f  %.0fs\n", rec.iteration,
                rec.total, rec.terminal, rec.differential, rec.t_lo, s);
    std::fflush(stdout);
  });
  const fs::path ckpt = fs::path(c.out) / "value_net.ergonet";
  ergo::save_checkpoint(r.net, ckpt.string());
  ergo::write_loss_history_csv(r.history, (fs::path(c.out) / "loss_history.csv").string());
  const json summary = {
      {"checkpoint", ckpt.string()},
      {"initial_residual", r.initial_residual},
      {"final_residual", r.final_residual},
      {"final_terminal_mae", r.final_terminal_mae},
      {"terminal_range", r.terminal_range},
      {"thresholds_met", r.thresholds_met},
      {"fingerprint", r.net.meta.fingerprint()},
      {"config", cfg.to_json()},
  };
  write_text(fs::path(c.out) / "train_summary.json", summary.dump(2) + "\n");
  std::printf("residual %.5f -> %.5f, terminal MAE %.5f (range %.5f), thresholds %s\n",
              r.initial_residual, r.final_residual, r.final_terminal_mae, r.terminal_range,
              r.thresholds_met ? "met" : "NOT met");
  std::printf("wrote %s\n", ckpt.string().c_str());
  return 0;
}

int cmd_rollout(const Common& c, const std::string& controller, const std::string& adversary,
                std::vector<double> x0) {
  ergo::ExperimentConfig cfg = ergo::ExperimentConfig::from_json(load_or_empty(c.config));
  if (!c.net.empty()) cfg.net_path = c.net;
  const std::uint64_t seed = c.seed >= 0 ? static_cast<std::uint64_t>(c.seed) : cfg.seeds.front();
  auto problem = std::make_shared<const ergo::Problem>(cfg.problem(cfg.distributions.front()));
  std::shared_ptr<const ergo::ValueNet> net;
  if (!cfg.net_path.empty()) {
    net = std::make_shared<const ergo::ValueNet>(ergo::load_checkpoint(cfg.net_path, problem.get()));
  }
  auto policy = ergo::make_policy(ergo::parse_controller(controller), problem, cfg.mpc, net,
                                  cfg.range_query_time);
  auto adv = ergo::make_adversary(ergo::parse_adversary(adversary), cfg.bounds, seed, net, problem,
                                  cfg.range_query_time);
  const ergo::PlantState start = x0.size() == 2 ? ergo::PlantState{x0[0], x0[1]}
                                                : cfg.init.sample(seed, cfg.space.lengths[0]);
  const ergo::RolloutRecord rec =
      ergo::rollout(*policy, *adv, ergo::initial_state(start, problem->basis), *problem,
                    ergo::RolloutOptions{cfg.duration, cfg.dt, cfg.cost_normalization, seed});
  fs::create_directories(c.out);
  ergo::write_rollout_csv(rec, (fs::path(c.out) / "rollout.csv").string());
  json summary = ergo::rollout_summary(rec, cfg.to_json());
  summary["x0"] = {start.x1, start.x2};
  write_text(fs::path(c.out) / "rollout.json", summary.dump(2) + "\n");
  std::printf("%s vs %s, seed %llu: ergodic metric %.6f, cost J %.6f\n", rec.controller.c_str(),
              rec.adversary.c_str(), static_cast<unsigned long long>(seed), rec.metric,
              rec.cost.total);
  return 0;
}

int cmd_compare(const Common& c, int threads) {
  ergo::ExperimentConfig cfg = ergo::ExperimentConfig::from_json(load_or_empty(c.config));
  if (!c.net.empty()) cfg.net_path = c.net;
  if (c.seed >= 0) {
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) cfg.seeds[i] = static_cast<std::uint64_t>(c.seed) + i;
  }
  const ergo::CompareResult r = ergo::compare_experiment(cfg, threads);
  fs::create_directories(c.out);
  write_text(fs::path(c.out) / "compare_runs.csv", ergo::compare_runs_csv(r, cfg));
  write_text(fs::path(c.out) / "compare_summary.csv", ergo::compare_summary_csv(r, cfg));
  std::printf("%-14s %-8s %-12s %10s %10s %10s  %s\n", "distribution", "ctrl", "adversary",
              "metric_med", "metric_max", "cost_med", "failures");
  int failures = 0;
  for (const auto& cell : r.cells) {
    std::printf("%-14s %-8s %-12s %10.5f %10.5f %10.5f  %d/%d\n", cell.distribution.c_str(),
                cell.controller.c_str(), cell.adversary.c_str(), cell.metric_median,
                cell.metric_max, cell.cost_median, cell.failures, cell.runs);
    failures += cell.failures;
  }
  for (const auto& run : r.runs) {
    if (!run.ok) std::fprintf(stderr, "failed: %s/%s/%s seed %llu: %s\n", run.distribution.c_str(),
                              run.controller.c_str(), run.adversary.c_str(),
                              static_cast<unsigned long long>(run.seed), run.error.c_str());
  }
  std::printf("wrote %s\n", (fs::path(c.out) / "compare_summary.csv").string().c_str());
  return failures == 0 ? 0 : 3;
}

int cmd_levelset(const Common& c, double eps, std::vector<double> z, double t, int nx, int nv,
                 std::vector<double> x1_range, std::vector<double> x2_range) {
  if (c.net.empty()) throw ergo::InvalidArgument("levelset needs --net");
  const ergo::ValueNet net = ergo::load_checkpoint(c.net);
  if (!c.config.empty()) {
    const ergo::PinnConfig cfg = ergo::PinnConfig::from_json(ergo::read_json_file(c.config));
    net.check_compatible(cfg.problem());
  }
  const std::size_t nz = static_cast<std::size_t>(net.net.input_dim() - 3);
  if (z.empty()) z.assign(nz, 0.0);
  if (z.size() != nz) {
    throw ergo::InvalidArgument("--z needs " + std::to_string(nz) + " values for this net");
  }
  const ergo::Interval xr = x1_range.size() == 2 ? ergo::Interval{x1_range[0], x1_range[1]} : net.meta.box.x1;
  const ergo::Interval vr = x2_range.size() == 2 ? ergo::Interval{x2_range[0], x2_range[1]} : net.meta.box.x2;
  const ergo::LevelSetGrid g = ergo::levelset_slice(net, eps, z, t, xr, vr, nx, nv);
  fs::create_directories(c.out);
  const fs::path path = fs::path(c.out) / "levelset.csv";
  ergo::write_levelset_csv(g, eps, path.string());
  std::size_t inside = 0;
  for (auto m : g.member) inside += m;
  std::printf("{V <= %g}: %zu of %zu grid points; wrote %s\n", eps, inside, g.member.size(),
              path.string().c_str());
  return 0;
}

int cmd_check(const std::string& config_dir, const std::string& work, bool quick, bool full,
              int threads) {
  bool ok = true;
  for (const auto& r : ergo::run_property_checks()) {
    std::cout << ergo::format_report(r) << "\n";
    ok = ok && r.pass;
  }
  if (!quick) {
    ergo::AcceptanceContext ctx;
    ctx.config_dir = config_dir;
    ctx.work_dir = work;
    ctx.threads = threads;
    std::vector<int> ids = {1, 2, 3, 4, 5, 8};
    if (full) ids = {1, 2, 3, 4, 5, 6, 7, 8};
    for (int id : ids) {
      const ergo::CheckReport r = ergo::run_criterion(id, ctx);
      std::cout << ergo::format_report(r) << std::endl;
      ok = ok && r.pass;
    }
  }
  std::cout << (ok ? "all checks passed" : "CHECKS FAILED") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust ergodic exploration: value training, simulation and checks"};
  app.require_subcommand(1);

  Common train_c, roll_c, cmp_c, lvl_c, chk_c;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "Train a value network; writes checkpoint and loss CSV");
  add_common(train, train_c, false);
  train->add_flag("--quiet", quiet, "No per-iteration log");

  std::string controller = "rempc", adversary = "opposing";
  std::vector<double> x0;
  auto* roll = app.add_subcommand("rollout", "Simulate one closed-loop trajectory");
  add_common(roll, roll_c, false);
  roll->add_option("--controller", controller, "zero | mpc | rempc | range");
  roll->add_option("--adversary", adversary, "zero | uniform | gaussian | opposing | range-worst");
  roll->add_option("--x0", x0, "Initial position and velocity")->expected(2);

  int threads = 0;
  auto* cmp = app.add_subcommand("compare", "Controller x adversary x seed comparison");
  add_common(cmp, cmp_c, false);
  cmp->add_option("--threads", threads, "Worker threads (0 = all cores)");

  double eps = 0.05, t = 0.0;
  int nx = 101, nv = 101;
  std::vector<double> z, xr, vr;
  auto* lvl = app.add_subcommand("levelset", "Sublevel set {V <= eps} on a position/velocity grid");
  add_common(lvl, lvl_c, false);
  lvl->add_option("--eps", eps, "Level");
  lvl->add_option("--z", z, "Augmented state (active modes)");
  lvl->add_option("--t", t, "Time");
  lvl->add_option("--nx", nx, "Grid points in position");
  lvl->add_option("--nv", nv, "Grid points in velocity");
  lvl->add_option("--x1-range", xr, "Position range")->expected(2);
  lvl->add_option("--x2-range", vr, "Velocity range")->expected(2);

  bool quick = false, full = false;
  int check_threads = 0;
  auto* chk = app.add_subcommand("check", "Run invariant checks; nonzero exit on failure");
  add_common(chk, chk_c, false);
  chk->add_flag("--quick", quick, "Property checks only");
  chk->add_flag("--full", full, "Include the comparison experiment and value-net training");
  chk->add_option("--threads", check_threads, "Worker threads for the comparison");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(train_c, quiet);
    if (*roll) return cmd_rollout(roll_c, controller, adversary, x0);
    if (*cmp) return cmd_compare(cmp_c, threads);
    if (*lvl) return cmd_levelset(lvl_c, eps, z, t, nx, nv, xr, vr);
    if (*chk) {
      const std::string dir = chk_c.config.empty() ? std::string(ERGO_CONFIG_DIR) : chk_c.config;
      return cmd_check(dir, chk_c.out, quick, full, check_threads);
    }
  } catch (const ergo::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
