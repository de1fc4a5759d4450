#pragma once

// Closed-loop simulation: adversaries, the rollout engine, the controller /
// disturbance comparison experiment, Fourier density reconstruction and
// value sublevel-set slices. Configuration comes from a canonical JSON file.

#include <cstdint>
#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ergo/controllers.hpp"

namespace ergo {

enum class AdversaryKind { kZero, kUniform, kGaussian, kOpposing, kRangeWorst };
enum class ControllerKind { kZero, kMpc, kReMpc, kRange };

AdversaryKind parse_adversary(const std::string& s);
ControllerKind parse_controller(const std::string& s);
std::string to_string(AdversaryKind k);
std::string to_string(ControllerKind k);

// One information-density choice as written in the config.
struct InfoSpec {
  std::string name = "bimodal";  // label used in result tables
  nlohmann::json spec = {{"kind", "bimodal"}};
};

InfoDistribution make_info(const nlohmann::json& spec, const ExplorationSpace& space);

struct InitSampler {
  Interval x1_fraction{0.1, 0.9};  // fraction of L
  Interval x2{-0.5, 0.5};

  // Deterministic in the seed alone so every controller sees the same start.
  PlantState sample(std::uint64_t seed, double length) const;
};

struct ExperimentConfig {
  ExplorationSpace space = ExplorationSpace::unit(1);
  int modes_per_axis = 6;
  std::vector<InfoSpec> distributions = {InfoSpec{}};
  ControlBounds bounds = ControlBounds::from_ratio(5.0, 0.4);
  CostParams cost;
  ReMPCConfig mpc;
  double range_query_time = 0.02;
  std::vector<ControllerKind> controllers = {ControllerKind::kMpc, ControllerKind::kReMpc};
  std::vector<AdversaryKind> adversaries = {AdversaryKind::kZero, AdversaryKind::kUniform,
                                            AdversaryKind::kGaussian, AdversaryKind::kOpposing};
  double duration = 20.0;
  double dt = 0.01;
  std::vector<std::uint64_t> seeds = {0, 1};
  InitSampler init;
  double cost_normalization = 20.0;
  std::string out_dir = "out";
  std::string net_path;  // optional checkpoint for range controller / adversary

  void validate() const;
  int steps() const;
  Problem problem(const InfoSpec& info) const;

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

nlohmann::json read_json_file(const std::string& path);

// "train" section: every TrainConfig field, thresholds included.
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& c);

// Closed-loop check of a trained value net.
struct PinnEvaluation {
  PlantState x0{0.5, 0.0};
  double duration = 20.0;
  AdversaryKind adversary = AdversaryKind::kOpposing;
  double max_metric_ratio = 0.5;  // vs. the stationary agent at x0
};

// Value-net training run: the problem comes from the "problem" section.
struct PinnConfig {
  ExperimentConfig experiment;
  TrainConfig train;
  PinnEvaluation evaluation;

  Problem problem() const { return experiment.problem(experiment.distributions.front()); }
  static PinnConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

std::unique_ptr<Adversary> make_adversary(AdversaryKind kind, const ControlBounds& bounds,
                                          std::uint64_t seed,
                                          std::shared_ptr<const ValueNet> net = nullptr,
                                          std::shared_ptr<const Problem> problem = nullptr,
                                          double query_time = 0.02);

std::unique_ptr<Policy> make_policy(ControllerKind kind, std::shared_ptr<const Problem> problem,
                                    const ReMPCConfig& mpc,
                                    std::shared_ptr<const ValueNet> net = nullptr,
                                    double query_time = 0.02);

struct RolloutRecord {
  std::vector<StepRecord> steps;
  std::vector<double> final_x{0.0, 0.0};
  std::vector<double> terminal_z;
  double dt = 0.0;
  double metric = 0.0;
  CostBreakdown cost;
  std::string fingerprint;
  std::uint64_t seed = 0;
  std::string controller;
  std::string adversary;
};

struct RolloutOptions {
  double duration = 20.0;
  double dt = 0.01;
  double cost_normalization = 20.0;
  std::uint64_t seed = 0;
};

// Closed loop with euler_step; the adversary sees each step's control.
// Throws Divergence on a non-finite state.
RolloutRecord rollout(Policy& policy, Adversary& adversary, const FullState& s0,
                      const Problem& problem, const RolloutOptions& opt);

// Ergodic metric recomputed from the stored positions alone.
double recompute_metric(const RolloutRecord& rec, const Problem& problem);

void write_rollout_csv(const RolloutRecord& rec, const std::string& path);
nlohmann::json rollout_summary(const RolloutRecord& rec, const nlohmann::json& config);

struct RunRow {
  std::string distribution;
  std::string controller;
  std::string adversary;
  std::uint64_t seed = 0;
  double x1_0 = 0.0;
  double x2_0 = 0.0;
  double metric = 0.0;
  double cost = 0.0;
  bool ok = true;
  std::string error;
};

struct CellSummary {
  std::string distribution;
  std::string controller;
  std::string adversary;
  int runs = 0;
  int failures = 0;
  double metric_min = 0.0, metric_median = 0.0, metric_max = 0.0;
  double cost_min = 0.0, cost_median = 0.0, cost_max = 0.0;
};

struct CompareResult {
  std::vector<RunRow> runs;
  std::vector<CellSummary> cells;
  const CellSummary* find(const std::string& dist, const std::string& ctrl,
                          const std::string& adv) const;
};

double median(std::vector<double> v);

// Every (distribution, controller, adversary, seed) rollout. Failed
// rollouts are marked and the experiment continues.
CompareResult compare_experiment(const ExperimentConfig& cfg, int threads = 0);

// CSV text; rows are emitted in config order, header lines carry the config.
std::string compare_runs_csv(const CompareResult& r, const ExperimentConfig& cfg);
std::string compare_summary_csv(const CompareResult& r, const ExperimentConfig& cfg);

// sum_k c_k F_k(m) at `resolution` evenly spaced points of [0, L] (v = 1).
struct DensityGrid {
  std::vector<double> m;
  std::vector<double> value;
};
DensityGrid reconstruct_density(const CoeffVector& c, const BasisSet& basis, int resolution);

// c_k recovered from an augmented state accumulated over `duration`.
CoeffVector coeffs_from_aug(const AugmentedState& z, double duration, const CoeffVector& phi_k);

struct LevelSetGrid {
  std::vector<double> x1;  // nx
  std::vector<double> x2;  // nv
  std::vector<double> value;       // nv * nx, row-major in x2
  std::vector<unsigned char> member;
  bool contains(std::size_t ix, std::size_t iv) const { return member[iv * x1.size() + ix] != 0; }
};

// {V(x, z, t) <= eps} over a grid of positions and velocities.
LevelSetGrid levelset_slice(const ValueNet& net, double eps, const std::vector<double>& z,
                            double t, Interval x1_range, Interval x2_range, int nx, int nv);

void write_levelset_csv(const LevelSetGrid& g, double eps, const std::string& path);

}  // namespace ergo
