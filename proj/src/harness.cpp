#include "ergo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <random>
#include <sstream>
#include <thread>

#include "ergo/checkpoint.hpp"
#include "ergo/error.hpp"

namespace ergo {

using nlohmann::json;

// -- enums -------------------------------------------------------------------

AdversaryKind parse_adversary(const std::string& s) {
  if (s == "zero") return AdversaryKind::kZero;
  if (s == "uniform") return AdversaryKind::kUniform;
  if (s == "gaussian") return AdversaryKind::kGaussian;
  if (s == "opposing") return AdversaryKind::kOpposing;
  if (s == "range-worst") return AdversaryKind::kRangeWorst;
  throw InvalidArgument("unknown adversary '" + s + "'");
}

ControllerKind parse_controller(const std::string& s) {
  if (s == "zero") return ControllerKind::kZero;
  if (s == "mpc") return ControllerKind::kMpc;
  if (s == "rempc") return ControllerKind::kReMpc;
  if (s == "range") return ControllerKind::kRange;
  throw InvalidArgument("unknown controller '" + s + "'");
}

std::string to_string(AdversaryKind k) {
  switch (k) {
    case AdversaryKind::kZero: return "zero";
    case AdversaryKind::kUniform: return "uniform";
    case AdversaryKind::kGaussian: return "gaussian";
    case AdversaryKind::kOpposing: return "opposing";
    case AdversaryKind::kRangeWorst: return "range-worst";
  }
  return "?";
}

std::string to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::kZero: return "zero";
    case ControllerKind::kMpc: return "mpc";
    case ControllerKind::kReMpc: return "rempc";
    case ControllerKind::kRange: return "range";
  }
  return "?";
}

// -- configuration -----------------------------------------------------------

InfoDistribution make_info(const json& spec, const ExplorationSpace& space) {
  const std::string kind = spec.value("kind", std::string("bimodal"));
  if (kind == "uniform") return InfoDistribution::uniform(space);
  if (kind == "bimodal") return InfoDistribution::bimodal(space);
  if (kind == "gaussian-mixture") {
    std::vector<InfoDistribution::Component> comps;
    for (const auto& c : spec.at("components")) {
      InfoDistribution::Component comp;
      comp.mean = c.at("mean").get<std::vector<double>>();
      comp.std = c.at("std").get<double>();
      comp.weight = c.value("weight", 1.0);
      comps.push_back(std::move(comp));
    }
    return InfoDistribution::gaussian_mixture(space, std::move(comps));
  }
  throw InvalidArgument("unknown info distribution kind '" + kind + "'");
}

PlantState InitSampler::sample(std::uint64_t seed, double length) const {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 0x1234567ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PlantState x;
  x.x1 = length * (x1_fraction.lo + x1_fraction.width() * unit(rng));
  x.x2 = x2.lo + x2.width() * unit(rng);
  return x;
}

void ExperimentConfig::validate() const {
  space.validate();
  require(space.dim() == 1, "ExperimentConfig: the double integrator explores a 1-D space");
  require(modes_per_axis >= 1, "ExperimentConfig: modes_per_axis must be >= 1");
  require(!distributions.empty(), "ExperimentConfig: need at least one distribution");
  bounds.validate();
  cost.validate();
  mpc.validate();
  require(dt > 0.0 && duration > 0.0, "ExperimentConfig: duration and dt must be positive");
  const double n = duration / dt;
  require(std::abs(n - std::round(n)) < 1e-9 * std::max(1.0, n),
          "ExperimentConfig: duration must be a multiple of dt");
  require(!seeds.empty(), "ExperimentConfig: seeds must be nonempty");
  require(cost_normalization > 0.0, "ExperimentConfig: cost_normalization must be positive");
}

int ExperimentConfig::steps() const { return static_cast<int>(std::lround(duration / dt)); }

Problem ExperimentConfig::problem(const InfoSpec& info) const {
  return Problem(BasisSet(space, modes_per_axis), make_info(info.spec, space), bounds, cost);
}

namespace {

Interval interval_or(const json& j, const char* key, Interval def) {
  if (!j.contains(key)) return def;
  return Interval{j.at(key).at(0).get<double>(), j.at(key).at(1).get<double>()};
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  const json pj = j.value("problem", json::object());
  if (pj.contains("lengths")) c.space.lengths = pj.at("lengths").get<std::vector<double>>();
  c.modes_per_axis = pj.value("modes_per_axis", c.modes_per_axis);
  if (pj.contains("info")) c.distributions = {InfoSpec{pj.at("info").value("name", std::string(pj.at("info").value("kind", std::string("bimodal")))), pj.at("info")}};
  const double u_max = pj.value("u_max", c.bounds.u_max);
  c.bounds = pj.contains("d_max") ? ControlBounds{u_max, pj.at("d_max").get<double>()}
                                  : ControlBounds::from_ratio(u_max, pj.value("d_ratio", 0.4));
  const json cj = pj.value("cost", json::object());
  c.cost.q = cj.value("q", c.cost.q);
  c.cost.R = cj.value("R", c.cost.R);
  c.cost.barrier_weight = cj.value("barrier_weight", c.cost.barrier_weight);
  c.cost.barrier_margin = cj.value("barrier_margin", c.cost.barrier_margin);
  c.cost.horizon_duration = cj.value("horizon", c.cost.horizon_duration);

  const json mj = j.value("controller", json::object());
  c.mpc.T = mj.value("T", c.mpc.T);
  c.mpc.dt = mj.value("dt", c.mpc.dt);
  c.mpc.iters = mj.value("iters", c.mpc.iters);
  c.mpc.step_u = mj.value("step_u", c.mpc.step_u);
  c.mpc.step_d = mj.value("step_d", c.mpc.step_d);
  c.range_query_time = mj.value("range_query_time", c.range_query_time);

  const json ej = j.value("experiment", json::object());
  if (ej.contains("controllers")) {
    c.controllers.clear();
    for (const auto& s : ej.at("controllers")) c.controllers.push_back(parse_controller(s));
  }
  if (ej.contains("adversaries")) {
    c.adversaries.clear();
    for (const auto& s : ej.at("adversaries")) c.adversaries.push_back(parse_adversary(s));
  }
  if (ej.contains("distributions")) {
    c.distributions.clear();
    for (const auto& d : ej.at("distributions")) {
      const json spec = d.contains("info") ? d.at("info") : d;
      c.distributions.push_back(
          InfoSpec{d.value("name", spec.value("kind", std::string("bimodal"))), spec});
    }
  }
  c.duration = ej.value("duration", c.duration);
  c.dt = ej.value("dt", c.dt);
  if (ej.contains("seeds")) {
    const json& s = ej.at("seeds");
    c.seeds.clear();
    if (s.is_array()) {
      c.seeds = s.get<std::vector<std::uint64_t>>();
    } else {
      const auto first = s.value("first", std::uint64_t{0});
      const auto count = s.at("count").get<std::uint64_t>();
      for (std::uint64_t i = 0; i < count; ++i) c.seeds.push_back(first + i);
    }
  }
  const json ij = ej.value("init", json::object());
  c.init.x1_fraction = interval_or(ij, "x1_fraction", c.init.x1_fraction);
  c.init.x2 = interval_or(ij, "x2", c.init.x2);
  c.cost_normalization = ej.value("cost_normalization", c.cost_normalization);
  c.out_dir = ej.value("out_dir", c.out_dir);
  c.net_path = ej.value("net", c.net_path);
  c.validate();
  return c;
}

json ExperimentConfig::to_json() const {
  json dists = json::array();
  for (const auto& d : distributions) dists.push_back({{"name", d.name}, {"info", d.spec}});
  json ctrls = json::array(), advs = json::array();
  for (auto k : controllers) ctrls.push_back(to_string(k));
  for (auto k : adversaries) advs.push_back(to_string(k));
  return json{
      {"problem",
       {{"lengths", space.lengths},
        {"modes_per_axis", modes_per_axis},
        {"u_max", bounds.u_max},
        {"d_max", bounds.d_max},
        {"cost",
         {{"q", cost.q},
          {"R", cost.R},
          {"barrier_weight", cost.barrier_weight},
          {"barrier_margin", cost.barrier_margin},
          {"horizon", cost.horizon_duration}}}}},
      {"controller",
       {{"T", mpc.T},
        {"dt", mpc.dt},
        {"iters", mpc.iters},
        {"step_u", mpc.step_u},
        {"step_d", mpc.step_d},
        {"range_query_time", range_query_time}}},
      {"experiment",
       {{"controllers", ctrls},
        {"adversaries", advs},
        {"distributions", dists},
        {"duration", duration},
        {"dt", dt},
        {"seeds", seeds},
        {"init", {{"x1_fraction", {init.x1_fraction.lo, init.x1_fraction.hi}},
                  {"x2", {init.x2.lo, init.x2.hi}}}},
        {"cost_normalization", cost_normalization},
        {"out_dir", out_dir},
        {"net", net_path}}},
  };
}

json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config " + path);
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw InvalidArgument("config " + path + ": " + e.what());
  }
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.lambda = j.value("lambda", c.lambda);
  c.batch_interior = j.value("batch_interior", c.batch_interior);
  c.batch_terminal = j.value("batch_terminal", c.batch_terminal);
  c.iterations = j.value("iterations", c.iterations);
  c.curriculum_fraction = j.value("curriculum_fraction", c.curriculum_fraction);
  c.expansion_fraction = j.value("expansion_fraction", c.expansion_fraction);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.final_learning_rate = j.value("final_learning_rate", c.final_learning_rate);
  c.seed = j.value("seed", c.seed);
  c.hidden = j.value("hidden", c.hidden);
  c.omega = j.value("omega", c.omega);
  c.log_every = j.value("log_every", c.log_every);
  const json b = j.value("sample_box", json::object());
  c.box.x1 = interval_or(b, "x1", c.box.x1);
  c.box.x2 = interval_or(b, "x2", c.box.x2);
  c.box.z = interval_or(b, "z", c.box.z);
  const json t = j.value("thresholds", json::object());
  c.max_terminal_mae_fraction = t.value("max_terminal_mae_fraction", c.max_terminal_mae_fraction);
  c.min_residual_reduction = t.value("min_residual_reduction", c.min_residual_reduction);
  c.validate();
  return c;
}

json to_json(const TrainConfig& c) {
  return json{
      {"lambda", c.lambda},
      {"batch_interior", c.batch_interior},
      {"batch_terminal", c.batch_terminal},
      {"iterations", c.iterations},
      {"curriculum_fraction", c.curriculum_fraction},
      {"expansion_fraction", c.expansion_fraction},
      {"learning_rate", c.learning_rate},
      {"final_learning_rate", c.final_learning_rate},
      {"seed", c.seed},
      {"hidden", c.hidden},
      {"omega", c.omega},
      {"log_every", c.log_every},
      {"sample_box",
       {{"x1", {c.box.x1.lo, c.box.x1.hi}},
        {"x2", {c.box.x2.lo, c.box.x2.hi}},
        {"z", {c.box.z.lo, c.box.z.hi}}}},
      {"thresholds",
       {{"max_terminal_mae_fraction", c.max_terminal_mae_fraction},
        {"min_residual_reduction", c.min_residual_reduction}}},
  };
}

PinnConfig PinnConfig::from_json(const json& j) {
  PinnConfig c;
  c.experiment = ExperimentConfig::from_json(j);
  c.train = train_config_from_json(j.value("train", json::object()));
  const json e = j.value("evaluation", json::object());
  if (e.contains("x0")) c.evaluation.x0 = {e.at("x0").at(0).get<double>(), e.at("x0").at(1).get<double>()};
  c.evaluation.duration = e.value("duration", c.evaluation.duration);
  if (e.contains("adversary")) c.evaluation.adversary = parse_adversary(e.at("adversary"));
  c.evaluation.max_metric_ratio = e.value("max_metric_ratio", c.evaluation.max_metric_ratio);
  require(c.evaluation.duration > 0.0, "PinnConfig: evaluation duration must be positive");
  return c;
}

json PinnConfig::to_json() const {
  json j = experiment.to_json();
  j.erase("experiment");
  j["problem"]["info"] = experiment.distributions.front().spec;
  j["controller"] = {{"range_query_time", experiment.range_query_time}};
  j["experiment"] = {{"dt", experiment.dt}};
  j["train"] = ergo::to_json(train);
  j["evaluation"] = {{"x0", {evaluation.x0.x1, evaluation.x0.x2}},
                     {"duration", evaluation.duration},
                     {"adversary", to_string(evaluation.adversary)},
                     {"max_metric_ratio", evaluation.max_metric_ratio}};
  return j;
}

// -- adversaries and policies ------------------------------------------------

namespace {

class ZeroAdversary final : public Adversary {
 public:
  std::string name() const override { return "zero"; }
  double disturbance(const FullState&, double) override { return 0.0; }
};

class UniformAdversary final : public Adversary {
 public:
  UniformAdversary(double d_max, std::uint64_t seed) : d_max_(d_max), seed_(seed) { reset(); }
  std::string name() const override { return "uniform"; }
  void reset() override { rng_.seed(seed_); }
  double disturbance(const FullState&, double) override {
    return std::uniform_real_distribution<double>(-d_max_, d_max_)(rng_);
  }

 private:
  double d_max_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
};

class GaussianAdversary final : public Adversary {
 public:
  GaussianAdversary(double d_max, std::uint64_t seed)
      : d_max_(d_max), seed_(seed), dist_(0.0, d_max > 0.0 ? d_max / 2.0 : 1.0) {
    reset();
  }
  std::string name() const override { return "gaussian"; }
  void reset() override {
    rng_.seed(seed_);
    dist_.reset();
  }
  double disturbance(const FullState&, double) override {
    if (d_max_ == 0.0) return 0.0;
    return std::clamp(dist_(rng_), -d_max_, d_max_);
  }

 private:
  double d_max_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> dist_;
};

class OpposingAdversary final : public Adversary {
 public:
  explicit OpposingAdversary(double d_max) : d_max_(d_max) {}
  std::string name() const override { return "opposing"; }
  double disturbance(const FullState&, double u) override {
    return worst_case_disturbance(u, d_max_);
  }

 private:
  double d_max_;
};

class RangeWorstAdversary final : public Adversary {
 public:
  RangeWorstAdversary(std::shared_ptr<const ValueNet> net, std::shared_ptr<const Problem> p,
                      double query_time)
      : net_(std::move(net)), problem_(std::move(p)), query_time_(query_time) {
    net_->check_compatible(*problem_);
  }
  std::string name() const override { return "range-worst"; }
  double disturbance(const FullState& s, double) override {
    return range_policy(*net_, *problem_, s, query_time_).disturbance;
  }

 private:
  std::shared_ptr<const ValueNet> net_;
  std::shared_ptr<const Problem> problem_;
  double query_time_;
};

}  // namespace

std::unique_ptr<Adversary> make_adversary(AdversaryKind kind, const ControlBounds& bounds,
                                          std::uint64_t seed, std::shared_ptr<const ValueNet> net,
                                          std::shared_ptr<const Problem> problem,
                                          double query_time) {
  switch (kind) {
    case AdversaryKind::kZero: return std::make_unique<ZeroAdversary>();
    case AdversaryKind::kUniform: return std::make_unique<UniformAdversary>(bounds.d_max, seed);
    case AdversaryKind::kGaussian: return std::make_unique<GaussianAdversary>(bounds.d_max, seed);
    case AdversaryKind::kOpposing: return std::make_unique<OpposingAdversary>(bounds.d_max);
    case AdversaryKind::kRangeWorst:
      if (!net || !problem) throw InvalidArgument("range-worst adversary needs a trained value net");
      return std::make_unique<RangeWorstAdversary>(std::move(net), std::move(problem), query_time);
  }
  throw InvalidArgument("unknown adversary kind");
}

std::unique_ptr<Policy> make_policy(ControllerKind kind, std::shared_ptr<const Problem> problem,
                                    const ReMPCConfig& mpc, std::shared_ptr<const ValueNet> net,
                                    double query_time) {
  switch (kind) {
    case ControllerKind::kZero: return std::make_unique<ZeroPolicy>();
    case ControllerKind::kMpc: return std::make_unique<MpcPolicy>(std::move(problem), mpc, false);
    case ControllerKind::kReMpc: return std::make_unique<MpcPolicy>(std::move(problem), mpc, true);
    case ControllerKind::kRange:
      if (!net) throw InvalidArgument("range controller needs a trained value net");
      return std::make_unique<RangePolicy>(std::move(net), std::move(problem), query_time);
  }
  throw InvalidArgument("unknown controller kind");
}

// -- rollout -----------------------------------------------------------------

RolloutRecord rollout(Policy& policy, Adversary& adversary, const FullState& s0,
                      const Problem& problem, const RolloutOptions& opt) {
  require(opt.dt > 0.0 && opt.duration > 0.0, "rollout: duration and dt must be positive");
  const double n_real = opt.duration / opt.dt;
  const auto n = static_cast<std::size_t>(std::llround(n_real));
  require(n >= 1 && std::abs(n_real - static_cast<double>(n)) < 1e-9 * std::max(1.0, n_real),
          "rollout: duration must be a positive multiple of dt");

  policy.reset();
  adversary.reset();

  RolloutRecord rec;
  rec.dt = opt.dt;
  rec.seed = opt.seed;
  rec.controller = policy.name();
  rec.adversary = adversary.name();
  rec.steps.reserve(n);

  CostTrace trace;
  trace.dt = opt.dt;
  trace.states.reserve(n + 1);
  trace.z.reserve(n + 1);
  trace.controls.reserve(n);

  FullState s = s0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = clamp_control(policy.control(s), problem.bounds);
    const double d = clamp_disturbance(adversary.disturbance(s, u), problem.bounds);
    StepRecord step{s.t, s.x.x1, s.x.x2, u, d,
                    running_cost(s.x, s.z.z, u, problem.basis, problem.cost)};
    rec.steps.push_back(step);
    trace.states.push_back(s.x);
    trace.z.push_back(s.z.z);
    trace.controls.push_back(u);

    s = euler_step(s, u, d, opt.dt, problem.bounds, problem.basis, problem.phi_k);
    if (!std::isfinite(s.x.x1) || !std::isfinite(s.x.x2)) {
      std::ostringstream os;
      os << "rollout: non-finite state at step " << i << " (t=" << s.t << ", u=" << u
         << ", d=" << d << ", controller=" << rec.controller << ")";
      throw Divergence(os.str());
    }
  }
  trace.states.push_back(s.x);
  trace.z.push_back(s.z.z);

  rec.final_x = {s.x.x1, s.x.x2};
  rec.terminal_z = s.z.z;
  rec.metric = ergodic_metric_from_aug(s.z, opt.dt * static_cast<double>(n), problem.basis);
  rec.cost = trajectory_cost(trace, problem.cost, problem.basis, opt.cost_normalization);

  NetMetadata meta = NetMetadata::from_problem(problem, SampleBox{}, opt.seed);
  rec.fingerprint = meta.fingerprint();
  return rec;
}

double recompute_metric(const RolloutRecord& rec, const Problem& problem) {
  SampledTrajectory traj;
  traj.times.reserve(rec.steps.size() + 1);
  traj.points.reserve(rec.steps.size() + 1);
  for (std::size_t i = 0; i < rec.steps.size(); ++i) {
    traj.times.push_back(static_cast<double>(i) * rec.dt);
    traj.points.push_back({rec.steps[i].x1});
  }
  traj.times.push_back(static_cast<double>(rec.steps.size()) * rec.dt);
  traj.points.push_back({rec.final_x[0]});
  const CoeffVector c = traj_coeffs(problem.basis, traj);
  return ergodic_metric_spectral(c, problem.phi_k, problem.basis);
}

void write_rollout_csv(const RolloutRecord& rec, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  os << std::setprecision(17);
  os << "t,x1,x2,u,d,running_cost\n";
  for (const auto& s : rec.steps) {
    os << s.t << "," << s.x1 << "," << s.x2 << "," << s.u << "," << s.d << "," << s.running_cost
       << "\n";
  }
}

json rollout_summary(const RolloutRecord& rec, const json& config) {
  return json{
      {"controller", rec.controller},
      {"adversary", rec.adversary},
      {"seed", rec.seed},
      {"steps", rec.steps.size()},
      {"dt", rec.dt},
      {"ergodic_metric", rec.metric},
      {"terminal_z", rec.terminal_z},
      {"final_x", rec.final_x},
      {"cost",
       {{"running_ergodic", rec.cost.running_ergodic},
        {"control_effort", rec.cost.control_effort},
        {"barrier", rec.cost.barrier},
        {"terminal_ergodic", rec.cost.terminal_ergodic},
        {"terminal_h", rec.cost.terminal_h},
        {"total", rec.cost.total}}},
      {"fingerprint", rec.fingerprint},
      {"config", config},
  };
}

// -- comparison experiment ---------------------------------------------------

double median(std::vector<double> v) {
  require(!v.empty(), "median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

const CellSummary* CompareResult::find(const std::string& dist, const std::string& ctrl,
                                       const std::string& adv) const {
  for (const auto& c : cells) {
    if (c.distribution == dist && c.controller == ctrl && c.adversary == adv) return &c;
  }
  return nullptr;
}

CompareResult compare_experiment(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  require(cfg.seeds.size() >= 2, "compare_experiment: need at least two seeds per cell");

  struct Job {
    std::size_t dist;
    ControllerKind ctrl;
    AdversaryKind adv;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t di = 0; di < cfg.distributions.size(); ++di) {
    for (auto c : cfg.controllers) {
      for (auto a : cfg.adversaries) {
        for (auto s : cfg.seeds) jobs.push_back({di, c, a, s});
      }
    }
  }

  std::vector<std::shared_ptr<const Problem>> problems;
  for (const auto& d : cfg.distributions) {
    problems.push_back(std::make_shared<const Problem>(cfg.problem(d)));
  }
  std::shared_ptr<const ValueNet> net;
  if (!cfg.net_path.empty()) net = std::make_shared<const ValueNet>(load_checkpoint(cfg.net_path));

  CompareResult result;
  result.runs.resize(jobs.size());
  auto run_job = [&](std::size_t i) {
    const Job& job = jobs[i];
    RunRow& row = result.runs[i];
    row.distribution = cfg.distributions[job.dist].name;
    row.controller = to_string(job.ctrl);
    row.adversary = to_string(job.adv);
    row.seed = job.seed;
    const auto& problem = problems[job.dist];
    const PlantState x0 = cfg.init.sample(job.seed, cfg.space.lengths[0]);
    row.x1_0 = x0.x1;
    row.x2_0 = x0.x2;
    try {
      auto policy = make_policy(job.ctrl, problem, cfg.mpc, net, cfg.range_query_time);
      auto adversary = make_adversary(job.adv, cfg.bounds, job.seed, net, problem,
                                      cfg.range_query_time);
      const RolloutOptions opt{cfg.duration, cfg.dt, cfg.cost_normalization, job.seed};
      const RolloutRecord rec =
          rollout(*policy, *adversary, initial_state(x0, problem->basis), *problem, opt);
      row.metric = rec.metric;
      row.cost = rec.cost.total;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
  };

  unsigned workers = threads > 0 ? static_cast<unsigned>(threads)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(jobs.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) run_job(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) run_job(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  // Summaries in config order.
  for (const auto& d : cfg.distributions) {
    for (auto c : cfg.controllers) {
      for (auto a : cfg.adversaries) {
        CellSummary cell{d.name, to_string(c), to_string(a)};
        std::vector<double> metrics, costs;
        for (const auto& r : result.runs) {
          if (r.distribution != cell.distribution || r.controller != cell.controller ||
              r.adversary != cell.adversary) {
            continue;
          }
          ++cell.runs;
          if (!r.ok) {
            ++cell.failures;
            continue;
          }
          metrics.push_back(r.metric);
          costs.push_back(r.cost);
        }
        if (!metrics.empty()) {
          cell.metric_min = *std::min_element(metrics.begin(), metrics.end());
          cell.metric_max = *std::max_element(metrics.begin(), metrics.end());
          cell.metric_median = median(metrics);
          cell.cost_min = *std::min_element(costs.begin(), costs.end());
          cell.cost_max = *std::max_element(costs.begin(), costs.end());
          cell.cost_median = median(costs);
        } else {
          cell.metric_min = cell.metric_median = cell.metric_max = std::nan("");
          cell.cost_min = cell.cost_median = cell.cost_max = std::nan("");
        }
        result.cells.push_back(cell);
      }
    }
  }
  return result;
}

namespace {

std::string config_header(const ExperimentConfig& cfg) {
  return "# config: " + cfg.to_json().dump() + "\n";
}

}  // namespace

std::string compare_runs_csv(const CompareResult& r, const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << config_header(cfg);
  os << "distribution,controller,adversary,seed,x1_0,x2_0,ergodic_metric,cost_J,status\n";
  os << std::setprecision(17);
  for (const auto& row : r.runs) {
    os << row.distribution << "," << row.controller << "," << row.adversary << "," << row.seed
       << "," << row.x1_0 << "," << row.x2_0 << "," << row.metric << "," << row.cost << ","
       << (row.ok ? "ok" : "failed") << "\n";
  }
  return os.str();
}

std::string compare_summary_csv(const CompareResult& r, const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << config_header(cfg);
  os << "distribution,controller,adversary,runs,failures,metric_min,metric_median,metric_max,"
        "cost_min,cost_median,cost_max\n";
  os << std::setprecision(17);
  for (const auto& c : r.cells) {
    os << c.distribution << "," << c.controller << "," << c.adversary << "," << c.runs << ","
       << c.failures << "," << c.metric_min << "," << c.metric_median << "," << c.metric_max
       << "," << c.cost_min << "," << c.cost_median << "," << c.cost_max << "\n";
  }
  return os.str();
}

// -- density reconstruction and level sets -----------------------------------

DensityGrid reconstruct_density(const CoeffVector& c, const BasisSet& basis, int resolution) {
  require(c.size() == basis.size(), "reconstruct_density: coefficients not aligned with basis");
  require(basis.dim() == 1, "reconstruct_density: only 1-D spaces are gridded");
  require(resolution >= 2, "reconstruct_density: need at least two grid points");
  const double L = basis.space().lengths[0];
  DensityGrid g;
  g.m.resize(static_cast<std::size_t>(resolution));
  g.value.assign(g.m.size(), 0.0);
  std::vector<double> f(basis.size());
  for (std::size_t i = 0; i < g.m.size(); ++i) {
    g.m[i] = L * static_cast<double>(i) / (resolution - 1);
    basis.eval_all(std::span<const double>(&g.m[i], 1), f);
    for (std::size_t j = 0; j < f.size(); ++j) g.value[i] += c[j] * f[j];
  }
  return g;
}

CoeffVector coeffs_from_aug(const AugmentedState& z, double duration, const CoeffVector& phi_k) {
  require(duration > 0.0, "coeffs_from_aug: duration must be positive");
  require(z.size() == phi_k.size(), "coeffs_from_aug: size mismatch");
  CoeffVector c{std::vector<double>(z.size())};
  for (std::size_t j = 0; j < z.size(); ++j) c[j] = z[j] / duration + phi_k[j];
  return c;
}

LevelSetGrid levelset_slice(const ValueNet& net, double eps, const std::vector<double>& z,
                            double t, Interval x1_range, Interval x2_range, int nx, int nv) {
  require(nx >= 2 && nv >= 2, "levelset_slice: grid needs at least 2x2 points");
  require(static_cast<int>(z.size()) + 3 == net.net.input_dim(),
          "levelset_slice: z does not match the network input");
  LevelSetGrid g;
  for (int i = 0; i < nx; ++i) g.x1.push_back(x1_range.lo + x1_range.width() * i / (nx - 1));
  for (int i = 0; i < nv; ++i) g.x2.push_back(x2_range.lo + x2_range.width() * i / (nv - 1));

  Eigen::MatrixXd in(net.net.input_dim(), static_cast<Eigen::Index>(nx) * nv);
  Eigen::Index col = 0;
  for (int iv = 0; iv < nv; ++iv) {
    for (int ix = 0; ix < nx; ++ix, ++col) {
      in(0, col) = g.x1[static_cast<std::size_t>(ix)];
      in(1, col) = g.x2[static_cast<std::size_t>(iv)];
      for (std::size_t k = 0; k < z.size(); ++k) in(static_cast<Eigen::Index>(k) + 2, col) = z[k];
      in(in.rows() - 1, col) = t;
    }
  }
  const NetBatchOutput out = net.net.eval_batch(in, false);
  g.value.assign(out.value.data(), out.value.data() + out.value.size());
  g.member.resize(g.value.size());
  for (std::size_t i = 0; i < g.value.size(); ++i) g.member[i] = g.value[i] <= eps ? 1 : 0;
  return g;
}

void write_levelset_csv(const LevelSetGrid& g, double eps, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  os << std::setprecision(17);
  os << "# epsilon=" << eps << "\n";
  os << "x1,x2,value,member\n";
  for (std::size_t iv = 0; iv < g.x2.size(); ++iv) {
    for (std::size_t ix = 0; ix < g.x1.size(); ++ix) {
      const std::size_t i = iv * g.x1.size() + ix;
      os << g.x1[ix] << "," << g.x2[iv] << "," << g.value[i] << "," << int(g.member[i]) << "\n";
    }
  }
}

}  // namespace ergo
