#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ergo/checkpoint.hpp"
#include "ergo/controllers.hpp"
#include "ergo/error.hpp"
#include "ergo/harness.hpp"

namespace py = pybind11;
using namespace ergo;

namespace {

std::vector<double> values(const CoeffVector& c) { return c.values; }

Problem make_problem(const std::vector<double>& lengths, int modes, const std::string& info_json,
                     double u_max, double d_max, const CostParams& cost) {
  ExplorationSpace space{lengths};
  return Problem(BasisSet(space, modes), make_info(nlohmann::json::parse(info_json), space),
                 ControlBounds{u_max, d_max}, cost);
}

FullState full_state(const Problem& p, double x1, double x2, const std::vector<double>& z, double t) {
  FullState s = initial_state(PlantState{x1, x2}, p.basis, t);
  if (!z.empty()) {
    require(z.size() == p.basis.size(), "z must have one entry per mode");
    s.z.z = z;
  }
  return s;
}

py::dict rollout_dict(const RolloutRecord& r) {
  std::vector<double> t, x1, x2, u, d;
  for (const auto& s : r.steps) {
    t.push_back(s.t);
    x1.push_back(s.x1);
    x2.push_back(s.x2);
    u.push_back(s.u);
    d.push_back(s.d);
  }
  py::dict out;
  out["t"] = t;
  out["x1"] = x1;
  out["x2"] = x2;
  out["u"] = u;
  out["d"] = d;
  out["final_x"] = r.final_x;
  out["terminal_z"] = r.terminal_z;
  out["metric"] = r.metric;
  out["cost"] = r.cost.total;
  return out;
}

}  // namespace

PYBIND11_MODULE(_ergo, m) {
  m.doc() = "Ergodic exploration under disturbance: metric, controllers and value networks";

  py::register_exception<Error>(m, "ErgoError", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<FingerprintMismatch>(m, "FingerprintMismatch", PyExc_RuntimeError);
  py::register_exception<CorruptFile>(m, "CorruptFile", PyExc_RuntimeError);

  py::class_<CostParams>(m, "CostParams")
      .def(py::init<>())
      .def_readwrite("q", &CostParams::q)
      .def_readwrite("R", &CostParams::R)
      .def_readwrite("barrier_weight", &CostParams::barrier_weight)
      .def_readwrite("barrier_margin", &CostParams::barrier_margin)
      .def_readwrite("horizon_duration", &CostParams::horizon_duration);

  py::class_<ReMPCConfig>(m, "ReMPCConfig")
      .def(py::init<>())
      .def_readwrite("T", &ReMPCConfig::T)
      .def_readwrite("dt", &ReMPCConfig::dt)
      .def_readwrite("iters", &ReMPCConfig::iters)
      .def_readwrite("step_u", &ReMPCConfig::step_u)
      .def_readwrite("step_d", &ReMPCConfig::step_d);

  py::class_<Problem>(m, "Problem")
      .def(py::init(&make_problem), py::arg("lengths") = std::vector<double>{1.0},
           py::arg("modes") = 6, py::arg("info") = R"({"kind": "bimodal"})",
           py::arg("u_max") = 5.0, py::arg("d_max") = 2.0, py::arg("cost") = CostParams{})
      .def_property_readonly("phi_k", [](const Problem& p) { return values(p.phi_k); })
      .def_property_readonly("weights", [](const Problem& p) { return p.basis.weights(); })
      .def_property_readonly("modes", [](const Problem& p) { return p.basis.modes(); })
      .def("basis", [](const Problem& p, const std::vector<double>& point) {
        std::vector<double> out(p.basis.size());
        p.basis.eval_all(point, out);
        return out;
      })
      .def("density", [](const Problem& p, const std::vector<double>& point) { return p.info.density(point); })
      .def("traj_coeffs", [](const Problem& p, const std::vector<double>& times,
                             const std::vector<std::vector<double>>& points) {
        return values(traj_coeffs(p.basis, SampledTrajectory{times, points}));
      })
      .def("metric", [](const Problem& p, const std::vector<double>& c) {
        return ergodic_metric_spectral(CoeffVector{c}, p.phi_k, p.basis);
      })
      .def("metric_from_aug", [](const Problem& p, const std::vector<double>& z, double duration) {
        return ergodic_metric_from_aug(AugmentedState{z}, duration, p.basis);
      })
      .def("euler_step", [](const Problem& p, double x1, double x2, const std::vector<double>& z,
                            double t, double u, double d, double dt) {
        const FullState n = euler_step(full_state(p, x1, x2, z, t), u, d, dt, p.bounds, p.basis, p.phi_k);
        return py::make_tuple(n.x.x1, n.x.x2, n.z.z, n.t);
      }, py::arg("x1"), py::arg("x2"), py::arg("z"), py::arg("t"), py::arg("u"), py::arg("d"), py::arg("dt"))
      .def("pred_rollout", [](const Problem& p, double x1, double x2, const std::vector<double>& z,
                              const std::vector<double>& controls, const std::vector<double>& disturbances,
                              double dt) {
        return pred_rollout(full_state(p, x1, x2, z, 0.0), HorizonPlan{controls, disturbances}, dt, p);
      })
      .def("pred_rollout_grad", [](const Problem& p, double x1, double x2, const std::vector<double>& z,
                                   const std::vector<double>& controls,
                                   const std::vector<double>& disturbances, double dt) {
        const RolloutGradient g =
            pred_rollout_grad(full_state(p, x1, x2, z, 0.0), HorizonPlan{controls, disturbances}, dt, p);
        return py::make_tuple(g.cost, g.d_controls, g.d_disturbances);
      })
      .def("control_step", [](const Problem& p, double x1, double x2, const std::vector<double>& z,
                              const ReMPCConfig& cfg, bool robust, const std::vector<double>& controls,
                              const std::vector<double>& disturbances) {
        const FullState s = full_state(p, x1, x2, z, 0.0);
        HorizonPlan plan{controls, disturbances};
        const StepResult r = robust ? rempc_step(s, plan, cfg, p) : mpc_step(s, plan, cfg, p);
        return py::make_tuple(r.control, r.plan.controls, r.plan.disturbances);
      }, py::arg("x1"), py::arg("x2"), py::arg("z"), py::arg("cfg"), py::arg("robust") = true,
         py::arg("controls") = std::vector<double>{}, py::arg("disturbances") = std::vector<double>{});

  m.def("opt_control_from_costate", &opt_control_from_costate);
  m.def("worst_case_disturbance", &worst_case_disturbance);

  m.def("rollout", [](const std::string& config_json, const std::string& controller,
                      const std::string& adversary, double x1, double x2, std::uint64_t seed) {
    const ExperimentConfig cfg = ExperimentConfig::from_json(nlohmann::json::parse(config_json));
    auto problem = std::make_shared<const Problem>(cfg.problem(cfg.distributions.front()));
    std::shared_ptr<const ValueNet> net;
    if (!cfg.net_path.empty()) net = std::make_shared<const ValueNet>(load_checkpoint(cfg.net_path, problem.get()));
    auto policy = make_policy(parse_controller(controller), problem, cfg.mpc, net, cfg.range_query_time);
    auto adv = make_adversary(parse_adversary(adversary), cfg.bounds, seed, net, problem, cfg.range_query_time);
    const RolloutOptions opt{cfg.duration, cfg.dt, cfg.cost_normalization, seed};
    py::gil_scoped_release release;
    const RolloutRecord r = rollout(*policy, *adv, initial_state(PlantState{x1, x2}, problem->basis), *problem, opt);
    py::gil_scoped_acquire acquire;
    return rollout_dict(r);
  }, py::arg("config"), py::arg("controller"), py::arg("adversary"), py::arg("x1"),
     py::arg("x2") = 0.0, py::arg("seed") = 0);

  m.def("compare", [](const std::string& config_json, int threads) {
    const ExperimentConfig cfg = ExperimentConfig::from_json(nlohmann::json::parse(config_json));
    CompareResult r;
    {
      py::gil_scoped_release release;
      r = compare_experiment(cfg, threads);
    }
    return py::make_tuple(compare_runs_csv(r, cfg), compare_summary_csv(r, cfg));
  }, py::arg("config"), py::arg("threads") = 0);

  py::class_<ValueNet>(m, "ValueNet")
      .def_static("load", [](const std::string& path) { return load_checkpoint(path); })
      .def("save", [](const ValueNet& n, const std::string& path) { save_checkpoint(n, path); })
      .def_property_readonly("fingerprint", [](const ValueNet& n) { return n.meta.fingerprint(); })
      .def("eval", [](const ValueNet& n, double x1, double x2, const std::vector<double>& z, double t) {
        const ValueGradients g = net_eval_with_grads(n, SamplePoint{PlantState{x1, x2}, z, t});
        py::dict out;
        out["value"] = g.value;
        out["dx1"] = g.dx1;
        out["dx2"] = g.dx2;
        out["dz"] = g.dz;
        out["dt"] = g.dt;
        return out;
      }, py::arg("x1"), py::arg("x2"), py::arg("z"), py::arg("t"));

  m.def("make_value_net", [](const Problem& p, std::vector<int> hidden, double omega, std::uint64_t seed) {
    return make_value_net(p, SampleBox{}, std::move(hidden), omega, seed);
  }, py::arg("problem"), py::arg("hidden") = std::vector<int>{64, 64, 64}, py::arg("omega") = 30.0,
     py::arg("seed") = 0);
}
