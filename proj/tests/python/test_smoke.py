import json
import math

import pytest

import ergo


def uniform_problem(**kw):
    return ergo.Problem(modes=6, info='{"kind": "uniform"}', **kw)


def test_weights_and_uniform_coefficients():
    p = uniform_problem()
    assert p.weights == pytest.approx([1, 0.5, 0.2, 0.1, 1 / 17, 1 / 26])
    assert p.phi_k[0] == pytest.approx(1.0)
    assert max(abs(v) for v in p.phi_k[1:]) < 1e-12


def test_resting_agent_metric():
    p = uniform_problem()
    n = 100
    times = [0.01 * i for i in range(n + 1)]
    c = p.traj_coeffs(times, [[0.5]] * (n + 1))
    assert p.metric(c) == pytest.approx(0.4 + 2 / 17, abs=1e-9)


def test_euler_step_example():
    p = uniform_problem()
    x1, x2, z, t = p.euler_step(0.2, 0.5, [0.0] * 6, 0.0, 1.0, -0.4, 0.01)
    assert (x1, x2) == pytest.approx((0.205, 0.506))
    assert abs(z[0]) < 1e-14
    assert t == pytest.approx(0.01)


def test_prediction_gradient_matches_differences():
    p = ergo.Problem(modes=4)
    u = [0.3 * math.sin(i) for i in range(10)]
    d = [0.1 * math.cos(i) for i in range(10)]
    cost, du, _ = p.pred_rollout_grad(0.4, 0.2, [], u, d, 0.01)
    assert cost == pytest.approx(p.pred_rollout(0.4, 0.2, [], u, d, 0.01))
    eps = 1e-5
    for i in (0, 4, 9):
        up = list(u)
        dn = list(u)
        up[i] += eps
        dn[i] -= eps
        fd = (p.pred_rollout(0.4, 0.2, [], up, d, 0.01) - p.pred_rollout(0.4, 0.2, [], dn, d, 0.01)) / (2 * eps)
        assert du[i] == pytest.approx(fd, rel=1e-4, abs=1e-9)


def test_control_step_and_closed_forms():
    p = ergo.Problem(modes=4)
    cfg = ergo.ReMPCConfig()
    cfg.T = 20
    cfg.iters = 3
    u, controls, disturbances = p.control_step(0.3, 0.0, [], cfg)
    assert abs(u) <= 5.0
    assert len(controls) == 20 and len(disturbances) == 20
    assert ergo.opt_control_from_costate(0.1, 0.05, 1.0) == pytest.approx(-1.0)
    assert ergo.worst_case_disturbance(0.0, 0.4) == 0.4


def test_rollout_and_compare():
    cfg = {
        "problem": {"modes_per_axis": 4},
        "controller": {"T": 20, "iters": 2, "step_u": 20, "step_d": 20},
        "experiment": {"controllers": ["mpc"], "adversaries": ["zero", "uniform"],
                       "duration": 0.3, "seeds": [0, 1], "cost_normalization": 0.3},
    }
    text = json.dumps(cfg)
    r = ergo.rollout(text, "rempc", "uniform", 0.4, 0.0, seed=3)
    assert len(r["x1"]) == 30
    assert r["metric"] >= 0.0
    runs, summary = ergo.compare(text, threads=2)
    assert runs.startswith("# config:")
    assert runs == ergo.compare(text, threads=1)[0]
    assert len(summary.strip().splitlines()) == 1 + 1 + 2


def test_value_net_round_trip(tmp_path):
    p = ergo.Problem(modes=2)
    net = ergo.make_value_net(p, hidden=[8, 8], omega=3.0, seed=1)
    path = str(tmp_path / "v.ergonet")
    net.save(path)
    back = ergo.ValueNet.load(path)
    assert back.fingerprint == net.fingerprint
    a = net.eval(0.3, 0.1, [0.05], 0.5)
    b = back.eval(0.3, 0.1, [0.05], 0.5)
    assert a == b
    with pytest.raises(ergo.InvalidArgument):
        ergo.Problem(modes=0)
