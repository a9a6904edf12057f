import copy
import json

import numpy as np
import pytest

from parest import inertia as inr
from parest.errors import InconsistentInput, InconsistentSchedule
from parest.problems import (ObservationSet, SyntheticData, build_problem, initial_iterate, load_scenario,
                             make_observation, node_schedule, scenario_from_dict, score_estimate, synthesize_data)
from parest.problems.scenario import data_path
from parest.rbd.dynamics import bias_forces
from parest.solver import SolverConfig, solve

SC_DIR = data_path("scenarios")


def scenario_dict(name="pendulum_payload.json"):
    return copy.deepcopy(load_scenario(name).source)


# ------------------------------------------------------------- observations
def test_observation_kinds_and_wrap():
    sc = load_scenario("hopper_payload.json")
    m = sc.model
    ori = make_observation(m, "base-orientation", std=0.1)
    x = np.zeros(m.nx)
    x[2] = np.pi - 0.01
    z = np.array([-np.pi + 0.01])
    np.testing.assert_allclose(ori.residual(x, z), [-0.2], atol=1e-12)
    full = make_observation(m, "full-state")
    assert full.dim == m.nx
    vel = make_observation(m, "joint-velocity", indices=[0, 1], cov=np.diag([1.0, 4.0]))
    np.testing.assert_allclose(vel.jacobian(m.nx) @ np.arange(m.nx, dtype=float),
                               [m.nq / 1.0, (m.nq + 1) / 2.0])


def test_observation_errors():
    pend = load_scenario("pendulum_payload.json").model
    with pytest.raises(InconsistentInput):
        make_observation(pend, "base-velocity")
    with pytest.raises(InconsistentInput):
        make_observation(pend, "joint-position", cov=[[-1.0]])
    with pytest.raises(InconsistentInput):
        make_observation(pend, "imu")
    with pytest.raises(InconsistentInput):
        make_observation(pend, "joint-position", indices=[3])


def test_observation_noise_uses_covariance():
    pend = load_scenario("pendulum_payload.json").model
    obs = ObservationSet([make_observation(pend, "joint-position", std=2.0)])
    rng = np.random.default_rng(0)
    samples = np.array([obs.sample_noise(rng) for _ in range(4000)])
    assert samples.std() == pytest.approx(2.0, rel=0.05)


# ---------------------------------------------------------------- scenarios
def test_scenario_validation():
    d = scenario_dict()
    d["phases"] = [{"start": 0, "end": 50, "contacts": []}, {"start": 40, "end": 100, "contacts": []}]
    with pytest.raises(InconsistentSchedule):
        scenario_from_dict(d, SC_DIR)
    d = scenario_dict()
    d["phases"] = [{"start": 0, "end": 100, "contacts": [3]}]
    with pytest.raises(InconsistentSchedule):
        scenario_from_dict(d, SC_DIR)
    d = scenario_dict()
    del d["horizon"]
    with pytest.raises(InconsistentInput):
        scenario_from_dict(d, SC_DIR)
    d = scenario_dict()
    d["x0"] = {"q": [0.0, 1.0]}
    with pytest.raises(InconsistentInput):
        scenario_from_dict(d, SC_DIR)


def test_malformed_scenario_file_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n "name": "x",\n "horizon": 10,,\n}\n')
    with pytest.raises(InconsistentInput, match="line 3"):
        load_scenario(str(p))


def test_single_flight_phase_gives_one_reset():
    sc = load_scenario("hopper_payload.json")
    nodes, obs_state = node_schedule(sc)
    resets = [n for n in nodes if n.kind == "reset"]
    assert len(resets) == 1 and resets[0].time == 35
    assert len(nodes) == sc.horizon + 1 and len(obs_state) == sc.horizon + 1


# --------------------------------------------------------------- synthesis
def test_synthesis_deterministic():
    d = scenario_dict()
    d["noise"] = {"observations": 1.0, "arrival": 1.0}
    sc = scenario_from_dict(d, SC_DIR)
    a, b = synthesize_data(sc, 7), synthesize_data(sc, 7)
    assert a.dumps() == b.dumps()
    assert synthesize_data(sc, 8).dumps() != a.dumps()
    again = SyntheticData.from_dict(json.loads(a.dumps()))
    assert again.dumps() == a.dumps()


def test_noiseless_pendulum_observes_true_angles():
    sc = load_scenario("pendulum_payload.json")
    data = synthesize_data(sc, 0)
    q = np.array([x[0] for x in data.states])
    np.testing.assert_array_equal(data.observations[:, 0], q)


def test_equilibrium_gives_constant_observations():
    d = scenario_dict()
    d["x0"] = {"q": [0.0], "v": [0.0]}
    true_model = scenario_from_dict(d, SC_DIR).true_model()
    hold = bias_forces(true_model, np.zeros(1), np.zeros(1))
    d["controls"] = {"type": "sines", "bias": list(map(float, hold)), "terms": []}
    data = synthesize_data(scenario_from_dict(d, SC_DIR), 0)
    assert np.all(data.observations == data.observations[0])


def test_truth_has_zero_residual_and_cost():
    for name in ("pendulum_payload.json", "hopper_payload.json"):
        sc = load_scenario(name)
        data = synthesize_data(sc, 0)
        prob, th0 = build_problem(sc, data, "expeig", {"policy": "exact"})
        it = initial_iterate(prob, data, th0)
        assert prob.total_cost(it.xs, it.ws, it.theta) < 1e-20
        assert max(np.abs(g).max() for g in prob.gaps(it.xs, it.ws, it.theta)) < 1e-12


def test_theta_init_policies():
    sc = load_scenario("pendulum_payload.json")
    data = synthesize_data(sc, 0)
    _, th0 = build_problem(sc, data, "expeig", {"policy": "scale", "factor": 1.7})
    np.testing.assert_allclose(th0, inr.expeig_from_theta(1.7 * data.theta_true[0]))
    _, th0 = build_problem(sc, data, "logchol", {"policy": "explicit", "inertia": [list(data.theta_true[0])]})
    np.testing.assert_allclose(inr.logchol_to_theta(th0), data.theta_true[0], atol=1e-12)
    with pytest.raises(InconsistentInput):
        build_problem(sc, data, "expeig", {"policy": "random"})


def test_observation_count_mismatch():
    sc = load_scenario("pendulum_payload.json")
    data = synthesize_data(sc, 0)
    data.observations = data.observations[:-1]
    with pytest.raises(InconsistentSchedule):
        build_problem(sc, data)


@pytest.mark.parametrize("name", ["cart_pendulum_payload.json", "hopper_payload.json"])
def test_exact_init_converges_fast(name):
    sc = load_scenario(name)
    data = synthesize_data(sc, 0)
    prob, th0 = build_problem(sc, data, "expeig", {"policy": "exact"})
    res = solve(prob, initial_iterate(prob, data, th0), SolverConfig())
    assert res.converged and res.iterations <= 2


# ----------------------------------------------------------------- scoring
def _diff(a, b):
    return np.asarray(b) - np.asarray(a)


def test_score_examples():
    th = np.array([[2.0, 0.1, 0, 0, 1, 0, 1, 0, 0, 1]])
    xs = [np.ones(2), np.zeros(2)]
    s = score_estimate(xs, th, xs, th, _diff, 0.0)
    assert s["param_err"] == 0 and s["traj_l1"] == 0 and s["traj_linf"] == 0 and s["mass_rel_err"] == [0.0]
    off = th.copy()
    off[0, 0] *= 2
    assert score_estimate(xs, off, xs, th, _diff)["mass_rel_err"] == [1.0]


def test_score_recomputation():
    rng = np.random.default_rng(0)
    est, tru = rng.normal(size=(2, 3, 10))
    xs, ts = rng.normal(size=(2, 5, 4))
    s = score_estimate(list(xs), est, list(ts), tru, _diff, 1.5)
    assert s["traj_l1"] == pytest.approx(np.abs(xs - ts).sum(), rel=1e-14)
    assert s["traj_linf"] == np.abs(xs - ts).max()
    assert s["param_err"] == pytest.approx(max(np.linalg.norm(e - t) / np.linalg.norm(t) for e, t in zip(est, tru)))
    assert s["final_cost"] == 1.5


def test_score_chart_invariance():
    sc = load_scenario("cart_pendulum_payload.json")
    data = synthesize_data(sc, 0)
    scores = []
    for chart in ("expeig", "logchol"):
        prob, th0 = build_problem(sc, data, chart, {"policy": "exact"})
        pm = prob.meta["pmap"]
        scores.append(score_estimate(data.states, pm.inertias(th0), data.states, data.theta_true,
                                     sc.model.difference))
    for k in ("param_err", "traj_l1", "traj_linf"):
        assert scores[0][k] == pytest.approx(scores[1][k], abs=1e-12)
