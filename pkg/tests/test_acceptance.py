"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline; they
are also collected into the terminal summary.
"""

import time

import numpy as np
import pytest

from lq_problems import lq_optimum, random_iterate, random_lq
from parest import bench
from parest import inertia as inr
from parest import lie
from parest.checks import central_jacobian, check_model, rel_err
from parest.cli import main
from parest.errors import SingularParameterHessian
from parest.problems import (build_problem, initial_iterate, load_scenario, node_schedule, regressor_image_error,
                             synthesize_data, true_accelerations)
from parest.rbd import dynamics as D
from parest.rbd.model import chain, load_model
from parest.solver import merit as M
from parest.solver.ddp import SolverConfig, solve
from parest.solver.dense import dense_direction
from parest.solver.riccati import backward_pass, compute_node_expansions, linear_direction, solve_arrival
from parest.solver.rollout import rollout_feasibility, rollout_multiple_shooting


def _direction(prob, it, method="nullspace"):
    exps = compute_node_expansions(prob, it)
    bw = backward_pass(prob, exps, 0.0)
    d = linear_direction(exps, bw, solve_arrival(bw.arrival, method, 0.0))
    return exps, bw, d


def _flat(d):
    return np.concatenate(list(d.dxs) + list(d.dws) + [d.dtheta])


def _three_link(rng):
    ths = []
    for _ in range(3):
        L = rng.uniform(0.1, 1.0, 3)
        R = lie.exp(rng.normal(size=3))
        ths.append(inr.from_barycentric(rng.uniform(0.5, 2.0), rng.uniform(-0.3, 0.3, 3),
                                        R @ np.diag(inr.P @ L) @ R.T))
    return chain(ths, [(0, 1, 0), (1, 0, 0), (0, 0, 1)], [(0, 0, 0), (0, 0, -0.5), (0.1, 0, -0.4)])


@pytest.fixture(scope="module")
def charts_report():
    return bench.run_suite(bench.load_suite("charts.json"))


@pytest.fixture(scope="module")
def rollouts_report():
    return bench.run_suite(bench.load_suite("rollouts.json"))


# ------------------------------------------------------------------------ 1
def test_c01_chart_image_consistency(criterion):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    bad = {}
    for name in ("logchol", "expeig"):
        ch = inr.get_chart(name)
        pts = rng.uniform(-2.0, 2.0, (10_000, 10))
        bad[name] = sum(not inr.is_fully_consistent(ch.to_theta(p), 1e-9)[0] for p in pts)
    dt = time.perf_counter() - t0
    criterion(1, sum(bad.values()) == 0 and dt < 5.0,
              f"chart image consistent, failures {bad} of 10000 each, {dt:.2f} s (< 5 s)")


# ------------------------------------------------------------------------ 2
def test_c02_chart_jacobians(criterion):
    rng = np.random.default_rng(2)
    worst = {}
    for name in ("logchol", "expeig"):
        ch = inr.get_chart(name)
        worst[name] = max(rel_err(ch.jacobian(p), central_jacobian(ch.to_theta, p, 1e-6))
                          for p in rng.uniform(-2.0, 2.0, (1000, 10)))
    criterion(2, max(worst.values()) < 1e-6,
              "chart Jacobian vs central FD, worst rel err " + ", ".join(f"{k} {v:.2e}" for k, v in worst.items()))


# ------------------------------------------------------------------------ 3
def test_c03_regressor_identity(criterion):
    rng = np.random.default_rng(3)
    model = _three_link(rng)
    th = D.stacked_inertia(model)
    worst = 0.0
    for _ in range(1000):
        q, v, a = rng.uniform(-np.pi, np.pi, 3), rng.normal(size=3), rng.normal(size=3)
        worst = max(worst, np.abs(D.joint_torque_regressor(model, q, v, a) @ th
                                  - D.inverse_dynamics(model, q, v, a)).max())
    criterion(3, worst < 1e-10, f"3-link regressor identity, worst |Y theta - ID| = {worst:.2e} (< 1e-10)")


# ------------------------------------------------------------------------ 4
def test_c04_contact_kkt(criterion):
    rng = np.random.default_rng(4)
    model = load_model("hopper.json")
    n = model.nv
    sets = [(0,), (1,), (0, 1)]
    res_worst = agree_worst = 0.0
    for i in range(500):
        q, v, tau = rng.normal(size=(3, n))
        sol = D.forward_dynamics(model, q, v, tau, sets[i % 3])
        M_ = D.mass_matrix(model, q)
        h = D.bias_forces(model, q, v)
        res_worst = max(res_worst, np.abs(M_ @ sol.a - sol.Jc.T @ sol.lam - (tau - h)).max(),
                        np.abs(sol.Jc @ sol.a + sol.ac).max())
        a2, y2 = D.dense_saddle_solve(M_, sol.Jc, tau - h, -sol.ac)
        agree_worst = max(agree_worst, np.abs(sol.a - a2).max(), np.abs(sol.lam + y2).max())
    criterion(4, res_worst < 1e-8 and agree_worst < 1e-9,
              f"contact KKT on 500 instances, residual {res_worst:.2e} (< 1e-8), Schur vs dense {agree_worst:.2e} "
              "(< 1e-9)")


# ------------------------------------------------------------------------ 5
def test_c05_parameter_derivatives(criterion):
    rep = check_model(load_model("hopper.json"), 20, seed=5)
    kinds = {k.split("[")[0] for k in rep.worst}
    needed = {"free_param", "contact_param", "impulse_param"}
    worst = {k: v for k, v in rep.worst.items() if k.split("[")[0] in needed}
    ok = needed <= kinds and all(f"{k}[{c}]" in worst for k in needed for c in ("logchol", "expeig"))
    ok = ok and max(worst.values()) < 1e-6
    criterion(5, ok, "parameter derivatives vs FD, worst rel err "
              + ", ".join(f"{k} {v:.1e}" for k, v in sorted(worst.items())))


# ------------------------------------------------------------------------ 6
def test_c06_riccati_equals_kkt(criterion):
    rng = np.random.default_rng(6)
    dense_worst = ns_worst = 0.0
    for i in range(100):
        prob = random_lq(rng, resets=bool(i % 2))
        assert prob.N <= 8 and prob.nx <= 4 and prob.ntheta <= 3
        it = random_iterate(rng, prob)
        exps, _, d = _direction(prob, it, "nullspace")
        dense_worst = max(dense_worst, np.abs(_flat(d) - _flat(dense_direction(exps, prob.nx, prob.ntheta))).max())
        _, _, d2 = _direction(prob, it, "schur")
        ns_worst = max(ns_worst, np.abs(_flat(d) - _flat(d2)).max())
    criterion(6, dense_worst < 1e-8 and ns_worst < 1e-9,
              f"Riccati vs dense KKT {dense_worst:.2e} (< 1e-8), nullspace vs Schur {ns_worst:.2e} (< 1e-9), 100 problems")


# ------------------------------------------------------------------------ 7
def test_c07_lq_exactness(criterion):
    rng = np.random.default_rng(7)
    iters, worst = [], 0.0
    for _ in range(20):
        prob = random_lq(rng, resets=True)
        res = solve(prob, random_iterate(rng, prob))
        iters.append(res.iterations if res.converged else -1)
        xs, ws, theta = lq_optimum(prob)
        est = np.concatenate(list(res.iterate.xs) + list(res.iterate.ws) + [res.iterate.theta])
        ref = np.concatenate(list(xs) + list(ws) + [theta])
        worst = max(worst, np.abs(est - ref).max())
    criterion(7, set(iters) == {1} and worst < 1e-8,
              f"LQ problems solved in {sorted(set(iters))} iteration(s), max deviation from dense LS {worst:.2e}")


# ------------------------------------------------------------------------ 8
def test_c08_gap_contraction(criterion):
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(30):
        prob = random_lq(rng, resets=True)
        it = random_iterate(rng, prob)
        exps, bw, d = _direction(prob, it)
        before = prob.gaps(it.xs, it.ws, it.theta)
        for alpha in (1.0, 0.5, 0.25):
            cand, _ = rollout_feasibility(prob, it, exps, bw, d, alpha)
            after = prob.gaps(cand.xs, cand.ws, cand.theta)
            worst = max(worst, max(abs(np.linalg.norm(g1) - (1 - alpha) * np.linalg.norm(g0))
                                   for g0, g1 in zip(before, after)))
    criterion(8, worst < 1e-10, f"feasibility rollout gap contraction, worst deviation {worst:.2e} (< 1e-10)")


# ------------------------------------------------------------------------ 9
def test_c09_expected_improvement(criterion):
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(30):
        prob = random_lq(rng, resets=True)
        it = random_iterate(rng, prob)
        exps, _, d = _direction(prob, it)
        d1, d2 = M.model_terms(exps, d)
        c0 = prob.total_cost(it.xs, it.ws, it.theta)
        for alpha in (1.0, 0.5, 0.25, 0.125):
            cand, _ = rollout_multiple_shooting(prob, it, d, alpha)
            change = prob.total_cost(cand.xs, cand.ws, cand.theta) - c0
            worst = max(worst, abs(M.expected_improvement(alpha, d1, d2) - change) / max(1.0, abs(change)))
    criterion(9, worst < 1e-8, f"expected improvement vs realized change, worst rel {worst:.2e} (< 1e-8)")


# ----------------------------------------------------------------------- 10
def _recover(name):
    sc = load_scenario(name)
    data = synthesize_data(sc, 0)
    prob, th0 = build_problem(sc, data, "expeig", {"policy": "scale", "factor": 1.7})
    t0 = time.perf_counter()
    res = solve(prob, initial_iterate(prob, data, th0), SolverConfig(max_iter=100))
    dt = time.perf_counter() - t0
    est = prob.meta["pmap"].inertias(res.iterate.theta)
    nodes, _ = node_schedule(sc)
    samples = true_accelerations(data.states, nodes, sc.dt, sc.model.nq)
    img = regressor_image_error(sc.true_model(), samples, sc.estimate, est, data.theta_true)
    mass = float(np.max(np.abs(est[:, 0] - data.theta_true[:, 0]) / data.theta_true[:, 0]))
    return res, dt, img, mass


def test_c10_payload_recovery(criterion):
    res_p, dt_p, img_p, _ = _recover("pendulum_payload.json")
    res_c, dt_c, img_c, mass_c = _recover("cart_pendulum_payload.json")
    ok = (res_p.converged and res_c.converged and res_p.iterations < 100 and res_c.iterations < 100
          and dt_p < 10 and dt_c < 10 and img_p < 1e-6 and img_c < 1e-6 and mass_c < 1e-4)
    criterion(10, ok, f"pendulum: {res_p.status} in {res_p.iterations} it / {dt_p:.2f} s, regressor-image err "
              f"{img_p:.1e}; cart-pendulum (fully excited): {res_c.status} in {res_c.iterations} it / {dt_c:.2f} s, "
              f"image err {img_c:.1e}, mass rel err {mass_c:.1e}")


# ----------------------------------------------------------------------- 11
def test_c11_chart_comparison(criterion, charts_report):
    cells = {}
    for r in charts_report.records:
        cells.setdefault((r["scenario"], r["seed"]), {})[r["chart"]] = r
    n_scen = len({k[0] for k in cells})
    both = [c for c in cells.values() if all(c[ch]["status"] == "converged" for ch in ("expeig", "logchol"))]
    cost_ok = sum(abs(c["expeig"]["final_cost"] - c["logchol"]["final_cost"])
                  <= 0.01 * max(c["expeig"]["final_cost"], c["logchol"]["final_cost"]) for c in both)
    order = sum(c["expeig"]["iterations"] <= c["logchol"]["iterations"] for c in both)
    frac = order / len(cells)
    print(charts_report.table())
    ok = n_scen >= 5 and len(cells) >= 25 and len(both) == len(cells) and cost_ok == len(cells) and frac >= 0.6
    criterion(11, ok, f"{n_scen} scenarios x {len(cells) // n_scen} seeds: costs within 1% in {cost_ok}/{len(cells)} "
              f"cells, expeig iterations <= logchol in {order}/{len(cells)} = {frac:.0%} (need >= 60%)")


# ----------------------------------------------------------------------- 12
def test_c12_nullspace_necessity(criterion):
    sc = load_scenario("gantry6_sphere.json")
    data = synthesize_data(sc, 0)
    prob, th0 = build_problem(sc, data, "expeig")
    it = initial_iterate(prob, data, th0)
    try:
        solve(prob, it, SolverConfig(arrival="schur"))
        schur_raised = False
    except SingularParameterHessian:
        schur_raised = True
    res = solve(prob, it, SolverConfig(arrival="nullspace"))
    ok = schur_raised and res.converged and res.gap_l1 < 1e-6 and res.grad < 1e-5
    criterion(12, ok, f"sphere payload: Schur raised SingularParameterHessian={schur_raised}; nullspace {res.status} "
              f"in {res.iterations} it, gap {res.gap_l1:.1e} (< 1e-6), grad {res.grad:.1e} (< 1e-5), rank {res.rank}")


# ----------------------------------------------------------------------- 13
def test_c13_rollout_comparison(criterion, rollouts_report):
    by = {}
    for r in rollouts_report.records:
        by.setdefault(r["rollout"], []).append(r)
    conv = {k: sum(r["status"] == "converged" for r in v) for k, v in by.items()}
    table = rollouts_report.table()
    print(table)
    n = len(by["multiple"])
    shape = all(k in table for k in ("iterations", "cost", "error [l-inf]")) and len(rollouts_report.summary) == 3
    ok = n == 20 and conv["multiple"] >= 0.9 * n and shape
    criterion(13, ok, "planar hopper, 20 random inits: converged " + ", ".join(f"{k} {conv[k]}/{len(by[k])}"
                                                                              for k in ("single", "feasibility",
                                                                                        "multiple"))
              + " (multiple needs >= 90%); iterations / cost / error table emitted")


# ----------------------------------------------------------------------- 14
def test_c14_determinism(criterion, tmp_path, capsys):
    def files(tag):
        out = tmp_path / tag
        assert main(["simulate", "hopper_payload.json", "--out", str(out / "data.json"), "--seed", "4"]) == 0
        assert main(["estimate", "hopper_payload.json", "--data", str(out / "data.json"), "--out",
                     str(out / "est.json"), "--seed", "4", "--state-std", "0.01"]) == 0
        assert main(["bench", "smoke.json", "--out", str(out / "bench")]) == 0
        names = ["data.json", "est.json", "est_trace.csv", "bench/records.csv", "bench/summary.csv",
                 "bench/table.txt"]
        return {n: (out / n).read_bytes() for n in names}

    a, b = files("a"), files("b")
    capsys.readouterr()
    same = [n for n in a if a[n] == b[n]]
    criterion(14, len(same) == len(a), f"reruns byte-identical for {len(same)}/{len(a)} outputs "
              "(simulate, estimate trace, bench CSVs)")
