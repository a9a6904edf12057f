"""Parametrized multiple-shooting DDP with merit line search and LM damping."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import MaxIterReached, NonFiniteData, NotPositiveDefinite, ParestError
from . import merit as M
from .problem import Iterate, ShootingProblem
from .riccati import (EPS_RANK, backward_pass, compute_node_expansions, grad_norm, linear_direction,
                      solve_arrival)
from .rollout import rollout_feasibility, rollout_multiple_shooting

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("iter", "cost", "gap_l1", "dtheta_norm", "alpha", "mu", "nu", "accepted")


@dataclass
class SolverConfig:
    max_iter: int = 100
    rollout: str = "multiple"
    arrival: str = "nullspace"
    alphas: tuple = tuple(2.0 ** -i for i in range(11))
    mu0: float = 1e-9
    mu_min: float = 1e-9
    mu_max: float = 1e9
    mu_up: float = 10.0
    mu_down: float = 0.5
    rho: float = 0.3
    beta_nu: float = 0.5
    nu0: float = 1.0
    c1: float = 1e-4
    memory: int = 5
    tol_grad: float = 1e-6
    tol_gap: float = 1e-8
    tol_step: float = 1e-12
    eps_rank: float = EPS_RANK

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0 or not 0.0 < self.beta_nu < 1.0:
            raise ValueError("rho and beta_nu must lie in (0, 1)")
        if any(b >= a for a, b in zip(self.alphas, self.alphas[1:])):
            raise ValueError("step schedule must be strictly decreasing")
        if self.rollout not in ("single", "feasibility", "multiple"):
            raise ValueError(f"unknown rollout {self.rollout!r}")
        if self.arrival not in ("schur", "nullspace"):
            raise ValueError(f"unknown arrival method {self.arrival!r}")


@dataclass
class TraceRow:
    iter: int
    cost: float
    gap_l1: float
    dtheta_norm: float
    alpha: float
    mu: float
    nu: float
    accepted: int


@dataclass
class SolverResult:
    iterate: Iterate
    status: str
    iterations: int
    cost: float
    gap_l1: float
    gap_inf: float
    grad: float
    trace: list = field(default_factory=list)
    rank: int = -1

    @property
    def converged(self):
        return self.status == "converged"

    def trace_csv(self) -> str:
        return trace_to_csv(self.trace)


def _fmt(x):
    return repr(float(x))


def trace_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for r in rows:
        w.writerow([r.iter, _fmt(r.cost), _fmt(r.gap_l1), _fmt(r.dtheta_norm), _fmt(r.alpha), _fmt(r.mu),
                    _fmt(r.nu), r.accepted])
    return buf.getvalue()


def _finite_iterate(it: Iterate):
    return (all(np.all(np.isfinite(x)) for x in it.xs) and all(np.all(np.isfinite(w)) for w in it.ws)
            and np.all(np.isfinite(it.theta)))


def make_feasible(problem: ShootingProblem, it: Iterate) -> Iterate:
    """Forward-simulate from ``x_0`` with the current uncertainties (closes all gaps)."""
    return Iterate(problem.simulate(it.xs[0], it.ws, it.theta), [w.copy() for w in it.ws], it.theta.copy())


def solve(problem: ShootingProblem, init: Iterate, config: SolverConfig | None = None,
          callback=None, raise_on_failure=False) -> SolverResult:
    """Run the solver from ``init``.

    Non-convergence is reported through ``SolverResult.status`` (``max_iter``,
    ``stalled`` or ``numerical``); with ``raise_on_failure`` a
    :class:`MaxIterReached` carrying the best iterate and trace is raised
    instead.  A singular parameter Hessian in the Schur arrival solve always
    propagates.
    """
    cfg = config or SolverConfig()
    it = init.copy()
    if cfg.rollout == "single":
        it = make_feasible(problem, it)
    mu, nu = cfg.mu0, cfg.nu0
    history = []
    trace = []
    status = "max_iter"
    grad = np.inf
    rank = -1
    exps = compute_node_expansions(problem, it)
    cost = problem.total_cost(it.xs, it.ws, it.theta)
    gl1 = exps.gap_l1()
    history.append((cost, gl1))
    n_iter = 0
    while True:
        try:
            bw = backward_pass(problem, exps, mu)
            arr = solve_arrival(bw.arrival, cfg.arrival, mu, cfg.eps_rank)
        except NotPositiveDefinite as exc:
            log.debug("backward pass failed (%s), mu -> %g", exc, mu * cfg.mu_up)
            if mu >= cfg.mu_max:
                status = "stalled"
                break
            mu = min(mu * cfg.mu_up, cfg.mu_max)
            n_iter += 1
            trace.append(TraceRow(n_iter, cost, gl1, 0.0, 0.0, mu, nu, 0))
            if n_iter >= cfg.max_iter:
                break
            continue
        rank = arr.rank
        grad = grad_norm(bw)
        if grad < cfg.tol_grad and exps.gap_inf() < cfg.tol_gap:
            status = "converged"
            break
        if n_iter >= cfg.max_iter:
            break
        n_iter += 1
        d = linear_direction(exps, bw, arr)
        d1, d2 = M.model_terms(exps, d)
        nu = M.update_penalty(nu, M.expected_improvement(1.0, d1, d2), gl1, cfg.rho, cfg.beta_nu)
        ref = max(c + nu * g for c, g in history[-cfg.memory:])
        accepted = None
        for alpha in cfg.alphas:
            try:
                with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                    if cfg.rollout == "multiple":
                        cand, gaps = rollout_multiple_shooting(problem, it, d, alpha)
                    else:
                        cand, gaps = rollout_feasibility(problem, it, exps, bw, d, alpha,
                                                         keep_gaps=cfg.rollout == "feasibility")
                    if not _finite_iterate(cand):
                        continue
                    c_new = problem.total_cost(cand.xs, cand.ws, cand.theta)
            except (ParestError, ValueError, np.linalg.LinAlgError, FloatingPointError, OverflowError):
                # non-finite dynamics along the trial step count as a rejected step
                continue
            g_new = M.gap_l1(gaps)
            if not (np.isfinite(c_new) and np.isfinite(g_new)):
                continue
            model = M.expected_improvement(alpha, d1, d2) - nu * alpha * gl1
            if c_new + nu * g_new <= ref + cfg.c1 * min(model, 0.0):
                accepted = (alpha, cand, c_new, g_new)
                break
        if accepted is None:
            trace.append(TraceRow(n_iter, cost, gl1, 0.0, 0.0, mu, nu, 0))
            if mu >= cfg.mu_max:
                status = "stalled"
                break
            mu = min(mu * cfg.mu_up, cfg.mu_max)
            continue
        alpha, cand, c_new, g_new = accepted
        step = alpha * max(max(float(np.abs(dx).max()) for dx in d.dxs),
                           max((float(np.abs(dw).max()) for dw in d.dws if dw.size), default=0.0),
                           float(np.abs(d.dtheta).max()) if d.dtheta.size else 0.0)
        dtheta_norm = alpha * float(np.linalg.norm(d.dtheta))
        it, cost = cand, c_new
        if alpha == cfg.alphas[0]:
            mu = max(mu * cfg.mu_down, cfg.mu_min)
        try:
            exps = compute_node_expansions(problem, it)
        except NonFiniteData:
            status = "numerical"
            break
        gl1 = exps.gap_l1()
        history.append((cost, gl1))
        trace.append(TraceRow(n_iter, cost, gl1, dtheta_norm, alpha, mu, nu, 1))
        if callback is not None:
            callback(n_iter, it)
        if step < cfg.tol_step:
            status = "converged"
            break
    res = SolverResult(it, status, n_iter, cost, exps.gap_l1(), exps.gap_inf(), grad, trace, rank)
    log.info("solve finished: %s after %d iterations, cost %.6g", status, n_iter, cost)
    if raise_on_failure and not res.converged:
        raise MaxIterReached(f"solver stopped with status {status} after {n_iter} iterations", res)
    return res
