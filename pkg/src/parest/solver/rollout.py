"""Nonlinear rollouts producing line-search candidates."""

from __future__ import annotations

from .problem import Iterate, ShootingProblem
from .riccati import BackwardResult, Direction, Expansions


def rollout_multiple_shooting(problem: ShootingProblem, it: Iterate, d: Direction, alpha: float):
    """Linear update of every node, then gaps from nonlinear shoots.

    Returns ``(candidate, gaps)``.
    """
    xs = [problem.integrate(x, alpha * dx) for x, dx in zip(it.xs, d.dxs)]
    ws = [w + alpha * dw for w, dw in zip(it.ws, d.dws)]
    theta = it.theta + alpha * d.dtheta
    cand = Iterate(xs, ws, theta)
    gaps = problem.gaps(xs, ws, theta)
    return cand, gaps


def rollout_feasibility(problem: ShootingProblem, it: Iterate, exps: Expansions, bw: BackwardResult,
                        d: Direction, alpha: float, keep_gaps: bool = True):
    """Closed-loop rollout keeping a ``(1 - alpha)`` fraction of each gap.

    With ``keep_gaps=False`` all gaps are closed (single shooting).
    """
    theta = it.theta + alpha * d.dtheta
    x = problem.integrate(it.xs[0], alpha * d.dxs[0])
    xs, ws, gaps = [x], [], []
    for k, (st, n, pol) in enumerate(zip(problem.stages, exps.nodes, bw.policies)):
        if pol.k.size:
            dx = problem.difference(it.xs[k], x)
            w = it.ws[k] - alpha * (pol.k + pol.Kt @ d.dtheta) - pol.K @ dx
        else:
            w = it.ws[k].copy()
        f = st.rollout(x, w, theta)
        x = problem.integrate(f, -(1.0 - alpha) * n.gap) if keep_gaps else f
        ws.append(w)
        xs.append(x)
        gaps.append(problem.difference(x, f))
    return Iterate(xs, ws, theta), gaps


def rollout_single_shooting(problem: ShootingProblem, it: Iterate, exps: Expansions, bw: BackwardResult,
                            d: Direction, alpha: float):
    return rollout_feasibility(problem, it, exps, bw, d, alpha, keep_gaps=False)
