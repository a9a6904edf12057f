"""Expected improvement, merit function and penalty update."""

from __future__ import annotations

import numpy as np

from .riccati import Direction, Expansions


def model_terms(exps: Expansions, d: Direction):
    """Slope ``d1`` and curvature ``d2`` of the quadratic cost model along ``d``.

    ``d1 = g^T dz`` and ``d2 = dz^T H dz`` over all nodes, the terminal node and
    the arrival/parameter prior, with the Gauss-Newton blocks of each node.
    """
    dt = d.dtheta
    d1 = d2 = 0.0
    for k, n in enumerate(exps.nodes):
        c = n.cost
        dx, dw = d.dxs[k], d.dws[k]
        d1 += c.lx @ dx + c.lt @ dt
        d2 += dx @ c.lxx @ dx + dt @ c.ltt @ dt + 2.0 * dx @ c.lxt @ dt
        if dw.size:
            d1 += c.lw @ dw
            d2 += dw @ c.lww @ dw + 2.0 * dx @ c.lxw @ dw + 2.0 * dw @ c.lwt @ dt
    for c, dx in ((exps.terminal, d.dxs[-1]), (exps.arrival, d.dxs[0])):
        d1 += c.lx @ dx + c.lt @ dt
        d2 += dx @ c.lxx @ dx + dt @ c.ltt @ dt + 2.0 * dx @ c.lxt @ dt
    return float(d1), float(d2)


def expected_improvement(alpha, d1, d2):
    """Predicted cost change ``alpha d1 + 0.5 alpha^2 d2`` (negative is a decrease)."""
    return alpha * d1 + 0.5 * alpha * alpha * d2


def merit(cost, gap_l1, nu):
    return cost + nu * gap_l1


def update_penalty(nu, dl1, gap_l1, rho, beta):
    """``nu+ = max(beta nu, dl(1) / ((1 - rho) sum eps))``; ``beta nu`` when gaps vanish."""
    if gap_l1 <= 0.0:
        return beta * nu
    return max(beta * nu, dl1 / ((1.0 - rho) * gap_l1))


def merit_and_penalty(cost, gap_l1, nu, dl1, rho, beta):
    nu_new = update_penalty(nu, dl1, gap_l1, rho, beta)
    return merit(cost, gap_l1, nu_new), nu_new


def gap_l1(gaps):
    return float(sum(np.abs(g).sum() for g in gaps))
