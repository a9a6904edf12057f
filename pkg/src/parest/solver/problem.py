"""Shooting problem containers.

A problem is a chain of stages ``x_{k+1} = f_k(x_k, w_k; theta)`` with costs
``l_k(x_k, w_k; theta)``, a terminal cost ``l_N(x_N; theta)`` and an arrival
cost ``l_a(x_0; theta)`` that also carries the parameter prior.  Reset stages
have ``nw == 0``.

A stage implements::

    nw                                  uncertainty dimension
    rollout(x, w, theta) -> x_next
    linearize(x, w, theta) -> (x_next, fx, fw, ftheta)
    cost(x, w, theta) -> float
    cost_expansion(x, w, theta) -> CostExpansion

Terminal and arrival terms implement ``cost(x, theta)`` and
``cost_expansion(x, theta)`` (with empty ``w`` blocks).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class CostExpansion:
    l: float
    lx: np.ndarray
    lw: np.ndarray
    lt: np.ndarray
    lxx: np.ndarray
    lxw: np.ndarray
    lxt: np.ndarray
    lww: np.ndarray
    lwt: np.ndarray
    ltt: np.ndarray


def zero_expansion(nx, nw, nt):
    return CostExpansion(0.0, np.zeros(nx), np.zeros(nw), np.zeros(nt), np.zeros((nx, nx)),
                         np.zeros((nx, nw)), np.zeros((nx, nt)), np.zeros((nw, nw)),
                         np.zeros((nw, nt)), np.zeros((nt, nt)))


def residual_expansion(r, Jx, Jw, Jt):
    """Gauss-Newton expansion of ``0.5 ||r||^2`` with residual Jacobians."""
    return CostExpansion(0.5 * float(r @ r), Jx.T @ r, Jw.T @ r, Jt.T @ r, Jx.T @ Jx, Jx.T @ Jw,
                         Jx.T @ Jt, Jw.T @ Jw, Jw.T @ Jt, Jt.T @ Jt)


def add_expansions(a: CostExpansion, b: CostExpansion) -> CostExpansion:
    return CostExpansion(*(getattr(a, f) + getattr(b, f) for f in CostExpansion.__dataclass_fields__))


class QuadraticTerm:
    """``0.5 z^T H z + g^T z`` over ``z = (x, w, theta)``; also used as terminal/arrival."""

    def __init__(self, nx, nw, nt, H=None, g=None):
        self.nx, self.nw, self.nt = nx, nw, nt
        n = nx + nw + nt
        self.H = np.zeros((n, n)) if H is None else np.asarray(H, dtype=float)
        self.g = np.zeros(n) if g is None else np.asarray(g, dtype=float)

    def _z(self, x, w, theta):
        return np.concatenate((x, np.zeros(0) if w is None else w, theta))

    def value(self, x, w, theta):
        z = self._z(x, w, theta)
        return float(0.5 * z @ self.H @ z + self.g @ z)

    def expansion(self, x, w, theta):
        z = self._z(x, w, theta)
        grad = self.H @ z + self.g
        nx, nw = self.nx, self.nw
        ix, iw, it = slice(0, nx), slice(nx, nx + nw), slice(nx + nw, None)
        H = self.H
        return CostExpansion(self.value(x, w, theta), grad[ix], grad[iw], grad[it], H[ix, ix], H[ix, iw],
                             H[ix, it], H[iw, iw], H[iw, it], H[it, it])

    # terminal/arrival protocol
    def cost(self, x, theta):
        return self.value(x, None, theta)

    def cost_expansion(self, x, theta):
        return self.expansion(x, None, theta)


class LinearStage:
    """``f = A x + B w + C theta + c`` with a quadratic cost."""

    def __init__(self, A, B, C, c, cost: QuadraticTerm):
        self.A = np.asarray(A, dtype=float)
        self.B = np.asarray(B, dtype=float)
        self.C = np.asarray(C, dtype=float)
        self.c = np.asarray(c, dtype=float)
        self.nw = self.B.shape[1]
        self.cost_term = cost

    def rollout(self, x, w, theta):
        return self.A @ x + self.B @ w + self.C @ theta + self.c

    def linearize(self, x, w, theta):
        return self.rollout(x, w, theta), self.A, self.B, self.C

    def cost(self, x, w, theta):
        return self.cost_term.value(x, w, theta)

    def cost_expansion(self, x, w, theta):
        return self.cost_term.expansion(x, w, theta)


def _add(x, dx):
    return x + dx


def _diff(x0, x1):
    return x1 - x0


@dataclass
class ShootingProblem:
    stages: list
    terminal: object
    arrival: object
    nx: int
    ntheta: int
    integrate: object = _add
    difference: object = _diff
    meta: dict = field(default_factory=dict)

    @property
    def N(self):
        return len(self.stages)

    def total_cost(self, xs, ws, theta):
        c = self.arrival.cost(xs[0], theta)
        for k, st in enumerate(self.stages):
            c += st.cost(xs[k], ws[k], theta)
        return c + self.terminal.cost(xs[-1], theta)

    def gaps(self, xs, ws, theta):
        return [self.difference(xs[k + 1], st.rollout(xs[k], ws[k], theta)) for k, st in enumerate(self.stages)]

    def simulate(self, x0, ws, theta):
        xs = [np.asarray(x0, dtype=float)]
        for k, st in enumerate(self.stages):
            xs.append(st.rollout(xs[-1], ws[k], theta))
        return xs


@dataclass
class Iterate:
    xs: list
    ws: list
    theta: np.ndarray

    def copy(self):
        return Iterate([x.copy() for x in self.xs], [w.copy() for w in self.ws], self.theta.copy())


def zero_iterate(problem: ShootingProblem, x0=None, theta=None):
    x0 = np.zeros(problem.nx) if x0 is None else np.asarray(x0, dtype=float)
    theta = np.zeros(problem.ntheta) if theta is None else np.asarray(theta, dtype=float)
    ws = [np.zeros(st.nw) for st in problem.stages]
    return Iterate(problem.simulate(x0, ws, theta), ws, theta)
