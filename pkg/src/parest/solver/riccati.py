"""Node expansions, parametrized Riccati backward pass and arrival-node solves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ..errors import NonFiniteData, NotPositiveDefinite, SingularParameterHessian
from .problem import CostExpansion, Iterate, ShootingProblem

EPS_RANK = 1e-8


@dataclass
class NodeExpansion:
    cost: CostExpansion
    fx: np.ndarray
    fw: np.ndarray
    ft: np.ndarray
    gap: np.ndarray
    x_next: np.ndarray


@dataclass
class Expansions:
    nodes: list
    terminal: CostExpansion
    arrival: CostExpansion

    @property
    def gaps(self):
        return [n.gap for n in self.nodes]

    def gap_l1(self):
        return float(sum(np.abs(g).sum() for g in self.gaps))

    def gap_inf(self):
        return max((float(np.abs(g).max()) for g in self.gaps if g.size), default=0.0)


@dataclass
class NodePolicy:
    k: np.ndarray
    K: np.ndarray
    Kt: np.ndarray
    Qw: np.ndarray
    Qww: np.ndarray


@dataclass
class ValueExpansion:
    Vx: np.ndarray
    Vt: np.ndarray
    Vxx: np.ndarray
    Vxt: np.ndarray
    Vtt: np.ndarray


@dataclass
class BackwardResult:
    policies: list
    values: list          # values[k] is the value at node k, len N + 1
    arrival: ValueExpansion
    qw_inf: float


@dataclass
class ArrivalSolution:
    dx0: np.ndarray
    dtheta: np.ndarray
    method: str
    rank: int
    null_basis: np.ndarray


def _finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFiniteData("non-finite value in node expansion")


def compute_node_expansions(problem: ShootingProblem, it: Iterate) -> Expansions:
    nodes = []
    for k, st in enumerate(problem.stages):
        xn, fx, fw, ft = st.linearize(it.xs[k], it.ws[k], it.theta)
        ce = st.cost_expansion(it.xs[k], it.ws[k], it.theta)
        gap = problem.difference(it.xs[k + 1], xn)
        _finite(xn, fx, fw, ft, ce.lx, ce.lw, ce.lt, ce.lxx, ce.lww, ce.ltt)
        nodes.append(NodeExpansion(ce, np.atleast_2d(fx), fw.reshape(problem.nx, st.nw),
                                   ft.reshape(problem.nx, problem.ntheta), gap, xn))
    term = problem.terminal.cost_expansion(it.xs[-1], it.theta)
    arr = problem.arrival.cost_expansion(it.xs[0], it.theta)
    _finite(term.lx, term.lxx, arr.lx, arr.lxx, arr.lt, arr.ltt)
    return Expansions(nodes, term, arr)


def _sym(A):
    return 0.5 * (A + A.T)


def backward_pass(problem: ShootingProblem, exps: Expansions, mu: float = 0.0) -> BackwardResult:
    t = exps.terminal
    Vx, Vt, Vxx, Vxt, Vtt = t.lx.copy(), t.lt.copy(), t.lxx.copy(), t.lxt.copy(), t.ltt.copy()
    N = len(exps.nodes)
    values = [None] * (N + 1)
    values[N] = ValueExpansion(Vx, Vt, Vxx, Vxt, Vtt)
    policies = [None] * N
    qw_inf = 0.0
    for k in range(N - 1, -1, -1):
        n = exps.nodes[k]
        c = n.cost
        fx, fw, ft, gap = n.fx, n.fw, n.ft, n.gap
        # gradients deflected by the gap
        Vx_p = Vx + Vxx @ gap
        Vt_p = Vt + Vxt.T @ gap
        VxxFx = Vxx @ fx
        VxxFt = Vxx @ ft
        Qx = c.lx + fx.T @ Vx_p
        Qt = c.lt + Vt_p + ft.T @ Vx_p
        Qxx = c.lxx + fx.T @ VxxFx
        Qxt = c.lxt + fx.T @ Vxt + fx.T @ VxxFt
        Qtt = c.ltt + Vtt + ft.T @ Vxt + Vxt.T @ ft + ft.T @ VxxFt
        nw = fw.shape[1]
        if nw:
            VxxFw = Vxx @ fw
            Qw = c.lw + fw.T @ Vx_p
            Qxw = c.lxw + fx.T @ VxxFw
            Qww = c.lww + fw.T @ VxxFw
            Qwt = c.lwt + fw.T @ Vxt + fw.T @ VxxFt
            Qreg = _sym(Qww) + mu * np.eye(nw)
            try:
                cf = cho_factor(Qreg)
            except LinAlgError as exc:
                raise NotPositiveDefinite(f"Q_ww not positive definite at node {k}") from exc
            kk = cho_solve(cf, Qw)
            K = cho_solve(cf, Qxw.T)
            Kt = cho_solve(cf, Qwt)
            Vx = Qx - Qxw @ kk
            Vt = Qt - Qwt.T @ kk
            Vxx = _sym(Qxx - Qxw @ K)
            Vxt = Qxt - Qxw @ Kt
            Vtt = _sym(Qtt - Qwt.T @ Kt)
            policies[k] = NodePolicy(kk, K, Kt, Qw, Qww)
            qw_inf = max(qw_inf, float(np.abs(Qw).max()))
        else:
            Vx, Vt, Vxx, Vxt, Vtt = Qx, Qt, _sym(Qxx), Qxt, _sym(Qtt)
            policies[k] = NodePolicy(np.zeros(0), np.zeros((0, len(Qx))), np.zeros((0, len(Qt))),
                                     np.zeros(0), np.zeros((0, 0)))
        _finite(Vx, Vt, Vxx, Vxt, Vtt)
        values[k] = ValueExpansion(Vx, Vt, Vxx, Vxt, Vtt)
    a = exps.arrival
    arrival = ValueExpansion(Vx + a.lx, Vt + a.lt, _sym(Vxx + a.lxx), Vxt + a.lxt, _sym(Vtt + a.ltt))
    return BackwardResult(policies, values, arrival, qw_inf)


def _reduced_arrival(V: ValueExpansion, Y, mu):
    """Schur elimination of ``theta = Y theta_y``; returns ``(dx0, dtheta)``."""
    nx = len(V.Vx)
    if Y.shape[1]:
        Htt = _sym(Y.T @ V.Vtt @ Y) + mu * np.eye(Y.shape[1])
        try:
            ct = cho_factor(Htt)
        except LinAlgError as exc:
            raise NotPositiveDefinite("reduced parameter Hessian not positive definite") from exc
        kt = cho_solve(ct, Y.T @ V.Vt)
        Kt = cho_solve(ct, (V.Vxt @ Y).T)
        Vx_hat = V.Vx - V.Vxt @ Y @ kt
        Vxx_hat = _sym(V.Vxx - V.Vxt @ Y @ Kt)
    else:
        kt = np.zeros(0)
        Kt = np.zeros((0, nx))
        Vx_hat, Vxx_hat = V.Vx, V.Vxx
    try:
        cx = cho_factor(Vxx_hat + mu * np.eye(nx))
    except LinAlgError as exc:
        raise NotPositiveDefinite("arrival state Hessian not positive definite") from exc
    dx0 = -cho_solve(cx, Vx_hat)
    dty = -kt - Kt @ dx0
    return dx0, Y @ dty


def solve_arrival_schur(V: ValueExpansion, mu: float = 0.0, eps_rank: float = EPS_RANK) -> ArrivalSolution:
    nt = len(V.Vt)
    if nt:
        ev = np.linalg.eigvalsh(V.Vtt)
        if ev[-1] <= 0.0 or ev[0] <= eps_rank * ev[-1]:
            raise SingularParameterHessian(
                f"parameter Hessian is singular (min eig {ev[0]:.3e}, max eig {ev[-1] if nt else 0.0:.3e})")
    dx0, dt = _reduced_arrival(V, np.eye(nt), mu)
    return ArrivalSolution(dx0, dt, "schur", nt, np.zeros((nt, 0)))


def nullspace_split(Vtt, eps_rank=EPS_RANK):
    """Orthonormal bases ``(Y, Z)`` of the range and null space of ``Vtt``."""
    nt = Vtt.shape[0]
    if not nt:
        return np.zeros((0, 0)), np.zeros((0, 0))
    ev, U = np.linalg.eigh(_sym(Vtt))
    top = ev[-1]
    keep = ev > eps_rank * top if top > 0.0 else np.zeros(nt, dtype=bool)
    return U[:, keep], U[:, ~keep]


def solve_arrival_nullspace(V: ValueExpansion, mu: float = 0.0, eps_rank: float = EPS_RANK) -> ArrivalSolution:
    _finite(V.Vtt, V.Vt, V.Vxt)
    Y, Z = nullspace_split(V.Vtt, eps_rank)
    dx0, dt = _reduced_arrival(V, Y, mu)
    return ArrivalSolution(dx0, dt, "nullspace", Y.shape[1], Z)


def solve_arrival(V: ValueExpansion, method: str, mu: float = 0.0, eps_rank: float = EPS_RANK):
    if method == "schur":
        return solve_arrival_schur(V, mu, eps_rank)
    if method == "nullspace":
        return solve_arrival_nullspace(V, mu, eps_rank)
    raise ValueError(f"unknown arrival method {method!r}")


@dataclass
class Direction:
    dxs: list
    dws: list
    dtheta: np.ndarray


def linear_direction(exps: Expansions, bw: BackwardResult, arr: ArrivalSolution) -> Direction:
    """Full search direction from the policies and the linearized dynamics."""
    dxs = [arr.dx0]
    dws = []
    dt = arr.dtheta
    for n, pol in zip(exps.nodes, bw.policies):
        dx = dxs[-1]
        if pol.k.size:
            dw = -pol.k - pol.K @ dx - pol.Kt @ dt
        else:
            dw = np.zeros(0)
        dws.append(dw)
        step = n.fx @ dx + n.ft @ dt + n.gap
        if dw.size:
            step = step + n.fw @ dw
        dxs.append(step)
    return Direction(dxs, dws, dt)


def grad_norm(bw: BackwardResult) -> float:
    a = bw.arrival
    vals = [bw.qw_inf, float(np.abs(a.Vx).max()) if a.Vx.size else 0.0,
            float(np.abs(a.Vt).max()) if a.Vt.size else 0.0]
    return max(vals)
