"""Dense stacked KKT solve of the Gauss-Newton subproblem (reference oracle)."""

from __future__ import annotations

import numpy as np

from .riccati import Direction, Expansions


def _layout(exps: Expansions, nx, nt):
    N = len(exps.nodes)
    nws = [n.fw.shape[1] for n in exps.nodes]
    ix = [slice(k * nx, (k + 1) * nx) for k in range(N + 1)]
    off = (N + 1) * nx
    iw = []
    for nw in nws:
        iw.append(slice(off, off + nw))
        off += nw
    it = slice(off, off + nt)
    return ix, iw, it, off + nt


def stacked_system(exps: Expansions, nx, nt):
    """Return ``(H, g, A, b)`` of ``min 0.5 z'Hz + g'z  s.t.  A z = b``."""
    ix, iw, it, n = _layout(exps, nx, nt)
    N = len(exps.nodes)
    H = np.zeros((n, n))
    g = np.zeros(n)
    A = np.zeros((N * nx, n))
    b = np.zeros(N * nx)

    def add(c, sx, sw):
        g[sx] += c.lx
        g[it] += c.lt
        H[sx, sx] += c.lxx
        H[it, it] += c.ltt
        H[sx, it] += c.lxt
        H[it, sx] += c.lxt.T
        if sw is not None:
            g[sw] += c.lw
            H[sw, sw] += c.lww
            H[sx, sw] += c.lxw
            H[sw, sx] += c.lxw.T
            H[sw, it] += c.lwt
            H[it, sw] += c.lwt.T

    for k, nd in enumerate(exps.nodes):
        add(nd.cost, ix[k], iw[k] if nd.fw.shape[1] else None)
        r = slice(k * nx, (k + 1) * nx)
        A[r, ix[k + 1]] = np.eye(nx)
        A[r, ix[k]] -= nd.fx
        if nd.fw.shape[1]:
            A[r, iw[k]] -= nd.fw
        A[r, it] -= nd.ft
        b[r] = nd.gap
    add(exps.terminal, ix[N], None)
    add(exps.arrival, ix[0], None)
    return H, g, A, b


def dense_direction(exps: Expansions, nx, nt, rcond=None) -> Direction:
    """Solve the stacked KKT system; least-squares (minimum norm) when singular."""
    H, g, A, b = stacked_system(exps, nx, nt)
    n, m = H.shape[0], A.shape[0]
    K = np.zeros((n + m, n + m))
    K[:n, :n] = H
    K[:n, n:] = A.T
    K[n:, :n] = A
    rhs = np.concatenate((-g, b))
    if rcond is None:
        sol = np.linalg.solve(K, rhs)
    else:
        sol = np.linalg.lstsq(K, rhs, rcond=rcond)[0]
    z = sol[:n]
    ix, iw, it, _ = _layout(exps, nx, nt)
    return Direction([z[s] for s in ix], [z[s] for s in iw], z[it])
