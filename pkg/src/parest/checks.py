"""Finite-difference verification of regressor, chart Jacobians and dynamics parameter derivatives.

Errors are normwise relative: ``max|A - B| / max(max|B|, 1)`` with ``B`` the
finite-difference (or inverse-dynamics) reference.  The floor of one keeps
entries that vanish analytically from blowing up the ratio.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import inertia as inr
from .errors import RankDeficientContact
from .rbd import dynamics as D

log = logging.getLogger(__name__)

FD_STEP = 1e-6
TOL = 1e-6
REGRESSOR_TOL = 1e-10


def rel_err(A, B):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.size == 0:
        return 0.0
    return float(np.abs(A - B).max() / max(float(np.abs(B).max()), 1.0))


def central_jacobian(fun, x, h=FD_STEP):
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(len(x)):
        e = np.zeros(len(x))
        e[i] = h
        cols.append((np.asarray(fun(x + e)) - np.asarray(fun(x - e))) / (2.0 * h))
    return np.array(cols).T.reshape(-1, len(x))


def chart_jacobian_error(chart, pi, h=FD_STEP):
    ch = inr.get_chart(chart)
    return rel_err(ch.jacobian(pi), central_jacobian(ch.to_theta, pi, h))


def _param_model(model, chart, pis):
    ch = inr.get_chart(chart)
    bodies = list(range(model.n_bodies))
    blocks = np.asarray(pis, dtype=float).reshape(len(bodies), 10)
    m = model.with_inertias([ch.to_theta(p) for p in blocks], bodies)
    G = D.block_chart_jacobian([ch.jacobian(p) for p in blocks])
    return m, G, bodies


def free_param_error(model, chart, pis, q, v, tau):
    m, G, bodies = _param_model(model, chart, pis)
    sol = D.forward_dynamics(m, q, v, tau)
    da = D.fd_param_derivative(m, q, v, sol.a, G, bodies, sol.factor)

    def acc(p):
        return D.forward_dynamics(_param_model(model, chart, p)[0], q, v, tau).a

    return rel_err(da, central_jacobian(acc, np.ravel(pis)))


def contact_param_error(model, chart, pis, q, v, tau, contacts):
    m, G, bodies = _param_model(model, chart, pis)
    sol = D.forward_dynamics(m, q, v, tau, contacts)
    da, dlam = D.contact_param_derivative(m, q, v, sol, G, bodies)

    def out(p):
        s = D.forward_dynamics(_param_model(model, chart, p)[0], q, v, tau, contacts)
        return np.concatenate((s.a, s.lam))

    return rel_err(np.vstack((da, dlam)), central_jacobian(out, np.ravel(pis)))


def impulse_param_error(model, chart, pis, q, v_minus, contacts):
    m, G, bodies = _param_model(model, chart, pis)
    sol = D.impulse_dynamics(m, q, v_minus, contacts)
    dvp, dlam = D.impulse_param_derivative(m, q, v_minus, sol, G, bodies)

    def out(p):
        s = D.impulse_dynamics(_param_model(model, chart, p)[0], q, v_minus, contacts)
        return np.concatenate((s.a, s.lam))

    return rel_err(np.vstack((dvp, dlam)), central_jacobian(out, np.ravel(pis)))


def regressor_error(model, q, v, a):
    Y = D.joint_torque_regressor(model, q, v, a)
    return float(np.abs(Y @ D.stacked_inertia(model) - D.inverse_dynamics(model, q, v, a)).max())


@dataclass
class CheckReport:
    worst: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    skipped: list = field(default_factory=list)

    def add(self, name, err, tol):
        self.worst[name] = max(self.worst.get(name, 0.0), float(err))
        self.counts[name] = self.counts.get(name, 0) + 1
        self.tolerances[name] = tol

    @property
    def passed(self):
        return all(np.isfinite(e) and e < self.tolerances[k] for k, e in self.worst.items())

    def lines(self):
        out = []
        for k in sorted(self.worst):
            ok = np.isfinite(self.worst[k]) and self.worst[k] < self.tolerances[k]
            out.append(f"{k:<28s} n={self.counts[k]:<5d} worst={self.worst[k]:.3e} "
                       f"tol={self.tolerances[k]:.0e} {'PASS' if ok else 'FAIL'}")
        out.extend(f"{s:<28s} skipped" for s in self.skipped)
        return out


def check_model(model, n_samples, seed=0, charts=("logchol", "expeig")):
    """Run every check ``n_samples`` times at random states and chart points."""
    rng = np.random.default_rng(seed)
    rep = CheckReport()
    nv, nb = model.nv, model.n_bodies
    singles = [(c,) for c in range(len(model.contacts))]
    if not singles:
        rep.skipped += ["contact_param", "impulse_param"]
    for _ in range(n_samples):
        q = rng.uniform(-1.0, 1.0, nv)
        v = rng.standard_normal(nv)
        a = rng.standard_normal(nv)
        tau = rng.standard_normal(nv)
        rep.add("regressor_identity", regressor_error(model, q, v, a), REGRESSOR_TOL)
        for chart in charts:
            pis = rng.uniform(-1.0, 1.0, (nb, 10))
            rep.add(f"chart_jacobian[{chart}]", max(chart_jacobian_error(chart, p) for p in pis), TOL)
            rep.add(f"free_param[{chart}]", free_param_error(model, chart, pis, q, v, tau), TOL)
            if singles:
                contacts = singles[rng.integers(len(singles))]
                try:
                    rep.add(f"contact_param[{chart}]",
                            contact_param_error(model, chart, pis, q, v, tau, contacts), TOL)
                    rep.add(f"impulse_param[{chart}]",
                            impulse_param_error(model, chart, pis, q, v, contacts), TOL)
                except RankDeficientContact:
                    log.info("rank-deficient contact sample skipped")
    return rep
