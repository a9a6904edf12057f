"""Scoring of estimates against ground truth (physical inertias, not chart coordinates)."""

from __future__ import annotations

import numpy as np
from scipy.linalg import norm

from ..rbd import dynamics as D


def score_estimate(xs, inertias, truth_states, truth_inertias, difference, final_cost=float("nan")):
    """Parameter and trajectory errors.

    ``inertias`` and ``truth_inertias`` are (n_est, 10) arrays of physical
    inertial vectors.  Returns a dict with per-body mass and vector relative
    errors, the trajectory l1 / l-inf errors and the final cost.
    """
    est = np.asarray(inertias, dtype=float).reshape(-1, 10)
    tru = np.asarray(truth_inertias, dtype=float).reshape(-1, 10)
    mass_err = [abs(e[0] - t[0]) / abs(t[0]) if t[0] != 0.0 else abs(e[0]) for e, t in zip(est, tru)]
    # BLAS nrm2 is scaled, so diverged estimates report large finite errors instead of inf
    vec_err = [float(norm(e - t) / norm(t)) if np.any(t) else float(norm(e))
               for e, t in zip(est, tru)]
    diffs = np.array([difference(t, x) for x, t in zip(xs, truth_states)])
    return {
        "mass_rel_err": [float(m) for m in mass_err],
        "theta_rel_err": vec_err,
        "param_err": max(vec_err) if vec_err else 0.0,
        "traj_l1": float(np.abs(diffs).sum()),
        "traj_linf": float(np.abs(diffs).max()) if diffs.size else 0.0,
        "final_cost": float(final_cost),
    }


def true_accelerations(states, nodes, dt, nq):
    """``(q, v, a)`` samples of the running nodes of a noise-free trajectory."""
    out = []
    for k, nd in enumerate(nodes):
        if nd.kind != "run":
            continue
        x0, x1 = states[k], states[k + 1]
        out.append((x0[:nq], x0[nq:], (x1[nq:] - x0[nq:]) / dt))
    return out


def regressor_image_error(model, samples, bodies, est_inertias, true_inertias):
    """``max |Y (theta_hat - theta_true)|`` over the samples."""
    delta = (np.asarray(est_inertias, dtype=float) - np.asarray(true_inertias, dtype=float)).ravel()
    worst = 0.0
    for q, v, a in samples:
        Y = D.joint_torque_regressor(model, q, v, a, bodies)
        worst = max(worst, float(np.abs(Y @ delta).max()))
    return worst
