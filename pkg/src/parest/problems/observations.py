"""Observation models: linear selections of the state with optional angle wrap."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InconsistentInput
from ..rbd.model import RobotModel, _wrap

KINDS = ("joint-position", "joint-velocity", "base-orientation", "base-velocity", "full-state")


@dataclass
class ObservationModel:
    kind: str
    index: np.ndarray        # indices into x = (q, v)
    wrap: np.ndarray         # bool per row
    cov: np.ndarray          # (m, m) SPD

    def __post_init__(self):
        self.cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if self.cov.shape != (len(self.index), len(self.index)):
            raise InconsistentInput(f"{self.kind}: covariance shape {self.cov.shape} does not match selection")
        if not np.allclose(self.cov, self.cov.T) or np.linalg.eigvalsh(self.cov)[0] <= 0.0:
            raise InconsistentInput(f"{self.kind}: covariance must be symmetric positive definite")
        # whitening W with W^T W = cov^-1
        L = np.linalg.cholesky(self.cov)
        self.W = np.linalg.inv(L)

    @property
    def dim(self):
        return len(self.index)

    def predict(self, x):
        return np.asarray(x)[self.index]

    def residual(self, x, z):
        d = self.predict(x) - z
        d[self.wrap] = _wrap(d[self.wrap])
        return self.W @ d

    def jacobian(self, nx):
        S = np.zeros((self.dim, nx))
        S[np.arange(self.dim), self.index] = 1.0
        return self.W @ S


def _base_indices(model: RobotModel):
    root = model.bodies[0]
    if root.joint != "planar":
        raise InconsistentInput("base observations need a planar floating root body")
    return np.array([0, 1, 2])


def make_observation(model: RobotModel, kind: str, indices=None, std=None, cov=None) -> ObservationModel:
    nq = model.nq
    wrap_q = model.wrap_mask
    if kind in ("joint-position", "joint-velocity"):
        sel = np.arange(nq) if indices is None else np.asarray(indices, dtype=int).reshape(-1)
        if np.any((sel < 0) | (sel >= nq)):
            raise InconsistentInput(f"{kind}: joint index out of range [0, {nq})")
    if kind == "joint-position":
        idx = sel
        wrap = wrap_q[idx]
    elif kind == "joint-velocity":
        idx = nq + sel
        wrap = np.zeros(len(idx), dtype=bool)
    elif kind == "base-orientation":
        idx = _base_indices(model)[2:]
        wrap = np.ones(1, dtype=bool)
    elif kind == "base-velocity":
        idx = nq + _base_indices(model)
        wrap = np.zeros(3, dtype=bool)
    elif kind == "full-state":
        idx = np.arange(2 * nq)
        wrap = np.concatenate((wrap_q, np.zeros(nq, dtype=bool)))
    else:
        raise InconsistentInput(f"unknown observation kind {kind!r}; expected one of {KINDS}")
    if any(i < 0 or i >= 2 * nq for i in idx):
        raise InconsistentInput(f"{kind}: selection index out of range")
    if cov is None:
        std = 0.01 if std is None else std
        cov = np.diag(np.broadcast_to(np.asarray(std, dtype=float) ** 2, (len(idx),)))
    return ObservationModel(kind, np.asarray(idx, dtype=int), np.asarray(wrap, dtype=bool), cov)


class ObservationSet:
    """Stack of observation models evaluated on one state."""

    def __init__(self, models):
        self.models = list(models)
        self.index = np.concatenate([m.index for m in self.models]) if self.models else np.zeros(0, int)
        self.wrap = np.concatenate([m.wrap for m in self.models]) if self.models else np.zeros(0, bool)
        n = len(self.index)
        self.W = np.zeros((n, n))
        r = 0
        for m in self.models:
            self.W[r:r + m.dim, r:r + m.dim] = m.W
            r += m.dim

    @property
    def dim(self):
        return len(self.index)

    def predict(self, x):
        return np.asarray(x)[self.index]

    def residual(self, x, z):
        d = self.predict(x) - z
        d[self.wrap] = _wrap(d[self.wrap])
        return self.W @ d

    def jacobian(self, nx):
        S = np.zeros((self.dim, nx))
        S[np.arange(self.dim), self.index] = 1.0
        return self.W @ S

    def sample_noise(self, rng):
        n = np.zeros(self.dim)
        r = 0
        for m in self.models:
            n[r:r + m.dim] = np.linalg.cholesky(m.cov) @ rng.standard_normal(m.dim)
            r += m.dim
        return n
