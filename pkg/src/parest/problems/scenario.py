"""Scenario files: model reference, schedule, controls, observations, noise and payload.

Format (JSON)::

    {
      "name": "cart_pendulum",
      "model": "cart_pendulum.json",      # relative to the scenario file, else shipped models
      "horizon": 100, "dt": 0.01,
      "x0": {"q": [...], "v": [...]},
      "controls": {...} | [[tau_0], [tau_1], ...],
      "phases": [{"start": 0, "end": 100, "contacts": []}],
      "observations": [{"kind": "joint-position", "std": 0.001, "indices": [0, 1]}],
      "process_std": 0.01, "arrival_std": 0.01,
      "noise": {"observations": 0.0, "arrival": 0.0},
      "payload": {"body": 1, "inertia": [10 numbers]},
      "estimate": [1],
      "theta_init": {"policy": "scale", "factor": 1.7},
      "prior": {"enabled": false, "std": 1.0},
      "init_state_std": 0.0
    }

Control generators:

``{"type": "sines", "bias": [...], "terms": [{"joint", "amplitude", "frequency", "phase"}]}``
    open-loop sum of sines on top of a constant bias.
``{"type": "pd", "kp": [...], "kd": [...], "bias": [...], "reference": {"offset": [...], "terms": [...]}}``
    joint-space PD tracking of a sum-of-sines reference; joints with zero
    gains are unactuated.  Controls are recorded during synthesis and are
    known inputs for estimation.

``theta_init`` policies: ``exact``, ``scale`` (factor times the true inertial
vector of each estimated body) and ``explicit`` (``"inertia": [[10], ...]``).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from ..errors import InconsistentInput, InconsistentSchedule, ParestError
from ..rbd.model import RobotModel, load_model, model_from_dict


@dataclass
class Phase:
    start: int
    end: int
    contacts: tuple


@dataclass
class Scenario:
    name: str
    model: RobotModel
    horizon: int
    dt: float
    x0: np.ndarray
    controls: object
    phases: list
    observations: list
    process_std: object = 0.01
    arrival_std: object = 0.01
    noise: dict = field(default_factory=dict)
    payload: dict | None = None
    estimate: list = field(default_factory=list)
    theta_init: dict = field(default_factory=lambda: {"policy": "scale", "factor": 1.7})
    prior: dict = field(default_factory=lambda: {"enabled": False})
    init_state_std: float = 0.0
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        validate_phases(self.phases, self.horizon, len(self.model.contacts))
        if self.dt <= 0.0:
            raise InconsistentInput("dt must be positive")
        if self.x0.shape != (self.model.nx,):
            raise InconsistentInput(f"x0 has {self.x0.size} entries, expected {self.model.nx}")
        for b in self.estimate:
            if not 0 <= b < self.model.n_bodies:
                raise InconsistentInput(f"estimated body {b} out of range")
        if isinstance(self.controls, np.ndarray) and self.controls.shape != (self.horizon, self.model.nv):
            raise InconsistentInput(f"inline controls must be {self.horizon} x {self.model.nv}")

    def true_model(self) -> RobotModel:
        """Model with the payload added to its carrier body."""
        if not self.payload:
            return self.model
        b = int(self.payload["body"])
        extra = np.asarray(self.payload["inertia"], dtype=float)
        return self.model.with_inertias([self.model.bodies[b].inertia + extra], [b])

    def phase_at(self, t):
        for p in self.phases:
            if p.start <= t < p.end:
                return p
        raise InconsistentSchedule(f"time step {t} not covered by any phase")


def validate_phases(phases, horizon, n_contacts):
    if not phases:
        raise InconsistentSchedule("at least one phase is required")
    t = 0
    for p in phases:
        if p.start != t or p.end <= p.start:
            raise InconsistentSchedule(f"phases must partition [0, {horizon}) contiguously (gap or overlap at {t})")
        for c in p.contacts:
            if not 0 <= c < n_contacts:
                raise InconsistentSchedule(f"phase [{p.start}, {p.end}) references unknown contact {c}")
        t = p.end
    if t != horizon:
        raise InconsistentSchedule(f"phases end at {t}, horizon is {horizon}")


def data_path(*parts):
    return str(resources.files("parest").joinpath("data", *parts))


def _resolve(ref, base_dir, sub):
    for cand in (os.path.join(base_dir, ref) if base_dir else None, data_path(sub, ref)):
        if cand and os.path.exists(cand):
            return cand
    raise InconsistentInput(f"cannot find {sub[:-1]} file {ref!r}")


def scenario_from_dict(d: dict, base_dir: str | None = None) -> Scenario:
    try:
        mref = d["model"]
        model = model_from_dict(mref) if isinstance(mref, dict) else load_model(_resolve(mref, base_dir, "models"))
        horizon = int(d["horizon"])
        dt = float(d["dt"])
        x0d = d.get("x0", {})
        q0 = np.asarray(x0d.get("q", np.zeros(model.nq)), dtype=float)
        v0 = np.asarray(x0d.get("v", np.zeros(model.nv)), dtype=float)
        controls = d.get("controls", {"type": "sines", "terms": []})
        if isinstance(controls, list):
            controls = np.asarray(controls, dtype=float)
        elif "file" in controls:
            path = controls["file"]
            path = os.path.join(base_dir, path) if base_dir and not os.path.isabs(path) else path
            controls = np.loadtxt(path, delimiter=",", ndmin=2)
        phases = [Phase(int(p["start"]), int(p["end"]), tuple(int(c) for c in p.get("contacts", [])))
                  for p in d.get("phases", [{"start": 0, "end": horizon, "contacts": []}])]
        sc = Scenario(
            name=d.get("name", "scenario"), model=model, horizon=horizon, dt=dt,
            x0=np.concatenate((q0, v0)), controls=controls, phases=phases,
            observations=list(d.get("observations", [{"kind": "full-state"}])),
            process_std=d.get("process_std", 0.01), arrival_std=d.get("arrival_std", 0.01),
            noise=dict(d.get("noise", {})), payload=d.get("payload"),
            estimate=[int(b) for b in d.get("estimate", [model.n_bodies - 1])],
            theta_init=dict(d.get("theta_init", {"policy": "scale", "factor": 1.7})),
            prior=dict(d.get("prior", {"enabled": False})),
            init_state_std=float(d.get("init_state_std", 0.0)),
            source=d,
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ParestError):
            raise
        raise InconsistentInput(f"malformed scenario: {exc!r}") from exc
    return sc


def load_scenario(path) -> Scenario:
    if not os.path.exists(path):
        path = _resolve(path, None, "scenarios")
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InconsistentInput(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return scenario_from_dict(d, os.path.dirname(os.path.abspath(path)))
