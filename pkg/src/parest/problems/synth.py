"""Synthetic data: roll out the true system through its phase schedule."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import InconsistentInput
from ..rbd import dynamics as D
from .builder import node_schedule, observation_set
from .scenario import Scenario


def _sines(terms, t, n):
    out = np.zeros(n)
    for term in terms:
        j = int(term["joint"])
        out[j] += float(term["amplitude"]) * np.sin(2.0 * np.pi * float(term["frequency"]) * t
                                                   + float(term.get("phase", 0.0)))
    return out


def control_at(spec, t_index, dt, x, nv):
    """Generalized forces at step ``t_index`` for state ``x``."""
    if isinstance(spec, np.ndarray):
        return spec[t_index].copy()
    t = t_index * dt
    kind = spec.get("type", "sines")
    bias = np.asarray(spec.get("bias", np.zeros(nv)), dtype=float)
    if kind == "sines":
        return bias + _sines(spec.get("terms", []), t, nv)
    if kind == "pd":
        ref = spec.get("reference", {})
        q_ref = np.asarray(ref.get("offset", np.zeros(nv)), dtype=float) + _sines(ref.get("terms", []), t, nv)
        kp = np.asarray(spec["kp"], dtype=float)
        kd = np.asarray(spec["kd"], dtype=float)
        q, v = x[:nv], x[nv:]
        return bias + kp * (q_ref - q) - kd * v + _sines(spec.get("terms", []), t, nv)
    raise InconsistentInput(f"unknown control type {kind!r}")


@dataclass
class SyntheticData:
    scenario: str
    seed: int
    dt: float
    controls: np.ndarray        # (T, nv)
    observations: np.ndarray    # (T + 1, m)
    states: list                # true node states, len N + 1
    x0_prior: np.ndarray
    theta_true: np.ndarray      # (n_est, 10) true inertial vectors of estimated bodies

    def to_dict(self):
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "dt": self.dt,
            "controls": self.controls.tolist(),
            "observations": self.observations.tolist(),
            "x0_prior": self.x0_prior.tolist(),
            "truth": {"states": [x.tolist() for x in self.states], "theta": self.theta_true.tolist()},
        }

    def dumps(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(d["scenario"], int(d["seed"]), float(d["dt"]), np.asarray(d["controls"], dtype=float),
                       np.asarray(d["observations"], dtype=float),
                       [np.asarray(x, dtype=float) for x in d["truth"]["states"]],
                       np.asarray(d["x0_prior"], dtype=float),
                       np.asarray(d["truth"]["theta"], dtype=float).reshape(-1, 10))
        except (KeyError, TypeError, ValueError) as exc:
            raise InconsistentInput(f"malformed data file: {exc!r}") from exc

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InconsistentInput(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
        return cls.from_dict(d)


def synthesize_data(scenario: Scenario, seed: int = 0) -> SyntheticData:
    """Noise-free rollout of the true model plus optional Gaussian measurement noise."""
    rng = np.random.default_rng(seed)
    model = scenario.true_model()
    nv = model.nv
    nodes, obs_state = node_schedule(scenario)
    x = scenario.x0.copy()
    states = [x.copy()]
    controls = np.zeros((scenario.horizon, nv))
    for nd in nodes:
        if nd.kind == "reset":
            x = D.reset_step(model, x, nd.contacts)
        else:
            tau = control_at(scenario.controls, nd.time, scenario.dt, x, nv)
            controls[nd.time] = tau
            x = D.integrate_step(model, x, None, tau, nd.contacts, scenario.dt)
        states.append(x.copy())
    obs = observation_set(scenario)
    noise = scenario.noise or {}
    obs_scale = float(noise.get("observations", 0.0))
    z = np.array([obs.predict(states[k]) for k in obs_state])
    if obs_scale > 0.0:
        z = z + obs_scale * np.array([obs.sample_noise(rng) for _ in obs_state])
    arr_scale = float(noise.get("arrival", 0.0))
    x0_prior = states[0].copy()
    if arr_scale > 0.0:
        std = np.broadcast_to(np.asarray(scenario.arrival_std, dtype=float), (model.nx,))
        x0_prior = model.integrate(x0_prior, arr_scale * std * rng.standard_normal(model.nx))
    theta_true = np.array([model.bodies[b].inertia for b in scenario.estimate]).reshape(-1, 10)
    return SyntheticData(scenario.name, int(seed), scenario.dt, controls, z, states, x0_prior, theta_true)
