"""Stages, cost terms and problem assembly for rigid-body estimation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import inertia as inr
from ..errors import InconsistentInput, InconsistentSchedule
from ..rbd import dynamics as D
from ..rbd.model import RobotModel
from ..solver.problem import Iterate, ShootingProblem, residual_expansion, zero_expansion
from .observations import ObservationSet, make_observation
from .scenario import Scenario


class ParamMap:
    """Chart coordinates of the estimated bodies <-> model inertias."""

    def __init__(self, model: RobotModel, bodies, chart="expeig"):
        self.base = model
        self.bodies = list(bodies)
        self.chart = inr.get_chart(chart) if isinstance(chart, str) else chart
        self.ntheta = 10 * len(self.bodies)
        self._key = None
        self._cache = None

    def blocks(self, theta):
        return np.asarray(theta, dtype=float).reshape(len(self.bodies), 10)

    def inertias(self, theta):
        return np.array([self.chart.to_theta(p) for p in self.blocks(theta)]).reshape(-1, 10)

    def _evaluate(self, theta):
        key = np.asarray(theta, dtype=float).tobytes()
        if key != self._key:
            model = self.base.with_inertias(self.inertias(theta), self.bodies)
            G = D.block_chart_jacobian([self.chart.jacobian(p) for p in self.blocks(theta)]) \
                if self.bodies else np.zeros((0, 0))
            self._key, self._cache = key, (model, G)
        return self._cache

    def model(self, theta) -> RobotModel:
        return self._evaluate(theta)[0]

    def jacobian(self, theta):
        return self._evaluate(theta)[1]

    def from_inertias(self, inertias):
        inertias = np.asarray(inertias, dtype=float).reshape(len(self.bodies), 10)
        return np.concatenate([self.chart.from_theta(t) for t in inertias]) if self.bodies else np.zeros(0)


class ObservationTerm:
    def __init__(self, obs: ObservationSet | None, z):
        self.obs = obs
        self.z = None if z is None else np.asarray(z, dtype=float)

    def residual(self, x):
        if self.obs is None or self.z is None:
            return np.zeros(0)
        return self.obs.residual(x, self.z)

    def jacobian(self, nx):
        if self.obs is None or self.z is None:
            return np.zeros((0, nx))
        return self.obs.jacobian(nx)


class RobotStage:
    """Running node: semi-implicit Euler step of the phase dynamics followed by ``(+) w``."""

    def __init__(self, pmap: ParamMap, contacts, tau, dt, obs: ObservationTerm, w_weight, time=0):
        self.pmap = pmap
        self.contacts = tuple(contacts)
        self.tau = np.asarray(tau, dtype=float)
        self.dt = float(dt)
        self.obs = obs
        self.Ww = np.asarray(w_weight, dtype=float)
        self.nx = pmap.base.nx
        self.nw = self.nx
        self.time = time

    def rollout(self, x, w, theta):
        return D.integrate_step(self.pmap.model(theta), x, w, self.tau, self.contacts, self.dt)

    def linearize(self, x, w, theta):
        model = self.pmap.model(theta)
        G = self.pmap.jacobian(theta)
        nq = model.nq
        sol = D.forward_dynamics(model, x[:nq], x[nq:], self.tau, self.contacts)
        xn = D.integrate_step(model, x, w, self.tau, self.contacts, self.dt, sol)
        fx, ft = D.step_derivatives(model, x, self.tau, self.contacts, self.dt, G, self.pmap.bodies, sol)
        return xn, fx, np.eye(self.nx), ft

    def _residual(self, x, w):
        return np.concatenate((self.obs.residual(x), self.Ww @ w))

    def cost(self, x, w, theta):
        r = self._residual(x, w)
        return 0.5 * float(r @ r)

    def cost_expansion(self, x, w, theta):
        r = self._residual(x, w)
        Jo = self.obs.jacobian(self.nx)
        no = Jo.shape[0]
        Jx = np.vstack((Jo, np.zeros((self.nx, self.nx))))
        Jw = np.vstack((np.zeros((no, self.nx)), self.Ww))
        return residual_expansion(r, Jx, Jw, np.zeros((len(r), self.pmap.ntheta)))


class ResetStage:
    """Impulse map at a contact gain; no uncertainty, no cost."""

    nw = 0

    def __init__(self, pmap: ParamMap, contacts, time=0):
        self.pmap = pmap
        self.contacts = tuple(contacts)
        self.nx = pmap.base.nx
        self.time = time

    def rollout(self, x, w, theta):
        return D.reset_step(self.pmap.model(theta), x, self.contacts)

    def linearize(self, x, w, theta):
        model = self.pmap.model(theta)
        G = self.pmap.jacobian(theta)
        nq = model.nq
        sol = D.impulse_dynamics(model, x[:nq], x[nq:], self.contacts)
        fx, ft = D.reset_derivatives(model, x, self.contacts, G, self.pmap.bodies, sol)
        return D.reset_step(model, x, self.contacts, sol), fx, np.zeros((self.nx, 0)), ft

    def cost(self, x, w, theta):
        return 0.0

    def cost_expansion(self, x, w, theta):
        return zero_expansion(self.nx, 0, self.pmap.ntheta)


class TerminalTerm:
    def __init__(self, obs: ObservationTerm, nx, ntheta):
        self.obs, self.nx, self.ntheta = obs, nx, ntheta

    def cost(self, x, theta):
        r = self.obs.residual(x)
        return 0.5 * float(r @ r)

    def cost_expansion(self, x, theta):
        r = self.obs.residual(x)
        return residual_expansion(r, self.obs.jacobian(self.nx), np.zeros((len(r), 0)),
                                  np.zeros((len(r), self.ntheta)))


class ArrivalTerm:
    """``0.5 |x0 (-) xbar|^2_{Sigma0^-1}`` plus the optional parameter prior."""

    def __init__(self, x_bar, W0, difference, theta_bar=None, Wt=None):
        self.x_bar = np.asarray(x_bar, dtype=float)
        self.W0 = np.asarray(W0, dtype=float)
        self.difference = difference
        self.theta_bar = theta_bar
        self.Wt = Wt

    def _residual(self, x, theta):
        r = self.W0 @ self.difference(self.x_bar, x)
        if self.Wt is not None:
            r = np.concatenate((r, self.Wt @ (theta - self.theta_bar)))
        return r

    def cost(self, x, theta):
        r = self._residual(x, theta)
        return 0.5 * float(r @ r)

    def cost_expansion(self, x, theta):
        r = self._residual(x, theta)
        nx, nt = len(x), len(theta)
        Jx = self.W0
        Jt = np.zeros((nx, nt))
        if self.Wt is not None:
            Jx = np.vstack((Jx, np.zeros((nt, nx))))
            Jt = np.vstack((Jt, self.Wt))
        return residual_expansion(r, Jx, np.zeros((len(r), 0)), Jt)


@dataclass
class NodeSpec:
    kind: str          # "run" or "reset"
    time: int
    contacts: tuple


def node_schedule(scenario: Scenario):
    """Node list with a reset node before every running node that gains a contact.

    Also returns ``obs_state[t]``: index of the state observed at time ``t``.
    """
    nodes = []
    obs_state = []
    prev = None
    for t in range(scenario.horizon):
        ph = scenario.phase_at(t)
        if prev is not None and not set(ph.contacts) <= set(prev):
            nodes.append(NodeSpec("reset", t, ph.contacts))
        obs_state.append(len(nodes))
        nodes.append(NodeSpec("run", t, ph.contacts))
        prev = ph.contacts
    obs_state.append(len(nodes))
    return nodes, obs_state


def _diag_weight(std, n):
    std = np.broadcast_to(np.asarray(std, dtype=float), (n,))
    if np.any(std <= 0.0):
        raise InconsistentInput("standard deviations must be positive")
    return np.diag(1.0 / std)


def observation_set(scenario: Scenario) -> ObservationSet:
    models = [make_observation(scenario.model, o["kind"], o.get("indices"), o.get("std"), o.get("cov"))
              for o in scenario.observations]
    return ObservationSet(models)


def initial_inertias(scenario: Scenario, truth_inertias, policy=None):
    policy = dict(policy or scenario.theta_init)
    kind = policy.get("policy", "scale")
    if kind == "exact":
        return np.array(truth_inertias, dtype=float)
    if kind == "scale":
        return float(policy.get("factor", 1.7)) * np.asarray(truth_inertias, dtype=float)
    if kind == "explicit":
        out = np.asarray(policy["inertia"], dtype=float).reshape(-1, 10)
        if out.shape[0] != len(scenario.estimate):
            raise InconsistentInput("explicit theta_init must list one inertial vector per estimated body")
        return out
    raise InconsistentInput(f"unknown theta_init policy {kind!r}")


def build_problem(scenario: Scenario, data, chart="expeig", theta_init=None):
    """Assemble the shooting problem and the initial chart coordinates.

    ``data`` is a :class:`SyntheticData` (or anything with ``controls``,
    ``observations``, ``x0_prior`` and ``theta_true``).
    """
    model = scenario.model
    nodes, obs_state = node_schedule(scenario)
    if len(data.observations) != scenario.horizon + 1:
        raise InconsistentSchedule(
            f"{len(data.observations)} observations for horizon {scenario.horizon} (need horizon + 1)")
    if len(data.controls) != scenario.horizon:
        raise InconsistentSchedule("control count does not match horizon")
    # known bodies carry their true (payload-free) inertias, estimated ones are replaced by theta
    pmap = ParamMap(scenario.true_model(), scenario.estimate, chart)
    obs = observation_set(scenario)
    nx = model.nx
    Ww = _diag_weight(scenario.process_std, nx)
    stages = []
    for nd in nodes:
        if nd.kind == "reset":
            stages.append(ResetStage(pmap, nd.contacts, nd.time))
        else:
            term = ObservationTerm(obs, data.observations[nd.time])
            stages.append(RobotStage(pmap, nd.contacts, data.controls[nd.time], scenario.dt, term, Ww, nd.time))
    terminal = TerminalTerm(ObservationTerm(obs, data.observations[-1]), nx, pmap.ntheta)
    theta0 = pmap.from_inertias(initial_inertias(scenario, data.theta_true, theta_init))
    Wt = None
    theta_bar = None
    if scenario.prior.get("enabled", False):
        Wt = _diag_weight(scenario.prior.get("std", 1.0), pmap.ntheta)
        theta_bar = theta0.copy()
    arrival = ArrivalTerm(data.x0_prior, _diag_weight(scenario.arrival_std, nx), model.difference, theta_bar, Wt)
    prob = ShootingProblem(stages, terminal, arrival, nx, pmap.ntheta, model.integrate, model.difference,
                           meta={"pmap": pmap, "obs_state": obs_state, "nodes": nodes, "scenario": scenario.name})
    return prob, theta0


def initial_iterate(problem: ShootingProblem, data, theta0, state_std=0.0, rng=None) -> Iterate:
    """States around the recorded trajectory (Gaussian perturbation), zero uncertainties."""
    xs = [np.array(x, dtype=float) for x in data.states]
    if state_std > 0.0:
        rng = rng if rng is not None else np.random.default_rng(0)
        xs = [problem.integrate(x, state_std * rng.standard_normal(len(x))) for x in xs]
    ws = [np.zeros(st.nw) for st in problem.stages]
    return Iterate(xs, ws, np.asarray(theta0, dtype=float).copy())

