"""Robot model: kinematic tree of bodies, expanded to single-DOF links.

Model files are JSON::

    {
      "gravity": [0, 0, -9.81],
      "bodies": [
        {"name": "link1", "parent": -1,
         "joint": {"type": "revolute", "axis": [0, 1, 0]},
         "placement": {"translation": [0, 0, 0], "rotation": [[1,0,0],[0,1,0],[0,0,1]]},
         "inertia": [m, hx, hy, hz, Ixx, Ixy, Iyy, Ixz, Iyz, Izz]}
      ],
      "contacts": [{"body": 0, "offset": [0, 0, -1]}]
    }

Joint types are ``revolute``, ``prismatic`` and ``planar`` (floating in the
x-z plane, coordinates x, z, pitch about y).  ``placement`` is the pose of the
joint frame in the parent body frame; ``rotation`` maps joint-frame
coordinates to parent coordinates and defaults to the identity.  Contacts are
planar points and constrain the world x and z motion of the point.
"""

from __future__ import annotations

import copy
import json
import os
from importlib import resources
from dataclasses import dataclass, field

import numpy as np

from ..errors import InconsistentInput, NonFiniteData
from .backend import get_kernels

JOINT_TYPES = ("revolute", "prismatic", "planar")


@dataclass
class Body:
    name: str
    parent: int
    joint: str
    axis: np.ndarray
    rotation: np.ndarray
    translation: np.ndarray
    inertia: np.ndarray


@dataclass
class Contact:
    body: int
    offset: np.ndarray


def _wrap(angle):
    # wrap to (-pi, pi]
    return angle - 2.0 * np.pi * np.ceil((angle - np.pi) / (2.0 * np.pi))


@dataclass
class RobotModel:
    bodies: list
    gravity: np.ndarray
    contacts: list = field(default_factory=list)
    name: str = "model"

    def __post_init__(self):
        self.gravity = np.asarray(self.gravity, dtype=float)
        self._validate()
        self._expand()

    # ------------------------------------------------------------------ setup
    def _validate(self):
        if not self.bodies:
            raise InconsistentInput("model has no bodies")
        roots = 0
        for i, b in enumerate(self.bodies):
            if b.joint not in JOINT_TYPES:
                raise InconsistentInput(f"body {i}: unknown joint type {b.joint!r}")
            if b.parent >= i or b.parent < -1:
                raise InconsistentInput(f"body {i}: parent index must be < body index")
            roots += b.parent == -1
            for arr in (b.axis, b.rotation, b.translation, b.inertia):
                if not np.all(np.isfinite(arr)):
                    raise NonFiniteData(f"body {i}: non-finite entry")
            if b.joint != "planar" and abs(np.linalg.norm(b.axis) - 1.0) > 1e-9:
                raise InconsistentInput(f"body {i}: joint axis must be a unit vector")
        if roots != 1:
            raise InconsistentInput("model must have exactly one root body")
        if not np.all(np.isfinite(self.gravity)) or self.gravity.shape != (3,):
            raise NonFiniteData("gravity must be a finite 3-vector")
        for c in self.contacts:
            if not 0 <= c.body < len(self.bodies):
                raise InconsistentInput(f"contact on unknown body {c.body}")

    def _expand(self):
        parent, jtype, axis, Et, rt = [], [], [], [], []
        body_link = []
        angular = []
        for i, b in enumerate(self.bodies):
            p = -1 if b.parent < 0 else body_link[b.parent]
            E = b.rotation.T
            if b.joint == "planar":
                # prismatic x, prismatic z (massless), revolute pitch
                for k, (jt, ax) in enumerate(((1, (1.0, 0.0, 0.0)), (1, (0.0, 0.0, 1.0)),
                                              (0, (0.0, 1.0, 0.0)))):
                    parent.append(p)
                    jtype.append(jt)
                    axis.append(ax)
                    Et.append(E if k == 0 else np.eye(3))
                    rt.append(b.translation if k == 0 else np.zeros(3))
                    angular.append(k == 2)
                    p = len(parent) - 1
            else:
                parent.append(p)
                jtype.append(0 if b.joint == "revolute" else 1)
                axis.append(b.axis)
                Et.append(E)
                rt.append(b.translation)
                angular.append(False)
            body_link.append(len(parent) - 1)
        self.parent = np.asarray(parent, dtype=np.int64)
        self.jtype = np.asarray(jtype, dtype=np.int64)
        self.axis = np.ascontiguousarray(axis, dtype=float)
        self.Et = np.ascontiguousarray(Et, dtype=float)
        self.rt = np.ascontiguousarray(rt, dtype=float)
        self.body_link = np.asarray(body_link, dtype=np.int64)
        self.wrap_mask = np.asarray(angular, dtype=bool)
        self.nq = self.nv = len(parent)
        self.link_inertia = np.zeros((self.nv, 10))
        for i, b in enumerate(self.bodies):
            self.link_inertia[body_link[i]] = b.inertia

    # ------------------------------------------------------------- accessors
    @property
    def n_bodies(self):
        return len(self.bodies)

    @property
    def nx(self):
        return 2 * self.nv

    def inertias(self):
        """Stacked inertial vectors, shape (n_bodies, 10)."""
        return np.array([b.inertia for b in self.bodies])

    def with_inertias(self, inertias, bodies=None):
        """Copy of the model with new inertial vectors for ``bodies`` (default all)."""
        inertias = np.asarray(inertias, dtype=float).reshape(-1, 10)
        if bodies is None:
            bodies = range(self.n_bodies)
        new = copy.copy(self)
        new.bodies = [copy.copy(b) for b in self.bodies]
        new.link_inertia = self.link_inertia.copy()
        for row, b in zip(inertias, bodies):
            new.bodies[b].inertia = row.copy()
            new.link_inertia[self.body_link[b]] = row
        return new

    def body_columns(self, bodies=None):
        """Map link index -> column block of the stacked parameter vector."""
        if bodies is None:
            bodies = range(self.n_bodies)
        col = -np.ones(self.nv, dtype=np.int64)
        for k, b in enumerate(bodies):
            col[self.body_link[b]] = k
        return col

    def kernel_args(self):
        return self.parent, self.jtype, self.axis, self.Et, self.rt

    def kernels(self, backend=None):
        return get_kernels(backend)

    # ---------------------------------------------------------- state algebra
    def wrap(self, q):
        q = np.array(q, dtype=float)
        q[self.wrap_mask] = _wrap(q[self.wrap_mask])
        return q

    def integrate(self, x, dx):
        """``x (+) dx`` on the state (q, v); wrapped angle coordinates."""
        y = np.asarray(x, dtype=float) + dx
        y[:self.nq] = self.wrap(y[:self.nq])
        return y

    def difference(self, x0, x1):
        """``x1 (-) x0``, i.e. ``dx`` with ``x0 (+) dx == x1``."""
        d = np.asarray(x1, dtype=float) - x0
        d[:self.nq][self.wrap_mask] = _wrap(d[:self.nq][self.wrap_mask])
        return d

    # --------------------------------------------------------------- file io
    def to_dict(self):
        return {
            "name": self.name,
            "gravity": self.gravity.tolist(),
            "bodies": [{
                "name": b.name,
                "parent": b.parent,
                "joint": {"type": b.joint, "axis": np.asarray(b.axis).tolist()},
                "placement": {"translation": b.translation.tolist(), "rotation": b.rotation.tolist()},
                "inertia": np.asarray(b.inertia).tolist(),
            } for b in self.bodies],
            "contacts": [{"body": c.body, "offset": c.offset.tolist()} for c in self.contacts],
        }


def model_from_dict(d: dict) -> RobotModel:
    try:
        bodies = []
        for i, b in enumerate(d["bodies"]):
            joint = b["joint"]
            jt = joint["type"]
            axis = np.asarray(joint.get("axis", [0.0, 1.0, 0.0]), dtype=float)
            pl = b.get("placement", {})
            rot = np.asarray(pl.get("rotation", np.eye(3)), dtype=float)
            trans = np.asarray(pl.get("translation", [0.0, 0.0, 0.0]), dtype=float)
            inertia = np.asarray(b["inertia"], dtype=float)
            if inertia.shape != (10,) or rot.shape != (3, 3) or trans.shape != (3,) or axis.shape != (3,):
                raise InconsistentInput(f"body {i}: wrong field shapes")
            bodies.append(Body(b.get("name", f"body{i}"), int(b["parent"]), jt, axis, rot, trans, inertia))
        contacts = [Contact(int(c["body"]), np.asarray(c.get("offset", [0.0, 0.0, 0.0]), dtype=float))
                    for c in d.get("contacts", [])]
        gravity = d.get("gravity", [0.0, 0.0, -9.81])
    except (KeyError, TypeError) as exc:
        raise InconsistentInput(f"malformed model description: {exc}") from exc
    return RobotModel(bodies, gravity, contacts, name=d.get("name", "model"))


def load_model(path) -> RobotModel:
    """Load a model JSON file; bare names fall back to the shipped models."""
    if not os.path.exists(path):
        shipped = resources.files("parest").joinpath("data", "models", path)
        if shipped.is_file():
            path = str(shipped)
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InconsistentInput(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return model_from_dict(d)


def single_body(inertia, joint="revolute", axis=(0.0, 1.0, 0.0), gravity=(0.0, 0.0, -9.81), contacts=()):
    """Convenience constructor for a one-body model."""
    b = Body("body0", -1, joint, np.asarray(axis, dtype=float), np.eye(3), np.zeros(3),
             np.asarray(inertia, dtype=float))
    cs = [Contact(0, np.asarray(o, dtype=float)) for o in contacts]
    return RobotModel([b], gravity, cs, name="single")


def chain(inertias, axes, offsets, joints=None, gravity=(0.0, 0.0, -9.81)):
    """Serial chain; ``offsets[i]`` is the joint position of body i in body i-1."""
    n = len(inertias)
    joints = joints or ["revolute"] * n
    bodies = [Body(f"link{i}", i - 1, joints[i], np.asarray(axes[i], dtype=float), np.eye(3),
                   np.asarray(offsets[i], dtype=float), np.asarray(inertias[i], dtype=float))
              for i in range(n)]
    return RobotModel(bodies, gravity, name="chain")


__all__ = ["Body", "Contact", "RobotModel", "model_from_dict", "load_model", "single_body", "chain",
           "JOINT_TYPES"]
