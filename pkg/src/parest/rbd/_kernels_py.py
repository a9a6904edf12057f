"""Pure-Python rigid-body kernels (reference implementation and fallback).

All kernels work on an expanded chain of single-DOF links described by flat
arrays:

parent : int64[n]       parent link index, -1 for the root
jtype  : int64[n]       0 revolute, 1 prismatic
axis   : float64[n, 3]  joint axis in the link frame
Et     : float64[n,3,3] fixed rotation, parent coordinates -> joint frame
rt     : float64[n, 3]  joint frame origin in parent coordinates
inertia: float64[n, 10] inertial vector of each link (zeros for virtual links)

Spatial vectors are stacked ``[angular; linear]`` in link coordinates.
"""

import math

import numpy as np

REVOLUTE = 0
PRISMATIC = 1


def _rotation_T(axis, angle):
    # coordinate transform of a frame rotated by ``angle`` about ``axis``
    x, y, z = axis
    c, s = math.cos(angle), math.sin(angle)
    C = 1.0 - c
    return np.array([[c + x * x * C, x * y * C + z * s, x * z * C - y * s],
                     [y * x * C - z * s, c + y * y * C, y * z * C + x * s],
                     [z * x * C + y * s, z * y * C - x * s, c + z * z * C]])


def _link_transforms(jtype, axis, Et, rt, q):
    n = len(q)
    E = np.empty((n, 3, 3))
    r = np.empty((n, 3))
    for i in range(n):
        if jtype[i] == REVOLUTE:
            E[i] = _rotation_T(axis[i], q[i]) @ Et[i]
            r[i] = rt[i]
        else:
            E[i] = Et[i]
            r[i] = rt[i] + Et[i].T @ (axis[i] * q[i])
    return E, r


def _motion(E, r, m):
    w = E @ m[:3]
    return np.concatenate((w, E @ (m[3:] - np.cross(r, m[:3]))))


def _force_T(E, r, f):
    fl = E.T @ f[3:]
    return np.concatenate((E.T @ f[:3] + np.cross(r, fl), fl))


def _subspace(jtype, axis):
    S = np.zeros(6)
    if jtype == REVOLUTE:
        S[:3] = axis
    else:
        S[3:] = axis
    return S


def _cross_motion(v, m):
    w, u = v[:3], v[3:]
    return np.concatenate((np.cross(w, m[:3]), np.cross(w, m[3:]) + np.cross(u, m[:3])))


def _cross_force(v, f):
    w, u = v[:3], v[3:]
    return np.concatenate((np.cross(w, f[:3]) + np.cross(u, f[3:]), np.cross(w, f[3:])))


def _inertia_apply(theta, m):
    mass, h = theta[0], theta[1:4]
    I = np.array([[theta[4], theta[5], theta[7]],
                  [theta[5], theta[6], theta[8]],
                  [theta[7], theta[8], theta[9]]])
    w, u = m[:3], m[3:]
    return np.concatenate((I @ w + np.cross(h, u), mass * u - np.cross(h, w)))


def _forward(parent, jtype, axis, Et, rt, q, v, a, a_root):
    n = len(q)
    E, r = _link_transforms(jtype, axis, Et, rt, q)
    vel = np.zeros((n, 6))
    acc = np.zeros((n, 6))
    for i in range(n):
        S = _subspace(jtype[i], axis[i])
        vj = S * v[i]
        if parent[i] < 0:
            vel[i] = vj
            acc[i] = _motion(E[i], r[i], a_root) + S * a[i]
        else:
            vel[i] = _motion(E[i], r[i], vel[parent[i]]) + vj
            acc[i] = _motion(E[i], r[i], acc[parent[i]]) + S * a[i] + _cross_motion(vel[i], vj)
    return E, r, vel, acc


def rnea(parent, jtype, axis, Et, rt, inertia, gravity, q, v, a):
    """Inverse dynamics: generalized forces producing accelerations ``a``."""
    n = len(q)
    a_root = np.concatenate((np.zeros(3), -np.asarray(gravity, dtype=float)))
    E, r, vel, acc = _forward(parent, jtype, axis, Et, rt, q, v, a, a_root)
    f = np.zeros((n, 6))
    for i in range(n):
        f[i] = _inertia_apply(inertia[i], acc[i]) + _cross_force(vel[i], _inertia_apply(inertia[i], vel[i]))
    tau = np.zeros(n)
    for i in range(n - 1, -1, -1):
        tau[i] = _subspace(jtype[i], axis[i]) @ f[i]
        if parent[i] >= 0:
            f[parent[i]] += _force_T(E[i], r[i], f[i])
    return tau


def _spatial_inertia(theta):
    mass, h = theta[0], theta[1:4]
    I = np.array([[theta[4], theta[5], theta[7]],
                  [theta[5], theta[6], theta[8]],
                  [theta[7], theta[8], theta[9]]])
    H = np.array([[0.0, -h[2], h[1]], [h[2], 0.0, -h[0]], [-h[1], h[0], 0.0]])
    return np.block([[I, H], [H.T, mass * np.eye(3)]])


def _X(E, r):
    R = np.array([[0.0, -r[2], r[1]], [r[2], 0.0, -r[0]], [-r[1], r[0], 0.0]])
    X = np.zeros((6, 6))
    X[:3, :3] = E
    X[3:, 3:] = E
    X[3:, :3] = -E @ R
    return X


def crba(parent, jtype, axis, Et, rt, inertia, q):
    """Joint-space inertia matrix (composite rigid body algorithm)."""
    n = len(q)
    E, r = _link_transforms(jtype, axis, Et, rt, q)
    X = [_X(E[i], r[i]) for i in range(n)]
    Ic = [_spatial_inertia(inertia[i]) for i in range(n)]
    for i in range(n - 1, -1, -1):
        if parent[i] >= 0:
            Ic[parent[i]] = Ic[parent[i]] + X[i].T @ Ic[i] @ X[i]
    M = np.zeros((n, n))
    for i in range(n):
        F = Ic[i] @ _subspace(jtype[i], axis[i])
        M[i, i] = _subspace(jtype[i], axis[i]) @ F
        j = i
        while parent[j] >= 0:
            F = X[j].T @ F
            j = parent[j]
            M[i, j] = M[j, i] = _subspace(jtype[j], axis[j]) @ F
    return M


def _hat(w):
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def _dot_inertia(w):
    # (I w) as a linear map of the flattened inertia (xx, xy, yy, xz, yz, zz)
    return np.array([[w[0], w[1], 0.0, w[2], 0.0, 0.0],
                     [0.0, w[0], w[1], 0.0, w[2], 0.0],
                     [0.0, 0.0, 0.0, w[0], w[1], w[2]]])


def _body_regressor(vel, acc):
    w, u = vel[:3], vel[3:]
    dw, du = acc[:3], acc[3:]
    A = np.zeros((6, 10))
    Sw, Su = _hat(w), _hat(u)
    A[:3, 1:4] = -_hat(du) - Sw @ Su + Su @ Sw
    A[:3, 4:] = _dot_inertia(dw) + Sw @ _dot_inertia(w)
    A[3:, 0] = du + np.cross(w, u)
    A[3:, 1:4] = _hat(dw) + Sw @ Sw
    return A


def regressor(parent, jtype, axis, Et, rt, gravity, q, v, a, body_col, ncols):
    """Joint-torque regressor ``Y`` with ``Y @ stacked_theta == rnea(...)``.

    ``body_col[i]`` is the column block of link ``i`` or -1 for links whose
    parameters are not part of the stacked vector.
    """
    n = len(q)
    a_root = np.concatenate((np.zeros(3), -np.asarray(gravity, dtype=float)))
    E, r, vel, acc = _forward(parent, jtype, axis, Et, rt, q, v, a, a_root)
    Y = np.zeros((n, 10 * ncols))
    for i in range(n):
        b = body_col[i]
        if b < 0:
            continue
        F = _body_regressor(vel[i], acc[i])
        j = i
        while True:
            Y[j, 10 * b:10 * b + 10] = _subspace(jtype[j], axis[j]) @ F
            if parent[j] < 0:
                break
            F = np.vstack([_force_T(E[j], r[j], F[:, k]) for k in range(10)]).T
            j = parent[j]
    return Y


def point_kinematics(parent, jtype, axis, Et, rt, q, v, a, link, offset):
    """World position, velocity, acceleration and Jacobian of a body-fixed point.

    The acceleration is the classical one produced by ``a`` with no gravity,
    so ``acc == J @ a + dJ @ v``.
    """
    n = len(q)
    E, r, vel, acc = _forward(parent, jtype, axis, Et, rt, q, v, a, np.zeros(6))
    E0 = np.empty((n, 3, 3))
    p0 = np.empty((n, 3))
    for i in range(n):
        if parent[i] < 0:
            E0[i] = E[i]
            p0[i] = r[i]
        else:
            E0[i] = E[i] @ E0[parent[i]]
            p0[i] = p0[parent[i]] + E0[parent[i]].T @ r[i]
    off = np.asarray(offset, dtype=float)
    w, u = vel[link, :3], vel[link, 3:]
    dw, du = acc[link, :3], acc[link, 3:]
    R = E0[link].T
    pos = p0[link] + R @ off
    pvel = R @ (u + np.cross(w, off))
    pacc = R @ (du + np.cross(w, u) + np.cross(dw, off) + np.cross(w, np.cross(w, off)))
    J = np.zeros((3, n))
    j = link
    while j >= 0:
        ax = E0[j].T @ axis[j]
        J[:, j] = np.cross(ax, pos - p0[j]) if jtype[j] == REVOLUTE else ax
        j = parent[j]
    return pos, pvel, pacc, J
