"""Free, contact and impulse dynamics with parameter and state derivatives.

Contact dynamics solve the saddle system

    [M  Jc^T] [ a  ]   [tau - h]
    [Jc  0  ] [-lam] = [ -a_c  ]

with a Cholesky factor of M and of the Schur complement Jc M^-1 Jc^T.
Contacts are planar points: two rows (world x, world z) per point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from ..errors import NonFiniteData, NotPositiveDefinite, RankDeficientContact

PLANAR_ROWS = (0, 2)
RANK_TOL = 1e-8
FD_STEP = 1e-6


def _k(model, backend=None):
    return model.kernels(backend)


# ------------------------------------------------------------------ basics
def mass_matrix(model, q, backend=None):
    return _k(model, backend).crba(*model.kernel_args(), model.link_inertia, np.asarray(q, dtype=float))


def inverse_dynamics(model, q, v, a, backend=None):
    return _k(model, backend).rnea(*model.kernel_args(), model.link_inertia, model.gravity,
                                   np.asarray(q, dtype=float), np.asarray(v, dtype=float),
                                   np.asarray(a, dtype=float))


def bias_forces(model, q, v, backend=None):
    return inverse_dynamics(model, q, v, np.zeros(model.nv), backend)


def joint_torque_regressor(model, q, v, a, bodies=None, backend=None):
    """``Y`` (nv x 10 n_b) with ``Y @ stacked_theta == inverse_dynamics``."""
    if bodies is None:
        bodies = list(range(model.n_bodies))
    cols = model.body_columns(bodies)
    return _k(model, backend).regressor(*model.kernel_args(), model.gravity,
                                        np.asarray(q, dtype=float), np.asarray(v, dtype=float),
                                        np.asarray(a, dtype=float), cols, len(bodies))


def stacked_inertia(model, bodies=None):
    if bodies is None:
        bodies = range(model.n_bodies)
    return np.concatenate([model.bodies[b].inertia for b in bodies])


def point_kinematics(model, q, v, a, body, offset, backend=None):
    return _k(model, backend).point_kinematics(*model.kernel_args(), np.asarray(q, dtype=float),
                                               np.asarray(v, dtype=float), np.asarray(a, dtype=float),
                                               int(model.body_link[body]), np.asarray(offset, dtype=float))


def contact_kinematics(model, q, v, contacts, a=None):
    """Stacked planar contact Jacobian ``Jc`` and ``Jc a + dJc v``.

    With ``a=None`` the second output is the drift ``a_c = dJc v``.
    """
    nv = model.nv
    a = np.zeros(nv) if a is None else a
    Jc = np.zeros((2 * len(contacts), nv))
    acc = np.zeros(2 * len(contacts))
    for k, ci in enumerate(contacts):
        c = model.contacts[ci]
        _, _, pacc, J = point_kinematics(model, q, v, a, c.body, c.offset)
        Jc[2 * k:2 * k + 2] = J[PLANAR_ROWS, :]
        acc[2 * k:2 * k + 2] = pacc[list(PLANAR_ROWS)]
    return Jc, acc


def contact_points(model, q, v, contacts):
    """World x-z positions and velocities of the given contact points."""
    pos, vel = [], []
    for ci in contacts:
        c = model.contacts[ci]
        p, pv, _, _ = point_kinematics(model, q, v, np.zeros(model.nv), c.body, c.offset)
        pos.append(p[list(PLANAR_ROWS)])
        vel.append(pv[list(PLANAR_ROWS)])
    return np.array(pos).reshape(-1, 2), np.array(vel).reshape(-1, 2)


# -------------------------------------------------------------- saddle solve
class SaddleFactor:
    """Factorization of ``[[M, J^T], [J, 0]]`` via Cholesky of M and of the Schur complement."""

    def __init__(self, M, J):
        self.M = M
        self.J = J
        if not (np.all(np.isfinite(M)) and np.all(np.isfinite(J))):
            raise NonFiniteData("non-finite mass matrix or contact Jacobian")
        try:
            self.cM = cho_factor(M)
        except LinAlgError as exc:
            raise NotPositiveDefinite("mass matrix is not positive definite") from exc
        self.nc = J.shape[0]
        if self.nc:
            sv = np.linalg.svd(J, compute_uv=False)
            if sv[0] == 0.0 or sv[-1] < RANK_TOL * sv[0] or len(sv) < self.nc:
                raise RankDeficientContact(f"contact Jacobian is rank deficient (sigma_min={sv[-1]:.3e})")
            self.MinvJt = cho_solve(self.cM, J.T)
            S = J @ self.MinvJt
            try:
                self.cS = cho_factor(0.5 * (S + S.T))
            except LinAlgError as exc:
                raise RankDeficientContact("contact Schur complement is singular") from exc

    def solve(self, r1, r2=None):
        """Return ``(x, y)`` with ``M x + J^T y = r1`` and ``J x = r2``."""
        x0 = cho_solve(self.cM, r1)
        if not self.nc:
            return x0, np.zeros((0,) + np.shape(r1)[1:])
        y = cho_solve(self.cS, self.J @ x0 - r2)
        return x0 - self.MinvJt @ y, y


def dense_saddle_solve(M, J, r1, r2):
    """Reference solve of the saddle system with a dense LU factorization."""
    nv, nc = M.shape[0], J.shape[0]
    K = np.zeros((nv + nc, nv + nc))
    K[:nv, :nv] = M
    K[:nv, nv:] = J.T
    K[nv:, :nv] = J
    sol = np.linalg.solve(K, np.concatenate((r1, r2)))
    return sol[:nv], sol[nv:]


# ------------------------------------------------------------------ dynamics
@dataclass
class DynamicsSolution:
    a: np.ndarray
    lam: np.ndarray
    factor: SaddleFactor
    Jc: np.ndarray
    ac: np.ndarray


def forward_dynamics(model, q, v, tau, contacts=(), backend=None):
    """Accelerations and contact forces; free dynamics when ``contacts`` is empty."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    M = mass_matrix(model, q, backend)
    h = bias_forces(model, q, v, backend)
    Jc, ac = contact_kinematics(model, q, v, contacts)
    fac = SaddleFactor(M, Jc)
    a, y = fac.solve(np.asarray(tau, dtype=float) - h, -ac)
    return DynamicsSolution(a, -y, fac, Jc, ac)


def contact_dynamics(model, q, v, tau, contacts, backend=None):
    sol = forward_dynamics(model, q, v, tau, contacts, backend)
    return sol.a, sol.lam


def impulse_dynamics(model, q, v_minus, contacts, backend=None):
    """Inelastic impact: ``M (v+ - v-) = Jc^T Lam`` and ``Jc v+ = 0``."""
    q = np.asarray(q, dtype=float)
    v_minus = np.asarray(v_minus, dtype=float)
    M = mass_matrix(model, q, backend)
    Jc, _ = contact_kinematics(model, q, v_minus, contacts)
    fac = SaddleFactor(M, Jc)
    vp, y = fac.solve(M @ v_minus, np.zeros(Jc.shape[0]))
    return DynamicsSolution(vp, -y, fac, Jc, np.zeros(Jc.shape[0]))


# ------------------------------------------------------- parameter derivatives
def block_chart_jacobian(jacobians):
    """Block-diagonal ``d(stacked theta)/d(pi)`` from per-body chart Jacobians."""
    jacobians = [np.asarray(G, dtype=float) for G in jacobians]
    rows = sum(G.shape[0] for G in jacobians)
    cols = sum(G.shape[1] for G in jacobians)
    out = np.zeros((rows, cols))
    r = c = 0
    for G in jacobians:
        out[r:r + G.shape[0], c:c + G.shape[1]] = G
        r += G.shape[0]
        c += G.shape[1]
    return out


def fd_param_derivative(model, q, v, a, dtheta_dpi, bodies=None, factor=None):
    """``da/dpi`` of free dynamics: ``-M^-1 Y(q, v, a) dtheta/dpi``."""
    Y = joint_torque_regressor(model, q, v, a, bodies)
    rhs = -Y @ dtheta_dpi
    if factor is None:
        factor = SaddleFactor(mass_matrix(model, q), np.zeros((0, model.nv)))
    return factor.solve(rhs, np.zeros((factor.nc, rhs.shape[1])))[0]


def contact_param_derivative(model, q, v, sol: DynamicsSolution, dtheta_dpi, bodies=None):
    """``(da/dpi, dlam/dpi)`` of contact dynamics, reusing the nominal factorization."""
    Y = joint_torque_regressor(model, q, v, sol.a, bodies)
    rhs = -Y @ dtheta_dpi
    da, dy = sol.factor.solve(rhs, np.zeros((sol.factor.nc, rhs.shape[1])))
    return da, -dy


def impulse_param_derivative(model, q, v_minus, sol: DynamicsSolution, dtheta_dpi, bodies=None):
    """``(dv+/dpi, dLam/dpi)`` of impulse dynamics."""
    nv = model.nv
    dv = sol.a - v_minus
    Y = (joint_torque_regressor(model, q, np.zeros(nv), dv, bodies)
         - joint_torque_regressor(model, q, np.zeros(nv), np.zeros(nv), bodies))
    rhs = -Y @ dtheta_dpi
    dvp, dy = sol.factor.solve(rhs, np.zeros((sol.factor.nc, rhs.shape[1])))
    return dvp, -dy


# ----------------------------------------------------------- state derivatives
def _central(fun, x, h=FD_STEP):
    n = len(x)
    f0 = fun(x)
    D = np.zeros((len(f0), n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        D[:, i] = (fun(x + e) - fun(x - e)) / (2.0 * h)
    return D


def state_derivatives(model, q, v, tau, contacts=(), sol: DynamicsSolution | None = None):
    """Derivatives of ``(a, lam)`` with respect to ``q``, ``v`` and ``tau``.

    The residual of the saddle system is differentiated at fixed ``(a, lam)``
    by central differences of the inverse dynamics and contact kinematics, then
    mapped through the factored saddle matrix (implicit function theorem).
    Returns ``(da_dq, da_dv, da_dtau, dlam_dq, dlam_dv, dlam_dtau)``.
    """
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    if sol is None:
        sol = forward_dynamics(model, q, v, tau, contacts)
    a, lam = sol.a, sol.lam
    nv, nc = model.nv, sol.factor.nc

    def res_q(qq):
        r1 = inverse_dynamics(model, qq, v, a)
        if not nc:
            return r1
        Jc, acc = contact_kinematics(model, qq, v, contacts, a)
        return np.concatenate((r1 - Jc.T @ lam, acc))

    def res_v(vv):
        r1 = inverse_dynamics(model, q, vv, a)
        if not nc:
            return r1
        _, acc = contact_kinematics(model, q, vv, contacts, a)
        return np.concatenate((r1, acc))

    Rq = _central(res_q, q)
    Rv = _central(res_v, v)
    rhs = -np.hstack((Rq, Rv, -np.vstack((np.eye(nv), np.zeros((nc, nv))))))
    dx, dy = sol.factor.solve(rhs[:nv], rhs[nv:])
    da = dx
    dlam = -dy
    return (da[:, :nv], da[:, nv:2 * nv], da[:, 2 * nv:],
            dlam[:, :nv], dlam[:, nv:2 * nv], dlam[:, 2 * nv:])


def impulse_state_derivatives(model, q, v_minus, contacts, sol: DynamicsSolution | None = None):
    """Derivatives of ``v+`` with respect to ``q`` and ``v-``."""
    q = np.asarray(q, dtype=float)
    if sol is None:
        sol = impulse_dynamics(model, q, v_minus, contacts)
    vp, lam = sol.a, sol.lam
    nv, nc = model.nv, sol.factor.nc
    dv = vp - v_minus

    def res_q(qq):
        M = mass_matrix(model, qq)
        Jc, _ = contact_kinematics(model, qq, v_minus, contacts)
        return np.concatenate((M @ dv - Jc.T @ lam, Jc @ vp))

    Rq = _central(res_q, q)
    Rv = np.vstack((-sol.factor.M, np.zeros((nc, nv))))
    rhs = -np.hstack((Rq, Rv))
    dx, _ = sol.factor.solve(rhs[:nv], rhs[nv:])
    return dx[:, :nv], dx[:, nv:]


# ------------------------------------------------------------------ stepping
def integrate_step(model, x, w, tau, contacts, dt, sol: DynamicsSolution | None = None):
    """Semi-implicit Euler followed by ``(+) w``."""
    nq = model.nq
    q, v = x[:nq], x[nq:]
    if sol is None:
        sol = forward_dynamics(model, q, v, tau, contacts)
    v1 = v + sol.a * dt
    q1 = q + v1 * dt
    x1 = model.integrate(np.concatenate((q1, v1)), np.zeros(2 * nq))
    if w is not None and len(w):
        x1 = model.integrate(x1, w)
    return x1


def step_derivatives(model, x, tau, contacts, dt, dtheta_dpi=None, bodies=None,
                     sol: DynamicsSolution | None = None):
    """Jacobians ``(f_x, f_theta)`` of ``integrate_step`` (``f_w`` is the identity)."""
    nq = model.nq
    q, v = x[:nq], x[nq:]
    if sol is None:
        sol = forward_dynamics(model, q, v, tau, contacts)
    da_dq, da_dv = state_derivatives(model, q, v, tau, contacts, sol)[:2]
    I = np.eye(nq)
    dv_dq = dt * da_dq
    dv_dv = I + dt * da_dv
    fx = np.block([[I + dt * dv_dq, dt * dv_dv], [dv_dq, dv_dv]])
    ftheta = None
    if dtheta_dpi is not None:
        if sol.factor.nc:
            da_dp = contact_param_derivative(model, q, v, sol, dtheta_dpi, bodies)[0]
        else:
            da_dp = fd_param_derivative(model, q, v, sol.a, dtheta_dpi, bodies, sol.factor)
        ftheta = np.vstack((dt * dt * da_dp, dt * da_dp))
    return fx, ftheta


def reset_step(model, x, contacts, sol: DynamicsSolution | None = None):
    nq = model.nq
    if sol is None:
        sol = impulse_dynamics(model, x[:nq], x[nq:], contacts)
    return np.concatenate((x[:nq], sol.a))


def reset_derivatives(model, x, contacts, dtheta_dpi=None, bodies=None, sol=None):
    nq = model.nq
    q, vm = x[:nq], x[nq:]
    if sol is None:
        sol = impulse_dynamics(model, q, vm, contacts)
    dvp_dq, dvp_dv = impulse_state_derivatives(model, q, vm, contacts, sol)
    fx = np.block([[np.eye(nq), np.zeros((nq, nq))], [dvp_dq, dvp_dv]])
    ftheta = None
    if dtheta_dpi is not None:
        dvp = impulse_param_derivative(model, q, vm, sol, dtheta_dpi, bodies)[0]
        ftheta = np.vstack((np.zeros((nq, dvp.shape[1])), dvp))
    return fx, ftheta
