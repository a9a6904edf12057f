"""Rigid-body inertial parameters, physical consistency and smooth charts.

An inertial vector is a length-10 array ordered as::

    [m, h_x, h_y, h_z, I_xx, I_xy, I_yy, I_xz, I_yz, I_zz]

where ``h = m c`` is the first mass moment and ``I`` the rotational inertia
about the body-frame origin, both expressed in the body frame.

Two charts map unconstrained coordinates onto fully physically consistent
inertial vectors:

* ``logchol``: ``[alpha, d1, d2, d3, s12, s23, s13, t1, t2, t3]``, the
  pseudo-inertia is ``U U^T`` with ``U`` the scaled upper-triangular factor.
* ``expeig``: ``[sigma_m, h_x, h_y, h_z, w_x, w_y, w_z, s_x, s_y, s_z]``, mass
  and second moments of mass are exponentials, the principal axes are
  ``Exp(w)``.

The logchol diagonal entry ``U[2, 2]`` is ``exp(d3)``.
"""

from typing import NamedTuple

import numpy as np

from . import lie
from .errors import InconsistentInput, NonPositiveMass, NotPositiveDefinite

# (row, col) of each flattened inertia entry
INERTIA_INDEX = ((0, 0), (0, 1), (1, 1), (0, 2), (1, 2), (2, 2))

# principal moments D = P @ L from second moments of mass L
P = np.array([[0.0, 1.0, 1.0],
              [1.0, 0.0, 1.0],
              [1.0, 1.0, 0.0]])
P_INV = 0.5 * np.array([[-1.0, 1.0, 1.0],
                        [1.0, -1.0, 1.0],
                        [1.0, 1.0, -1.0]])

_AXES = "xyz"


def inertia_matrix(I_flat):
    """Symmetric 3x3 matrix from the six flattened entries."""
    I_flat = np.asarray(I_flat, dtype=float)
    I = np.empty((3, 3))
    for k, (i, j) in enumerate(INERTIA_INDEX):
        I[i, j] = I[j, i] = I_flat[k]
    return I


def flatten_inertia(I):
    return np.array([I[i, j] for i, j in INERTIA_INDEX])


def compose(m, h, I):
    """Build an inertial vector from mass, first moment and 3x3 inertia."""
    return np.concatenate(([m], np.asarray(h, dtype=float), flatten_inertia(I)))


def split(theta):
    """Return ``(m, h, I)`` with ``I`` as a 3x3 matrix."""
    theta = np.asarray(theta, dtype=float)
    return theta[0], theta[1:4].copy(), inertia_matrix(theta[4:])


def from_barycentric(m, c, Ic):
    """Inertial vector of a body with mass ``m``, center ``c`` and inertia ``Ic`` about ``c``."""
    h = m * np.asarray(c, dtype=float)
    S = lie.hat(h)
    return compose(m, h, Ic + S @ S.T / m if m != 0 else Ic)


def format_inertial_vector(theta):
    """Whitespace-separated text form used by model files and CSV output."""
    return " ".join(repr(float(x)) for x in theta)


def parse_inertial_vector(text):
    values = np.array([float(tok) for tok in text.split()])
    if values.shape != (10,):
        raise ValueError(f"expected 10 numbers, got {values.size}")
    return values


def inertia_at_barycenter(theta):
    """Rotational inertia about the center of mass (parallel axis theorem)."""
    m, h, I = split(theta)
    if not m > 0:
        raise NonPositiveMass(f"mass must be positive, got {m}")
    S = lie.hat(h)
    Ic = I - S @ S.T / m
    return 0.5 * (Ic + Ic.T)


def pseudo_inertia(theta):
    """4x4 pseudo-inertia ``[[Sigma, h], [h^T, m]]`` with ``Sigma = tr(I)/2 - I``."""
    m, h, I = split(theta)
    J = np.empty((4, 4))
    J[:3, :3] = 0.5 * np.trace(I) * np.eye(3) - I
    J[:3, 3] = J[3, :3] = h
    J[3, 3] = m
    return J


def theta_from_pseudo(J):
    """Inverse of :func:`pseudo_inertia`; linear in ``J``."""
    Sigma = 0.5 * (J[:3, :3] + J[:3, :3].T)
    I = np.trace(Sigma) * np.eye(3) - Sigma
    return compose(J[3, 3], 0.5 * (J[:3, 3] + J[3, :3]), I)


class BarycentricInertia(NamedTuple):
    Ic: np.ndarray
    R: np.ndarray
    D: np.ndarray
    L: np.ndarray


def _axis_permutation(V):
    # match eigenvectors to body axes so diagnostics name D_x, D_y, D_z sensibly
    best, best_score = (0, 1, 2), -1.0
    for perm in ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)):
        score = sum(abs(V[axis, col]) for axis, col in enumerate(perm))
        if score > best_score + 1e-12:
            best, best_score = perm, score
    return list(best)


def barycentric(theta):
    """Principal decomposition ``Ic = R diag(D) R^T`` with ``D = P L``."""
    Ic = inertia_at_barycenter(theta)
    D, R = np.linalg.eigh(Ic)
    perm = _axis_permutation(R)
    D, R = D[perm], R[:, perm]
    if np.linalg.det(R) < 0:
        R[:, 2] = -R[:, 2]
    return BarycentricInertia(Ic, R, D, P_INV @ D)


def is_fully_consistent(theta, tol=0.0):
    """Check full physical consistency.

    Returns ``(ok, reason)`` where ``reason`` names the first violated
    condition, or is ``None``.
    """
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        return False, "non-finite entry"
    m, h, I = split(theta)
    if m < -tol:
        return False, "mass"
    if m <= tol:
        # massless body: no first moment allowed, inertia taken as is
        if np.max(np.abs(h)) > tol:
            return False, "first mass moment of a massless body"
        D = np.linalg.eigvalsh(I)
        V = np.linalg.eigh(I)[1]
        D = D[_axis_permutation(V)]
    else:
        D = barycentric(theta).D
    if np.min(D) < -tol:
        return False, "inertia at barycenter"
    for i in range(3):
        others = D.sum() - D[i]
        if not D[i] < others + tol:
            return False, f"triangle inequality D_{_AXES[i]}"
    return True, None


# --- log-Cholesky chart -----------------------------------------------------

class LogCholeskyParams(NamedTuple):
    alpha: float
    d: np.ndarray
    s: np.ndarray  # (s12, s23, s13)
    t: np.ndarray

    def to_vector(self):
        return np.concatenate(([self.alpha], self.d, self.s, self.t))

    @classmethod
    def from_vector(cls, pi):
        pi = np.asarray(pi, dtype=float)
        return cls(pi[0], pi[1:4].copy(), pi[4:7].copy(), pi[7:10].copy())


# entries of U set by each non-scale coordinate
_LOGCHOL_SLOTS = ((0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2), (0, 3), (1, 3), (2, 3))


def logchol_factor(pi):
    pi = np.asarray(pi, dtype=float)
    U = np.zeros((4, 4))
    U[3, 3] = 1.0
    for k, (i, j) in enumerate(_LOGCHOL_SLOTS):
        U[i, j] = np.exp(pi[1 + k]) if k < 3 else pi[1 + k]
    return np.exp(pi[0]) * U


def logchol_to_theta(pi):
    U = logchol_factor(pi)
    return theta_from_pseudo(U @ U.T)


def logchol_jacobian(pi):
    pi = np.asarray(pi, dtype=float)
    U = logchol_factor(pi)
    scale = np.exp(pi[0])
    jac = np.empty((10, 10))
    dU = U.copy()
    jac[:, 0] = theta_from_pseudo(dU @ U.T + U @ dU.T)
    for k, (i, j) in enumerate(_LOGCHOL_SLOTS):
        dU = np.zeros((4, 4))
        dU[i, j] = U[i, j] if k < 3 else scale
        jac[:, 1 + k] = theta_from_pseudo(dU @ U.T + U @ dU.T)
    return jac


def _upper_cholesky(J):
    # J = U U^T with U upper triangular, via the Cholesky factor of the reversed matrix
    rev = J[::-1, ::-1]
    try:
        Lrev = np.linalg.cholesky(rev)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("pseudo-inertia is not positive definite") from exc
    return Lrev[::-1, ::-1]


def logchol_from_theta(theta):
    """Inverse log-Cholesky map with ``U[3, 3]`` normalized to one (``alpha = ln(m)/2``)."""
    J = pseudo_inertia(theta)
    if not np.all(np.isfinite(J)):
        raise NotPositiveDefinite("non-finite pseudo-inertia")
    U = _upper_cholesky(J)
    scale = U[3, 3]
    Ubar = U / scale
    pi = np.empty(10)
    pi[0] = np.log(scale)
    for k, (i, j) in enumerate(_LOGCHOL_SLOTS):
        pi[1 + k] = np.log(Ubar[i, j]) if k < 3 else Ubar[i, j]
    return pi


# --- exponential-eigenvalue chart ------------------------------------------

class ExpEigParams(NamedTuple):
    sigma_m: float
    h: np.ndarray
    omega: np.ndarray
    sigma: np.ndarray

    def to_vector(self):
        return np.concatenate(([self.sigma_m], self.h, self.omega, self.sigma))

    @classmethod
    def from_vector(cls, pi):
        pi = np.asarray(pi, dtype=float)
        return cls(pi[0], pi[1:4].copy(), pi[4:7].copy(), pi[7:10].copy())


def expeig_to_theta(pi):
    pi = np.asarray(pi, dtype=float)
    m = np.exp(pi[0])
    h = pi[1:4]
    R = lie.exp(pi[4:7])
    D = P @ np.exp(pi[7:10])
    Ic = R @ np.diag(D) @ R.T
    S = lie.hat(h)
    return compose(m, h, Ic + S @ S.T / m)


def expeig_jacobian(pi):
    pi = np.asarray(pi, dtype=float)
    m = np.exp(pi[0])
    h = pi[1:4]
    omega = pi[4:7]
    L = np.exp(pi[7:10])
    D = np.diag(P @ L)
    R = lie.exp(omega)
    Jr = lie.right_jacobian(omega)
    S = lie.hat(h)
    jac = np.zeros((10, 10))
    jac[0, 0] = m
    jac[4:, 0] = flatten_inertia(-S @ S.T / m)
    for k in range(3):
        jac[1 + k, 1 + k] = 1.0
        Sk = lie.hat(np.eye(3)[k])
        jac[4:, 1 + k] = flatten_inertia((Sk @ S.T + S @ Sk.T) / m)
        C = lie.hat(Jr[:, k])
        jac[4:, 4 + k] = flatten_inertia(R @ (C @ D - D @ C) @ R.T)
        jac[4:, 7 + k] = flatten_inertia(R @ np.diag(P[:, k] * L[k]) @ R.T)
    return jac


def _min_rotation(a, b):
    """Rotation vector of the smallest rotation taking unit ``a`` onto unit ``b``."""
    axis = np.cross(a, b)
    s = np.linalg.norm(axis)
    if s < 1e-15:
        return np.zeros(3)
    return axis / s * np.arctan2(s, float(np.dot(a, b)))


def expeig_from_theta(theta, rel_tol=1e-10):
    """Canonical inverse of the exponential-eigenvalue chart.

    Principal moments are sorted in descending order. With distinct moments
    the first nonzero component of the first two axes is made positive and
    the third axis completes a right-handed frame. Repeated moments use the
    smallest rotation compatible with the distinct axis (none when all
    three coincide).
    """
    theta = np.asarray(theta, dtype=float)
    m = theta[0]
    if not (np.isfinite(m) and m > 0):
        raise InconsistentInput(f"mass must be positive, got {m}")
    Ic = inertia_at_barycenter(theta)
    D, V = np.linalg.eigh(Ic)
    D, V = D[::-1], V[:, ::-1]
    L = P_INV @ D
    if not np.all(L > 0):
        raise InconsistentInput(f"second moments of mass must be positive, got {L}")
    scale = max(abs(D[0]), np.finfo(float).tiny)
    top_equal = (D[0] - D[1]) <= rel_tol * scale
    bottom_equal = (D[1] - D[2]) <= rel_tol * scale
    e = np.eye(3)
    if top_equal and bottom_equal:
        omega = np.zeros(3)
    elif top_equal:
        u = V[:, 2] if V[2, 2] >= 0 else -V[:, 2]
        omega = _min_rotation(e[2], u)
    elif bottom_equal:
        u = V[:, 0] if V[0, 0] >= 0 else -V[:, 0]
        omega = _min_rotation(e[0], u)
    else:
        R = V.copy()
        for col in range(2):
            nz = np.flatnonzero(np.abs(R[:, col]) > 1e-12)
            if R[nz[0], col] < 0:
                R[:, col] = -R[:, col]
        R[:, 2] = np.cross(R[:, 0], R[:, 1])
        omega = lie.log(R)
    return np.concatenate(([np.log(m)], theta[1:4], omega, np.log(L)))


# --- chart registry ---------------------------------------------------------

class Chart(NamedTuple):
    name: str
    to_theta: object
    jacobian: object
    from_theta: object


CHARTS = {
    "raw": Chart("raw", lambda pi: np.array(pi, dtype=float),
                 lambda pi: np.eye(10), lambda theta: np.array(theta, dtype=float)),
    "logchol": Chart("logchol", logchol_to_theta, logchol_jacobian, logchol_from_theta),
    "expeig": Chart("expeig", expeig_to_theta, expeig_jacobian, expeig_from_theta),
}


def get_chart(chart):
    if isinstance(chart, Chart):
        return chart
    try:
        return CHARTS[chart]
    except KeyError:
        raise ValueError(f"unknown chart {chart!r}; expected one of {sorted(CHARTS)}") from None


def jacobian(chart, pi):
    """Analytical ``d theta / d pi`` of the selected chart."""
    return get_chart(chart).jacobian(pi)
