"""SO(3) helpers: hat operator, exponential/logarithm and right Jacobian."""

import numpy as np
from scipy.spatial.transform import Rotation

_SMALL_ANGLE = 1e-8


def hat(w):
    """Skew-symmetric matrix ``S(w)`` such that ``S(w) @ v == cross(w, v)``."""
    return np.array([[0.0, -w[2], w[1]],
                     [w[2], 0.0, -w[0]],
                     [-w[1], w[0], 0.0]])


def vee(S):
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def _coefficients(theta):
    """Return ``sin(t)/t``, ``(1-cos t)/t^2`` and ``(t - sin t)/t^3``."""
    if theta < _SMALL_ANGLE:
        t2 = theta * theta
        return 1.0 - t2 / 6.0, 0.5 - t2 / 24.0, 1.0 / 6.0 - t2 / 120.0
    s, c = np.sin(theta), np.cos(theta)
    return s / theta, (1.0 - c) / theta**2, (theta - s) / theta**3


def exp(w):
    """Rodrigues formula, with a Taylor fallback near the identity."""
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w)
    a, b, _ = _coefficients(theta)
    W = hat(w)
    return np.eye(3) + a * W + b * (W @ W)


def log(R):
    """Rotation vector with norm in ``[0, pi]``."""
    return Rotation.from_matrix(R).as_rotvec()


def right_jacobian(w):
    """``Exp(w + d) ~= Exp(w) Exp(Jr(w) d)`` for small ``d``."""
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w)
    _, b, c = _coefficients(theta)
    W = hat(w)
    return np.eye(3) - b * W + c * (W @ W)
