import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from parest import inertia as inr
from parest import lie
from parest.errors import InconsistentInput, NonPositiveMass, NotPositiveDefinite

UNIT = np.array([1.0, 0, 0, 0, 2, 0, 2, 0, 0, 2])

coords = arrays(np.float64, 10, elements=st.floats(-2.0, 2.0))


def fd_jacobian(f, x, h=1e-6):
    return np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(len(x))]).T


def random_consistent(rng):
    m = rng.uniform(0.2, 5.0)
    c = rng.uniform(-1, 1, 3)
    L = rng.uniform(0.05, 2.0, 3)
    R = lie.exp(rng.uniform(-3, 3, 3))
    Ic = R @ np.diag(inr.P @ L) @ R.T
    return inr.from_barycentric(m, c, Ic)


# ---------------------------------------------------------------- examples
def test_barycenter_examples():
    np.testing.assert_allclose(inr.inertia_at_barycenter(UNIT), 2 * np.eye(3))
    np.testing.assert_allclose(inr.inertia_at_barycenter([2, 0, 0, 2, 3, 0, 3, 0, 0, 1]), np.eye(3), atol=1e-15)
    with pytest.raises(NonPositiveMass):
        inr.inertia_at_barycenter(np.r_[0.0, UNIT[1:]])


def test_pseudo_inertia_examples():
    np.testing.assert_allclose(inr.pseudo_inertia(UNIT), np.eye(4))
    np.testing.assert_array_equal(inr.pseudo_inertia(np.zeros(10)), np.zeros((4, 4)))
    J = inr.pseudo_inertia([1, 1, 0, 0, 2, 0, 2, 0, 0, 2])
    expected = np.eye(4)
    expected[0, 3] = expected[3, 0] = 1.0
    np.testing.assert_allclose(J, expected)


def test_pseudo_inertia_sigma_block():
    rng = np.random.default_rng(1)
    for _ in range(20):
        th = random_consistent(rng)
        I = inr.inertia_matrix(th[4:])
        np.testing.assert_allclose(inr.pseudo_inertia(th)[:3, :3], 0.5 * np.trace(I) * np.eye(3) - I, atol=1e-12)
        np.testing.assert_allclose(inr.theta_from_pseudo(inr.pseudo_inertia(th)), th, atol=1e-12)


def test_consistency_examples():
    assert inr.is_fully_consistent(UNIT) == (True, None)
    ok, why = inr.is_fully_consistent([1, 0, 0, 0, 1, 0, 1, 0, 0, 3])
    assert not ok and why == "triangle inequality D_z"
    ok, why = inr.is_fully_consistent([-1, 0, 0, 0, 2, 0, 2, 0, 0, 2])
    assert not ok and why == "mass"


def test_inertia_matrix_symmetric():
    I = inr.inertia_matrix(np.arange(6.0))
    assert np.array_equal(I, I.T)
    np.testing.assert_array_equal(inr.flatten_inertia(I), np.arange(6.0))


def test_text_serialization_round_trip():
    th = random_consistent(np.random.default_rng(0))
    np.testing.assert_array_equal(inr.parse_inertial_vector(inr.format_inertial_vector(th)), th)
    with pytest.raises(ValueError):
        inr.parse_inertial_vector("1 2 3")


def test_logchol_examples():
    np.testing.assert_allclose(inr.logchol_to_theta(np.zeros(10)), UNIT)
    pi = np.zeros(10)
    pi[0] = np.log(2.0)
    np.testing.assert_allclose(inr.logchol_to_theta(pi), 4 * UNIT)
    np.testing.assert_allclose(inr.logchol_from_theta(UNIT), np.zeros(10), atol=1e-15)
    # the scale coordinate absorbs the mass, the factor keeps U[3, 3] = 1
    np.testing.assert_allclose(inr.logchol_from_theta(4 * UNIT), pi, atol=1e-15)


def test_logchol_is_cholesky_product():
    rng = np.random.default_rng(2)
    for _ in range(50):
        pi = rng.uniform(-1, 1, 10)
        a, d, s, t = inr.LogCholeskyParams.from_vector(pi)
        U = np.array([[np.exp(d[0]), s[0], s[2], t[0]],
                      [0, np.exp(d[1]), s[1], t[1]],
                      [0, 0, np.exp(d[2]), t[2]],
                      [0, 0, 0, 1.0]]) * np.exp(a)
        np.testing.assert_allclose(inr.pseudo_inertia(inr.logchol_to_theta(pi)), U @ U.T, atol=1e-12)


def test_logchol_from_theta_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        inr.logchol_from_theta([1, 0, 0, 0, 1, 0, 1, 0, 0, 3])


def test_expeig_examples():
    np.testing.assert_allclose(inr.expeig_to_theta(np.zeros(10)), UNIT)
    pi = np.zeros(10)
    pi[4:7] = [0, 0, np.pi / 2]
    np.testing.assert_allclose(inr.expeig_to_theta(pi), UNIT, atol=1e-15)
    np.testing.assert_allclose(inr.expeig_from_theta(UNIT), np.zeros(10), atol=1e-15)
    th = UNIT.copy()
    th[0] = np.e
    assert inr.expeig_from_theta(th)[0] == pytest.approx(1.0)
    assert inr.expeig_jacobian(np.zeros(10))[0, 0] == 1.0


def test_expeig_from_theta_rejects_boundary():
    with pytest.raises(InconsistentInput):
        inr.expeig_from_theta([1, 0, 0, 0, 1, 0, 1, 0, 0, 2])  # L_z = 0
    with pytest.raises(InconsistentInput):
        inr.expeig_from_theta(np.r_[0.0, UNIT[1:]])


def test_expeig_inverse_conventions():
    rng = np.random.default_rng(3)
    for _ in range(50):
        pi = inr.expeig_from_theta(random_consistent(rng))
        assert np.linalg.norm(pi[4:7]) <= np.pi + 1e-12
        R = lie.exp(pi[4:7])
        assert np.linalg.det(R) == pytest.approx(1.0)


def test_raw_chart_identity():
    pi = np.random.default_rng(0).normal(size=10)
    np.testing.assert_array_equal(inr.jacobian("raw", pi), np.eye(10))
    with pytest.raises(ValueError):
        inr.get_chart("bogus")


def test_expeig_isotropic_singularity():
    rng = np.random.default_rng(4)
    pi = rng.uniform(-1, 1, 10)
    pi[7:] = 0.3
    G = inr.expeig_jacobian(pi)
    assert np.linalg.matrix_rank(G, tol=1e-9 * np.abs(G).max()) <= 9


def test_expeig_triangle_identity():
    rng = np.random.default_rng(5)
    for _ in range(20):
        pi = rng.uniform(-2, 2, 10)
        b = inr.barycentric(inr.expeig_to_theta(pi))
        L = np.exp(pi[7:])
        np.testing.assert_allclose(np.sort(b.D), np.sort(inr.P @ L), rtol=1e-10)
        np.testing.assert_allclose(np.sort(b.D[[1, 2, 0]] + b.D[[2, 0, 1]] - b.D), np.sort(2 * L), rtol=1e-9)


def test_barycentric_decomposition():
    rng = np.random.default_rng(6)
    for _ in range(20):
        b = inr.barycentric(random_consistent(rng))
        np.testing.assert_allclose(b.R @ np.diag(b.D) @ b.R.T, b.Ic, atol=1e-12)
        np.testing.assert_allclose(b.R.T @ b.R, np.eye(3), atol=1e-12)
        assert np.linalg.det(b.R) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(b.D, inr.P @ b.L, atol=1e-12)


# -------------------------------------------------------------- properties
@settings(max_examples=200, deadline=None)
@given(coords, st.sampled_from(["logchol", "expeig"]))
def test_chart_image_is_consistent(pi, chart):
    th = inr.get_chart(chart).to_theta(pi)
    assert inr.is_fully_consistent(th, 1e-9)[0]
    assert np.linalg.eigvalsh(inr.pseudo_inertia(th)).min() >= -1e-10 * max(1.0, np.abs(th).max())


@settings(max_examples=100, deadline=None)
@given(coords, st.sampled_from(["logchol", "expeig"]))
def test_chart_jacobian_matches_fd(pi, chart):
    ch = inr.get_chart(chart)
    G = ch.jacobian(pi)
    F = fd_jacobian(ch.to_theta, pi)
    assert np.abs(G - F).max() / max(np.abs(F).max(), 1.0) < 1e-6


@settings(max_examples=100, deadline=None)
@given(coords, st.sampled_from(["logchol", "expeig"]))
def test_chart_round_trip(pi, chart):
    ch = inr.get_chart(chart)
    th = ch.to_theta(pi)
    try:
        back = ch.to_theta(ch.from_theta(th))
    except (InconsistentInput, NotPositiveDefinite):
        return  # numerically on the boundary of the canonical domain
    assert np.abs(back - th).max() <= 1e-9 * max(1.0, np.abs(th).max())


def test_round_trip_random_consistent():
    rng = np.random.default_rng(7)
    for _ in range(100):
        th = random_consistent(rng)
        for chart in ("logchol", "expeig"):
            ch = inr.get_chart(chart)
            np.testing.assert_allclose(ch.to_theta(ch.from_theta(th)), th, atol=1e-9)
