import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parest.problems.scenario import data_path
from parest.rbd import backend
from parest.rbd.model import load_model

compiled = pytest.mark.skipif(backend.NAME != "cython", reason="compiled kernels not built")
MODELS = ["pendulum", "double_pendulum", "cart_pendulum", "planar_flyer", "hopper", "gantry6"]


@compiled
@settings(max_examples=60, deadline=None)
@given(st.sampled_from(MODELS), st.integers(0, 2**32 - 1))
def test_kernels_agree(name, seed):
    model = load_model(data_path("models", f"{name}.json"))
    rng = np.random.default_rng(seed)
    q, v, a = rng.normal(size=(3, model.nv))
    py, cy = backend.get_kernels("python"), backend.get_kernels("cython")
    args = model.kernel_args()
    inertia = model.link_inertia
    g = model.gravity
    np.testing.assert_allclose(cy.rnea(*args, inertia, g, q, v, a), py.rnea(*args, inertia, g, q, v, a),
                               rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(cy.crba(*args, inertia, q), py.crba(*args, inertia, q),
                               rtol=1e-12, atol=1e-12)
    cols = model.body_columns()
    n = 10 * model.n_bodies
    np.testing.assert_allclose(cy.regressor(*args, g, q, v, a, cols, n),
                               py.regressor(*args, g, q, v, a, cols, n), rtol=1e-12, atol=1e-12)
    link = int(rng.integers(model.nv))
    off = rng.normal(size=3)
    for x, y in zip(cy.point_kinematics(*args, q, v, a, link, off),
                    py.point_kinematics(*args, q, v, a, link, off)):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-12)


def test_unknown_backend():
    with pytest.raises(ValueError):
        backend.get_kernels("fortran")


def test_pure_python_fallback_selected_by_env():
    env = dict(os.environ, PAREST_PURE="1")
    out = subprocess.run([sys.executable, "-c", "from parest.rbd import backend; print(backend.NAME)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
