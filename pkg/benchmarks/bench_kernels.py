"""Time the compiled and pure-Python rigid-body kernels on the shipped models.

    python3 benchmarks/bench_kernels.py [--repeat 200] [--models hopper.json ...]

Prints one row per (model, kernel) with microseconds per call for each backend
and the speed-up.  Results are checked to agree before timing.
"""

import argparse
import timeit

import numpy as np

from parest.rbd import backend
from parest.rbd import dynamics as D
from parest.rbd.model import load_model

MODELS = ("pendulum.json", "double_pendulum.json", "hopper.json", "gantry6.json")


def calls(model, rng):
    q, v, a = rng.normal(size=(3, model.nv))
    return {
        "rnea": lambda k: D.inverse_dynamics(model, q, v, a, backend=k),
        "crba": lambda k: D.mass_matrix(model, q, backend=k),
        "regressor": lambda k: D.joint_torque_regressor(model, q, v, a, backend=k),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=200)
    p.add_argument("--models", nargs="+", default=list(MODELS))
    args = p.parse_args(argv)
    try:
        backend.get_kernels("cython")
    except ImportError:
        print("compiled kernels not built; run `pip install -e . --no-build-isolation` first")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'model':<22s} {'kernel':<10s} {'python [us]':>12s} {'cython [us]':>12s} {'speed-up':>9s}")
    for name in args.models:
        model = load_model(name)
        for kname, fn in calls(model, rng).items():
            assert np.allclose(fn("python"), fn("cython"), rtol=1e-12, atol=1e-12)
            t = {}
            for k in ("python", "cython"):
                t[k] = min(timeit.repeat(lambda: fn(k), number=args.repeat, repeat=3)) / args.repeat * 1e6
            print(f"{name:<22s} {kname:<10s} {t['python']:12.1f} {t['cython']:12.1f} "
                  f"{t['python'] / t['cython']:8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
