"""Command-line front end: ``parest simulate|estimate|bench|check-derivatives``.

Exit codes: 0 success, 1 usage / parse error, 2 numerical failure,
3 convergence failure.  ``PAREST_LOG`` selects the log level
(error, warn, info, debug; default warn).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from . import inertia as inr
from .errors import InconsistentInput, InconsistentSchedule, ParestError, SingularParameterHessian

log = logging.getLogger("parest")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_CONVERGENCE = 0, 1, 2, 3
LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING, "info": logging.INFO,
          "debug": logging.DEBUG}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _setup_logging():
    name = os.environ.get("PAREST_LOG", "warn").lower()
    logging.basicConfig(level=LEVELS.get(name, logging.WARNING), format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    if name not in LEVELS:
        log.warning("unknown PAREST_LOG=%r, using warn", name)


def _exit_for(exc):
    if isinstance(exc, (InconsistentInput, InconsistentSchedule)):
        return EXIT_USAGE
    return EXIT_NUMERICAL


def _write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _solver_config(args):
    from .solver.ddp import SolverConfig
    opts = {}
    if args.config:
        with open(args.config) as fh:
            try:
                opts = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InconsistentInput(f"{args.config}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if "alphas" in opts:
        opts["alphas"] = tuple(opts["alphas"])
    for key in ("rollout", "arrival", "max_iter", "tol_grad"):
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = val
    try:
        return SolverConfig(**opts)
    except (TypeError, ValueError) as exc:
        raise InconsistentInput(f"bad solver configuration: {exc}") from exc


# ------------------------------------------------------------------ commands
def cmd_simulate(args):
    from .problems.scenario import load_scenario
    from .problems.synth import synthesize_data
    sc = load_scenario(args.scenario)
    data = synthesize_data(sc, args.seed)
    _write(args.out, data.dumps())
    print(f"wrote {args.out} ({sc.horizon + 1} observations, seed {args.seed})")
    return EXIT_OK


def _estimate_dict(problem, result, data, scenario, chart):
    from .problems.scoring import score_estimate
    pmap = problem.meta["pmap"]
    theta = result.iterate.theta
    phys = pmap.inertias(theta)
    out = {
        "scenario": scenario.name,
        "chart": chart,
        "status": result.status,
        "iterations": result.iterations,
        "cost": result.cost,
        "gap_l1": result.gap_l1,
        "gap_inf": result.gap_inf,
        "grad": result.grad,
        "rank": result.rank,
        "bodies": [scenario.model.bodies[b].name for b in pmap.bodies],
        "theta_chart": [list(map(float, b)) for b in pmap.blocks(theta)],
        "theta_physical": [list(map(float, b)) for b in phys],
        "states": [list(map(float, x)) for x in result.iterate.xs],
    }
    if data.theta_true.size:
        out["score"] = score_estimate(result.iterate.xs, phys, data.states, data.theta_true,
                                      scenario.model.difference, result.cost)
    return out


def cmd_estimate(args):
    from .problems.builder import build_problem, initial_iterate
    from .problems.scenario import load_scenario
    from .problems.synth import SyntheticData, synthesize_data
    from .solver.ddp import solve, trace_to_csv
    sc = load_scenario(args.scenario)
    data = SyntheticData.load(args.data) if args.data else synthesize_data(sc, args.seed)
    cfg = _solver_config(args)
    prob, theta0 = build_problem(sc, data, args.chart)
    rng = np.random.default_rng(args.seed)
    it = initial_iterate(prob, data, theta0, sc.init_state_std if args.state_std is None else args.state_std, rng)
    trace_path = args.trace or os.path.splitext(args.out)[0] + "_trace.csv"
    try:
        res = solve(prob, it, cfg)
    except SingularParameterHessian as exc:
        print(f"SingularParameterHessian: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    est = _estimate_dict(prob, res, data, sc, args.chart)
    _write(args.out, json.dumps(est, indent=1, sort_keys=True) + "\n")
    _write(trace_path, trace_to_csv(res.trace))
    msg = (f"{res.status}: {res.iterations} iterations, cost {res.cost:.10g}, gap_l1 {res.gap_l1:.3e}, "
           f"grad {res.grad:.3e}")
    if "score" in est:
        s = est["score"]
        msg += f", mass rel err {max(s['mass_rel_err'], default=0.0):.3e}, traj l-inf {s['traj_linf']:.3e}"
    print(msg)
    if res.status == "converged":
        return EXIT_OK
    # best iterate has already been written
    print(f"estimate did not converge (status {res.status}); best iterate written to {args.out}", file=sys.stderr)
    return EXIT_NUMERICAL if res.status == "numerical" else EXIT_CONVERGENCE


def cmd_bench(args):
    from .bench import load_suite, run_suite
    suite = load_suite(args.suite)
    if args.seeds is not None:
        suite.seeds = list(range(args.seeds))
    if args.seed is not None:
        suite.seed = args.seed
    if args.max_iter is not None:
        suite.solver["max_iter"] = args.max_iter
    if args.tol_grad is not None:
        suite.solver["tol_grad"] = args.tol_grad
    for attr, flag in (("charts", args.chart), ("rollouts", args.rollout), ("arrivals", args.arrival)):
        if flag:
            setattr(suite, attr, flag)
    rep = run_suite(suite, jobs=max(1, args.jobs))
    paths = rep.write(args.out)
    sys.stdout.write(rep.table())
    print("wrote " + ", ".join(paths))
    return EXIT_OK


def cmd_check_derivatives(args):
    from .checks import check_model
    from .rbd.model import load_model
    model = load_model(args.model)
    if args.samples <= 0:
        log.warning("no samples requested, nothing checked")
        print("0 samples: vacuous pass")
        return EXIT_OK
    rep = check_model(model, args.samples, args.seed)
    for line in rep.lines():
        print(line)
    worst = max(rep.worst.values(), default=0.0)
    print(f"worst error {worst:.3e}: {'PASS' if rep.passed else 'FAIL'}")
    return EXIT_OK if rep.passed else EXIT_NUMERICAL


# -------------------------------------------------------------------- parser
def build_parser():
    p = _Parser(prog="parest", description="Inertial parameter and state estimation for rigid-body systems")
    p.add_argument("--version", action="version", version=f"parest {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="synthesize observations and ground truth for a scenario")
    s.add_argument("scenario")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_simulate)

    def solver_flags(q, multi=False):
        kw = {"nargs": "+"} if multi else {}
        q.add_argument("--chart", choices=list(inr.CHARTS), default=None if multi else "expeig", **kw)
        q.add_argument("--rollout", choices=["single", "feasibility", "multiple"], **kw)
        q.add_argument("--arrival", choices=["schur", "nullspace"], **kw)
        q.add_argument("--tol-grad", type=float, dest="tol_grad")
        q.add_argument("--max-iter", type=int, dest="max_iter")

    e = sub.add_parser("estimate", help="solve the estimation problem for one data set")
    e.add_argument("scenario")
    e.add_argument("--data", help="data file from 'simulate' (default: synthesize with --seed)")
    e.add_argument("--out", required=True, help="estimate JSON path")
    e.add_argument("--trace", help="trace CSV path (default: <out>_trace.csv)")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--state-std", type=float, dest="state_std")
    e.add_argument("--config", help="JSON file with solver settings")
    solver_flags(e)
    e.set_defaults(func=cmd_estimate)

    b = sub.add_parser("bench", help="run a benchmark suite")
    b.add_argument("suite")
    b.add_argument("--out", required=True, help="output directory")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--seed", type=int)
    b.add_argument("--seeds", type=int, help="number of seeds (overrides the suite)")
    solver_flags(b, multi=True)
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("check-derivatives", help="finite-difference checks of the dynamics derivatives")
    c.add_argument("model")
    c.add_argument("-n", "--samples", type=int, default=20)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_check_derivatives)
    return p


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ParestError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_for(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
