"""Estimator benchmarks: scenarios x charts x rollouts x arrival methods x seeds.

Suite file (JSON)::

    {
      "name": "rollouts",
      "scenarios": ["hopper_payload.json",
                    {"scenario": "pendulum_payload.json", "id": "pendulum_noisy",
                     "override": {"noise": {"observations": 1.0}}}],
      "charts": ["expeig"], "rollouts": ["single", "feasibility", "multiple"],
      "arrivals": ["nullspace"],
      "seeds": 20,              # or an explicit list
      "seed": 0,                # suite seed
      "init": {"state_std": 0.05, "theta_factor": 1.7},
      "solver": {"max_iter": 100}
    }

Random initial guesses: for seed ``s`` the node states are the recorded
trajectory perturbed by ``state_std * N(0, 1)`` (applied with the state
retraction) and the estimated bodies start at ``theta_factor`` times their true
inertial vector (70% error by default).  The generator is seeded from
``(suite seed, s)`` only, so every chart / rollout / arrival cell of a seed
starts from the same guess.  Measurement noise is drawn from the same pair.

Outputs: ``records.csv`` (one row per run), ``summary.csv`` (mean and
population std over the converged runs of each cell), ``table.txt`` and
``timings.csv``.  Wall times live only in ``timings.csv`` so that the other
three files are byte-identical across reruns.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InconsistentInput, ParestError
from .problems.builder import build_problem, initial_iterate
from .problems.scenario import _resolve, scenario_from_dict
from .problems.scoring import score_estimate
from .problems.synth import synthesize_data
from .solver.ddp import SolverConfig, solve

log = logging.getLogger(__name__)

RECORD_COLUMNS = ("scenario", "chart", "rollout", "arrival", "seed", "status", "iterations", "final_cost",
                  "gap_l1", "param_err", "traj_err")
CELL_KEYS = ("scenario", "chart", "rollout", "arrival")
STATS = ("iterations", "final_cost", "traj_err", "param_err")
SUMMARY_COLUMNS = CELL_KEYS + ("runs", "converged") + tuple(f"{s}_{k}" for s in STATS for k in ("mean", "std"))


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class SuiteEntry:
    id: str
    path: str
    override: dict


@dataclass
class Suite:
    name: str
    entries: list
    charts: list
    rollouts: list
    arrivals: list
    seeds: list
    seed: int
    init: dict
    solver: dict

    def cells(self):
        for e in self.entries:
            for chart in self.charts:
                for rollout in self.rollouts:
                    for arrival in self.arrivals:
                        for s in self.seeds:
                            yield e, chart, rollout, arrival, s


def suite_from_dict(d, base_dir=None) -> Suite:
    try:
        entries = []
        for item in d["scenarios"]:
            if isinstance(item, str):
                item = {"scenario": item}
            path = _resolve(item["scenario"], base_dir, "scenarios")
            sid = item.get("id", os.path.splitext(os.path.basename(path))[0])
            entries.append(SuiteEntry(sid, path, dict(item.get("override", {}))))
        seeds = d.get("seeds", 1)
        seeds = list(range(int(seeds))) if isinstance(seeds, int) else [int(s) for s in seeds]
        suite = Suite(d.get("name", "suite"), entries, list(d.get("charts", ["expeig"])),
                      list(d.get("rollouts", ["multiple"])), list(d.get("arrivals", ["nullspace"])),
                      seeds, int(d.get("seed", 0)), dict(d.get("init", {})), dict(d.get("solver", {})))
        SolverConfig(**suite.solver)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ParestError):
            raise
        raise InconsistentInput(f"malformed suite: {exc!r}") from exc
    ids = [e.id for e in entries]
    if len(set(ids)) != len(ids):
        raise InconsistentInput("suite scenario ids must be unique")
    return suite


def load_suite(path) -> Suite:
    if not os.path.exists(path):
        path = _resolve(path, None, "suites")
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InconsistentInput(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return suite_from_dict(d, os.path.dirname(os.path.abspath(path)))


@lru_cache(maxsize=32)
def _scenario(path, override_json):
    with open(path) as fh:
        d = json.load(fh)
    return scenario_from_dict(_merge(d, json.loads(override_json)), os.path.dirname(path))


@lru_cache(maxsize=64)
def _data(path, override_json, seed):
    return synthesize_data(_scenario(path, override_json), seed)


def _seed_pair(suite_seed, s):
    return [int(suite_seed), int(s)]


def run_cell(suite: Suite, entry: SuiteEntry, chart, rollout, arrival, s):
    """One solve; failures become records with status ``error:<Exception>``."""
    okey = json.dumps(entry.override, sort_keys=True)
    sc = _scenario(entry.path, okey)
    data_seed = int(np.random.SeedSequence(_seed_pair(suite.seed, s)).generate_state(1)[0])
    data = _data(entry.path, okey, data_seed)
    rng = np.random.default_rng(_seed_pair(suite.seed, s))
    state_std = float(suite.init.get("state_std", sc.init_state_std))
    policy = None
    if "theta_factor" in suite.init:
        policy = {"policy": "scale", "factor": float(suite.init["theta_factor"])}
    rec = {"scenario": entry.id, "chart": chart, "rollout": rollout, "arrival": arrival, "seed": int(s)}
    t0 = time.perf_counter()
    try:
        prob, theta0 = build_problem(sc, data, chart, policy)
        it = initial_iterate(prob, data, theta0, state_std, rng)
        cfg = SolverConfig(**{**suite.solver, "rollout": rollout, "arrival": arrival})
        res = solve(prob, it, cfg)
        pmap = prob.meta["pmap"]
        score = score_estimate(res.iterate.xs, pmap.inertias(res.iterate.theta), data.states, data.theta_true,
                               sc.model.difference, res.cost)
        rec.update(status=res.status, iterations=res.iterations, final_cost=res.cost, gap_l1=res.gap_l1,
                   param_err=score["param_err"], traj_err=score["traj_linf"])
    except ParestError as exc:
        log.info("cell %s failed: %s", rec, exc)
        rec.update(status=f"error:{type(exc).__name__}", iterations=0, final_cost=float("nan"),
                   gap_l1=float("nan"), param_err=float("nan"), traj_err=float("nan"))
    return rec, time.perf_counter() - t0


def _run_cell_args(args):
    return run_cell(*args)


@dataclass
class BenchReport:
    suite: str
    records: list
    summary: list
    timings: list

    def records_csv(self):
        return _csv(RECORD_COLUMNS, self.records)

    def summary_csv(self):
        return _csv(SUMMARY_COLUMNS, self.summary)

    def timings_csv(self):
        rows = [{**{k: r[k] for k in CELL_KEYS + ("seed",)}, "wall_time": t} for r, t in zip(self.records,
                                                                                              self.timings)]
        return _csv(CELL_KEYS + ("seed", "wall_time"), rows)

    def table(self):
        return format_table(self.summary, self.suite)

    def write(self, out_dir):
        os.makedirs(out_dir, exist_ok=True)
        files = {"records.csv": self.records_csv(), "summary.csv": self.summary_csv(),
                 "table.txt": self.table(), "timings.csv": self.timings_csv()}
        for name, text in files.items():
            with open(os.path.join(out_dir, name), "w", newline="") as fh:
                fh.write(text)
        return [os.path.join(out_dir, n) for n in files]


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def aggregate(records):
    """Per-cell mean / population std over converged runs, in first-seen cell order."""
    cells = {}
    for r in records:
        cells.setdefault(tuple(r[k] for k in CELL_KEYS), []).append(r)
    out = []
    for key, rows in cells.items():
        ok = [r for r in rows if r["status"] == "converged"]
        row = dict(zip(CELL_KEYS, key), runs=len(rows), converged=len(ok))
        for s in STATS:
            with np.errstate(over="ignore", invalid="ignore"):
                vals = np.array([float(r[s]) for r in ok])
                row[f"{s}_mean"] = float(vals.mean()) if vals.size else float("nan")
                row[f"{s}_std"] = float(vals.std()) if vals.size else float("nan")
        out.append(row)
    return out


def _pm(mean, std, fmt):
    if not np.isfinite(mean):
        return "x"
    return f"{mean:{fmt}} +- {std:{fmt}}"


def format_table(summary, title="benchmark"):
    """Fixed-width table: iterations / cost / l-inf error per cell (``x`` = no converged run)."""
    head = ("scenario", "chart", "rollout", "arrival", "conv", "iterations", "cost", "error [l-inf]")
    rows = []
    for r in summary:
        rows.append((r["scenario"], r["chart"], r["rollout"], r["arrival"], f"{r['converged']}/{r['runs']}",
                     _pm(r["iterations_mean"], r["iterations_std"], ".1f"),
                     _pm(r["final_cost_mean"], r["final_cost_std"], ".4e"),
                     _pm(r["traj_err_mean"], r["traj_err_std"], ".3e")))
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h) for i, h in enumerate(head)]
    line = "  ".join("-" * w for w in widths)
    out = [title, line, "  ".join(h.ljust(w) for h, w in zip(head, widths)), line]
    out += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in rows]
    out.append(line)
    return "\n".join(s.rstrip() for s in out) + "\n"


def run_suite(suite: Suite, jobs=1) -> BenchReport:
    cells = [(suite, *c) for c in suite.cells()]
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_cell_args, cells))
    else:
        results = [run_cell(*c) for c in cells]
    records = [r for r, _ in results]
    timings = [t for _, t in results]
    return BenchReport(suite.name, records, aggregate(records), timings)


def read_records(text):
    """Parse ``records.csv`` back (floats round-trip exactly through ``repr``)."""
    rows = list(csv.DictReader(io.StringIO(text)))
    for r in rows:
        r["seed"] = int(r["seed"])
        r["iterations"] = int(r["iterations"])
        for k in ("final_cost", "gap_l1", "param_err", "traj_err"):
            r[k] = float(r[k])
    return rows
