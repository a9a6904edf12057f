import math

import numpy as np
import pytest

from parest import bench
from parest.errors import InconsistentInput


@pytest.fixture(scope="module")
def smoke():
    return bench.run_suite(bench.load_suite("smoke.json"))


def test_record_count(smoke):
    assert len(smoke.records) == 6
    assert [r["chart"] for r in smoke.records] == ["expeig"] * 3 + ["logchol"] * 3
    assert all(r["status"] == "converged" for r in smoke.records)


def test_aggregates_recompute_from_records(smoke):
    rows = bench.read_records(smoke.records_csv())
    assert rows == smoke.records
    for cell in smoke.summary:
        sel = [r for r in rows if all(r[k] == cell[k] for k in bench.CELL_KEYS) and r["status"] == "converged"]
        assert cell["converged"] == len(sel)
        for s in bench.STATS:
            vals = np.array([r[s] for r in sel], dtype=float)
            assert abs(cell[f"{s}_mean"] - vals.mean()) <= 1e-12 * max(1.0, abs(vals.mean()))
            assert abs(cell[f"{s}_std"] - vals.std()) <= 1e-12 * max(1.0, abs(vals.std()))


def test_charts_reach_same_cost(smoke):
    by_seed = {}
    for r in smoke.records:
        by_seed.setdefault(r["seed"], {})[r["chart"]] = r["final_cost"]
    for costs in by_seed.values():
        # noiseless data: both optima are at round-off level
        assert abs(costs["expeig"] - costs["logchol"]) <= 0.01 * max(costs.values()) + 1e-12


def test_table_shape(smoke):
    lines = smoke.table().splitlines()
    assert lines[0] == "smoke"
    assert "iterations" in lines[2] and "error [l-inf]" in lines[2]
    assert len(lines) == 4 + len(smoke.summary) + 1
    assert all("+-" in ln for ln in lines[4:-1])


def test_rerun_is_byte_identical(smoke, tmp_path):
    again = bench.run_suite(bench.load_suite("smoke.json"))
    assert again.records_csv() == smoke.records_csv()
    assert again.summary_csv() == smoke.summary_csv()
    assert again.table() == smoke.table()
    paths = again.write(str(tmp_path))
    assert len(paths) == 4 and "wall_time" in open(paths[3]).readline()


def test_failed_cells_are_recorded():
    recs = [
        {"scenario": "a", "chart": "c", "rollout": "r", "arrival": "n", "seed": 0, "status": "max_iter",
         "iterations": 100, "final_cost": 1.0, "gap_l1": 0.0, "param_err": 1.0, "traj_err": 1.0},
        {"scenario": "a", "chart": "c", "rollout": "r", "arrival": "n", "seed": 1, "status": "error:X",
         "iterations": 0, "final_cost": math.nan, "gap_l1": math.nan, "param_err": math.nan, "traj_err": math.nan},
    ]
    summ = bench.aggregate(recs)
    assert summ[0]["runs"] == 2 and summ[0]["converged"] == 0
    assert math.isnan(summ[0]["iterations_mean"])
    table = bench.format_table(summ, "t")
    assert " x" in table.splitlines()[4]


def test_override_merge_and_validation():
    assert bench._merge({"a": {"b": 1, "c": 2}}, {"a": {"c": 3}}) == {"a": {"b": 1, "c": 3}}
    with pytest.raises(InconsistentInput):
        bench.suite_from_dict({"scenarios": ["pendulum_payload.json", "pendulum_payload.json"]})
    with pytest.raises(InconsistentInput):
        bench.suite_from_dict({"scenarios": ["pendulum_payload.json"], "solver": {"rho": 2.0}})
    with pytest.raises(InconsistentInput):
        bench.suite_from_dict({"charts": ["expeig"]})


def test_parallel_jobs_match_serial(smoke):
    par = bench.run_suite(bench.load_suite("smoke.json"), jobs=2)
    assert par.records_csv() == smoke.records_csv()
