import csv
import json

import numpy as np
import pytest

from mutstrength import experiments as ex
from mutstrength.dp import StrengthDistribution, expected_runtime
from mutstrength.operators import BaselineSpec, make_baseline, parse_baseline
from mutstrength.sepcmaes import CmaConfig


@pytest.fixture(scope="module")
def small_grid():
    grid = ex.GridSpec([3, 5], [1, 4, 16], runs_per_cell=4, base_seed=7)
    return grid, ex.run_grid(grid, CmaConfig())


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        ex.GridSpec([], [1])
    with pytest.raises(ValueError):
        ex.GridSpec([3], [1], runs_per_cell=0)


def test_run_seeds_depend_on_every_coordinate():
    seeds = {ex.run_seed(b, n, lam, r) for b in (0, 1) for n in (3, 5) for lam in (1, 2) for r in range(3)}
    assert len(seeds) == 24
    assert ex.run_seed(0, 3, 1, 0) == ex.run_seed(0, 3, 1, 0)


def test_cell_statistics(small_grid):
    _, cells = small_grid
    for c in cells:
        assert c.good_runs
        assert c.best_runtime == min(r.best_runtime for r in c.runs)
        for i in c.good_runs:
            rt = expected_runtime(c.n, c.lam, c.runs[i].best_distribution)
            assert rt <= c.best_runtime * ex.GOOD_RUN_FACTOR
        assert c.per_k_mean.shape == (c.n,)
        assert c.max_std == c.per_k_std.max()


def test_single_run_cell():
    cells = ex.run_grid(ex.GridSpec([3], [2], runs_per_cell=1, base_seed=0))
    assert cells[0].good_runs == [0]
    assert cells[0].max_std == 0.0


def test_best_runtime_non_increasing_in_lambda(small_grid):
    _, cells = small_grid
    for n in (3, 5):
        row = [c.best_runtime for c in cells if c.n == n]
        assert all(b <= a * (1 + 1e-9) for a, b in zip(row, row[1:]))


def test_count_support_examples():
    w = np.zeros(12)
    w[[1, 4, 10, 11]] = [0.8555, 0.0530, 0.0875, 0.0040]
    assert ex.count_support(StrengthDistribution.normalized(w), 1e-3) == 4
    assert ex.count_support(StrengthDistribution.one_point(7, 1), 0.5) == 1
    assert ex.count_support(make_baseline(parse_baseline("binpos:0.5"), 11), 1e-4) == 11
    with pytest.raises(ValueError):
        ex.count_support(StrengthDistribution.one_point(7, 1), 0)


def test_compare_baselines_anchors():
    rls = BaselineSpec("one_point", 1)
    rec = ex.compare_baselines(3, [1], [rls], {1: expected_runtime(3, 1, StrengthDistribution.one_point(3, 1))})
    assert rec[0].regret == 1.0
    rec = ex.compare_baselines(3, [1024], [rls, BaselineSpec("cond_binomial", 0.5)], {1024: 0.875})
    assert rec[0].regret == pytest.approx(12 / 7, rel=0.01)
    assert rec[1].regret == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        ex.compare_baselines(3, [2], [rls], {1: 3.5})


def test_infinite_baseline_regret():
    r = ex.RegretRecord(3, 1, BaselineSpec("one_point", 3), float("inf"), 3.5)
    assert r.regret == float("inf")


def test_regret_at_least_one_against_grid(small_grid):
    _, cells = small_grid
    specs = [parse_baseline(t) for t in ex.DEFAULT_BASELINES]
    for n in (3, 5):
        optimal = {c.lam: c.best_runtime for c in cells if c.n == n}
        for r in ex.compare_baselines(n, optimal, specs, optimal):
            assert r.regret >= 1 - 1e-9


def test_published_table_shape():
    assert len(ex.PUBLISHED_RUNTIMES) == 11 * 15
    assert ex.published_optimum(3, 1) == 3.50
    assert ex.published_optimum(100, 1024) == 15.79
    with pytest.raises(ValueError):
        ex.published_optimum(4, 1)


def test_persistence(tmp_path, small_grid):
    grid, cells = small_grid
    ex.write_grid(cells, grid, tmp_path)
    doc = json.loads((tmp_path / ex.cell_filename(3, 4)).read_text())
    assert {"n", "lambda", "base_seed", "runs", "good_runs", "per_k_mean", "per_k_std", "max_std"} <= set(doc)
    assert {"seed", "runtime", "weights", "evals", "termination"} <= set(doc["runs"][0])
    back = ex.read_cell(tmp_path / ex.cell_filename(3, 4))
    assert back.best_runtime == cells[1].best_runtime

    with open(tmp_path / "runtimes.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["n", "lambda", "best_runtime"]
    assert float(rows[1][2]) == cells[0].best_runtime
    with open(tmp_path / "support.csv") as fh:
        assert next(csv.reader(fh)) == ["n", "lambda", "support_count"]

    recs = ex.compare_baselines(3, [1, 4], [parse_baseline("rls")], {1: 3.5, 4: 1.64})
    ex.write_regret_csv(recs, tmp_path / "regret.csv")
    lines = (tmp_path / "regret.csv").read_text().splitlines()
    assert lines[0] == "n,lambda,baseline,runtime,regret"
    assert lines[1].startswith("3,1,rls,")


def test_grid_rerun_byte_identical(tmp_path):
    grid = ex.GridSpec([3, 4], [1, 3], runs_per_cell=3, base_seed=42)
    for sub in ("a", "b"):
        ex.write_grid(ex.run_grid(grid, CmaConfig()), grid, tmp_path / sub)
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
