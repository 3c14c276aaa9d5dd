"""Experiment grid: seeded optimizer runs per (n, lambda), robustness
statistics over the good runs, support counts and baseline regrets."""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dp import StrengthDistribution, expected_runtime
from .operators import BaselineSpec, make_baseline
from .sepcmaes import CmaConfig, OptimizationRun, optimize

log = logging.getLogger(__name__)

GOOD_RUN_FACTOR = 1.0 + 1e-9
DEFAULT_SUPPORT_THRESHOLD = 1e-4

PUBLISHED_NS = (3, 5, 8, 11, 16, 23, 32, 45, 64, 91, 100)
PUBLISHED_LAMBDAS = (1, 2, 3, 4, 5, 6, 7, 8, 16, 32, 64, 128, 256, 512, 1024)

# Published optimal expected runtimes (generations, two decimals); rows follow
# PUBLISHED_NS, columns PUBLISHED_LAMBDAS.
_PUBLISHED_ROWS = (
    (3.50, 2.26, 1.87, 1.64, 1.48, 1.37, 1.28, 1.21, 0.96, 0.88, 0.88, 0.88, 0.87, 0.87, 0.87),
    (7.97, 4.78, 3.78, 3.26, 2.92, 2.67, 2.49, 2.35, 1.78, 1.39, 1.10, 0.98, 0.97, 0.97, 0.97),
    (16.20, 9.32, 7.12, 6.04, 5.36, 4.89, 4.54, 4.27, 3.15, 2.43, 1.98, 1.67, 1.39, 1.14, 1.01),
    (25.59, 14.45, 10.84, 9.11, 8.04, 7.30, 6.76, 6.34, 4.63, 3.53, 2.82, 2.33, 2.01, 1.83, 1.62),
    (43.00, 23.87, 17.64, 14.62, 12.83, 11.60, 10.71, 10.02, 7.26, 5.46, 4.31, 3.54, 3.01, 2.61, 2.26),
    (69.95, 38.35, 28.02, 22.99, 20.04, 18.04, 16.60, 15.50, 11.14, 8.32, 6.51, 5.30, 4.46, 3.83, 3.34),
    (107.69, 58.52, 42.40, 34.52, 29.91, 26.84, 24.62, 22.94, 16.34, 12.14, 9.42, 7.62, 6.38, 5.47, 4.79),
    (166.58, 89.83, 64.63, 52.27, 45.03, 40.25, 36.82, 34.23, 24.17, 17.84, 13.74, 11.05, 9.21, 7.87, 6.86),
    (259.25, 138.90, 99.31, 79.86, 68.44, 60.95, 55.59, 51.56, 36.09, 26.45, 20.23, 16.17, 13.39, 11.41, 9.92),
    (400.44, 213.38, 151.76, 121.44, 103.60, 91.93, 83.62, 77.39, 53.70, 39.07, 29.70, 23.59, 19.45, 16.50, 14.31),
    (449.42, 239.17, 169.88, 135.79, 115.70, 102.57, 93.24, 86.24, 59.70, 43.36, 32.90, 26.09, 21.48, 18.22, 15.79),
)
PUBLISHED_RUNTIMES = {
    (n, lam): v
    for n, row in zip(PUBLISHED_NS, _PUBLISHED_ROWS)
    for lam, v in zip(PUBLISHED_LAMBDAS, row)
}

DEFAULT_BASELINES = (
    "rls", "sbm:auto", "sbm>0:auto", "sbm0to1:auto",
    "fastga:1.3", "fastga:1.5", "fastga:1.7",
    "pow:1.3", "pow:1.5", "pow:1.7",
)


@dataclass
class GridSpec:
    ns: Sequence[int]
    lambdas: Sequence[int]
    runs_per_cell: int = 50
    base_seed: int = 0

    def __post_init__(self):
        if not self.ns or not self.lambdas:
            raise ValueError("grid needs at least one n and one lambda")
        if self.runs_per_cell < 1:
            raise ValueError("runs_per_cell must be >= 1")

    def cells(self) -> list[tuple[int, int]]:
        return [(n, lam) for n in self.ns for lam in self.lambdas]


@dataclass
class CellResult:
    n: int
    lam: int
    runs: list[OptimizationRun] = field(repr=False)
    best_runtime: float
    good_runs: list[int]
    per_k_mean: np.ndarray = field(repr=False)
    per_k_std: np.ndarray = field(repr=False)
    max_std: float

    @property
    def best_run(self) -> OptimizationRun:
        return min(self.runs, key=lambda r: r.best_runtime)

    def mean_distribution(self) -> StrengthDistribution:
        return StrengthDistribution.normalized(np.concatenate([[0.0], self.per_k_mean]), self.n)

    def to_dict(self, base_seed: int) -> dict:
        return {
            "n": self.n,
            "lambda": self.lam,
            "base_seed": base_seed,
            "runs": [r.to_dict() for r in self.runs],
            "best_runtime": self.best_runtime,
            "good_runs": list(self.good_runs),
            "per_k_mean": [float(x) for x in self.per_k_mean],
            "per_k_std": [float(x) for x in self.per_k_std],
            "max_std": self.max_std,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CellResult":
        n, lam = int(doc["n"]), int(doc["lambda"])
        return cls(
            n=n,
            lam=lam,
            runs=[OptimizationRun.from_dict(r, n, lam) for r in doc["runs"]],
            best_runtime=float(doc.get("best_runtime", min(r["runtime"] for r in doc["runs"]))),
            good_runs=[int(i) for i in doc["good_runs"]],
            per_k_mean=np.asarray(doc["per_k_mean"], dtype=np.float64),
            per_k_std=np.asarray(doc["per_k_std"], dtype=np.float64),
            max_std=float(doc["max_std"]),
        )


@dataclass(frozen=True)
class RegretRecord:
    n: int
    lam: int
    baseline: BaselineSpec
    baseline_runtime: float
    optimal_runtime: float

    @property
    def regret(self) -> float:
        if math.isinf(self.baseline_runtime):
            return math.inf
        return self.baseline_runtime / self.optimal_runtime


def run_seed(base_seed: int, n: int, lam: int, run: int) -> int:
    """Seed of one optimizer run, a pure function of its grid coordinates."""
    return int(np.random.SeedSequence([base_seed, n, lam, run]).generate_state(1, dtype=np.uint32)[0])


def summarize_cell(n: int, lam: int, runs: list[OptimizationRun]) -> CellResult:
    runtimes = [expected_runtime(n, lam, r.best_distribution) for r in runs]
    best = min(runtimes)
    good = [i for i, rt in enumerate(runtimes) if rt <= best * GOOD_RUN_FACTOR]
    ws = np.array([runs[i].best_distribution.weights[1:] for i in good])
    std = ws.std(axis=0)
    return CellResult(
        n=n,
        lam=lam,
        runs=runs,
        best_runtime=best,
        good_runs=good,
        per_k_mean=ws.mean(axis=0),
        per_k_std=std,
        max_std=float(std.max()),
    )


def _one_run(args) -> OptimizationRun:
    n, lam, config = args
    return optimize(n, lam, config)


def run_grid(grid: GridSpec, config: CmaConfig | None = None, workers: int = 1) -> list[CellResult]:
    """Run the optimizer ``runs_per_cell`` times on every cell.

    ``config`` is a template; its seed is replaced per run.  Results do not
    depend on ``workers``.
    """
    config = config or CmaConfig()
    jobs = [
        (n, lam, replace(config, seed=run_seed(grid.base_seed, n, lam, r)))
        for n, lam in grid.cells()
        for r in range(grid.runs_per_cell)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_one_run, jobs))
    else:
        runs = [_one_run(j) for j in jobs]

    cells = []
    k = grid.runs_per_cell
    for c, (n, lam) in enumerate(grid.cells()):
        cell = summarize_cell(n, lam, runs[c * k:(c + 1) * k])
        log.info("n=%d lambda=%d best=%.12g good=%d/%d max_std=%.3g",
                 n, lam, cell.best_runtime, len(cell.good_runs), k, cell.max_std)
        cells.append(cell)
    return cells


def count_support(d: StrengthDistribution, threshold: float = DEFAULT_SUPPORT_THRESHOLD) -> int:
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    return int(np.count_nonzero(d.weights[1:] > threshold))


def compare_baselines(
    n: int,
    lambdas: Iterable[int],
    specs: Sequence[BaselineSpec],
    optimal: Mapping[int, float],
) -> list[RegretRecord]:
    records = []
    for lam in lambdas:
        if lam not in optimal:
            raise ValueError(f"no optimal runtime for lambda={lam}")
        for spec in specs:
            rt = expected_runtime(n, lam, make_baseline(spec, n))
            records.append(RegretRecord(n, lam, spec, rt, float(optimal[lam])))
    return records


def published_optimum(n: int, lam: int) -> float:
    try:
        return PUBLISHED_RUNTIMES[(n, lam)]
    except KeyError:
        raise ValueError(f"no published optimum for n={n}, lambda={lam}") from None


# --- persistence -----------------------------------------------------------

def fmt(x: float) -> str:
    return format(float(x), ".17g")


def cell_filename(n: int, lam: int) -> str:
    return f"cell_n{n}_lambda{lam}.json"


def write_cell(cell: CellResult, base_seed: int, path: Path) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(cell.to_dict(base_seed), indent=1) + "\n")
    tmp.replace(path)


def read_cell(path: Path) -> CellResult:
    return CellResult.from_dict(json.loads(Path(path).read_text()))


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def write_runtimes_csv(cells: Sequence[CellResult], path: Path) -> None:
    _write_csv(path, ("n", "lambda", "best_runtime"),
               ((c.n, c.lam, fmt(c.best_runtime)) for c in cells))


def write_support_csv(cells: Sequence[CellResult], path: Path,
                      threshold: float = DEFAULT_SUPPORT_THRESHOLD) -> None:
    _write_csv(path, ("n", "lambda", "support_count"),
               ((c.n, c.lam, count_support(c.mean_distribution(), threshold)) for c in cells))


def write_regret_csv(records: Sequence[RegretRecord], path: Path) -> None:
    _write_csv(path, ("n", "lambda", "baseline", "runtime", "regret"),
               ((r.n, r.lam, r.baseline.label, fmt(r.baseline_runtime), fmt(r.regret)) for r in records))


def read_runtimes_csv(path: Path) -> dict[tuple[int, int], float]:
    with open(path, newline="") as fh:
        return {(int(r["n"]), int(r["lambda"])): float(r["best_runtime"]) for r in csv.DictReader(fh)}


def write_grid(cells: Sequence[CellResult], grid: GridSpec, out_dir: Path,
               threshold: float = DEFAULT_SUPPORT_THRESHOLD) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for c in cells:
        write_cell(c, grid.base_seed, out_dir / cell_filename(c.n, c.lam))
    write_runtimes_csv(cells, out_dir / "runtimes.csv")
    write_support_csv(cells, out_dir / "support.csv", threshold)
