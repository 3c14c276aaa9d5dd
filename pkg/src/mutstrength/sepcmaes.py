"""Separable CMA-ES over the simplex of mutation strength distributions.

A genotype has one coordinate per strength ``1..n`` (strength 0 never helps
on a noiseless problem and is fixed at zero).  Before evaluation it is
clamped to the unit box and rescaled to sum to one; the genotype itself is
left untouched.  Points outside the box pay the distance to their repaired
image on top of the runtime, so the search is pulled back into ``[0, 1]^n``.

The covariance is kept diagonal and adapted with the rank-one and rank-mu
updates, using the separable learning rates ``(n + 1.5) / 3`` times the
full-covariance defaults.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dp import StrengthDistribution, batch_expected_runtime_raw, expected_runtime

TERMINATIONS = ("flat_fitness", "tiny_step", "tiny_move", "budget")


def penalty_value(n: int) -> float:
    """Finite fitness assigned to degenerate or never-finishing candidates."""
    return 10.0 * n * 2.0 ** n


@dataclass
class CmaConfig:
    population_size: int = 10
    initial_step: float = 1.0
    budget: Optional[int] = None  # None: 100 * n**2
    seed: int = 0
    tol_fun: float = 1e-15
    tol_x: float = 1e-14
    tol_sigma: float = 1e-14

    def __post_init__(self):
        if self.population_size < 4:
            raise ValueError("population_size must be >= 4")
        if not self.initial_step > 0:
            raise ValueError("initial_step must be positive")
        if self.budget is not None and self.budget < self.population_size:
            raise ValueError("budget must be at least one population")
        if min(self.tol_fun, self.tol_x, self.tol_sigma) <= 0:
            raise ValueError("tolerances must be positive")

    def budget_for(self, n: int) -> int:
        return 100 * n * n if self.budget is None else self.budget


@dataclass
class CmaState:
    mean: np.ndarray
    diag_var: np.ndarray
    sigma: float
    path_sigma: np.ndarray
    path_c: np.ndarray
    generation: int = 0
    evals: int = 0


@dataclass
class OptimizationRun:
    n: int
    lam: int
    seed: int
    best_genotype: np.ndarray = field(repr=False)
    best_distribution: StrengthDistribution = field(repr=False)
    best_runtime: float
    evals_used: int
    termination: str
    history: list = field(default_factory=list, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "seed": int(self.seed),
            "runtime": float(self.best_runtime),
            "weights": [float(x) for x in self.best_distribution.weights],
            "genotype": [float(x) for x in self.best_genotype],
            "evals": int(self.evals_used),
            "termination": self.termination,
        }

    @classmethod
    def from_dict(cls, doc: dict, n: int, lam: int) -> "OptimizationRun":
        d = StrengthDistribution(n, np.asarray(doc["weights"], dtype=np.float64))
        return cls(
            n=n,
            lam=lam,
            seed=int(doc["seed"]),
            best_genotype=np.asarray(doc.get("genotype", doc["weights"][1:]), dtype=np.float64),
            best_distribution=d,
            best_runtime=float(doc["runtime"]),
            evals_used=int(doc["evals"]),
            termination=doc["termination"],
        )


def normalize_candidate(x) -> Optional[StrengthDistribution]:
    """Clamp to [0, 1] and rescale; ``None`` flags an all-zero candidate."""
    x = np.asarray(x, dtype=np.float64)
    y = np.clip(x, 0.0, 1.0)
    total = math.fsum(y)
    if not total > 0:
        return None
    w = np.empty(len(y) + 1)
    w[0] = 0.0
    w[1:] = y / total
    return StrengthDistribution(len(y), w)


def _normalize_rows(xs: np.ndarray):
    y = np.clip(xs, 0.0, 1.0)
    totals = np.array([math.fsum(row) for row in y])
    ok = totals > 0
    w = np.zeros((len(xs), xs.shape[1] + 1))
    w[ok, 1:] = y[ok] / totals[ok, None]
    return w, ok, np.abs(xs - y).sum(axis=1)


class SepCMAES:
    """Ask/tell separable CMA-ES minimizing a batch objective."""

    def __init__(self, mean, sigma: float, popsize: int, rng: np.random.Generator):
        dim = len(mean)
        self.dim = dim
        self.popsize = popsize
        self.rng = rng
        mu = popsize // 2
        raw = math.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
        self.weights = raw / raw.sum()
        self.mu = mu
        self.mueff = 1.0 / np.sum(self.weights ** 2)
        mueff = self.mueff

        self.cs = (mueff + 2.0) / (dim + mueff + 5.0)
        self.damps = 1.0 + 2.0 * max(0.0, math.sqrt((mueff - 1.0) / (dim + 1.0)) - 1.0) + self.cs
        self.cc = (4.0 + mueff / dim) / (dim + 4.0 + 2.0 * mueff / dim)
        c1 = 2.0 / ((dim + 1.3) ** 2 + mueff)
        cmu = 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((dim + 2.0) ** 2 + mueff)
        scale = (dim + 1.5) / 3.0
        self.c1 = min(1.0, c1 * scale)
        self.cmu = min(1.0 - self.c1, cmu * scale)
        self.chi_n = math.sqrt(dim) * (1.0 - 1.0 / (4.0 * dim) + 1.0 / (21.0 * dim * dim))

        self.state = CmaState(
            mean=np.array(mean, dtype=np.float64),
            diag_var=np.ones(dim),
            sigma=float(sigma),
            path_sigma=np.zeros(dim),
            path_c=np.zeros(dim),
        )
        self._z = None

    def ask(self) -> np.ndarray:
        st = self.state
        self._z = self.rng.standard_normal((self.popsize, self.dim))
        return st.mean + st.sigma * np.sqrt(st.diag_var) * self._z

    def tell(self, fitness: np.ndarray) -> np.ndarray:
        """Update from the fitness of the last ``ask``; returns the mean shift."""
        st = self.state
        order = np.argsort(fitness, kind="stable")[: self.mu]
        z_sel = self._z[order]
        std = np.sqrt(st.diag_var)
        z_w = self.weights @ z_sel
        y_w = std * z_w
        old_mean = st.mean
        st.mean = old_mean + st.sigma * y_w

        st.path_sigma = (1 - self.cs) * st.path_sigma + math.sqrt(self.cs * (2 - self.cs) * self.mueff) * z_w
        ps_norm = float(np.linalg.norm(st.path_sigma))
        decay = 1.0 - (1.0 - self.cs) ** (2 * (st.generation + 1))
        hsig = ps_norm / math.sqrt(decay) / self.chi_n < 1.4 + 2.0 / (self.dim + 1)
        st.path_c = (1 - self.cc) * st.path_c
        if hsig:
            st.path_c = st.path_c + math.sqrt(self.cc * (2 - self.cc) * self.mueff) * y_w

        y_sel = std * z_sel
        rank_mu = self.weights @ (y_sel ** 2)
        loss = 0.0 if hsig else self.cc * (2 - self.cc)
        st.diag_var = (
            (1 - self.c1 - self.cmu) * st.diag_var
            + self.c1 * (st.path_c ** 2 + loss * st.diag_var)
            + self.cmu * rank_mu
        )
        st.sigma *= math.exp((self.cs / self.damps) * (ps_norm / self.chi_n - 1.0))
        st.generation += 1
        st.evals += self.popsize
        return st.mean - old_mean


def optimize(n: int, lam: int, config: CmaConfig | None = None, record_history: bool = False) -> OptimizationRun:
    """Search a strength distribution minimizing the expected runtime."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if int(lam) != lam or lam < 1:
        raise ValueError(f"lambda must be a positive integer, got {lam}")
    config = config or CmaConfig()
    budget = config.budget_for(n)
    rng = np.random.default_rng(config.seed)
    es = SepCMAES(rng.uniform(0.0, 1.0, n), config.initial_step, config.population_size, rng)
    pen = penalty_value(n)

    best_x = None
    best_w = None
    best_rt = math.inf
    flat_limit = 10 + math.ceil(30 * n / config.population_size)
    flat_count = 0
    history = []
    termination = "budget"

    while es.state.evals + config.population_size <= budget:
        xs = es.ask()
        w, ok, outside = _normalize_rows(xs)
        rt = np.full(len(xs), math.inf)
        if ok.any():
            rt[ok] = batch_expected_runtime_raw(n, lam, w[ok])
        fit = np.where(np.isfinite(rt), rt, pen) + outside

        i = int(np.argmin(rt))
        if rt[i] < best_rt:
            best_rt, best_x, best_w = float(rt[i]), xs[i].copy(), w[i].copy()
        if record_history:
            history.append(best_rt)

        move = es.tell(fit)
        st = es.state

        spread = float(fit.max() - fit.min())
        if spread < config.tol_fun * (1.0 + abs(float(fit.min()))):
            flat_count += 1
        else:
            flat_count = 0
        if flat_count >= flat_limit:
            termination = "flat_fitness"
            break
        if st.sigma * float(np.sqrt(st.diag_var.max())) < config.tol_sigma:
            termination = "tiny_step"
            break
        if np.all(np.abs(move) < config.tol_x):
            termination = "tiny_move"
            break

    if best_w is None:
        # every candidate was degenerate; fall back to the mean's image or RLS
        d = normalize_candidate(es.state.mean) or StrengthDistribution.one_point(n, 1)
        best_x = es.state.mean.copy()
    else:
        d = StrengthDistribution.normalized(best_w, n)
    return OptimizationRun(
        n=n,
        lam=int(lam),
        seed=config.seed,
        best_genotype=best_x,
        best_distribution=d,
        best_runtime=expected_runtime(n, lam, d),
        evals_used=es.state.evals,
        termination=termination,
        history=history,
    )
