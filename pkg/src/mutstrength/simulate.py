"""Monte Carlo runs of the (1+lambda) EA on explicit OneMax bit strings.

Used as an independent check on the exact runtimes of :mod:`mutstrength.dp`.
Each trial gets its own random stream derived from ``(seed, trial)``, so an
estimate does not depend on how trials are scheduled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .dp import StrengthDistribution

TIE_FIRST = 0
TIE_LAST = 1


class GenerationCapExceeded(RuntimeError):
    def __init__(self, trial: int, cap: int):
        super().__init__(f"trial {trial} did not reach the optimum within {cap} generations")
        self.trial = trial
        self.cap = cap


@dataclass(frozen=True)
class SimulationEstimate:
    trials: int
    mean: float
    std_error: float
    hits_at_init: int


@numba.njit(cache=True)
def _run_trial(n, lam, cdf, cap, tie_rule, x, idx, best_pos):
    fit = 0
    for p in range(n):
        x[p] = 1 if np.random.random() < 0.5 else 0
        fit += x[p]
    if fit == n:
        return 0
    gens = 0
    while True:
        gens += 1
        if gens > cap:
            return -1
        best_fit = -1
        best_k = 0
        for _ in range(lam):
            u = np.random.random()
            k = np.searchsorted(cdf, u, side="right")
            if k > n:
                k = n
            # partial Fisher-Yates: idx[:k] becomes a uniform k-subset
            delta = 0
            for a in range(k):
                b = a + int(np.random.random() * (n - a))
                if b >= n:
                    b = n - 1
                tmp = idx[a]
                idx[a] = idx[b]
                idx[b] = tmp
                delta += 1 - 2 * x[idx[a]]
            child = fit + delta
            if child > best_fit or (tie_rule == 1 and child == best_fit):
                best_fit = child
                best_k = k
                for a in range(k):
                    best_pos[a] = idx[a]
        if best_fit == n:
            return gens
        if best_fit >= fit:
            for a in range(best_k):
                x[best_pos[a]] = 1 - x[best_pos[a]]
            fit = best_fit


@numba.njit(cache=True)
def _run_trials(n, lam, cdf, cap, tie_rule, seeds, out):
    x = np.empty(n, dtype=np.int64)
    idx = np.arange(n)
    best_pos = np.empty(n, dtype=np.int64)
    for t in range(len(seeds)):
        np.random.seed(seeds[t])
        for p in range(n):
            idx[p] = p
        g = _run_trial(n, lam, cdf, cap, tie_rule, x, idx, best_pos)
        if g < 0:
            return t
        out[t] = g
    return -1


def trial_seeds(seed: int, trials: int) -> np.ndarray:
    return np.random.SeedSequence(seed).generate_state(trials, dtype=np.uint32)


def simulate_runtime(
    n: int,
    lam: int,
    d: StrengthDistribution,
    trials: int,
    seed: int,
    *,
    cap: int | None = None,
    tie_rule: int = TIE_FIRST,
) -> SimulationEstimate:
    """Estimate the expected number of generations by direct simulation.

    ``tie_rule`` picks the first (``TIE_FIRST``) or last (``TIE_LAST``) of
    several equally fit best offspring.
    """
    if d.n != n:
        raise ValueError(f"distribution is for n={d.n}, not n={n}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if int(lam) != lam or lam < 1:
        raise ValueError(f"lambda must be a positive integer, got {lam}")
    cap = 10_000_000 * n if cap is None else int(cap)
    cdf = np.cumsum(d.weights)
    cdf[-1] = 1.0
    out = np.zeros(trials, dtype=np.int64)
    failed = _run_trials(n, int(lam), cdf, cap, int(tie_rule), trial_seeds(seed, trials).astype(np.int64), out)
    if failed >= 0:
        raise GenerationCapExceeded(int(failed), cap)
    vals = out.astype(np.float64)
    std_error = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return SimulationEstimate(
        trials=trials,
        mean=float(vals.mean()),
        std_error=std_error,
        hits_at_init=int(np.count_nonzero(out == 0)),
    )
