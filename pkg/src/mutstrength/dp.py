"""Exact expected runtimes of the (1+lambda) EA with a static mutation
strength distribution on OneMax.

The state of the chain is the parent fitness ``f``.  For every ``f`` the
offspring-fitness probabilities for each mutation strength are collected in
a transition kernel; mixing it with the strength distribution gives the
single-offspring level distribution, raising its CDF to the power lambda
gives the best-of-lambda distribution, and the expected remaining number of
generations follows by backward induction from ``f = n``.

The public step functions (``build_kernel``, ``offspring_distribution``,
``generation_distribution``) are plain numpy.  ``runtime_profile`` and the
batch evaluators run the same recurrence in a compiled sweep.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numba
import numpy as np
from scipy.special import gammaln

SUM_TOL = 1e-12
# 1 - Q_f below this is treated as "no improving transition"
ABSORB_TOL = 1e-15


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class StrengthDistribution:
    """Probability vector over mutation strengths ``0..n``."""

    n: int
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        w = _frozen(self.weights)
        if w.shape != (self.n + 1,):
            raise ValueError(f"expected {self.n + 1} weights, got shape {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and non-negative")
        total = math.fsum(w)
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"weights sum to {total!r}, not 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def normalized(cls, weights: Sequence[float], n: int | None = None) -> "StrengthDistribution":
        w = np.asarray(weights, dtype=np.float64)
        if n is None:
            n = len(w) - 1
        total = math.fsum(w)
        if not total > 0:
            raise ValueError("weights must have positive mass")
        return cls(n, w / total)

    @classmethod
    def one_point(cls, n: int, k: int) -> "StrengthDistribution":
        if not 0 <= k <= n:
            raise ValueError(f"strength {k} outside 0..{n}")
        w = np.zeros(n + 1)
        w[k] = 1.0
        return cls(n, w)

    def __eq__(self, other):
        if not isinstance(other, StrengthDistribution):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash((self.n, self.weights.tobytes()))

    def to_dict(self) -> dict:
        return {"n": self.n, "weights": [float(x) for x in self.weights]}


@dataclass(frozen=True)
class TransitionKernel:
    """``s[k, g]``: probability that flipping ``k`` distinct random bits of a
    fitness-``f`` parent gives fitness ``g``."""

    n: int
    f: int
    s: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class LevelDistribution:
    """Distribution of the fitness reached from level ``f``.

    ``q`` has length ``n + 1``; entries below ``f`` are zero because
    non-improving outcomes are counted at ``f`` itself.
    """

    f: int
    q: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.q) - 1

    def __getitem__(self, g: int) -> float:
        return float(self.q[g])


@dataclass(frozen=True)
class RuntimeProfile:
    n: int
    lam: int
    t: np.ndarray = field(repr=False)
    expected: float


def _check_dims(n: int, f: int) -> None:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0 <= f <= n:
        raise ValueError(f"fitness {f} outside 0..{n}")


def _check_lambda(lam: int) -> None:
    if int(lam) != lam or lam < 1:
        raise ValueError(f"lambda must be a positive integer, got {lam}")


@lru_cache(maxsize=None)
def _log_factorials(n: int) -> np.ndarray:
    lf = gammaln(np.arange(n + 1, dtype=np.float64) + 1.0)
    lf.flags.writeable = False
    return lf


def build_kernel(n: int, f: int) -> TransitionKernel:
    _check_dims(n, f)
    lf = _log_factorials(n)
    k = np.arange(n + 1)[:, None]
    g = np.arange(n + 1)[None, :]
    twice_j = k + g - f  # zeros turned into ones, doubled
    twice_i = k - g + f  # ones turned into zeros, doubled
    ok = (twice_j % 2 == 0) & (twice_j >= 0) & (twice_i >= 0)
    j = np.where(ok, twice_j // 2, 0)
    i = np.where(ok, twice_i // 2, 0)
    ok &= (j <= n - f) & (i <= f)
    j = np.where(ok, j, 0)
    i = np.where(ok, i, 0)
    log_p = (
        (lf[n - f] - lf[j] - lf[n - f - j])
        + (lf[f] - lf[i] - lf[f - i])
        - (lf[n] - lf[k] - lf[n - k])
    )
    s = np.where(ok, np.exp(log_p), 0.0)
    s.flags.writeable = False
    return TransitionKernel(n, f, s)


def offspring_distribution(kernel: TransitionKernel, d: StrengthDistribution) -> LevelDistribution:
    if kernel.n != d.n:
        raise ValueError(f"kernel is for n={kernel.n}, distribution for n={d.n}")
    n, f = kernel.n, kernel.f
    q = np.zeros(n + 1)
    for k in range(1, n + 1):
        q[f + 1:] += d.weights[k] * kernel.s[k, f + 1:]
    q[f] = 1.0 - math.fsum(q[f + 1:])
    return LevelDistribution(f, q)


def generation_distribution(q1: LevelDistribution, lam: int) -> LevelDistribution:
    """Fitness distribution of the elitist best of ``lam`` offspring."""
    _check_lambda(lam)
    f = q1.f
    if lam == 1:
        return LevelDistribution(f, q1.q.copy())
    # cumulative mass of levels f..g, clamped against rounding
    cum = np.clip(np.cumsum(q1.q[f:]), 0.0, 1.0)
    powered = cum ** lam
    q = np.zeros_like(q1.q)
    q[f] = powered[0]
    q[f + 1:] = np.diff(powered)
    return LevelDistribution(f, q)


def init_weights(n: int) -> np.ndarray:
    """Binomial(n, 1/2) probabilities of the initial fitness."""
    lf = _log_factorials(n)
    f = np.arange(n + 1)
    return np.exp(lf[n] - lf[f] - lf[n - f] - n * math.log(2.0))


@numba.njit(cache=True)
def _fill_kernel(n, f, lf, s):
    for k in range(n + 1):
        base = lf[n] - lf[k] - lf[n - k]
        for g in range(n + 1):
            s[k, g] = 0.0
        for i in range(0, min(k, f) + 1):
            j = k - i
            if j > n - f:
                continue
            lp = (lf[n - f] - lf[j] - lf[n - f - j]) + (lf[f] - lf[i] - lf[f - i]) - base
            s[k, f + j - i] = math.exp(lp)


@numba.njit(cache=True)
def _sweep(n, lam, w, lf, absorb_tol):
    """Backward induction for every row of ``w``; returns T of shape (m, n+1)."""
    m = w.shape[0]
    t = np.zeros((m, n + 1))
    s = np.empty((n + 1, n + 1))
    q1 = np.empty(n + 1)
    ql = np.empty(n + 1)
    for f in range(n - 1, -1, -1):
        _fill_kernel(n, f, lf, s)
        for c in range(m):
            imp = 0.0
            for g in range(f + 1, n + 1):
                acc = 0.0
                for k in range(1, n + 1):
                    acc += w[c, k] * s[k, g]
                q1[g] = acc
                imp += acc
            q1[f] = 1.0 - imp
            if lam == 1:
                for g in range(f, n + 1):
                    ql[g] = q1[g]
            else:
                cum = q1[f]
                if cum < 0.0:
                    cum = 0.0
                elif cum > 1.0:
                    cum = 1.0
                prev = cum ** lam
                ql[f] = prev
                for g in range(f + 1, n + 1):
                    cum += q1[g]
                    cc = cum
                    if cc < 0.0:
                        cc = 0.0
                    elif cc > 1.0:
                        cc = 1.0
                    cur = cc ** lam
                    ql[g] = cur - prev
                    prev = cur
            denom = 1.0 - ql[f]
            if denom < absorb_tol:
                t[c, f] = np.inf
                continue
            num = 1.0
            for g in range(f + 1, n + 1):
                if ql[g] > 0.0:
                    num += ql[g] * t[c, g]
            t[c, f] = num / denom
    return t


def _weight_matrix(n: int, ds: Sequence[StrengthDistribution]) -> np.ndarray:
    for d in ds:
        if d.n != n:
            raise ValueError(f"distribution for n={d.n} in a batch for n={n}")
    if not ds:
        return np.zeros((0, n + 1))
    return np.ascontiguousarray(np.stack([d.weights for d in ds]))


def _expected(n: int, t: np.ndarray) -> np.ndarray:
    iw = init_weights(n)
    out = np.zeros(t.shape[0])
    for f in range(n + 1):
        col = t[:, f]
        # inf * 0 never occurs: init weights are strictly positive
        out += iw[f] * col
    return out


def _profiles(n: int, lam: int, w: np.ndarray) -> np.ndarray:
    _check_lambda(lam)
    return _sweep(n, int(lam), w, _log_factorials(n), ABSORB_TOL)


def runtime_profile(n: int, lam: int, d: StrengthDistribution) -> RuntimeProfile:
    if d.n != n:
        raise ValueError(f"distribution is for n={d.n}, not n={n}")
    t = _profiles(n, lam, _weight_matrix(n, [d]))
    t_row = _frozen(t[0])
    return RuntimeProfile(n, int(lam), t_row, float(_expected(n, t)[0]))


def expected_runtime(n: int, lam: int, d: StrengthDistribution) -> float:
    return runtime_profile(n, lam, d).expected


def batch_expected_runtime(n: int, lam: int, ds: Sequence[StrengthDistribution]) -> list[float]:
    """Expected runtimes of several distributions sharing each kernel.

    Every candidate goes through exactly the same floating-point operations
    as a single ``expected_runtime`` call, so results are bit-identical.
    """
    w = _weight_matrix(n, ds)
    if len(w) == 0:
        return []
    return [float(x) for x in _expected(n, _profiles(n, lam, w))]


def batch_expected_runtime_raw(n: int, lam: int, w: np.ndarray) -> np.ndarray:
    """Same as ``batch_expected_runtime`` for an (m, n+1) weight matrix whose
    rows are already valid distributions (no validation)."""
    w = np.ascontiguousarray(w, dtype=np.float64)
    return _expected(n, _profiles(n, lam, w))
