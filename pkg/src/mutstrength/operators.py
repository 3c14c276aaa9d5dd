"""Mutation strength distributions of the common unbiased operators."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import binom

from .dp import StrengthDistribution

KINDS = (
    "one_point",
    "sbm",
    "sbm_resample",
    "sbm_shift",
    "fast_ga",
    "power_law",
    "cond_binomial",
)

# CLI token -> kind
_TOKENS = {
    "onepoint": "one_point",
    "sbm": "sbm",
    "sbm>0": "sbm_resample",
    "sbm0to1": "sbm_shift",
    "fastga": "fast_ga",
    "pow": "power_law",
    "binpos": "cond_binomial",
}
_LABELS = {v: k for k, v in _TOKENS.items()}


@dataclass(frozen=True)
class BaselineSpec:
    """A named operator family with its parameter.

    ``param`` is the strength for ``one_point``, the per-bit rate ``p`` for
    the binomial kinds (``None`` meaning ``1/n``), and the exponent ``beta``
    for the power-law kinds.
    """

    kind: str
    param: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        p = self.param
        if self.kind == "one_point":
            if p is None or int(p) != p or p < 1:
                raise ValueError(f"one_point needs a strength >= 1, got {p!r}")
            object.__setattr__(self, "param", int(p))
        elif self.kind in ("fast_ga", "power_law"):
            if p is None or not p > 1:
                raise ValueError(f"{self.kind} needs beta > 1, got {p!r}")
        elif p is not None and not 0 < p <= 1:
            raise ValueError(f"{self.kind} needs p in (0, 1], got {p!r}")

    @property
    def label(self) -> str:
        if self.kind == "one_point" and self.param == 1:
            return "rls"
        if self.param is None:
            return f"{_LABELS[self.kind]}:auto"
        return f"{_LABELS[self.kind]}:{self.param:g}"


def parse_baseline(text: str) -> BaselineSpec:
    """Parse ``rls``, ``onepoint:k``, ``sbm:p``, ``sbm>0:p``, ``sbm0to1:p``,
    ``fastga:beta``, ``pow:beta`` or ``binpos:p`` (``auto`` = 1/n)."""
    text = text.strip()
    if text.lower() == "rls":
        return BaselineSpec("one_point", 1)
    token, sep, value = text.partition(":")
    kind = _TOKENS.get(token.lower())
    if kind is None or not sep:
        raise ValueError(f"cannot parse operator {text!r}")
    if value.lower() == "auto":
        if kind in ("one_point", "fast_ga", "power_law"):
            raise ValueError(f"'auto' is only valid for binomial operators: {text!r}")
        return BaselineSpec(kind, None)
    try:
        num = float(value)
    except ValueError:
        raise ValueError(f"bad parameter in {text!r}") from None
    return BaselineSpec(kind, num)


def _binomial(n: int, p: float) -> np.ndarray:
    return binom.pmf(np.arange(n + 1), n, p)


def _power(n: int, beta: float, top: int) -> np.ndarray:
    w = np.zeros(n + 1)
    k = np.arange(1, top + 1, dtype=np.float64)
    w[1:top + 1] = k ** -beta
    return w / math.fsum(w)


def make_baseline(spec: BaselineSpec, n: int) -> StrengthDistribution:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    kind = spec.kind
    if kind == "one_point":
        if spec.param > n:
            raise ValueError(f"strength {spec.param} exceeds n={n}")
        return StrengthDistribution.one_point(n, spec.param)
    if kind in ("fast_ga", "power_law"):
        top = n // 2 if kind == "fast_ga" else n
        if top < 1:
            raise ValueError(f"fast_ga needs n >= 2, got n={n}")
        return StrengthDistribution(n, _power(n, spec.param, top))

    p = 1.0 / n if spec.param is None else spec.param
    w = _binomial(n, p)
    if kind == "sbm":
        w = w / math.fsum(w)
    elif kind == "sbm_shift":
        w[1] += w[0]
        w[0] = 0.0
        w = w / math.fsum(w)
    else:  # sbm_resample, cond_binomial
        w[0] = 0.0
        w = w / math.fsum(w)
    return StrengthDistribution(n, w)
