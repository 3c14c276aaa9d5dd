import math

import numpy as np
import pytest

from mutstrength.dp import StrengthDistribution, expected_runtime
from mutstrength.operators import parse_baseline, make_baseline
from mutstrength.simulate import (
    TIE_FIRST,
    TIE_LAST,
    GenerationCapExceeded,
    simulate_runtime,
)


def test_rls_n3_mean():
    est = simulate_runtime(3, 1, StrengthDistribution.one_point(3, 1), 10**6, seed=1)
    assert abs(est.mean - 3.5) < 3 * est.std_error
    assert est.trials == 10**6


def test_fast_ga_matches_dp():
    d = make_baseline(parse_baseline("fastga:1.5"), 8)
    est = simulate_runtime(8, 8, d, 10**5, seed=2)
    assert abs(est.mean - expected_runtime(8, 8, d)) < 3 * est.std_error


def test_initial_hits_follow_uniform_start():
    n, trials = 4, 200_000
    est = simulate_runtime(n, 2, StrengthDistribution.normalized([0, 2, 1, 1, 1]), trials, seed=5)
    p = 2.0 ** -n
    assert abs(est.hits_at_init / trials - p) < 3 * math.sqrt(p * (1 - p) / trials)


def test_single_bit_problem():
    # lucky start: 0 generations, otherwise the first flip wins
    est = simulate_runtime(1, 3, StrengthDistribution.one_point(1, 1), 10_000, seed=0)
    assert est.mean == pytest.approx(1 - est.hits_at_init / 10_000)
    assert abs(est.mean - 0.5) < 3 * est.std_error


def test_tie_breaking_does_not_matter():
    d = StrengthDistribution.normalized([0, 4, 2, 1, 1, 1])
    a = simulate_runtime(5, 4, d, 100_000, seed=9, tie_rule=TIE_FIRST)
    b = simulate_runtime(5, 4, d, 100_000, seed=9, tie_rule=TIE_LAST)
    assert abs(a.mean - b.mean) < 3 * math.hypot(a.std_error, b.std_error)


def test_reproducible():
    d = StrengthDistribution.one_point(6, 1)
    a = simulate_runtime(6, 2, d, 500, seed=4)
    b = simulate_runtime(6, 2, d, 500, seed=4)
    assert a == b


def test_generation_cap_names_trial():
    d = StrengthDistribution.one_point(4, 4)
    with pytest.raises(GenerationCapExceeded) as e:
        simulate_runtime(4, 1, d, 50, seed=0, cap=100)
    assert "trial" in str(e.value)


def test_rejects_bad_arguments():
    with pytest.raises(ValueError):
        simulate_runtime(3, 1, StrengthDistribution.one_point(4, 1), 10, seed=0)
    with pytest.raises(ValueError):
        simulate_runtime(3, 1, StrengthDistribution.one_point(3, 1), 0, seed=0)
