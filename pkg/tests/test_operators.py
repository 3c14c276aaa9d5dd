import math

import numpy as np
import pytest
from scipy.stats import binom

from mutstrength.operators import BaselineSpec, make_baseline, parse_baseline


def test_cond_binomial_n3():
    w = make_baseline(parse_baseline("binpos:0.5"), 3).weights
    assert np.allclose(w, [0, 3 / 7, 3 / 7, 1 / 7], atol=1e-15)
    assert np.allclose(w, [0, 0.42857, 0.42857, 0.14286], atol=5e-6)


@pytest.mark.parametrize("n", [1, 4, 17])
def test_rls_is_one_point(n):
    w = make_baseline(parse_baseline("rls"), n).weights
    assert w[1] == 1.0 and w.sum() == 1.0


def test_fast_ga_n10():
    w = make_baseline(parse_baseline("fastga:1.5"), 10).weights
    norm = 1 + 2 ** -1.5 + 3 ** -1.5 + 4 ** -1.5 + 5 ** -1.5
    expected = [0] + [k ** -1.5 / norm for k in range(1, 6)] + [0] * 5
    assert np.allclose(w, expected, rtol=1e-14, atol=0)
    assert np.all(np.diff(w[1:6]) < 0)


def test_fast_ga_odd_n_floors():
    w = make_baseline(BaselineSpec("fast_ga", 1.3), 7).weights
    assert np.count_nonzero(w) == 3 and w[3] > 0


def test_power_law_full_support():
    w = make_baseline(parse_baseline("pow:1.7"), 12).weights
    assert w[0] == 0 and np.all(w[1:] > 0)
    assert np.allclose(w[1:] / w[1], np.arange(1, 13) ** -1.7)


@pytest.mark.parametrize("n, p", [(5, 0.2), (10, 0.1), (31, 1 / 31), (6, 1.0)])
def test_sbm_family(n, p):
    ref = binom.pmf(np.arange(n + 1), n, p)
    plain = make_baseline(BaselineSpec("sbm", p), n).weights
    resample = make_baseline(BaselineSpec("sbm_resample", p), n).weights
    shift = make_baseline(BaselineSpec("sbm_shift", p), n).weights
    assert np.allclose(plain, ref, atol=1e-15)
    assert resample[0] == 0
    assert np.allclose(resample[1:], ref[1:] / (1 - (1 - p) ** n), rtol=1e-12)
    assert shift[0] == 0
    assert shift[1] == pytest.approx(ref[0] + ref[1], abs=1e-15)
    assert np.allclose(shift[2:], ref[2:], atol=1e-15)


def test_auto_rate_is_one_over_n():
    assert np.array_equal(make_baseline(parse_baseline("sbm:auto"), 20).weights,
                          make_baseline(BaselineSpec("sbm", 1 / 20), 20).weights)


def test_cond_binomial_is_uniform_over_other_strings():
    n = 9
    w = make_baseline(BaselineSpec("cond_binomial", 0.5), n).weights
    ref = [math.comb(n, k) / (2 ** n - 1) for k in range(1, n + 1)]
    assert np.allclose(w[1:], ref, rtol=1e-13)


@pytest.mark.parametrize("text", ["rls", "onepoint:3", "sbm:0.1", "sbm>0:auto", "sbm0to1:0.25",
                                  "fastga:1.5", "pow:1.3", "binpos:0.5"])
def test_every_kind_builds_valid_distribution(text):
    d = make_baseline(parse_baseline(text), 8)
    assert np.all(d.weights >= 0)
    assert abs(math.fsum(d.weights) - 1) < 1e-12


@pytest.mark.parametrize("text", ["", "foo", "sbm", "sbm:0", "sbm:1.5", "fastga:1.0", "pow:auto",
                                  "onepoint:0", "onepoint:1.5", "binpos:x"])
def test_bad_specs_rejected(text):
    with pytest.raises(ValueError):
        parse_baseline(text)


def test_one_point_beyond_n_rejected():
    with pytest.raises(ValueError):
        make_baseline(parse_baseline("onepoint:5"), 4)


def test_labels_round_trip():
    for text in ["rls", "onepoint:3", "sbm:auto", "sbm>0:auto", "sbm0to1:0.25", "fastga:1.5", "pow:1.3", "binpos:0.5"]:
        spec = parse_baseline(text)
        assert parse_baseline(spec.label) == spec
