"""Rate families g, their inverses, and the water-filling level."""

import math

import numpy as np
import pytest

from ehsim.rate import (
    Linear,
    Log2,
    LogE,
    RateFunction,
    ShannonHalfLog,
    g_eval,
    g_inverse,
    rf_is_strictly_concave,
    waterfill_level,
)
from ehsim.stochastic import DiscretePmf

ALL_RFS = [
    Linear(10.0),
    Linear(1.0),
    LogE(1.0),
    LogE(0.5),
    Log2(1.0),
    Log2(3.0),
    ShannonHalfLog(1.0),
    ShannonHalfLog(2.0),
]


def test_constructors_and_validation():
    assert Linear(10.0) == RateFunction("linear", 10.0)
    assert LogE(1.0) == RateFunction("loge", 1.0)
    assert Log2(2.0) == RateFunction("log2", 2.0)
    assert ShannonHalfLog(3.0) == RateFunction("shannon_half", 3.0)
    with pytest.raises(ValueError):
        RateFunction("cubic", 1.0)
    with pytest.raises(ValueError):
        RateFunction("linear", 0.0)


def test_closed_forms():
    assert g_eval(Linear(10.0), 2.5) == 25.0
    assert g_eval(LogE(1.0), 1.0) == math.log(2.0)
    assert g_eval(LogE(2.0), 3.0) == math.log(7.0)
    assert g_eval(Log2(1.0), 1.0) == 1.0
    assert g_eval(Log2(1.0), 3.0) == 2.0
    assert g_eval(ShannonHalfLog(1.0), 1.0) == 0.5 * math.log(2.0)


@pytest.mark.parametrize("rf", ALL_RFS, ids=lambda r: f"{r.family}-{r.coef}")
def test_g_zero_and_monotone_concave(rf):
    assert g_eval(rf, 0.0) == 0.0
    xs = np.linspace(0.0, 12.0, 97)
    ys = np.array([g_eval(rf, x) for x in xs])
    assert np.all(np.diff(ys) > 0)  # strictly increasing
    # Midpoint concavity: g((a+b)/2) >= (g(a)+g(b))/2.
    rng = np.random.default_rng(7)
    for _ in range(200):
        a, b = rng.uniform(0.0, 50.0, size=2)
        mid = g_eval(rf, 0.5 * (a + b))
        avg = 0.5 * (g_eval(rf, a) + g_eval(rf, b))
        assert mid >= avg - 1e-12
        if rf.family != "linear" and abs(a - b) > 1e-6:
            assert mid > avg  # strict for the log families


def test_strict_concavity_flag():
    assert not rf_is_strictly_concave(Linear(3.0))
    for rf in (LogE(1.0), Log2(1.0), ShannonHalfLog(1.0)):
        assert rf_is_strictly_concave(rf)


@pytest.mark.parametrize("rf", ALL_RFS, ids=lambda r: f"{r.family}-{r.coef}")
def test_inverse_round_trip(rf):
    rng = np.random.default_rng(21)
    xs = np.concatenate([[0.0], rng.uniform(0.0, 30.0, 300)])
    for x in xs:
        r = g_eval(rf, x)
        assert g_inverse(rf, r) == pytest.approx(x, rel=1e-12, abs=1e-12)
    # And in rate space: g(g_inverse(r)) == r.
    for r in rng.uniform(0.0, 8.0, 100):
        assert g_eval(rf, g_inverse(rf, r)) == pytest.approx(
            float(r), rel=1e-12, abs=1e-12
        )


def test_inverse_validation():
    with pytest.raises(ValueError):
        g_inverse(LogE(1.0), -0.1)
    assert g_inverse(LogE(1.0), 0.0) == 0.0


def test_log2_one_bit_is_unit_energy():
    # The scenario behind the quantized comparison: g(E[Y]) = 1 at E[Y] = 1.
    assert g_eval(Log2(1.0), 1.0) == 1.0
    assert g_inverse(Log2(1.0), 1.0) == pytest.approx(1.0, rel=1e-15)


# ---------------------------------------------------------------------------
# Water-filling level
# ---------------------------------------------------------------------------

FADING = DiscretePmf((0.1, 0.5, 1.0, 2.2), (0.1, 0.3, 0.4, 0.2))


def _closed_form_level(values, probs, budget):
    """Piecewise closed-form water level for a discrete fading pmf.

    Within the regime where gains h >= h_cut are active,
    sum_{h >= h_cut} p_h (1/h0 - 1/h) = budget  =>
    1/h0 = (budget + sum p/h) / sum p.
    Scan cut points from the largest gain down and keep the consistent one.
    """
    order = np.argsort(values)[::-1]
    v, p = np.asarray(values)[order], np.asarray(probs)[order]
    for k in range(1, len(v) + 1):
        act_v, act_p = v[:k], p[:k]
        inv_h0 = (budget + float(np.sum(act_p / act_v))) / float(np.sum(act_p))
        h0 = 1.0 / inv_h0
        lo = v[k] if k < len(v) else 0.0
        if lo <= h0 <= act_v[-1]:
            return h0
    raise AssertionError("no consistent active set")


def test_waterfill_level_matches_closed_form():
    h0 = waterfill_level(FADING, 0.99)
    exact = _closed_form_level(FADING.values, FADING.probs, 0.99)
    assert h0 == pytest.approx(exact, abs=1e-9)
    assert h0 == pytest.approx(0.4325, abs=2e-4)


def test_waterfill_level_satisfies_budget_randomized():
    rng = np.random.default_rng(88)
    for _ in range(100):
        n = int(rng.integers(2, 7))
        vals = np.sort(rng.uniform(0.05, 5.0, n))
        probs = rng.dirichlet(np.ones(n))
        pmf = DiscretePmf(tuple(vals), tuple(probs))
        budget = float(rng.uniform(0.01, 3.0))
        h0 = waterfill_level(pmf, budget)
        spent = float(np.sum(probs * np.maximum(1.0 / h0 - 1.0 / vals, 0.0)))
        assert spent == pytest.approx(budget, abs=1e-9)
        # Closed form agrees wherever the bisection landed.
        exact = _closed_form_level(vals, probs, budget)
        assert h0 == pytest.approx(exact, rel=1e-9, abs=1e-9)


def test_waterfill_level_errors():
    with pytest.raises(ValueError):
        waterfill_level(FADING, 0.0)
    with pytest.raises(ValueError):
        waterfill_level(DiscretePmf((0.0,), (1.0,)), 1.0)
