"""Concave rate functions g, their inverses, and the water-filling level.

Energy x spent in a slot serves g(x) bits. Every family satisfies g(0) = 0,
g nondecreasing and concave; the strictly concave families are invertible in
closed form via expm1/log1p so round-trips stay accurate near zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RateFunction",
    "Linear",
    "LogE",
    "Log2",
    "ShannonHalfLog",
    "g_eval",
    "g_inverse",
    "waterfill_level",
    "rf_is_strictly_concave",
]

_LN2 = 0.6931471805599453


@dataclass(frozen=True)
class RateFunction:
    """g parameterized by family and one coefficient.

    family: "linear"       g(x) = coef * x
            "loge"         g(x) = ln(1 + coef * x)
            "log2"         g(x) = log2(1 + coef * x)
            "shannon_half" g(x) = 0.5 * ln(1 + coef * x)
    """

    family: str
    coef: float

    def __post_init__(self):
        if self.family not in ("linear", "loge", "log2", "shannon_half"):
            raise ValueError(f"unknown rate family: {self.family!r}")
        if not self.coef > 0:
            raise ValueError("rate coefficient must be positive")

    def g(self, x: float) -> float:
        return g_eval(self, x)

    def g_inv(self, r: float) -> float:
        return g_inverse(self, r)


def Linear(gamma: float) -> RateFunction:
    return RateFunction("linear", gamma)


def LogE(beta: float) -> RateFunction:
    return RateFunction("loge", beta)


def Log2(beta: float) -> RateFunction:
    return RateFunction("log2", beta)


def ShannonHalfLog(beta: float) -> RateFunction:
    return RateFunction("shannon_half", beta)


def rf_is_strictly_concave(rf: RateFunction) -> bool:
    return rf.family != "linear"


def g_eval(rf: RateFunction, x: float) -> float:
    """Bits served by energy x; domain error for x < 0."""
    if x < 0:
        raise ValueError(f"energy must be nonnegative, got {x}")
    c = rf.coef
    if rf.family == "linear":
        return c * x
    if rf.family == "loge":
        return math.log1p(c * x)
    if rf.family == "log2":
        return math.log1p(c * x) / _LN2
    return 0.5 * math.log1p(c * x)


def g_inverse(rf: RateFunction, r: float) -> float:
    """Energy needed to serve r bits: the unique t with g(t) = r."""
    if r < 0:
        raise ValueError(f"rate must be nonnegative, got {r}")
    c = rf.coef
    if rf.family == "linear":
        return r / c
    if rf.family == "loge":
        return math.expm1(r) / c
    if rf.family == "log2":
        return math.expm1(r * _LN2) / c
    return math.expm1(2.0 * r) / c


def _fading_arrays(fading) -> tuple[np.ndarray, np.ndarray]:
    # Accepts a stochastic.DiscretePmf (duck-typed: .values/.probs) or a
    # (values, probs) pair; keeps this module free of upward imports.
    if hasattr(fading, "values") and hasattr(fading, "probs"):
        values, probs = fading.values, fading.probs
    else:
        values, probs = fading
    v = np.asarray(values, dtype=float)
    p = np.asarray(probs, dtype=float)
    if v.shape != p.shape or v.ndim != 1 or v.size == 0:
        raise ValueError("fading pmf needs matching 1-d values and probs")
    if np.any(v < 0):
        raise ValueError("channel gains must be nonnegative")
    if abs(p.sum() - 1.0) > 1e-9 or np.any(p < 0):
        raise ValueError("fading probs must be a pmf")
    return v, p


def waterfill_level(fading, budget: float) -> float:
    """Water level h0 solving sum_h p(h) * max(1/h0 - 1/h, 0) = budget.

    The left side is continuous and strictly decreasing in h0 on
    (0, max gain], from +inf to 0, so bisection brackets the unique root;
    the returned level satisfies the budget equation within 1e-10.
    Requires at least one strictly positive gain with positive probability.
    """
    if not budget > 0:
        raise ValueError("budget must be positive")
    values, probs = _fading_arrays(fading)
    pos = (values > 0) & (probs > 0)
    if not np.any(pos):
        raise ValueError("fading pmf has no positive gain with positive mass")
    v, p = values[pos], probs[pos]

    def power(h0: float) -> float:
        return float(np.sum(p * np.maximum(1.0 / h0 - 1.0 / v, 0.0)))

    hi = float(v.max())
    lo = hi
    while power(lo) < budget:
        lo *= 0.5
        if lo < 1e-300:
            raise ValueError("budget unreachable")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if power(mid) > budget:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    h0 = 0.5 * (lo + hi)
    if abs(power(h0) - budget) > 1e-10 * max(1.0, budget):
        # Fall back to the tightest bracketed endpoint.
        h0 = lo if abs(power(lo) - budget) < abs(power(hi) - budget) else hi
    return h0
