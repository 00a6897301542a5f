"""Transmission policies: how much energy T to spend given (q, e, h).

Every rule clips to the energy buffer (T <= e always). The names are the
exact strings accepted in configs and emitted in CSV output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rate import RateFunction, g_eval

__all__ = [
    "POLICY_KINDS",
    "MdpTable",
    "PolicySpec",
    "DecisionContext",
    "decide",
    "wasted_energy",
    "resolve_epsilon",
]

POLICY_KINDS = (
    "TO",
    "GREEDY",
    "MTO",
    "UNBUFFERED",
    "UNFADED_TO",
    "FADING_TO_LINEAR",
    "WF",
    "MWF",
    "CONST_POWER",
    "MDP_OPTIMAL",
)

# Policies whose decision depends on the water-filling level h0.
_NEEDS_H0 = ("WF", "MWF")
# Policies only meaningful with a fading pmf in the scenario.
NEEDS_FADING = ("FADING_TO_LINEAR", "WF", "MWF")


@dataclass(frozen=True)
class MdpTable:
    """Per-grid-state action lookup produced by the MDP solver.

    actions[iq, ie] is the energy to spend in grid state
    (q = iq * step_q, e = ie * step_e); by construction it never exceeds
    the state's energy level.
    """

    actions: np.ndarray
    step_q: float
    step_e: float

    def __post_init__(self):
        a = np.asarray(self.actions, dtype=float)
        object.__setattr__(self, "actions", a)
        if a.ndim != 2:
            raise ValueError("actions must be a 2-d (q, e) table")
        if not (self.step_q > 0 and self.step_e > 0):
            raise ValueError("grid steps must be positive")


@dataclass(frozen=True)
class PolicySpec:
    """A policy kind plus its parameters.

    epsilon defaults to 0.01 * E[Y] when left None (resolved against the
    scenario's harvest mean). c/outer/inner parameterize the modified-TO
    boost term; power is the constant-power level; table is the solved MDP
    lookup.
    """

    kind: str
    epsilon: float | None = None
    c: float = 0.1
    outer: float = 0.99
    inner: float = 0.001
    power: float | None = None
    table: MdpTable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind: {self.kind!r}")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not 0 < self.outer < 1:
            raise ValueError("outer factor must lie in (0, 1)")
        if not self.inner > 0:
            raise ValueError("inner factor must be positive")
        if self.kind == "CONST_POWER" and (
            self.power is None or not self.power > 0
        ):
            raise ValueError("CONST_POWER needs a positive power level")


@dataclass
class DecisionContext:
    """Observable state handed to a policy at the top of a slot.

    q, e: queue (bits) and energy buffer. h: current channel gain (1 when
    the scenario has no fading). y_prev: previous slot's harvest (drives the
    unbuffered rule). ey: harvest mean E[Y]. h0: water-filling level for the
    scenario's fading pmf and budget E[Y] - eps (NaN when unused). hbar,
    pbar: maximum fading support point and its probability (NaN when
    unused). rf: the scenario's rate function.
    """

    q: float
    e: float
    rf: RateFunction
    ey: float
    h: float = 1.0
    y_prev: float = 0.0
    h0: float = math.nan
    hbar: float = math.nan
    pbar: float = math.nan


def resolve_epsilon(policy: PolicySpec, ey: float) -> float:
    return 0.01 * ey if policy.epsilon is None else policy.epsilon


_LN2 = 0.6931471805599453


def _drain_energy(rf: RateFunction, q: float) -> float:
    """Energy that would serve the whole backlog in one slot, saturated far
    above any physical buffer so min() against e stays well-defined for
    enormous q (matching the simulator kernel bit for bit)."""
    if rf.family == "linear":
        return q / rf.coef
    if rf.family == "loge":
        a = q
    elif rf.family == "log2":
        a = q * _LN2
    else:
        a = 2.0 * q
    return 1e300 if a > 700.0 else math.expm1(a) / rf.coef


def decide(policy: PolicySpec, ctx: DecisionContext) -> float:
    """Energy to transmit this slot; always within [0, ctx.e].

    Mirrors the simulator kernel's per-slot rule exactly (the kernel inlines
    these for speed; an equivalence test keeps the two in lock step).
    """
    if ctx.q < 0 or ctx.e < 0:
        raise ValueError("state must be nonnegative")
    kind = policy.kind
    e = ctx.e
    if kind in _NEEDS_H0 and not ctx.h0 > 0:
        raise ValueError(f"{kind} needs a positive water-filling level h0")

    if kind in ("TO", "UNFADED_TO"):
        level = ctx.ey - resolve_epsilon(policy, ctx.ey)
        if level < 0:
            level = 0.0
        t = level
    elif kind == "GREEDY":
        t = _drain_energy(ctx.rf, ctx.q)
    elif kind == "MTO":
        boost = e - policy.c * ctx.q
        if boost < 0.0:
            boost = 0.0
        cap = policy.outer * (ctx.ey + policy.inner * boost)
        t = _drain_energy(ctx.rf, ctx.q)
        if cap < t:
            t = cap
    elif kind == "UNBUFFERED":
        t = ctx.y_prev
    elif kind == "FADING_TO_LINEAR":
        if not (ctx.pbar > 0) or not (ctx.hbar > 0):
            raise ValueError("FADING_TO_LINEAR needs hbar and pbar")
        level = ctx.ey - resolve_epsilon(policy, ctx.ey)
        if level < 0:
            level = 0.0
        t = level / ctx.pbar if ctx.h >= ctx.hbar - 1e-12 else 0.0
    elif kind == "WF":
        if ctx.h > 0.0:
            t = 1.0 / ctx.h0 - 1.0 / ctx.h
            if t < 0.0:
                t = 0.0
        else:
            t = 0.0
    elif kind == "MWF":
        if ctx.h > 0.0:
            boost = e - policy.c * ctx.q
            if boost < 0.0:
                boost = 0.0
            t = 1.0 / ctx.h0 - 1.0 / ctx.h + policy.inner * boost
            if t < 0.0:
                t = 0.0
            fq = _drain_energy(ctx.rf, ctx.q)
            if fq < t:
                t = fq
        else:
            t = 0.0
    elif kind == "CONST_POWER":
        t = policy.power
    elif kind == "MDP_OPTIMAL":
        if policy.table is None:
            raise ValueError("MDP_OPTIMAL needs a solved action table")
        t = _mdp_lookup(policy.table, ctx.q, ctx.e)
    else:  # pragma: no cover - POLICY_KINDS guards this
        raise ValueError(kind)

    if t < 0.0:
        t = 0.0
    if t > e:
        t = e
    return t


def _mdp_lookup(table: MdpTable, q: float, e: float) -> float:
    nq, ne = table.actions.shape
    fq = q / table.step_q
    fe = e / table.step_e
    iq = int(round(fq))
    ie = int(round(fe))
    # The caller must quantize: off-grid states are a domain error.
    if abs(fq - iq) > 1e-6 or abs(fe - ie) > 1e-6:
        raise ValueError(
            f"state ({q}, {e}) is off the solved grid; quantize first"
        )
    if not (0 <= iq < nq and 0 <= ie < ne):
        raise ValueError(f"state ({q}, {e}) is outside the solved grid")
    return float(table.actions[iq, ie])


def wasted_energy(
    policy: PolicySpec, ctx: DecisionContext, T: float
) -> float:
    """Energy spent beyond what the bits actually served required.

    Serving min(q, g(h*T)) bits needs g_inverse(served)/h energy; anything
    above that is waste. Zero whenever q >= g(h*T) (the whole transmission
    carried data); everything is waste when q = 0 or h = 0.
    """
    del policy  # the measure depends only on the realized (ctx, T)
    if T < 0:
        raise ValueError("T must be nonnegative")
    if T == 0.0:
        return 0.0
    if ctx.h <= 0.0:
        return T
    served = g_eval(ctx.rf, ctx.h * T)
    if served > ctx.q:
        served = ctx.q
    needed = _drain_energy(ctx.rf, served) / ctx.h if served > 0.0 else 0.0
    w = T - needed
    return w if w > 0.0 else 0.0
