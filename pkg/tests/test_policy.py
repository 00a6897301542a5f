"""Per-slot transmit-energy decisions for every policy kind."""

import math

import numpy as np
import pytest

from ehsim.policy import (
    NEEDS_FADING,
    POLICY_KINDS,
    DecisionContext,
    MdpTable,
    PolicySpec,
    decide,
    resolve_epsilon,
    wasted_energy,
)
from ehsim.rate import Linear, Log2, LogE, ShannonHalfLog, g_eval, waterfill_level
from ehsim.stochastic import DiscretePmf

LOGE = LogE(1.0)
FADING = DiscretePmf((0.1, 0.5, 1.0, 2.2), (0.1, 0.3, 0.4, 0.2))


def ctx(**kw):
    base = dict(q=0.0, e=0.0, rf=LOGE, ey=1.0)
    base.update(kw)
    return DecisionContext(**base)


def test_policy_spec_validation():
    with pytest.raises(ValueError):
        PolicySpec("NOT_A_POLICY")
    with pytest.raises(ValueError):
        PolicySpec("TO", epsilon=0.0)
    with pytest.raises(ValueError):
        PolicySpec("MTO", outer=1.0)
    with pytest.raises(ValueError):
        PolicySpec("CONST_POWER")  # needs power
    assert PolicySpec("CONST_POWER", power=0.5).power == 0.5
    assert set(NEEDS_FADING) <= set(POLICY_KINDS)


def test_resolve_epsilon_default_is_one_percent():
    assert resolve_epsilon(PolicySpec("TO"), 10.0) == pytest.approx(0.1)
    assert resolve_epsilon(PolicySpec("TO", epsilon=0.03), 10.0) == 0.03


def test_to_fixed_spend():
    pol = PolicySpec("TO")
    # Spend E[Y] - eps when energy allows...
    assert decide(pol, ctx(q=5.0, e=10.0, ey=1.0)) == pytest.approx(0.99)
    # ... otherwise everything stored.
    assert decide(pol, ctx(q=5.0, e=0.5, ey=1.0)) == 0.5
    # Spend is queue-independent.
    assert decide(pol, ctx(q=0.0, e=10.0, ey=1.0)) == decide(
        pol, ctx(q=100.0, e=10.0, ey=1.0)
    )


def test_greedy_drains_exactly_the_backlog():
    pol = PolicySpec("GREEDY")
    # loge: energy to clear q bits is exp(q) - 1.
    q = 2.0
    want = math.expm1(2.0)
    assert decide(pol, ctx(q=q, e=100.0)) == pytest.approx(want, rel=1e-15)
    served = g_eval(LOGE, decide(pol, ctx(q=q, e=100.0)))
    assert served == pytest.approx(q, rel=1e-12)
    # Capped by stored energy.
    assert decide(pol, ctx(q=q, e=1.5)) == 1.5
    # Linear: q / gamma.
    assert decide(pol, ctx(q=30.0, e=100.0, rf=Linear(10.0))) == 3.0


def test_greedy_saturates_at_huge_backlog():
    # Far beyond any realistic buffer the drain requirement saturates
    # instead of overflowing, for every concave family.
    for rf in (LOGE, Log2(1.0), ShannonHalfLog(1.0)):
        t = decide(PolicySpec("GREEDY"), ctx(q=1e6, e=123.0, rf=rf))
        assert t == 123.0  # min(huge, e) = e


def test_mto_desk_example():
    pol = PolicySpec("MTO")  # c=0.1, outer=0.99, inner=0.001
    # e=100, q=1: boost term 0.99 (1 + 0.001 (100 - 0.1)) = 1.0889011,
    # below the full-drain energy e-1 = 1.718, so the boost cap binds.
    t = decide(pol, ctx(q=1.0, e=100.0, ey=1.0))
    assert t == pytest.approx(0.99 * (1 + 0.001 * 99.9), rel=1e-15)
    assert t == pytest.approx(1.0889011, abs=1e-7)
    # With a huge queue the (e - c q)^+ clamp kills the boost.
    t2 = decide(pol, ctx(q=5000.0, e=100.0, ey=1.0))
    assert t2 == pytest.approx(0.99, rel=1e-15)
    # Tiny queue: the drain cap binds instead.
    t3 = decide(pol, ctx(q=0.1, e=100.0, ey=1.0))
    assert t3 == pytest.approx(math.expm1(0.1), rel=1e-15)


def test_unbuffered_spends_previous_harvest():
    pol = PolicySpec("UNBUFFERED")
    assert decide(pol, ctx(q=3.0, e=10.0, y_prev=0.7)) == 0.7
    assert decide(pol, ctx(q=3.0, e=0.4, y_prev=0.7)) == 0.4  # feasibility
    assert decide(pol, ctx(q=3.0, e=10.0, y_prev=0.0)) == 0.0  # first slot


def test_fading_to_linear_peak_only():
    pol = PolicySpec("FADING_TO_LINEAR")
    kw = dict(q=5.0, e=50.0, rf=Linear(10.0), ey=1.0, hbar=2.2, pbar=0.2)
    # At the peak gain: (E[Y] - eps) / P(h = hbar) = 0.99 / 0.2.
    assert decide(pol, ctx(h=2.2, **kw)) == pytest.approx(4.95, rel=1e-15)
    # Slightly below peak within tolerance still transmits.
    assert decide(pol, ctx(h=2.2 - 1e-13, **kw)) == pytest.approx(4.95)
    # Off-peak: silent.
    assert decide(pol, ctx(h=1.0, **kw)) == 0.0
    assert decide(pol, ctx(h=0.1, **kw)) == 0.0
    with pytest.raises(ValueError):
        decide(pol, ctx(q=1.0, e=1.0, h=1.0))  # missing hbar/pbar


def test_wf_inverts_the_channel():
    pol = PolicySpec("WF")
    h0 = waterfill_level(FADING, 0.99)
    for h in (2.2, 1.0, 0.5):
        want = max(1.0 / h0 - 1.0 / h, 0.0)
        assert decide(pol, ctx(q=9.0, e=50.0, h=h, h0=h0)) == pytest.approx(
            want, rel=1e-12
        )
    # Gains below the water level stay silent (h0 ~ 0.43 > 0.1).
    assert decide(pol, ctx(q=9.0, e=50.0, h=0.1, h0=h0)) == 0.0
    with pytest.raises(ValueError):
        decide(pol, ctx(q=1.0, e=1.0, h=1.0))  # h0 unset


def test_mwf_adds_boost_and_caps_at_drain():
    pol = PolicySpec("MWF")  # c=0.1, inner=0.001
    h0 = waterfill_level(FADING, 0.99)
    base = 1.0 / h0 - 1.0 / 2.2
    # Boost: inner * (e - c q)^+ (q large enough that drain doesn't bind).
    t = decide(pol, ctx(q=3.0, e=50.0, h=2.2, h0=h0))
    assert t == pytest.approx(base + 0.001 * (50.0 - 0.3), rel=1e-12)
    # At q=1 the full-drain cap e^q - 1 = 1.718 < base + boost binds.
    t1 = decide(pol, ctx(q=1.0, e=50.0, h=2.2, h0=h0))
    assert t1 == pytest.approx(math.expm1(1.0), rel=1e-15)
    # Cap at full drain for small queues.
    t2 = decide(pol, ctx(q=0.05, e=50.0, h=2.2, h0=h0))
    assert t2 == pytest.approx(math.expm1(0.05), rel=1e-12)
    # Empty queue: nothing to serve, drain cap is 0.
    assert decide(pol, ctx(q=0.0, e=50.0, h=2.2, h0=h0)) == 0.0


def test_const_power():
    pol = PolicySpec("CONST_POWER", power=0.5)
    assert decide(pol, ctx(q=1.0, e=10.0)) == 0.5
    assert decide(pol, ctx(q=1.0, e=0.2)) == 0.2


def test_mdp_lookup_and_grid_errors():
    actions = np.array([[0.0, 0.0], [0.0, 1.0]])
    table = MdpTable(actions=actions, step_q=2.0, step_e=1.0)
    pol = PolicySpec("MDP_OPTIMAL", table=table)
    assert decide(pol, ctx(q=2.0, e=1.0)) == 1.0
    assert decide(pol, ctx(q=0.0, e=1.0)) == 0.0
    with pytest.raises(ValueError):
        decide(pol, ctx(q=1.0, e=1.0))  # off-grid q
    with pytest.raises(ValueError):
        decide(pol, ctx(q=4.0, e=1.0))  # outside the grid
    with pytest.raises(ValueError):
        decide(PolicySpec("MDP_OPTIMAL"), ctx(q=0.0, e=1.0))  # no table


def test_decide_rejects_negative_state():
    with pytest.raises(ValueError):
        decide(PolicySpec("TO"), ctx(q=-1.0, e=1.0))
    with pytest.raises(ValueError):
        decide(PolicySpec("TO"), ctx(q=1.0, e=-1.0))


def _random_context(rng, kind):
    rf = [Linear(10.0), LOGE, Log2(2.0), ShannonHalfLog(1.0)][
        int(rng.integers(4))
    ]
    h0 = waterfill_level(FADING, 0.99)
    return ctx(
        q=float(rng.uniform(0, 50)),
        e=float(rng.uniform(0, 20)),
        rf=rf,
        ey=float(rng.uniform(0.2, 10)),
        h=float(rng.choice(FADING.values)),
        y_prev=float(rng.uniform(0, 5)),
        h0=h0,
        hbar=2.2,
        pbar=0.2,
    )


def test_feasibility_invariant_all_policies():
    """decide() never proposes more energy than the buffer holds."""
    rng = np.random.default_rng(2024)
    pols = [
        PolicySpec(k, power=0.5 if k == "CONST_POWER" else None)
        for k in POLICY_KINDS
        if k != "MDP_OPTIMAL"
    ]
    for _ in range(500):
        c = _random_context(rng, None)
        for pol in pols:
            t = decide(pol, c)
            assert 0.0 <= t <= c.e + 1e-12, (pol.kind, c)


def test_wasted_energy_accounting():
    pol = PolicySpec("TO")
    # Whole transmission carried data: no waste.
    c = ctx(q=10.0, e=5.0)
    assert wasted_energy(pol, c, 0.99) == 0.0
    # Empty queue: everything is waste.
    c0 = ctx(q=0.0, e=5.0)
    assert wasted_energy(pol, c0, 0.99) == pytest.approx(0.99)
    # Partial: serve q bits, need expm1(q)/h, waste the rest.
    cq = ctx(q=0.3, e=5.0)
    waste = wasted_energy(pol, cq, 2.0)
    assert waste == pytest.approx(2.0 - math.expm1(0.3), rel=1e-12)
    # Zero transmit: zero waste; negative is a domain error.
    assert wasted_energy(pol, c, 0.0) == 0.0
    with pytest.raises(ValueError):
        wasted_energy(pol, c, -0.1)
    # Fading scales the energy actually needed by 1/h.
    cf = ctx(q=0.3, e=5.0, h=2.0)
    assert wasted_energy(pol, cf, 2.0) == pytest.approx(
        2.0 - math.expm1(0.3) / 2.0, rel=1e-12
    )
