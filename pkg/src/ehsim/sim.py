"""Slotted-time simulator for the single-node queue/energy dynamics.

Slot order: observe (q_k, e_k, h_k) -> pay the sensing cost (an outage
skips the slot when the buffer cannot cover the duty cycle: z_k, plus the
full constant transmit budget under CONST_POWER) -> the policy picks
T_k <= e_k -> serve g(h_k T_k) bits -> add arrivals -> add harvest; both
buffers clip at their caps and the clipped amounts are accounted (drops,
overflow). Replications use independent substreams, one per (process,
replication); identical config and seed reproduce the report bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernel
from .policy import (
    NEEDS_FADING,
    DecisionContext,
    PolicySpec,
    resolve_epsilon,
)
from .rate import RateFunction, g_eval, waterfill_level
from .stochastic import (
    DiscretePmf,
    DistributionSpec,
    SampleStream,
    dist_mean,
    discrete_support,
    has_zero_atom,
)

__all__ = [
    "STABLE",
    "UNSTABLE",
    "INCONCLUSIVE",
    "NodeState",
    "QuantizeGrid",
    "ScenarioConfig",
    "MetricsReport",
    "HittingTimeReport",
    "step",
    "run",
    "classify_stability",
    "hitting_time_stats",
]

STABLE = "STABLE"
UNSTABLE = "UNSTABLE"
INCONCLUSIVE = "INCONCLUSIVE"

# Slope thresholds relative to E[X]: growth above theta_u * E[X] is
# unstable, below theta_s * E[X] (with a plateau) is stable.
THETA_U = 0.05
THETA_S = 0.005

# Substream ids, one per stochastic process.
_PROC_X = 0
_PROC_Y = 1
_PROC_Z = 2
_PROC_H = 3


@dataclass(frozen=True)
class NodeState:
    """Queue backlog (bits) and energy buffer (energy units)."""

    q: float
    e: float

    def __post_init__(self):
        if self.q < 0 or self.e < 0:
            raise ValueError("state must be nonnegative")


@dataclass(frozen=True)
class QuantizeGrid:
    """Uniform (q, e) grid over [0, data_cap] x [0, energy_cap]."""

    n_q: int
    n_e: int

    def __post_init__(self):
        if self.n_q < 2 or self.n_e < 2:
            raise ValueError("grids need at least 2 levels per axis")


@dataclass(frozen=True)
class ScenarioConfig:
    arrival: DistributionSpec
    harvest: DistributionSpec
    rf: RateFunction
    policy: PolicySpec
    horizon: int
    sensing: DistributionSpec | None = None
    fading: DiscretePmf | None = None
    energy_cap: float = math.inf
    data_cap: float = math.inf
    warmup: int | None = None  # None -> 10% of horizon
    replications: int = 1
    seed: int = 0
    quantize: QuantizeGrid | None = None
    trace_stride: int | None = None  # None -> auto (~16k points)
    keep_traces: bool = False
    stream_key: tuple[int, ...] = ()

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        w = self.resolved_warmup()
        if not 0 <= w < self.horizon:
            raise ValueError("warmup must lie in [0, horizon)")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.energy_cap <= 0 or self.data_cap <= 0:
            raise ValueError("caps must be positive")
        if self.fading is not None and not isinstance(self.fading, DiscretePmf):
            raise ValueError("fading must be a DiscretePmf over gains")
        if self.policy.kind in NEEDS_FADING and self.fading is None:
            raise ValueError(f"{self.policy.kind} requires a fading pmf")
        if self.quantize is not None:
            if not (
                math.isfinite(self.data_cap) and math.isfinite(self.energy_cap)
            ):
                raise ValueError("quantized dynamics need finite caps")
        if self.policy.kind == "MDP_OPTIMAL" and self.quantize is None:
            raise ValueError(
                "MDP_OPTIMAL runs on quantized dynamics; set quantize"
            )

    def resolved_warmup(self) -> int:
        return self.horizon // 10 if self.warmup is None else self.warmup

    def resolved_stride(self) -> int:
        if self.trace_stride is not None:
            if self.trace_stride < 1:
                raise ValueError("trace_stride must be >= 1")
            return self.trace_stride
        return max(1, self.horizon // 16384)


@dataclass(frozen=True)
class MetricsReport:
    """Aggregated over replications; per-replication detail kept alongside.

    mean_queue averages the post-warmup time-average of q across
    replications; ci_half_width is the normal-approximation 95% half-width
    across replications (0 for a single one). Fractions pool post-warmup
    totals across replications. The verdict is the unanimous
    per-replication classification, INCONCLUSIVE otherwise.
    """

    mean_queue: float
    ci_half_width: float
    mean_waste: float
    drop_fraction: float
    sensing_outage_fraction: float
    stability_verdict: str
    slope: float
    replications: int
    horizon: int
    rep_mean_queues: tuple[float, ...]
    rep_slopes: tuple[float, ...]
    rep_verdicts: tuple[str, ...]
    rep_stats: tuple[dict, ...] = field(repr=False)
    traces: tuple | None = field(default=None, repr=False)


@dataclass(frozen=True)
class HittingTimeReport:
    """Empirical moments of the return time to (q, e) = (0, cap)."""

    n_returns: int
    mean_tau: float
    se_mean_tau: float
    mean_tau_sq: float
    se_mean_tau_sq: float
    inconclusive: bool


def step(
    state: NodeState,
    T: float,
    x: float,
    y: float,
    h: float = 1.0,
    rf: RateFunction | None = None,
    energy_cap: float = math.inf,
    data_cap: float = math.inf,
) -> NodeState:
    """One exact slot update; fails fast if T overdraws the buffer."""
    if rf is None:
        raise ValueError("step needs a rate function")
    if T < 0 or x < 0 or y < 0 or h < 0:
        raise ValueError("inputs must be nonnegative")
    if T > state.e + 1e-12:
        raise ValueError(f"T={T} exceeds energy buffer e={state.e}")
    t = min(T, state.e)
    qa = state.q - g_eval(rf, h * t)
    if qa < 0.0:
        qa = 0.0
    qn = qa + x
    if qn > data_cap:
        qn = data_cap
    en = state.e - t + y
    if en > energy_cap:
        en = energy_cap
    return NodeState(qn, en)


def _fading_peak(fading: DiscretePmf) -> tuple[float, float]:
    """(hbar, P[h = hbar]) for the maximum support point."""
    values, probs = discrete_support(fading)
    hbar = float(values.max())
    pbar = float(probs[values == hbar].sum())
    return hbar, pbar


def pack_kernel_args(cfg: ScenarioConfig) -> dict:
    """Resolve policy parameters into the kernel's flat argument set."""
    pol = cfg.policy
    ey = dist_mean(cfg.harvest)
    eps = resolve_epsilon(pol, ey)
    pp0 = pp1 = pp2 = pp3 = 0.0
    mdp_actions = None
    mdp_step_q = mdp_step_e = 1.0
    if pol.kind in ("TO", "UNFADED_TO"):
        pp0 = max(ey - eps, 0.0)
    elif pol.kind == "MTO":
        pp0, pp1, pp2, pp3 = ey, pol.c, pol.outer, pol.inner
    elif pol.kind == "FADING_TO_LINEAR":
        hbar, pbar = _fading_peak(cfg.fading)
        if pbar <= 0:
            raise ValueError("fading pmf puts no mass on its peak gain")
        pp0 = max(ey - eps, 0.0) / pbar
        pp1 = hbar
    elif pol.kind in ("WF", "MWF"):
        budget = ey - eps
        if budget <= 0:
            raise ValueError("water-filling budget E[Y] - eps must be > 0")
        pp0 = waterfill_level(cfg.fading, budget)
        if pol.kind == "MWF":
            pp1, pp3 = pol.c, pol.inner
    elif pol.kind == "CONST_POWER":
        pp0 = pol.power
    elif pol.kind == "MDP_OPTIMAL":
        table = pol.table
        if table is None:
            raise ValueError("MDP_OPTIMAL needs a solved action table")
        mdp_actions = np.ascontiguousarray(table.actions, dtype=np.float64)
        mdp_step_q = table.step_q
        mdp_step_e = table.step_e

    quantize_step = 0.0
    if cfg.quantize is not None:
        quantize_step = cfg.data_cap / (cfg.quantize.n_q - 1)
        if mdp_actions is not None and abs(quantize_step - mdp_step_q) > 1e-9:
            raise ValueError(
                "quantize grid does not match the MDP table's q step"
            )

    return {
        "policy_code": kernel.POLICY_CODES[pol.kind],
        "pp0": pp0,
        "pp1": pp1,
        "pp2": pp2,
        "pp3": pp3,
        "rf_code": kernel.RF_CODES[cfg.rf.family],
        "rf_coef": cfg.rf.coef,
        "energy_cap": cfg.energy_cap,
        "data_cap": cfg.data_cap,
        "quantize_step": quantize_step,
        "mdp_actions": mdp_actions,
        "mdp_step_q": mdp_step_q,
        "mdp_step_e": mdp_step_e,
    }


def decision_context_for(
    cfg: ScenarioConfig, q: float, e: float, h: float = 1.0, y_prev: float = 0.0
) -> DecisionContext:
    """Context for policy.decide matching what the kernel would see."""
    pol = cfg.policy
    ey = dist_mean(cfg.harvest)
    h0 = math.nan
    hbar = pbar = math.nan
    if cfg.fading is not None:
        hbar, pbar = _fading_peak(cfg.fading)
        if pol.kind in ("WF", "MWF"):
            h0 = waterfill_level(cfg.fading, ey - resolve_epsilon(pol, ey))
    return DecisionContext(
        q=q, e=e, rf=cfg.rf, ey=ey, h=h, y_prev=y_prev, h0=h0,
        hbar=hbar, pbar=pbar,
    )


def _streams(cfg: ScenarioConfig, rep: int) -> dict:
    def stream(spec, pid):
        return SampleStream(spec, cfg.seed, cfg.stream_key + (rep, pid))

    out = {
        "x": stream(cfg.arrival, _PROC_X),
        "y": stream(cfg.harvest, _PROC_Y),
        "z": stream(cfg.sensing, _PROC_Z) if cfg.sensing is not None else None,
        "h": stream(cfg.fading, _PROC_H) if cfg.fading is not None else None,
    }
    return out


def _run_replication(cfg: ScenarioConfig, rep: int, packed: dict, **kw):
    st = _streams(cfg, rep)
    n = cfg.horizon
    x = st["x"].sample_n(n)
    y = st["y"].sample_n(n)
    z = st["z"].sample_n(n) if st["z"] is not None else None
    h = st["h"].sample_n(n) if st["h"] is not None else None
    return kernel.simulate_slots(
        x,
        y,
        z,
        h,
        0.0,
        0.0,
        packed["policy_code"],
        packed["pp0"],
        packed["pp1"],
        packed["pp2"],
        packed["pp3"],
        packed["rf_code"],
        packed["rf_coef"],
        packed["energy_cap"],
        packed["data_cap"],
        packed["quantize_step"],
        cfg.resolved_warmup(),
        kw.get("trace_stride", cfg.resolved_stride()),
        packed["mdp_actions"],
        packed["mdp_step_q"],
        packed["mdp_step_e"],
        kw.get("track_hits", 0),
        kw.get("hit_q", 0.0),
        kw.get("hit_e", 0.0),
        kw.get("hit_tol", 1e-9),
    )


def classify_stability(
    trace_q: np.ndarray, ex_mean: float, stride: int = 1
) -> tuple[str, float]:
    """Verdict plus fitted growth rate (bits/slot) of a full-run q trace.

    Fits a least-squares line over the last half of the trace. The slope is
    compared against theta_u/theta_s times E[X]; STABLE additionally needs
    the four window means of the last half to plateau (spread bounded by
    max of 35% of the half's mean, 2 E[X], and an absolute floor), which
    filters sublinear-growth boundary cases into INCONCLUSIVE.
    """
    trace = np.asarray(trace_q, dtype=float)
    half = trace[trace.size // 2 :]
    if half.size < 8:
        return INCONCLUSIVE, math.nan
    ks = (np.arange(trace.size)[trace.size // 2 :]) * float(stride)
    slope = float(np.polyfit(ks, half, 1)[0])
    scale = max(ex_mean, 1e-6)
    if slope > THETA_U * scale:
        return UNSTABLE, slope
    if slope < THETA_S * scale:
        w = half.size // 4
        means = [float(half[i * w : (i + 1) * w].mean()) for i in range(4)]
        spread = max(means) - min(means)
        if spread <= max(0.35 * float(half.mean()), 2.0 * ex_mean, 1e-9):
            return STABLE, slope
    return INCONCLUSIVE, slope


def run(cfg: ScenarioConfig) -> MetricsReport:
    """Simulate all replications and aggregate.

    Deterministic: the same config and seed give a bit-identical report.
    """
    packed = pack_kernel_args(cfg)
    stride = cfg.resolved_stride()
    ex_mean = dist_mean(cfg.arrival)

    rep_means = []
    rep_slopes = []
    rep_verdicts = []
    rep_stats = []
    traces = [] if cfg.keep_traces else None
    tot = {
        "waste": 0.0,
        "n": 0.0,
        "dropped": 0.0,
        "arrived": 0.0,
        "outage": 0.0,
    }
    for rep in range(cfg.replications):
        stats, tq, te, _hits = _run_replication(cfg, rep, packed)
        n_post = stats["n_post"]
        rep_means.append(stats["sum_q_post"] / n_post)
        verdict, slope = classify_stability(tq, ex_mean, stride)
        rep_verdicts.append(verdict)
        rep_slopes.append(slope)
        rep_stats.append(stats)
        if traces is not None:
            traces.append((tq, te))
        tot["waste"] += stats["waste_post"]
        tot["n"] += n_post
        tot["dropped"] += stats["dropped_post"]
        tot["arrived"] += stats["arrived_post"]
        tot["outage"] += stats["outage_post"]

    means = np.asarray(rep_means)
    r = cfg.replications
    ci = 0.0
    if r > 1:
        ci = 1.96 * float(means.std(ddof=1)) / math.sqrt(r)
    verdict = rep_verdicts[0]
    if any(v != verdict for v in rep_verdicts):
        verdict = INCONCLUSIVE
    return MetricsReport(
        mean_queue=float(means.mean()),
        ci_half_width=ci,
        mean_waste=tot["waste"] / tot["n"],
        drop_fraction=(
            tot["dropped"] / tot["arrived"] if tot["arrived"] > 0 else 0.0
        ),
        sensing_outage_fraction=tot["outage"] / tot["n"],
        stability_verdict=verdict,
        slope=float(np.mean(rep_slopes)),
        replications=r,
        horizon=cfg.horizon,
        rep_mean_queues=tuple(rep_means),
        rep_slopes=tuple(rep_slopes),
        rep_verdicts=tuple(rep_verdicts),
        rep_stats=tuple(rep_stats),
        traces=tuple(traces) if traces is not None else None,
    )


def hitting_time_stats(
    cfg: ScenarioConfig, min_returns: int = 30, e_tol: float = 1e-9
) -> HittingTimeReport:
    """Moments of the return time tau to the state (q, e) = (0, cap) under
    TO, pooled over replications.

    Visits to that state regenerate the chain, so the recorded cycle
    lengths are i.i.d.; standard errors are the plain sample ones. Requires
    a finite energy cap, P[X = 0] > 0 (otherwise q = 0 is never hit), and a
    stable TO regime E[X] < g(E[Y] - eps).
    """
    pol = cfg.policy
    if pol.kind != "TO":
        raise ValueError("hitting-time analysis is defined for the TO policy")
    if not math.isfinite(cfg.energy_cap):
        raise ValueError("needs a finite energy cap")
    if not has_zero_atom(cfg.arrival):
        raise ValueError("needs P[X = 0] > 0; q = 0 is never reached")
    ey = dist_mean(cfg.harvest)
    level = ey - resolve_epsilon(pol, ey)
    if not dist_mean(cfg.arrival) < g_eval(cfg.rf, level):
        raise ValueError("needs the stable TO regime E[X] < g(E[Y] - eps)")

    packed = pack_kernel_args(cfg)
    taus = []
    for rep in range(cfg.replications):
        _stats, _tq, _te, hits = _run_replication(
            cfg,
            rep,
            packed,
            track_hits=1,
            hit_q=0.0,
            hit_e=cfg.energy_cap,
            hit_tol=e_tol,
        )
        if hits.size >= 2:
            taus.append(np.diff(hits))
    if taus:
        tau = np.concatenate(taus).astype(float)
    else:
        tau = np.empty(0)
    n = int(tau.size)
    if n == 0:
        return HittingTimeReport(0, math.nan, math.nan, math.nan, math.nan, True)
    tau_sq = tau * tau
    se = float(tau.std(ddof=1)) / math.sqrt(n) if n > 1 else math.nan
    se_sq = float(tau_sq.std(ddof=1)) / math.sqrt(n) if n > 1 else math.nan
    return HittingTimeReport(
        n_returns=n,
        mean_tau=float(tau.mean()),
        se_mean_tau=se,
        mean_tau_sq=float(tau_sq.mean()),
        se_mean_tau_sq=se_sq,
        inconclusive=n < min_returns,
    )
