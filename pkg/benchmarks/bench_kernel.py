"""Benchmark the compiled slot-loop kernel against the pure-Python one.

Runs the same pre-drawn scenario through every importable kernel
implementation, reports slots/second and the speedup factor, and verifies
the outputs agree bit-for-bit (the two kernels share one contract; any
difference is a bug, not noise).

Usage: python3 benchmarks/bench_kernel.py [--slots N] [--repeat K]
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from ehsim.kernel import POLICY_CODES, RF_CODES, implementations
from ehsim.sim import ScenarioConfig, pack_kernel_args
from ehsim.policy import PolicySpec
from ehsim.rate import RateFunction
from ehsim.stochastic import Erlang, Exponential, SampleStream


def _draw_inputs(n: int, seed: int):
    xs = SampleStream(Exponential(2.0), seed=seed, substream=(0, 0)).sample_n(n)
    ys = SampleStream(Erlang(5, 10.0), seed=seed, substream=(0, 1)).sample_n(n)
    zs = np.zeros(n)
    hs = np.ones(n)
    return xs, ys, zs, hs


def _bench_case(name: str, cfg: ScenarioConfig, slots: int, repeat: int):
    xs, ys, zs, hs = _draw_inputs(slots, cfg.seed)
    p = pack_kernel_args(cfg)
    impls = implementations()
    results = {}
    for impl_name, impl in impls.items():
        best = math.inf
        out = None
        for _ in range(repeat):
            t0 = time.perf_counter()
            out = impl.simulate_slots(
                xs, ys, zs, hs, 0.0, 0.0,
                p["policy_code"], p["pp0"], p["pp1"], p["pp2"], p["pp3"],
                p["rf_code"], p["rf_coef"],
                p["energy_cap"], p["data_cap"], p["quantize_step"],
                cfg.resolved_warmup(), cfg.resolved_stride(),
                p["mdp_actions"], p["mdp_step_q"], p["mdp_step_e"],
                False, 0.0, 0.0, 0.0,
            )
            best = min(best, time.perf_counter() - t0)
        results[impl_name] = (best, out)

    print(f"\n== {name} ({slots} slots, best of {repeat}) ==")
    base = results.get("python")
    for impl_name, (secs, _) in sorted(results.items()):
        rate = slots / secs
        line = f"  {impl_name:9s} {secs * 1e3:9.2f} ms   {rate / 1e6:8.2f} M slots/s"
        if impl_name != "python" and base is not None:
            line += f"   {base[0] / secs:6.1f}x vs python"
        print(line)

    if len(results) == 2:
        (_, out_a), (_, out_b) = results["python"], results["compiled"]
        stats_a, tq_a, te_a, hits_a = out_a
        stats_b, tq_b, te_b, hits_b = out_b
        same = (
            all(stats_a[k] == stats_b[k] for k in stats_a)
            and np.array_equal(tq_a, tq_b)
            and np.array_equal(te_a, te_b)
            and np.array_equal(hits_a, hits_b)
        )
        print(f"  bit-identical: {'yes' if same else 'NO -- KERNEL BUG'}")
        if not same:
            raise SystemExit(1)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--slots", type=int, default=2_000_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    cases = {
        "TO / loge": ScenarioConfig(
            arrival=Exponential(2.0),
            harvest=Erlang(5, 10.0),
            rf=RateFunction("loge", 1.0),
            policy=PolicySpec("TO"),
            horizon=args.slots,
            seed=99,
        ),
        "GREEDY / loge": ScenarioConfig(
            arrival=Exponential(2.0),
            harvest=Erlang(5, 10.0),
            rf=RateFunction("loge", 1.0),
            policy=PolicySpec("GREEDY"),
            horizon=args.slots,
            seed=99,
        ),
        "MTO / shannon_half": ScenarioConfig(
            arrival=Exponential(2.0),
            harvest=Erlang(5, 10.0),
            rf=RateFunction("shannon_half", 1.0),
            policy=PolicySpec("MTO"),
            horizon=args.slots,
            seed=99,
        ),
    }
    for name, cfg in cases.items():
        _bench_case(name, cfg, args.slots, args.repeat)


if __name__ == "__main__":
    main()
