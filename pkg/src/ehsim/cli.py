"""Command-line front end.

Commands
--------
simulate      run every configured policy at the base arrival mean
sweep         run the policy x load grid and write the long-format CSV
thresholds    write the scenario's analytic stability boundaries
mdp-solve     solve the finite MDP and write the action/value table
mdp-check     verify greedy-optimality (linear rate) and value structure
hitting-time  estimate first-return-time moments under the fixed-spend rule

Every command takes exactly one of --config FILE / --preset NAME plus
optional --out, --seed, --policies, --jobs. With --out the artifact is
written to that path and a JSON run manifest is written next to it
(<out>.manifest.json); without --out the artifact goes to stdout. CSV
bodies are byte-identical across replays of the same config; wall-clock
timestamps live only in the manifest.

Exit codes: 0 success, 2 config error, 3 check violation, 4 runtime
failure. Failures emit a one-line JSON error record on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from datetime import datetime, timezone
from typing import Any

from . import __version__
from . import analysis, mdp
from .config import (
    PRESET_NAMES,
    ConfigError,
    ParsedConfig,
    parse_config_dict,
    parse_config_text,
    preset_dict,
)
from .policy import POLICY_KINDS
from .sim import hitting_time_stats
from .stochastic import dist_mean, scaled_to_mean

__all__ = ["main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CHECK = 3
EXIT_RUNTIME = 4


class CheckFailure(RuntimeError):
    """A requested verification (mdp-check) found a violation."""


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ehsim",
        description=(
            "Slotted-time simulation and optimization toolkit for a single "
            "energy-harvesting sensor node."
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", metavar="FILE", help="JSON config file")
        src.add_argument(
            "--preset",
            metavar="NAME",
            help="built-in scenario: " + ", ".join(PRESET_NAMES),
        )
        p.add_argument(
            "--out",
            metavar="FILE",
            help="artifact path (default stdout); a JSON run manifest is "
            "written to <out>.manifest.json",
        )
        p.add_argument(
            "--seed", type=int, metavar="N", help="override the config seed"
        )
        p.add_argument(
            "--policies",
            metavar="KINDS",
            help="comma-separated policy kinds overriding the config's list",
        )
        p.add_argument(
            "--jobs",
            type=int,
            default=1,
            metavar="N",
            help="parallel worker processes for sweep cells (default 1)",
        )
        return p

    add("simulate", "run each policy at the base arrival mean")
    add("sweep", "run the policy x load grid from the config's sweep key")
    add("thresholds", "write analytic stability boundaries as key-value CSV")
    add("mdp-solve", "solve the finite MDP and write the policy table CSV")
    add("mdp-check", "verify greedy optimality and value structure")
    add("hitting-time", "estimate first-return-time moments (fixed spend)")
    return parser


def _apply_overrides(raw: dict, args: argparse.Namespace) -> dict:
    """Fold --seed/--policies into the raw config dict before parsing."""
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.policies is not None:
        names = [s.strip() for s in args.policies.split(",") if s.strip()]
        if not names:
            raise ConfigError("--policies: empty policy list")
        existing: dict[str, Any] = {}
        for entry in raw.get("policies", []):
            kind = entry if isinstance(entry, str) else entry.get("kind")
            if isinstance(kind, str):
                existing.setdefault(kind, entry)
        single = raw.get("policy")
        if single is not None:
            kind = single if isinstance(single, str) else single.get("kind")
            if isinstance(kind, str):
                existing.setdefault(kind, single)
        chosen = []
        for name in names:
            if name not in POLICY_KINDS:
                raise ConfigError(
                    f"--policies: unknown policy kind {name!r}; expected "
                    "one of " + ", ".join(POLICY_KINDS)
                )
            chosen.append(existing.get(name, name))
        raw.pop("policy", None)
        raw["policies"] = chosen
    return raw


def _load(args: argparse.Namespace) -> tuple[ParsedConfig, dict]:
    """Resolve --config/--preset plus overrides into a ParsedConfig."""
    if args.preset is not None:
        raw = preset_dict(args.preset)
        source = f"preset:{args.preset}"
        origin = {"preset": args.preset}
    else:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config!r}: {exc}")
        raw = None
        source = args.config
        origin = {"config": args.config}
        parsed_probe = parse_config_text(text, source=source)
        raw = parsed_probe.raw
    raw = _apply_overrides(raw, args)
    parsed = parse_config_dict(raw, source=source)
    return parsed, origin


def _solve_table(parsed: ParsedConfig, ex_mean: float):
    """Solve the average-cost MDP at one arrival mean -> lookup table."""
    grid = parsed.mdp
    if grid is None:
        raise ConfigError(
            "MDP_OPTIMAL needs an 'mdp' grid section (or a quantize grid "
            "with finite caps) to solve against"
        )
    t = parsed.template
    model = mdp.build_model(
        scaled_to_mean(t.arrival, ex_mean),
        t.harvest,
        t.rf,
        n_q=grid.n_q,
        n_e=grid.n_e,
        q_max=grid.q_max,
        e_max=grid.e_max,
        n_a=grid.n_a,
    )
    sol = mdp.average_cost_solve(model, method=grid.method)
    return mdp.as_table(model, sol.policy)


def _collect_rows(
    parsed: ParsedConfig, grid: tuple[float, ...], jobs: int
) -> list[dict]:
    """Run all policy x load cells, policy-major, solving MDP tables as
    needed (one average-cost solve per load)."""
    template = parsed.template
    needs_solve = any(
        p.kind == "MDP_OPTIMAL" and p.table is None for p in parsed.policies
    )
    if not needs_solve:
        return analysis.sweep(
            template,
            parsed.policies,
            grid,
            scenario_id=parsed.scenario_id,
            figure_tag=parsed.figure_tag,
            jobs=jobs,
        )
    cells: dict[tuple[int, int], list[dict]] = {}
    for li, ex in enumerate(grid):
        pols = []
        for pol in parsed.policies:
            if pol.kind == "MDP_OPTIMAL" and pol.table is None:
                pol = replace(pol, table=_solve_table(parsed, ex))
            pols.append(pol)
        t_li = replace(template, stream_key=template.stream_key + (li,))
        rows = analysis.sweep(
            t_li,
            pols,
            [ex],
            scenario_id=parsed.scenario_id,
            figure_tag=parsed.figure_tag,
            jobs=jobs,
        )
        for pi, pol in enumerate(pols):
            cells[(pi, li)] = [r for r in rows if r["policy"] == pol.kind]
    ordered: list[dict] = []
    for pi in range(len(parsed.policies)):
        for li in range(len(grid)):
            ordered.extend(cells[(pi, li)])
    return ordered


def _repr_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _manifest(
    command: str,
    origin: dict,
    parsed: ParsedConfig,
    out: str,
    started: str,
    extra: dict | None = None,
) -> dict:
    doc = {
        "schema": 1,
        "tool": "ehsim",
        "tool_version": __version__,
        "command": command,
        "source": origin,
        "scenario_id": parsed.scenario_id,
        "figure_tag": parsed.figure_tag,
        "seed": parsed.template.seed,
        "policies": [p.kind for p in parsed.policies],
        "out": out,
        "started_at": started,
        "finished_at": datetime.now(timezone.utc).isoformat(),
        "config": parsed.raw,
    }
    if extra:
        doc.update(extra)
    return doc


def _deliver(
    body: str,
    args: argparse.Namespace,
    command: str,
    origin: dict,
    parsed: ParsedConfig,
    started: str,
    extra: dict | None = None,
) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(body)
        manifest = _manifest(command, origin, parsed, args.out, started, extra)
        with open(
            args.out + ".manifest.json", "w", encoding="utf-8"
        ) as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        sys.stdout.write(body)


def _print_warnings(parsed: ParsedConfig) -> None:
    for note in parsed.warnings:
        print(f"warning: {note}", file=sys.stderr)


def _cmd_simulate(args, parsed: ParsedConfig, origin: dict, started: str) -> int:
    _print_warnings(parsed)
    base = (dist_mean(parsed.template.arrival),)
    rows = _collect_rows(parsed, base, args.jobs)
    _deliver(
        analysis.rows_to_csv(rows),
        args, "simulate", origin, parsed, started,
        extra={"rows": len(rows), "ex_grid": list(base)},
    )
    return EXIT_OK


def _cmd_sweep(args, parsed: ParsedConfig, origin: dict, started: str) -> int:
    if parsed.ex_grid is None:
        raise ConfigError(
            "sweep needs a 'sweep' load grid in the config (or use simulate)"
        )
    _print_warnings(parsed)
    rows = _collect_rows(parsed, parsed.ex_grid, args.jobs)
    _deliver(
        analysis.rows_to_csv(rows),
        args, "sweep", origin, parsed, started,
        extra={"rows": len(rows), "ex_grid": list(parsed.ex_grid)},
    )
    return EXIT_OK


def _cmd_thresholds(args, parsed: ParsedConfig, origin: dict, started: str) -> int:
    report = analysis.thresholds(parsed.template)
    lines = ["quantity,value"]
    for name in (
        "g_of_EY",
        "E_g_of_Y",
        "E_g_of_hY",
        "E_g_of_hEY",
        "fading_to_linear_boundary",
        "wf_boundary",
    ):
        lines.append(f"{name},{_repr_value(getattr(report, name))}")
    _deliver(
        "\n".join(lines) + "\n", args, "thresholds", origin, parsed, started
    )
    return EXIT_OK


def _require_mdp_grid(parsed: ParsedConfig):
    if parsed.mdp is None:
        raise ConfigError(
            "this command needs an 'mdp' grid section (or a quantize grid "
            "with finite caps)"
        )
    return parsed.mdp


def _build_model(parsed: ParsedConfig):
    grid = _require_mdp_grid(parsed)
    t = parsed.template
    return mdp.build_model(
        t.arrival,
        t.harvest,
        t.rf,
        n_q=grid.n_q,
        n_e=grid.n_e,
        q_max=grid.q_max,
        e_max=grid.e_max,
        n_a=grid.n_a,
    ), grid


def _cmd_mdp_solve(args, parsed: ParsedConfig, origin: dict, started: str) -> int:
    model, grid = _build_model(parsed)
    if grid.alpha is not None:
        sol = mdp.value_iterate(model, grid.alpha)
        extra = {
            "solver": "value-iteration",
            "alpha": grid.alpha,
            "sweeps": sol.n_sweeps,
            "residual": sol.residual,
        }
        policy_idx, values = sol.policy, sol.values
    else:
        sol = mdp.average_cost_solve(model, method=grid.method)
        extra = {
            "solver": grid.method,
            "gain": sol.gain,
            "iterations": sol.n_iter,
        }
        policy_idx, values = sol.policy, sol.bias
    body = mdp.policy_to_csv(model, policy_idx, values)
    _deliver(body, args, "mdp-solve", origin, parsed, started, extra=extra)
    return EXIT_OK


_CHECK_ALPHAS = (0.9, 0.99)
_LIMIT_ALPHA = 0.999


def _cmd_mdp_check(args, parsed: ParsedConfig, origin: dict, started: str) -> int:
    model, grid = _build_model(parsed)
    lines: list[str] = []
    failures = 0

    def record(name: str, ok: bool, detail: str) -> None:
        nonlocal failures
        failures += 0 if ok else 1
        lines.append(f"{name}: {'PASS' if ok else 'FAIL'} ({detail})")

    if model.rf.family == "linear":
        greedy = mdp.greedy_grid_policy(model)
        for alpha in _CHECK_ALPHAS:
            sol = mdp.value_iterate(model, alpha)
            bad = int((sol.policy != greedy).sum())
            record(
                f"greedy-equality[vi@alpha={alpha}]",
                bad == 0,
                f"{bad} mismatch(es) over {model.n_states} states",
            )
        avg = mdp.average_cost_solve(model, method=grid.method)
        bad = int((avg.policy != greedy).sum())
        record(
            "greedy-equality[average-cost]",
            bad == 0,
            f"{bad} mismatch(es), gain {avg.gain:.6g}",
        )
    else:
        lines.append(
            "greedy-equality: SKIPPED (exact greedy optimality holds for "
            "the linear rate family only)"
        )

    checks = mdp.structure_checks(
        model, monotone_alphas=_CHECK_ALPHAS, limit_alpha=_LIMIT_ALPHA
    )
    for alpha in _CHECK_ALPHAS:
        entry = checks["per_alpha"][alpha]
        record(
            f"values-monotone-in-q[alpha={alpha}]",
            entry["monotone_q"],
            "nondecreasing over the queue grid",
        )
        record(
            f"values-monotone-in-e[alpha={alpha}]",
            entry["monotone_e"],
            "nonincreasing over the energy grid",
        )
    record(
        "discounted-gain-gap-decreasing",
        checks["gaps_decreasing"],
        "|(1-alpha) min V - gain| shrinks as alpha -> 1",
    )
    limit_entry = checks["per_alpha"][_LIMIT_ALPHA]
    gap = limit_entry["gain_gap"]
    record(
        f"vanishing-discount[alpha={_LIMIT_ALPHA}]",
        checks["vanishing_discount"],
        f"(1-alpha) min V = {limit_entry['scaled_min_value']:.6g} vs "
        f"gain {checks['gain']:.6g} (gap {gap:+.3g})",
    )
    lines.append(f"overall: {'PASS' if failures == 0 else 'FAIL'}")
    body = "\n".join(lines) + "\n"
    _deliver(
        body, args, "mdp-check", origin, parsed, started,
        extra={"failures": failures},
    )
    if failures:
        raise CheckFailure(f"mdp-check: {failures} check(s) failed")
    return EXIT_OK


def _cmd_hitting_time(args, parsed: ParsedConfig, origin: dict, started: str) -> int:
    report = hitting_time_stats(parsed.template)
    header = (
        "n_returns,mean_tau,se_mean_tau,mean_tau_sq,se_mean_tau_sq,"
        "inconclusive"
    )
    row = ",".join(
        _repr_value(v)
        for v in (
            report.n_returns,
            report.mean_tau,
            report.se_mean_tau,
            report.mean_tau_sq,
            report.se_mean_tau_sq,
            report.inconclusive,
        )
    )
    _deliver(
        header + "\n" + row + "\n",
        args, "hitting-time", origin, parsed, started,
        extra={"n_returns": report.n_returns},
    )
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "thresholds": _cmd_thresholds,
    "mdp-solve": _cmd_mdp_solve,
    "mdp-check": _cmd_mdp_check,
    "hitting-time": _cmd_hitting_time,
}


def _error_record(code: int, exc: BaseException) -> str:
    return json.dumps(
        {
            "error": {
                "code": code,
                "type": type(exc).__name__,
                "message": str(exc),
            }
        },
        sort_keys=True,
    )


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    started = datetime.now(timezone.utc).isoformat()
    try:
        parsed, origin = _load(args)
        return _COMMANDS[args.command](args, parsed, origin, started)
    except ConfigError as exc:
        print(_error_record(EXIT_CONFIG, exc), file=sys.stderr)
        return EXIT_CONFIG
    except CheckFailure as exc:
        print(_error_record(EXIT_CHECK, exc), file=sys.stderr)
        return EXIT_CHECK
    except ValueError as exc:
        # Scenario/command pairing problems surface as ValueError from the
        # library layer (e.g. hitting-time on a non-fixed-spend policy).
        print(_error_record(EXIT_CONFIG, exc), file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - uniform runtime exit path
        print(_error_record(EXIT_RUNTIME, exc), file=sys.stderr)
        return EXIT_RUNTIME
