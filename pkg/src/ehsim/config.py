"""JSON scenario configs and named presets.

A config is a JSON object describing one scenario: arrival/harvest/sensing
distributions, the rate function, one or more policies, buffer caps,
horizon/replication controls, an optional load sweep grid, and an optional
MDP grid section. ``parse_config_text`` / ``parse_config_dict`` validate the
object strictly (unknown keys are errors that name the offending key path)
and return a :class:`ParsedConfig` bundling a ready ``ScenarioConfig``
template with the policy list and grids.

Named presets (``fig2`` .. ``fig10``, ``linear-small``,
``sensing-feasible``, ``sensing-infeasible``) are plain config dicts that
flow through the same parser, so everything a preset does can also be done
from a user file.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from typing import Any

from .policy import NEEDS_FADING, POLICY_KINDS, PolicySpec, resolve_epsilon
from .rate import RateFunction, g_eval
from .sim import QuantizeGrid, ScenarioConfig
from .stochastic import (
    Deterministic,
    DiscretePmf,
    DistributionSpec,
    Erlang,
    Exponential,
    HyperExponential,
    TruncatedPoisson,
    Uniform,
    dist_mean,
    fit_truncated_poisson,
    hyperexp_recipe,
)

__all__ = [
    "ConfigError",
    "MdpGridSpec",
    "ParsedConfig",
    "PRESET_NAMES",
    "SCHEMA_VERSION",
    "parse_config_dict",
    "parse_config_text",
    "preset_dict",
]

SCHEMA_VERSION = 1

_TOP_KEYS = frozenset(
    {
        "version",
        "scenario_id",
        "figure_tag",
        "arrival",
        "harvest",
        "sensing",
        "fading",
        "rate_function",
        "policy",
        "policies",
        "energy_cap",
        "data_cap",
        "horizon",
        "warmup",
        "replications",
        "seed",
        "sweep",
        "quantize",
        "mdp",
    }
)

_REQUIRED_KEYS = ("arrival", "harvest", "rate_function", "horizon")


class ConfigError(ValueError):
    """A scenario config failed validation; the message names the key."""


@dataclass(frozen=True)
class MdpGridSpec:
    """Grid section for building/solving the finite MDP.

    ``method`` selects the average-cost solver; ``alpha`` (optional)
    additionally requests a discounted solve at that factor.
    """

    n_q: int
    n_e: int
    q_max: float
    e_max: float
    n_a: int | None = None
    method: str = "policy-iteration"
    alpha: float | None = None


@dataclass(frozen=True)
class ParsedConfig:
    """A validated config: template scenario plus policy list and grids.

    ``template.policy`` is the first policy; sweeps substitute the others.
    ``ex_grid`` is the optional arrival-mean sweep grid, ``mdp`` the
    optional/derived MDP grid section. ``warnings`` carries non-fatal
    advisories (e.g. a throughput-optimal policy configured beyond its
    stability boundary).
    """

    template: ScenarioConfig
    policies: tuple[PolicySpec, ...]
    ex_grid: tuple[float, ...] | None
    mdp: MdpGridSpec | None
    scenario_id: str
    figure_tag: str
    warnings: tuple[str, ...] = ()
    raw: dict = field(default_factory=dict, compare=False)


def _require(obj: Any, kind: type, where: str, what: str) -> Any:
    if not isinstance(obj, kind) or isinstance(obj, bool):
        raise ConfigError(f"{where}: expected {what}, got {type(obj).__name__}")
    return obj


def _number(obj: Any, where: str) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {type(obj).__name__}")
    return float(obj)


def _integer(obj: Any, where: str) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise ConfigError(
            f"{where}: expected an integer, got {type(obj).__name__}"
        )
    return obj


def _check_keys(obj: dict, allowed: frozenset | set, where: str) -> None:
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(
            f"{where}: unknown key(s) {', '.join(repr(k) for k in unknown)}"
        )


_DIST_FAMILY_KEYS = {
    "exponential": {"mean"},
    "uniform": {"lo", "hi"},
    "erlang": {"stages", "mean"},
    "hyperexp": {"mean", "means", "probs"},
    "truncated_poisson": {"mean", "lam", "cutoff"},
    "pmf": {"values", "probs"},
    "deterministic": {"value"},
}


def parse_distribution(obj: Any, where: str) -> DistributionSpec:
    """Parse one distribution object, e.g. {"family": "exponential", ...}."""
    _require(obj, dict, where, "an object")
    if "family" not in obj:
        raise ConfigError(f"{where}: missing 'family'")
    family = _require(obj["family"], str, f"{where}.family", "a string")
    if family not in _DIST_FAMILY_KEYS:
        raise ConfigError(
            f"{where}.family: unknown family {family!r}; expected one of "
            + ", ".join(sorted(_DIST_FAMILY_KEYS))
        )
    _check_keys(obj, _DIST_FAMILY_KEYS[family] | {"family"}, where)
    try:
        if family == "exponential":
            return Exponential(mean=_number(obj.get("mean"), f"{where}.mean"))
        if family == "uniform":
            return Uniform(
                lo=_number(obj.get("lo"), f"{where}.lo"),
                hi=_number(obj.get("hi"), f"{where}.hi"),
            )
        if family == "erlang":
            return Erlang(
                stages=_integer(obj.get("stages"), f"{where}.stages"),
                mean=_number(obj.get("mean"), f"{where}.mean"),
            )
        if family == "hyperexp":
            if "means" in obj or "probs" in obj:
                if "mean" in obj:
                    raise ConfigError(
                        f"{where}: give either 'mean' (recipe) or "
                        "'means'+'probs', not both"
                    )
                means = _require(
                    obj.get("means"), list, f"{where}.means", "a list"
                )
                probs = _require(
                    obj.get("probs"), list, f"{where}.probs", "a list"
                )
                return HyperExponential(
                    means=tuple(
                        _number(m, f"{where}.means[{i}]")
                        for i, m in enumerate(means)
                    ),
                    probs=tuple(
                        _number(p, f"{where}.probs[{i}]")
                        for i, p in enumerate(probs)
                    ),
                )
            return hyperexp_recipe(_number(obj.get("mean"), f"{where}.mean"))
        if family == "truncated_poisson":
            cutoff = _integer(obj.get("cutoff"), f"{where}.cutoff")
            has_mean, has_lam = "mean" in obj, "lam" in obj
            if has_mean == has_lam:
                raise ConfigError(
                    f"{where}: give exactly one of 'mean' or 'lam'"
                )
            if has_lam:
                return TruncatedPoisson(
                    lam=_number(obj["lam"], f"{where}.lam"), cutoff=cutoff
                )
            return fit_truncated_poisson(
                _number(obj["mean"], f"{where}.mean"), cutoff
            )
        if family == "pmf":
            values = _require(
                obj.get("values"), list, f"{where}.values", "a list"
            )
            probs = _require(obj.get("probs"), list, f"{where}.probs", "a list")
            return DiscretePmf(
                values=tuple(
                    _number(v, f"{where}.values[{i}]")
                    for i, v in enumerate(values)
                ),
                probs=tuple(
                    _number(p, f"{where}.probs[{i}]")
                    for i, p in enumerate(probs)
                ),
            )
        return Deterministic(value=_number(obj.get("value"), f"{where}.value"))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


_RATE_KEYS = frozenset({"family", "coef"})


def parse_rate_function(obj: Any, where: str) -> RateFunction:
    _require(obj, dict, where, "an object")
    _check_keys(obj, _RATE_KEYS, where)
    if "family" not in obj:
        raise ConfigError(f"{where}: missing 'family'")
    family = _require(obj["family"], str, f"{where}.family", "a string")
    coef = _number(obj.get("coef", 1.0), f"{where}.coef")
    try:
        return RateFunction(family=family, coef=coef)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


_POLICY_KEYS = frozenset({"kind", "epsilon", "c", "outer", "inner", "power"})


def parse_policy(obj: Any, where: str) -> PolicySpec:
    """Parse a policy object ({"kind": "TO", ...}) or bare kind string."""
    if isinstance(obj, str):
        obj = {"kind": obj}
    _require(obj, dict, where, "an object or policy-kind string")
    _check_keys(obj, _POLICY_KEYS, where)
    if "kind" not in obj:
        raise ConfigError(f"{where}: missing 'kind'")
    kind = _require(obj["kind"], str, f"{where}.kind", "a string")
    kwargs: dict[str, Any] = {}
    for name in ("epsilon", "c", "outer", "inner", "power"):
        if name in obj:
            kwargs[name] = _number(obj[name], f"{where}.{name}")
    try:
        return PolicySpec(kind=kind, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


_QUANTIZE_KEYS = frozenset({"n_q", "n_e"})
_MDP_KEYS = frozenset({"n_q", "n_e", "q_max", "e_max", "n_a", "method", "alpha"})
_MDP_METHODS = ("policy-iteration", "relative-value-iteration")


def _parse_quantize(obj: Any, where: str) -> QuantizeGrid:
    _require(obj, dict, where, "an object")
    _check_keys(obj, _QUANTIZE_KEYS, where)
    for key in ("n_q", "n_e"):
        if key not in obj:
            raise ConfigError(f"{where}: missing {key!r}")
    try:
        return QuantizeGrid(
            n_q=_integer(obj["n_q"], f"{where}.n_q"),
            n_e=_integer(obj["n_e"], f"{where}.n_e"),
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _parse_mdp(
    obj: Any,
    where: str,
    quantize: QuantizeGrid | None,
    data_cap: float,
    energy_cap: float,
) -> MdpGridSpec:
    _require(obj, dict, where, "an object")
    _check_keys(obj, _MDP_KEYS, where)

    def _fallback_int(key: str, default: int | None) -> int:
        if key in obj:
            return _integer(obj[key], f"{where}.{key}")
        if default is None:
            raise ConfigError(f"{where}: missing {key!r} (no quantize grid)")
        return default

    def _fallback_num(key: str, default: float) -> float:
        if key in obj:
            return _number(obj[key], f"{where}.{key}")
        if not math.isfinite(default):
            raise ConfigError(f"{where}: missing {key!r} (cap is unbounded)")
        return default

    n_q = _fallback_int("n_q", quantize.n_q if quantize else None)
    n_e = _fallback_int("n_e", quantize.n_e if quantize else None)
    q_max = _fallback_num("q_max", data_cap)
    e_max = _fallback_num("e_max", energy_cap)
    n_a = _integer(obj["n_a"], f"{where}.n_a") if "n_a" in obj else None
    method = obj.get("method", "policy-iteration")
    method = _require(method, str, f"{where}.method", "a string")
    if method not in _MDP_METHODS:
        raise ConfigError(
            f"{where}.method: unknown method {method!r}; expected one of "
            + ", ".join(_MDP_METHODS)
        )
    alpha = None
    if "alpha" in obj:
        alpha = _number(obj["alpha"], f"{where}.alpha")
        if not 0.0 < alpha < 1.0:
            raise ConfigError(f"{where}.alpha: must lie strictly in (0, 1)")
    if n_q < 2 or n_e < 2:
        raise ConfigError(f"{where}: n_q and n_e must be at least 2")
    if not q_max > 0 or not e_max > 0:
        raise ConfigError(f"{where}: q_max and e_max must be positive")
    return MdpGridSpec(
        n_q=n_q, n_e=n_e, q_max=q_max, e_max=e_max, n_a=n_a,
        method=method, alpha=alpha,
    )


def _parse_cap(obj: Any, where: str) -> float:
    if obj is None:
        return math.inf
    cap = _number(obj, where)
    if not cap > 0:
        raise ConfigError(f"{where}: cap must be positive (omit for unbounded)")
    return cap


def _parse_sweep(obj: Any, where: str) -> tuple[float, ...]:
    if isinstance(obj, dict):
        _check_keys(obj, {"ex_grid"}, where)
        if "ex_grid" not in obj:
            raise ConfigError(f"{where}: missing 'ex_grid'")
        obj = obj["ex_grid"]
        where = f"{where}.ex_grid"
    _require(obj, list, where, "a list of arrival means")
    if not obj:
        raise ConfigError(f"{where}: grid must be non-empty")
    grid = tuple(_number(v, f"{where}[{i}]") for i, v in enumerate(obj))
    for i in range(1, len(grid)):
        if not grid[i] > grid[i - 1]:
            raise ConfigError(f"{where}: grid must be strictly increasing")
    if grid[0] <= 0:
        raise ConfigError(f"{where}: arrival means must be positive")
    return grid


def _stability_warnings(
    policies: tuple[PolicySpec, ...],
    arrival: DistributionSpec,
    harvest: DistributionSpec,
    rf: RateFunction,
    fading: DiscretePmf | None,
    ex_grid: tuple[float, ...] | None,
) -> tuple[str, ...]:
    """Warn when a throughput-optimal policy is configured beyond its rate.

    Advisory only. The long-run service rate of the fixed-spend rule is
    exact — g(E[Y]-eps) without fading, E_h[g(h (E[Y]-eps))] with — so a
    base load or sweep point at/above it cannot be stable for that policy.
    """
    ey = dist_mean(harvest)
    loads = ex_grid if ex_grid is not None else (dist_mean(arrival),)
    notes = []
    for pol in policies:
        if pol.kind not in ("TO", "UNFADED_TO"):
            continue
        spend = max(ey - resolve_epsilon(pol, ey), 0.0)
        if fading is not None:
            boundary = sum(
                p * g_eval(rf, h * spend)
                for h, p in zip(fading.values, fading.probs)
            )
            label = "E[g(h (E[Y]-eps))]"
        else:
            boundary = g_eval(rf, spend)
            label = "g(E[Y]-eps)"
        bad = [x for x in loads if x >= boundary]
        if bad:
            notes.append(
                f"policy {pol.kind}: arrival mean(s) "
                f"{', '.join(f'{x:g}' for x in bad)} at or above the "
                f"stability boundary {label} = {boundary:.6g}; those "
                "runs cannot stabilize"
            )
    return tuple(notes)


def parse_config_dict(obj: Any, source: str = "config") -> ParsedConfig:
    """Validate a config dict and build the scenario template."""
    _require(obj, dict, source, "a JSON object")
    _check_keys(obj, _TOP_KEYS, source)
    version = obj.get("version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"{source}.version: unsupported version {version!r} "
            f"(this build reads version {SCHEMA_VERSION})"
        )
    for key in _REQUIRED_KEYS:
        if key not in obj:
            raise ConfigError(f"{source}: missing required key {key!r}")
    if ("policy" in obj) == ("policies" in obj):
        raise ConfigError(
            f"{source}: give exactly one of 'policy' or 'policies'"
        )

    scenario_id = obj.get("scenario_id", "custom")
    scenario_id = _require(
        scenario_id, str, f"{source}.scenario_id", "a string"
    )
    figure_tag = _require(
        obj.get("figure_tag", ""), str, f"{source}.figure_tag", "a string"
    )

    arrival = parse_distribution(obj["arrival"], f"{source}.arrival")
    harvest = parse_distribution(obj["harvest"], f"{source}.harvest")
    sensing = (
        parse_distribution(obj["sensing"], f"{source}.sensing")
        if "sensing" in obj and obj["sensing"] is not None
        else None
    )
    fading = None
    if "fading" in obj and obj["fading"] is not None:
        fading = parse_distribution(obj["fading"], f"{source}.fading")
        if not isinstance(fading, DiscretePmf):
            raise ConfigError(
                f"{source}.fading: fading must be a finite pmf "
                "(family 'pmf')"
            )
    rf = parse_rate_function(obj["rate_function"], f"{source}.rate_function")

    if "policy" in obj:
        policies = (parse_policy(obj["policy"], f"{source}.policy"),)
    else:
        plist = _require(
            obj["policies"], list, f"{source}.policies", "a list"
        )
        if not plist:
            raise ConfigError(f"{source}.policies: list must be non-empty")
        policies = tuple(
            parse_policy(p, f"{source}.policies[{i}]")
            for i, p in enumerate(plist)
        )
    kinds = [p.kind for p in policies]
    if len(set(kinds)) != len(kinds):
        raise ConfigError(
            f"{source}.policies: duplicate policy kind(s); each kind may "
            "appear once"
        )
    for i, pol in enumerate(policies):
        if pol.kind in NEEDS_FADING and fading is None:
            raise ConfigError(
                f"{source}.policies[{i}]: policy {pol.kind} needs a "
                "'fading' pmf in the scenario"
            )

    energy_cap = _parse_cap(obj.get("energy_cap"), f"{source}.energy_cap")
    data_cap = _parse_cap(obj.get("data_cap"), f"{source}.data_cap")
    horizon = _integer(obj["horizon"], f"{source}.horizon")
    warmup = (
        _integer(obj["warmup"], f"{source}.warmup") if "warmup" in obj else None
    )
    replications = _integer(
        obj.get("replications", 1), f"{source}.replications"
    )
    seed = _integer(obj.get("seed", 0), f"{source}.seed")

    quantize = (
        _parse_quantize(obj["quantize"], f"{source}.quantize")
        if "quantize" in obj
        else None
    )
    ex_grid = (
        _parse_sweep(obj["sweep"], f"{source}.sweep") if "sweep" in obj else None
    )

    mdp = None
    if "mdp" in obj:
        mdp = _parse_mdp(
            obj["mdp"], f"{source}.mdp", quantize, data_cap, energy_cap
        )
    elif quantize is not None and math.isfinite(data_cap) and math.isfinite(
        energy_cap
    ):
        mdp = MdpGridSpec(
            n_q=quantize.n_q, n_e=quantize.n_e, q_max=data_cap,
            e_max=energy_cap,
        )

    try:
        template = ScenarioConfig(
            arrival=arrival,
            harvest=harvest,
            rf=rf,
            policy=policies[0],
            horizon=horizon,
            sensing=sensing,
            fading=fading,
            energy_cap=energy_cap,
            data_cap=data_cap,
            warmup=warmup,
            replications=replications,
            seed=seed,
            quantize=quantize,
        )
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    # Every listed policy must be valid for this scenario, not just the
    # first; probe by substitution so pairing rules live in one place.
    from dataclasses import replace as _replace

    for i, pol in enumerate(policies[1:], start=1):
        try:
            _replace(template, policy=pol)
        except ValueError as exc:
            raise ConfigError(f"{source}.policies[{i}]: {exc}") from exc

    warnings = _stability_warnings(
        policies, arrival, harvest, rf, fading, ex_grid
    )
    return ParsedConfig(
        template=template,
        policies=policies,
        ex_grid=ex_grid,
        mdp=mdp,
        scenario_id=scenario_id,
        figure_tag=figure_tag,
        warnings=warnings,
        raw=copy.deepcopy(obj) if isinstance(obj, dict) else {},
    )


def parse_config_text(text: str, source: str = "config") -> ParsedConfig:
    """Parse JSON text, mapping syntax errors to line/column diagnostics."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{source}: invalid JSON at line {exc.lineno}, "
            f"column {exc.colno}: {exc.msg}"
        ) from exc
    return parse_config_dict(obj, source=source)


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

_FADING_PMF = {
    "family": "pmf",
    "values": [0.1, 0.5, 1.0, 2.2],
    "probs": [0.1, 0.3, 0.4, 0.2],
}


def _preset_fig2() -> dict:
    return {
        "version": 1,
        "scenario_id": "fig2",
        "figure_tag": "fig2",
        "arrival": {"family": "truncated_poisson", "mean": 0.7, "cutoff": 5},
        "harvest": {"family": "truncated_poisson", "mean": 1.0, "cutoff": 5},
        "rate_function": {"family": "log2", "coef": 1.0},
        "policies": ["MDP_OPTIMAL", "TO", "GREEDY"],
        "energy_cap": 50.0,
        "data_cap": 50.0,
        "quantize": {"n_q": 51, "n_e": 51},
        "mdp": {"method": "policy-iteration"},
        "horizon": 200000,
        "replications": 5,
        "seed": 1002,
        "sweep": [0.3, 0.5, 0.7, 0.9, 0.95],
    }


def _preset_fig3() -> dict:
    return {
        "version": 1,
        "scenario_id": "fig3",
        "figure_tag": "fig3",
        "arrival": {"family": "exponential", "mean": 2.0},
        "harvest": {"family": "exponential", "mean": 1.0},
        "rate_function": {"family": "linear", "coef": 10.0},
        "policies": ["UNBUFFERED", "TO", "GREEDY", "MTO"],
        "horizon": 400000,
        "replications": 5,
        "seed": 1003,
        "sweep": [2.0, 4.0, 6.0, 8.0],
    }


def _preset_fig4() -> dict:
    cfg = _preset_fig3()
    cfg.update(
        scenario_id="fig4",
        figure_tag="fig4",
        arrival={"family": "uniform", "lo": 0.0, "hi": 4.0},
        harvest={"family": "uniform", "lo": 0.0, "hi": 2.0},
        seed=1004,
    )
    return cfg


def _preset_fig5() -> dict:
    return {
        "version": 1,
        "scenario_id": "fig5",
        "figure_tag": "fig5",
        "arrival": {"family": "exponential", "mean": 1.0},
        "harvest": {"family": "exponential", "mean": 10.0},
        "rate_function": {"family": "loge", "coef": 1.0},
        "policies": ["UNBUFFERED", "TO", "GREEDY", "MTO"],
        "horizon": 1000000,
        "replications": 10,
        "seed": 1005,
        "sweep": [1.0, 1.8, 2.1, 2.2, 2.3, 2.6],
    }


def _preset_fig6() -> dict:
    cfg = _preset_fig5()
    cfg.update(
        scenario_id="fig6",
        figure_tag="fig6",
        arrival={"family": "erlang", "stages": 5, "mean": 1.0},
        harvest={"family": "erlang", "stages": 5, "mean": 10.0},
        seed=1006,
    )
    return cfg


def _preset_fig7() -> dict:
    return {
        "version": 1,
        "scenario_id": "fig7",
        "figure_tag": "fig7",
        "arrival": {"family": "erlang", "stages": 5, "mean": 8.0},
        "harvest": {"family": "erlang", "stages": 5, "mean": 1.0},
        "fading": dict(_FADING_PMF),
        "rate_function": {"family": "linear", "coef": 10.0},
        "policies": ["FADING_TO_LINEAR", "UNFADED_TO", "GREEDY", "UNBUFFERED"],
        "horizon": 400000,
        "replications": 5,
        "seed": 1007,
        "sweep": [8.0, 12.0, 15.0, 25.0],
    }


def _preset_fig8() -> dict:
    cfg = _preset_fig7()
    cfg.update(
        scenario_id="fig8",
        figure_tag="fig8",
        arrival={"family": "hyperexp", "mean": 8.0},
        harvest={"family": "hyperexp", "mean": 1.0},
        seed=1008,
    )
    return cfg


def _preset_fig9() -> dict:
    return {
        "version": 1,
        "scenario_id": "fig9",
        "figure_tag": "fig9",
        "arrival": {"family": "erlang", "stages": 5, "mean": 0.3},
        "harvest": {"family": "erlang", "stages": 5, "mean": 1.0},
        "fading": dict(_FADING_PMF),
        "rate_function": {"family": "loge", "coef": 1.0},
        "policies": ["WF", "MWF", "TO", "MTO", "GREEDY", "UNBUFFERED"],
        "horizon": 400000,
        "replications": 5,
        "seed": 1009,
        "sweep": [0.3, 0.5, 0.65],
    }


def _preset_fig10() -> dict:
    cfg = _preset_fig9()
    cfg.update(
        scenario_id="fig10",
        figure_tag="fig10",
        arrival={"family": "hyperexp", "mean": 0.3},
        harvest={"family": "hyperexp", "mean": 1.0},
        seed=1010,
    )
    return cfg


def _preset_linear_small() -> dict:
    return {
        "version": 1,
        "scenario_id": "linear-small",
        "figure_tag": "",
        "arrival": {
            "family": "pmf",
            "values": [0.0, 1.0, 2.0],
            "probs": [0.5, 0.35, 0.15],
        },
        "harvest": {
            "family": "pmf",
            "values": [0.0, 1.0, 2.0],
            "probs": [0.05, 0.45, 0.5],
        },
        "rate_function": {"family": "linear", "coef": 10.0},
        "policies": ["MDP_OPTIMAL", "GREEDY"],
        "energy_cap": 2.0,
        "data_cap": 20.0,
        "quantize": {"n_q": 21, "n_e": 21},
        "mdp": {"method": "policy-iteration"},
        "horizon": 100000,
        "replications": 3,
        "seed": 1011,
    }


def _preset_sensing(power: float, tag: str, seed: int) -> dict:
    return {
        "version": 1,
        "scenario_id": tag,
        "figure_tag": "",
        "arrival": {"family": "exponential", "mean": 0.3},
        "harvest": {"family": "erlang", "stages": 5, "mean": 1.0},
        "sensing": {"family": "deterministic", "value": 0.3},
        "rate_function": {"family": "loge", "coef": 1.0},
        "policy": {"kind": "CONST_POWER", "power": power},
        "horizon": 1000000,
        "replications": 3,
        "seed": seed,
    }


_PRESET_BUILDERS = {
    "fig2": _preset_fig2,
    "fig3": _preset_fig3,
    "fig4": _preset_fig4,
    "fig5": _preset_fig5,
    "fig6": _preset_fig6,
    "fig7": _preset_fig7,
    "fig8": _preset_fig8,
    "fig9": _preset_fig9,
    "fig10": _preset_fig10,
    "linear-small": _preset_linear_small,
    "sensing-feasible": lambda: _preset_sensing(0.5, "sensing-feasible", 1013),
    "sensing-infeasible": lambda: _preset_sensing(
        0.8, "sensing-infeasible", 1014
    ),
}

PRESET_NAMES = tuple(sorted(_PRESET_BUILDERS))


def preset_dict(name: str) -> dict:
    """Return the named preset as a plain config dict (deep copy)."""
    try:
        builder = _PRESET_BUILDERS[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; available: " + ", ".join(PRESET_NAMES)
        ) from None
    return copy.deepcopy(builder())


def load_preset(name: str) -> ParsedConfig:
    """Parse the named preset through the standard config path."""
    return parse_config_dict(preset_dict(name), source=f"preset:{name}")
