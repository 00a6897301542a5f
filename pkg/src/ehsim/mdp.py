"""Finite-state MDP for the quantized node: exact dynamic programming.

States are uniform grid points (q, e) in [0, q_max] x [0, e_max]; actions
spend an on-grid amount of energy t_a = e_levels[a] with a <= ie, so the
energy part of the transition stays exactly on grid. The post-service
backlog (q - g(t_a))^+ is rounded to the nearest q level; arrivals and
harvest are required to be grid-aligned pmfs and shift states up with
saturation at the caps. Stage cost is the backlog q, so discounted /
average-cost solutions minimize the (discounted) mean queue.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import MatrixRankWarning, spsolve

from .policy import MdpTable
from .rate import RateFunction, g_eval
from .stochastic import DistributionSpec, discrete_support

__all__ = [
    "MultichainError",
    "MdpModel",
    "DiscountedSolution",
    "AverageCostSolution",
    "build_model",
    "value_iterate",
    "average_cost_solve",
    "discounted_policy_iteration",
    "transition_matrix",
    "greedy_grid_policy",
    "structure_checks",
    "as_table",
    "policy_to_csv",
]

_ALIGN_TOL = 1e-9


class MultichainError(RuntimeError):
    """The policy's chain is not unichain; the gain is not a scalar."""


@dataclass(frozen=True)
class MdpModel:
    q_levels: np.ndarray
    e_levels: np.ndarray
    step_q: float
    step_e: float
    arrival_shifts: np.ndarray  # grid units, int
    arrival_probs: np.ndarray
    harvest_shifts: np.ndarray  # grid units, int
    harvest_probs: np.ndarray
    rf: RateFunction
    cost: np.ndarray  # (n_q, n_e)
    post_idx: np.ndarray  # (n_q, n_a): q index after serving with t_a

    @property
    def n_q(self) -> int:
        return self.q_levels.size

    @property
    def n_e(self) -> int:
        return self.e_levels.size

    @property
    def n_actions(self) -> int:
        return self.post_idx.shape[1]

    @property
    def n_states(self) -> int:
        return self.q_levels.size * self.e_levels.size


@dataclass(frozen=True)
class DiscountedSolution:
    values: np.ndarray  # (n_q, n_e)
    policy: np.ndarray  # int action indices (n_q, n_e)
    actions: np.ndarray  # energy units (n_q, n_e)
    alpha: float
    n_sweeps: int
    residual: float


@dataclass(frozen=True)
class AverageCostSolution:
    gain: float
    bias: np.ndarray  # (n_q, n_e), bias[ref] = 0 for policy-iteration
    policy: np.ndarray
    actions: np.ndarray
    method: str
    n_iter: int
    span_residual: float


def _grid_shifts(
    spec: DistributionSpec, step: float, what: str
) -> tuple[np.ndarray, np.ndarray]:
    values, probs = discrete_support(spec)
    ratio = values / step
    shifts = np.rint(ratio)
    if np.max(np.abs(ratio - shifts)) > _ALIGN_TOL:
        raise ValueError(
            f"{what} support {values.tolist()} is not aligned to the grid "
            f"step {step}"
        )
    if (shifts < 0).any():
        raise ValueError(f"{what} support must be nonnegative")
    return shifts.astype(np.int64), probs.astype(np.float64)


def build_model(
    arrival: DistributionSpec,
    harvest: DistributionSpec,
    rf: RateFunction,
    n_q: int,
    n_e: int,
    q_max: float,
    e_max: float,
    n_a: int | None = None,
) -> MdpModel:
    """Exact quantized model; arrival/harvest must be grid-aligned pmfs.

    Actions are the energy-grid levels themselves (n_a = n_e), so T = e is
    representable and e - t stays exactly on grid.
    """
    if n_q < 2 or n_e < 2:
        raise ValueError("need at least 2 levels per axis")
    if n_a is not None and n_a != n_e:
        raise ValueError("the action grid must coincide with the energy grid")
    if q_max <= 0 or e_max <= 0:
        raise ValueError("caps must be positive")
    step_q = q_max / (n_q - 1)
    step_e = e_max / (n_e - 1)
    q_levels = np.arange(n_q, dtype=np.float64) * step_q
    e_levels = np.arange(n_e, dtype=np.float64) * step_e
    ash, apr = _grid_shifts(arrival, step_q, "arrival")
    hsh, hpr = _grid_shifts(harvest, step_e, "harvest")
    if (ash >= n_q).any() or (hsh >= n_e).any():
        raise ValueError("a single increment exceeds the whole grid")

    served = np.array([g_eval(rf, t) for t in e_levels])  # g(t_a), ascending
    qa = q_levels[:, None] - served[None, :]
    np.maximum(qa, 0.0, out=qa)
    post_idx = np.rint(qa / step_q).astype(np.int64)
    np.clip(post_idx, 0, n_q - 1, out=post_idx)

    cost = np.repeat(q_levels[:, None], n_e, axis=1)
    return MdpModel(
        q_levels=q_levels,
        e_levels=e_levels,
        step_q=step_q,
        step_e=step_e,
        arrival_shifts=ash,
        arrival_probs=apr,
        harvest_shifts=hsh,
        harvest_probs=hpr,
        rf=rf,
        cost=cost,
        post_idx=post_idx,
    )


def _expected_next(model: MdpModel, V: np.ndarray) -> np.ndarray:
    """W[bq, be] = E[V(min(bq + X', n_q-1), min(be + Y', n_e-1))]."""
    nq, ne = V.shape
    Wy = np.zeros_like(V)
    cols = np.arange(ne)
    for s, p in zip(model.harvest_shifts, model.harvest_probs):
        Wy += p * V[:, np.minimum(cols + s, ne - 1)]
    W = np.zeros_like(V)
    rows = np.arange(nq)
    for s, p in zip(model.arrival_shifts, model.arrival_probs):
        W += p * Wy[np.minimum(rows + s, nq - 1), :]
    return W


def _sweep(
    model: MdpModel, V: np.ndarray, alpha: float
) -> tuple[np.ndarray, np.ndarray]:
    """One Bellman minimization; ascending actions with strict improvement
    keep the smallest action on ties."""
    nq, ne = V.shape
    W = _expected_next(model, V)
    V_new = np.full_like(V, np.inf)
    pol = np.zeros((nq, ne), dtype=np.int64)
    for a in range(model.n_actions):
        if a >= ne:
            break
        Wa = W[model.post_idx[:, a], :]  # (nq, ne) indexed by post-q row
        cand = model.cost[:, a:] + alpha * Wa[:, : ne - a]
        view = V_new[:, a:]
        mask = cand < view
        view[mask] = cand[mask]
        pol[:, a:][mask] = a
    return V_new, pol


def value_iterate(
    model: MdpModel,
    alpha: float,
    tol: float = 1e-6,
    max_sweeps: int = 200000,
) -> DiscountedSolution:
    """Discounted value iteration to within tol of the optimal value.

    Stops when the sweep residual drops below tol*(1-alpha)/(2*alpha),
    which bounds the value error of the returned greedy policy by tol.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    thresh = tol * (1.0 - alpha) / (2.0 * alpha)
    V = np.zeros_like(model.cost)
    for it in range(1, max_sweeps + 1):
        V_new, pol = _sweep(model, V, alpha)
        resid = float(np.max(np.abs(V_new - V)))
        V = V_new
        if resid < thresh:
            return DiscountedSolution(
                values=V,
                policy=pol,
                actions=model.e_levels[pol],
                alpha=alpha,
                n_sweeps=it,
                residual=resid,
            )
    raise RuntimeError(f"value iteration did not converge in {max_sweeps}")


def transition_matrix(model: MdpModel, policy: np.ndarray) -> sparse.csr_matrix:
    """Row-stochastic transition matrix of the chain under a fixed policy
    (states flattened as iq * n_e + ie)."""
    nq, ne = model.cost.shape
    n = nq * ne
    policy = np.asarray(policy, dtype=np.int64)
    if policy.shape != (nq, ne):
        raise ValueError("policy shape mismatch")
    be = np.arange(ne)[None, :] - policy
    if (be < 0).any():
        raise ValueError("policy spends energy it does not have")
    bq = model.post_idx[np.arange(nq)[:, None], policy]
    rows_s = np.arange(n)
    rows, cols, data = [], [], []
    for sx, px in zip(model.arrival_shifts, model.arrival_probs):
        nxt_q = np.minimum(bq + sx, nq - 1)
        for sy, py in zip(model.harvest_shifts, model.harvest_probs):
            nxt_e = np.minimum(be + sy, ne - 1)
            rows.append(rows_s)
            cols.append((nxt_q * ne + nxt_e).ravel())
            data.append(np.full(n, px * py))
    P = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    return P.tocsr()


def _evaluate_average(
    model: MdpModel, policy: np.ndarray, ref: int
) -> tuple[float, np.ndarray]:
    """Solve h + g - P h = c with h[ref] = 0 for the fixed policy."""
    nq, ne = model.cost.shape
    n = nq * ne
    P = transition_matrix(model, policy)
    eye = sparse.identity(n, format="csr")
    ones = sparse.csr_matrix(np.ones((n, 1)))
    top = sparse.hstack([eye - P, ones], format="csr")
    ref_row = sparse.csr_matrix(
        (np.ones(1), (np.zeros(1, dtype=int), np.array([ref]))), shape=(1, n + 1)
    )
    A = sparse.vstack([top, ref_row], format="csr")
    rhs = np.concatenate([model.cost.ravel(), [0.0]])
    with warnings.catch_warnings():
        warnings.simplefilter("error", MatrixRankWarning)
        try:
            sol = spsolve(A.tocsc(), rhs)
        except MatrixRankWarning as exc:
            raise MultichainError(
                "policy evaluation is singular; the chain has multiple "
                "recurrent classes"
            ) from exc
    if not np.all(np.isfinite(sol)):
        raise MultichainError(
            "policy evaluation is singular; the chain has multiple "
            "recurrent classes"
        )
    h = sol[:n].reshape(nq, ne)
    return float(sol[n]), h


def average_cost_solve(
    model: MdpModel,
    method: str = "policy-iteration",
    tol: float = 1e-9,
    max_iter: int = 1000,
    tau: float = 0.5,
    ref: int = 0,
) -> AverageCostSolution:
    """Long-run mean-backlog optimal control.

    policy-iteration: exact sparse evaluations; terminates when the policy
    repeats. relative-vi: damped relative value iteration; terminates when
    the span of the Bellman increment is below tol, with the gain taken as
    the midrange of the increment.
    """
    if method == "policy-iteration":
        pol = np.zeros_like(model.cost, dtype=np.int64)
        gain, h = _evaluate_average(model, pol, ref)
        for it in range(1, max_iter + 1):
            _w, pol_new = _sweep(model, h, 1.0)
            if np.array_equal(pol_new, pol):
                return AverageCostSolution(
                    gain=gain,
                    bias=h,
                    policy=pol,
                    actions=model.e_levels[pol],
                    method=method,
                    n_iter=it,
                    span_residual=float("nan"),
                )
            pol = pol_new
            gain, h = _evaluate_average(model, pol, ref)
        raise RuntimeError(f"policy iteration did not settle in {max_iter}")
    if method == "relative-vi":
        if not 0 < tau <= 1:
            raise ValueError("tau must be in (0, 1]")
        h = np.zeros_like(model.cost)
        rq, re = divmod(ref, model.n_e)
        for it in range(1, max_iter + 1):
            w, pol = _sweep(model, h, 1.0)
            diff = w - h
            hi = float(diff.max())
            lo = float(diff.min())
            if hi - lo < tol:
                return AverageCostSolution(
                    gain=0.5 * (hi + lo),
                    bias=h - h[rq, re],
                    policy=pol,
                    actions=model.e_levels[pol],
                    method=method,
                    n_iter=it,
                    span_residual=hi - lo,
                )
            h = (1.0 - tau) * h + tau * (w - w[rq, re])
        raise RuntimeError(f"relative VI did not converge in {max_iter}")
    raise ValueError(f"unknown method {method!r}")


def discounted_policy_iteration(
    model: MdpModel, alpha: float, max_iter: int = 1000
) -> DiscountedSolution:
    """Exact discounted policy iteration (sparse solves); the practical
    route for alpha close to 1 where plain value iteration crawls."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    nq, ne = model.cost.shape
    n = nq * ne
    pol = np.zeros((nq, ne), dtype=np.int64)
    c = model.cost.ravel()
    eye = sparse.identity(n, format="csr")
    V = None
    for it in range(1, max_iter + 1):
        P = transition_matrix(model, pol)
        V = spsolve((eye - alpha * P).tocsc(), c).reshape(nq, ne)
        _w, pol_new = _sweep(model, V, alpha)
        if np.array_equal(pol_new, pol):
            return DiscountedSolution(
                values=V,
                policy=pol,
                actions=model.e_levels[pol],
                alpha=alpha,
                n_sweeps=it,
                residual=0.0,
            )
        pol = pol_new
    raise RuntimeError(f"policy iteration did not settle in {max_iter}")


def greedy_grid_policy(model: MdpModel) -> np.ndarray:
    """Grid version of the drain-everything rule: the smallest action whose
    service covers the backlog, clipped to the energy level."""
    g_at = np.array([g_eval(model.rf, t) for t in model.e_levels])
    a_need = np.searchsorted(g_at, model.q_levels - 1e-9, side="left")
    np.clip(a_need, 0, model.n_actions - 1, out=a_need)
    return np.minimum(a_need[:, None], np.arange(model.n_e)[None, :]).astype(
        np.int64
    )


def structure_checks(
    model: MdpModel,
    monotone_alphas: tuple[float, ...] = (0.9, 0.99),
    limit_alpha: float = 0.999,
    gain_rtol: float = 0.05,
    ref: int = 0,
) -> dict:
    """Qualitative sanity of the solved control problem.

    For each alpha in monotone_alphas the discounted value must be
    nondecreasing in q and nonincreasing in e at every grid point
    (violations are listed with their coordinates). The vanishing-discount
    scaled minimum (1 - alpha) * min v_alpha must approach the average-cost
    gain as alpha rises, landing within gain_rtol of it at limit_alpha.
    """
    avg = average_cost_solve(model, method="policy-iteration", ref=ref)
    alphas = sorted(set(monotone_alphas) | {limit_alpha})
    per_alpha = {}
    violations = []
    mono_q = mono_e = True
    scaled_by_alpha = {}
    for alpha in alphas:
        sol = discounted_policy_iteration(model, alpha)
        V = sol.values
        scaled = (1.0 - alpha) * float(V.min())
        scaled_by_alpha[alpha] = scaled
        entry = {"scaled_min_value": scaled, "gain_gap": scaled - avg.gain}
        if alpha in monotone_alphas:
            bad_q = np.argwhere(np.diff(V, axis=0) < -1e-9)
            bad_e = np.argwhere(np.diff(V, axis=1) > 1e-9)
            violations += [
                ("q", alpha, int(i), int(j)) for i, j in bad_q
            ] + [("e", alpha, int(i), int(j)) for i, j in bad_e]
            entry["monotone_q"] = bad_q.size == 0
            entry["monotone_e"] = bad_e.size == 0
            mono_q &= entry["monotone_q"]
            mono_e &= entry["monotone_e"]
        per_alpha[alpha] = entry
    gaps = [abs(scaled_by_alpha[a] - avg.gain) for a in alphas]
    vanishing = abs(scaled_by_alpha[limit_alpha] - avg.gain) <= gain_rtol * max(
        abs(avg.gain), 1e-12
    )
    return {
        "gain": avg.gain,
        "monotone_q": mono_q,
        "monotone_e": mono_e,
        "violations": violations,
        "scaled_by_alpha": scaled_by_alpha,
        "gaps_decreasing": all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:])),
        "vanishing_discount": vanishing,
        "per_alpha": per_alpha,
    }


def as_table(model: MdpModel, policy: np.ndarray) -> MdpTable:
    """Simulator-ready lookup table (actions in energy units)."""
    return MdpTable(
        actions=model.e_levels[np.asarray(policy, dtype=np.int64)],
        step_q=model.step_q,
        step_e=model.step_e,
    )


def policy_to_csv(
    model: MdpModel, policy: np.ndarray, values: np.ndarray
) -> str:
    """CSV text of the solved policy: q_level, e_level, action, value."""
    lines = ["q_level,e_level,action,value"]
    actions = model.e_levels[np.asarray(policy, dtype=np.int64)]
    for iq in range(model.n_q):
        for ie in range(model.n_e):
            lines.append(
                f"{model.q_levels[iq]:.12g},{model.e_levels[ie]:.12g},"
                f"{actions[iq, ie]:.12g},{values[iq, ie]:.12g}"
            )
    return "\n".join(lines) + "\n"
