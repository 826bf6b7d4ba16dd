"""Monte Carlo policy evaluation and run aggregation.

``monte_carlo_eval`` simulates all episodes in lockstep with vectorized
demand draws; the dynamics are identical to the scalar environment step
(Poisson demand, inventory-capped sales, shortfall penalty at the constraint
step) and the result is deterministic per rng seed.  Reported means are over
total episode reward, i.e. cumulative revenue minus any penalty; the
pre-penalty cumulative revenue at the constraint step is recorded separately
for distribution plots.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .demand import intensity, sample_poisson_batch
from .dp_solver import PolicyTable, state_space
from .environments import EnvConfig, n_joint_actions
from .rl_baselines import SoftmaxPolicy

__all__ = [
    "UniformRandomPolicy",
    "EvalReport",
    "RunResult",
    "monte_carlo_eval",
    "satisfaction_gap",
    "aggregate_runs",
]


class UniformRandomPolicy:
    """Picks a uniformly random joint action each step (baseline policy)."""


@dataclass
class EvalReport:
    n_sims: int
    mean_revenue: float
    std_revenue: float
    standard_error: float
    satisfaction_rate: Optional[float]
    revenue_at_tau_samples: Optional[np.ndarray]
    env_id: Optional[int] = None
    target: Optional[float] = None


@dataclass
class RunResult:
    """One (environment, algorithm, budget, seed) benchmark outcome."""

    env_id: int
    algorithm: str
    episodes: int
    seed: int
    report: Optional[EvalReport]
    exact_value: Optional[float]
    train_s: float
    solve_s: float
    eval_s: float
    status: str


def _select_actions(policy, t, state_idx, rng, n_actions):
    if isinstance(policy, PolicyTable):
        return policy.actions[t][state_idx]
    if isinstance(policy, SoftmaxPolicy):
        probs = policy.probabilities(t)[state_idx]
        u = rng.random(state_idx.shape[0])
        picks = (np.cumsum(probs, axis=1) < u[:, None]).sum(axis=1)
        return np.minimum(picks, n_actions - 1)
    if isinstance(policy, UniformRandomPolicy):
        return rng.integers(0, n_actions, size=state_idx.shape[0])
    raise TypeError(f"unsupported policy type: {type(policy).__name__}")


def monte_carlo_eval(
    config: EnvConfig, policy, n_sims: int, rng: np.random.Generator
) -> EvalReport:
    """Estimate expected total reward from ``n_sims`` simulated episodes.

    Stochastic policies are evaluated by sampling their actions (deployment
    semantics), not by taking the mode.  For constrained configurations the
    report carries the satisfaction rate and the pre-penalty revenue samples
    at the constraint step; unconstrained reports omit both.
    """
    if n_sims < 1:
        raise ValueError("n_sims must be at least 1")
    space = state_space(config)
    n_actions = n_joint_actions(config)
    n_typ = len(config.typologies)
    grids = [np.asarray(ty.price_grid) for ty in config.typologies]
    sizes = [len(g) for g in grids]
    constraint = config.constraint

    inventories = np.tile(
        np.array([ty.initial_inventory for ty in config.typologies], dtype=np.int64),
        (n_sims, 1),
    )
    cumulative = np.zeros(n_sims)
    total_reward = np.zeros(n_sims)
    revenue_at_tau = None

    for t in range(config.horizon):
        state_idx = space.index_batch(t, inventories, cumulative)
        joint = np.asarray(_select_actions(policy, t, state_idx, rng, n_actions))
        step_revenue = np.zeros(n_sims)
        rem = joint
        price_idx_per_typ = [None] * n_typ
        for i in range(n_typ - 1, -1, -1):
            rem, p_idx = np.divmod(rem, sizes[i])
            price_idx_per_typ[i] = p_idx
        for i in range(n_typ):
            prices = grids[i][price_idx_per_typ[i]]
            rates = intensity(config.typologies[i].demand, prices, t)
            demand = sample_poisson_batch(np.asarray(rates, dtype=float), rng)
            sales = np.minimum(demand, inventories[:, i])
            inventories[:, i] -= sales
            step_revenue += prices * sales
        cumulative += step_revenue
        reward = step_revenue
        if constraint is not None and t + 1 == constraint.tau:
            revenue_at_tau = cumulative.copy()
            reward = reward - constraint.mu * np.maximum(0.0, constraint.target - cumulative)
        total_reward += reward

    mean = float(total_reward.mean())
    std = float(total_reward.std(ddof=1)) if n_sims > 1 else 0.0
    if constraint is not None:
        satisfaction = float((revenue_at_tau >= constraint.target).mean())
        samples = revenue_at_tau
        target = constraint.target
    else:
        satisfaction = None
        samples = None
        target = None
    return EvalReport(
        n_sims=n_sims,
        mean_revenue=mean,
        std_revenue=std,
        standard_error=std / float(np.sqrt(n_sims)),
        satisfaction_rate=satisfaction,
        revenue_at_tau_samples=samples,
        env_id=config.env_id,
        target=target,
    )


def satisfaction_gap(report_a: EvalReport, report_b: EvalReport) -> float:
    """Difference in constraint-satisfaction rates, ``a - b``."""
    if report_a.satisfaction_rate is None or report_b.satisfaction_rate is None:
        raise ValueError("both reports must come from constrained configurations")
    if (
        report_a.env_id is not None
        and report_b.env_id is not None
        and report_a.env_id != report_b.env_id
    ):
        raise ValueError("reports come from different environments")
    return report_a.satisfaction_rate - report_b.satisfaction_rate


def aggregate_runs(results: list[RunResult]) -> dict[tuple[int, str, int], tuple[float, float, int]]:
    """Mean and sample std (n-1) of mean_revenue per (env, algorithm, budget).

    Failed runs are skipped.  A single-run cell reports std 0.0 by convention
    (the count in the value tuple makes the convention visible to callers).
    """
    cells: dict[tuple[int, str, int], list[float]] = {}
    for r in results:
        if r.status != "ok" or r.report is None:
            continue
        cells.setdefault((r.env_id, r.algorithm, r.episodes), []).append(r.report.mean_revenue)
    out = {}
    for key, vals in cells.items():
        arr = np.asarray(vals)
        std = float(arr.std(ddof=1)) if len(vals) > 1 else 0.0
        out[key] = (float(arr.mean()), std, len(vals))
    if not out:
        raise ValueError("no successful runs to aggregate")
    return out
