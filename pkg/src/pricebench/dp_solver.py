"""Exact backward induction over the discretized pricing state space.

States at epoch ``t`` are (inventory per typology, revenue bin); the revenue
axis exists only for constrained configurations and collapses to a single
bin once the constraint step has passed, since later rewards no longer
depend on accumulated revenue.  The solver works for any nonnegative rate
function, so the same recursion serves both the oracle benchmark (true
rates) and the fitted pipeline (rates estimated from random episodes).

Value convention: ``V[T] = 0`` and the stored policy is the argmax of the
one-step lookahead, ties broken toward the lowest joint action index.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .demand import NonlinearDemand, intensity, sales_pmf
from .environments import EnvConfig, n_joint_actions, unflatten_action
from .estimation import FeatureSet, RegressionModel, collect_random_episodes, fit_ols, predict_rate

__all__ = [
    "RateFn",
    "StateSpace",
    "state_space",
    "revenue_to_bin",
    "revenue_to_bin_array",
    "ValueFunction",
    "PolicyTable",
    "DpTimings",
    "solve_backward",
    "exact_policy_value",
    "fitted_dp",
    "oracle_rate_fn",
]

RateFn = Callable[[int, float, int], float]


def _max_bin_index(r_max: float, width: float) -> int:
    # ceil with a one-ulp guard so integer quotients never round up a bin
    return int(math.ceil(r_max / width - 1e-9))


def revenue_to_bin(revenue: float, width: float, r_max: float) -> int:
    """Half-up rounding of ``revenue / width``, clamped to the bin range."""
    if revenue < 0:
        raise ValueError("revenue must be nonnegative")
    idx = int(math.floor(revenue / width + 0.5))
    hi = _max_bin_index(r_max, width)
    return hi if idx > hi else idx


def revenue_to_bin_array(revenues: np.ndarray, width: float, r_max: float) -> np.ndarray:
    idx = np.floor(revenues / width + 0.5).astype(np.int64)
    return np.clip(idx, 0, _max_bin_index(r_max, width))


@dataclass(frozen=True)
class StateSpace:
    """Per-epoch state enumeration and flat index maps.

    Flat indices are row-major over (inventory_1, ..., inventory_K, revenue
    bin); the revenue axis is present only when ``bin_width`` is set.
    """

    horizon: int
    inventory_caps: tuple[int, ...]
    bin_width: Optional[float]
    r_max: Optional[float]
    tau: Optional[int]

    @property
    def constrained(self) -> bool:
        return self.bin_width is not None

    def n_bins(self, t: int) -> int:
        if not self.constrained:
            raise ValueError("no revenue axis without a constraint")
        if t > self.tau:
            return 1
        return _max_bin_index(self.r_max, self.bin_width) + 1

    def shape(self, t: int) -> tuple[int, ...]:
        inv = tuple(c + 1 for c in self.inventory_caps)
        if self.constrained:
            return inv + (self.n_bins(t),)
        return inv

    def n_states(self, t: int) -> int:
        return math.prod(self.shape(t))

    def index(self, t: int, inventories, revenue: float = 0.0) -> int:
        idx = 0
        for inv, cap in zip(inventories, self.inventory_caps):
            if not 0 <= inv <= cap:
                raise ValueError(f"inventory {inv} outside [0, {cap}]")
            idx = idx * (cap + 1) + inv
        if self.constrained:
            nb = self.n_bins(t)
            b = 0 if nb == 1 else revenue_to_bin(revenue, self.bin_width, self.r_max)
            idx = idx * nb + b
        return idx

    def index_batch(self, t: int, inventories: np.ndarray, revenues: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`index`; ``inventories`` is (n, K)."""
        idx = np.zeros(inventories.shape[0], dtype=np.int64)
        for i, cap in enumerate(self.inventory_caps):
            idx = idx * (cap + 1) + inventories[:, i]
        if self.constrained:
            nb = self.n_bins(t)
            if nb == 1:
                idx = idx * nb
            else:
                bins = revenue_to_bin_array(revenues, self.bin_width, self.r_max)
                idx = idx * nb + bins
        return idx


def state_space(config: EnvConfig) -> StateSpace:
    caps = tuple(ty.initial_inventory for ty in config.typologies)
    if config.constraint is None:
        return StateSpace(config.horizon, caps, None, None, None)
    r_max = sum(ty.initial_inventory * max(ty.price_grid) for ty in config.typologies)
    return StateSpace(config.horizon, caps, config.revenue_bin_width, r_max, config.constraint.tau)


@dataclass
class ValueFunction:
    """Per-epoch flat value tables, ``values[t]`` aligned with StateSpace indices."""

    values: list[np.ndarray]


@dataclass
class PolicyTable:
    """Per-epoch flat joint-action tables (deterministic policy)."""

    actions: list[np.ndarray]


@dataclass(frozen=True)
class DpTimings:
    train_s: float
    solve_s: float


def _sales_matrix(rate: float, cap: int) -> np.ndarray:
    """Row ``n`` is the sales distribution when ``n`` units remain."""
    mat = np.zeros((cap + 1, cap + 1))
    for n in range(cap + 1):
        mat[n, : n + 1] = sales_pmf(rate, n)
    return mat


def solve_backward(config: EnvConfig, rate_fn: RateFn) -> tuple[ValueFunction, PolicyTable]:
    """Bellman backward induction from ``V[horizon] = 0``.

    ``rate_fn(typology, price, t)`` must be nonnegative on the grid.  The
    expectation over joint sales uses the independent product of per-typology
    truncated distributions; successor revenue is re-binned half-up and the
    shortfall penalty is charged on the binned successor value in the step
    that completes the constraint period.
    """
    space = state_space(config)
    horizon = config.horizon
    grids = [ty.price_grid for ty in config.typologies]
    caps = list(space.inventory_caps)
    n_typ = len(grids)
    n_actions = n_joint_actions(config)
    constrained = space.constrained
    if constrained:
        target = config.constraint.target
        mu = config.constraint.mu
        tau = config.constraint.tau

    action_indices = [unflatten_action(config, a).price_indices for a in range(n_actions)]
    sales_vectors = list(itertools.product(*(range(c + 1) for c in caps)))

    values: list[Optional[np.ndarray]] = [None] * (horizon + 1)
    values[horizon] = np.zeros(space.shape(horizon))
    policies: list[Optional[np.ndarray]] = [None] * horizon

    for t in range(horizon - 1, -1, -1):
        v_next = values[t + 1]
        # tested pmf primitive, cached per (typology, grid price) within the slice
        mats = []
        for i in range(n_typ):
            per_price = []
            for price in grids[i]:
                lam = float(rate_fn(i, price, t))
                if not math.isfinite(lam) or lam < 0:
                    raise ValueError(f"rate_fn returned invalid rate {lam} at (typology {i}, p={price}, t={t})")
                per_price.append(_sales_matrix(lam, caps[i]))
            mats.append(per_price)

        if constrained:
            bins_t = space.n_bins(t)
            bin_values = np.arange(bins_t) * space.bin_width
            penalty_due = t + 1 == tau
            collapse_next = t + 1 > tau
            zero_bins = np.zeros(bins_t, dtype=np.int64)

        scores = np.empty((n_actions, space.n_states(t)))
        for a in range(n_actions):
            idxs = action_indices[a]
            prices = [grids[i][idxs[i]] for i in range(n_typ)]
            cols = [mats[i][idxs[i]] for i in range(n_typ)]
            expected = np.zeros(space.shape(t))
            for kvec in sales_vectors:
                weight = cols[0][:, kvec[0]]
                for i in range(1, n_typ):
                    weight = weight[..., None] * cols[i][:, kvec[i]]
                rev = 0.0
                for i in range(n_typ):
                    rev += prices[i] * kvec[i]
                src = tuple(slice(0, caps[i] + 1 - kvec[i]) for i in range(n_typ))
                dst = tuple(slice(kvec[i], caps[i] + 1) for i in range(n_typ))
                w_sub = weight[dst]
                if constrained:
                    if collapse_next:
                        succ_bins = zero_bins
                    else:
                        succ_bins = revenue_to_bin_array(bin_values + rev, space.bin_width, space.r_max)
                    vals = rev + v_next[src + (succ_bins,)]
                    if penalty_due:
                        vals = vals - mu * np.maximum(0.0, target - succ_bins * space.bin_width)
                    expected[dst + (slice(None),)] += w_sub[..., None] * vals
                else:
                    expected[dst] += w_sub * (rev + v_next[src])
            scores[a] = expected.reshape(-1)

        values[t] = scores.max(axis=0).reshape(space.shape(t))
        policies[t] = scores.argmax(axis=0).astype(np.int64)

    flat_values = [values[t].reshape(-1).copy() for t in range(horizon + 1)]
    return ValueFunction(flat_values), PolicyTable(policies)


def exact_policy_value(config: EnvConfig, policy, rate_fn: RateFn) -> float:
    """Expected total revenue of a tabular policy, computed by forward recursion.

    Only defined for unconstrained single-typology configurations, where the
    recursion over (t, inventory) is exact.  Accepts a deterministic
    PolicyTable or any stochastic tabular policy exposing ``probabilities(t)``.
    """
    if config.constraint is not None:
        raise ValueError("exact evaluation requires an unconstrained configuration")
    if len(config.typologies) != 1:
        raise ValueError("exact evaluation requires a single typology")
    ty = config.typologies[0]
    cap = ty.initial_inventory
    grid = ty.price_grid
    deterministic = isinstance(policy, PolicyTable)

    w_next = np.zeros(cap + 1)
    for t in range(config.horizon - 1, -1, -1):
        if deterministic:
            acts = policy.actions[t]
        else:
            probs_t = policy.probabilities(t)
        pmf_cache: dict[tuple[int, int], np.ndarray] = {}
        rate_cache: dict[int, float] = {}
        w_now = np.zeros(cap + 1)
        for n in range(cap + 1):
            if deterministic:
                pairs = [(int(acts[n]), 1.0)]
            else:
                pairs = [(a, float(probs_t[n, a])) for a in range(len(grid))]
            total = 0.0
            for a, prob in pairs:
                if prob == 0.0:
                    continue
                if a not in rate_cache:
                    rate_cache[a] = float(rate_fn(0, grid[a], t))
                pmf = pmf_cache.get((a, n))
                if pmf is None:
                    pmf = sales_pmf(rate_cache[a], n)
                    pmf_cache[(a, n)] = pmf
                ev = 0.0
                price = grid[a]
                for k in range(n + 1):
                    ev += pmf[k] * (price * k + w_next[n - k])
                total += prob * ev
            w_now[n] = total
        w_next = w_now
    return float(w_next[cap])


def oracle_rate_fn(config: EnvConfig) -> RateFn:
    """True demand rates of the configuration (the unbeatable benchmark input)."""

    def rate(typology: int, price: float, t: int) -> float:
        return float(intensity(config.typologies[typology].demand, price, t))

    return rate


def default_feature_set(config: EnvConfig) -> FeatureSet:
    """Quadratic augmentation when any typology uses the nonlinear family."""
    nonlinear = any(isinstance(ty.demand, NonlinearDemand) for ty in config.typologies)
    return FeatureSet.AUGMENTED if nonlinear else FeatureSet.BASE


def fitted_dp(
    config: EnvConfig,
    n_episodes: int,
    rng: np.random.Generator,
    feature_set: Optional[FeatureSet] = None,
    clock=time.perf_counter,
) -> tuple[PolicyTable, list[RegressionModel], DpTimings]:
    """Collect random episodes, fit per-typology demand rates, then solve.

    Returns the greedy policy, the fitted models (one per typology), and the
    phase timings (collection+fit vs. backward induction).  Estimation errors
    (rank-deficient or insufficient data) propagate to the caller.
    """
    if n_episodes < 1:
        raise ValueError("n_episodes must be at least 1")
    if feature_set is None:
        feature_set = default_feature_set(config)
    start = clock()
    observations = collect_random_episodes(config, n_episodes, rng)
    models = []
    for i in range(len(config.typologies)):
        rows = [o for o in observations if o.typology == i]
        models.append(fit_ols(rows, feature_set, config.horizon))
    fitted = clock()

    def rate(typology: int, price: float, t: int) -> float:
        return float(predict_rate(models[typology], price, t))

    _, policy = solve_backward(config, rate)
    solved = clock()
    return policy, models, DpTimings(train_s=fitted - start, solve_s=solved - fitted)
