"""Finite-horizon pricing MDPs: state, joint price actions, stochastic step.

An environment is one or more typologies (independent inventory/demand pairs)
sold over a fixed horizon.  Each period a price is posted per typology,
Poisson demand arrives, sales are capped by remaining stock, and revenue
accumulates.  An optional revenue constraint charges a one-off shortfall
penalty ``mu * max(0, target - R_tau)`` in the reward of the step that
completes period ``tau``.

The transition function is stateless: callers own the state and the rng
stream, so independent episodes can run in parallel.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .demand import DemandSpec, LinearDemand, NonlinearDemand, sample_demand

__all__ = [
    "ConstraintSpec",
    "Typology",
    "EnvConfig",
    "EnvState",
    "Action",
    "StepOutcome",
    "make_env",
    "reset",
    "step",
    "n_joint_actions",
    "flatten_action",
    "unflatten_action",
    "config_to_dict",
    "config_from_dict",
    "save_config",
    "load_config",
]


@dataclass(frozen=True)
class ConstraintSpec:
    """Cumulative-revenue target checked after step ``tau``.

    ``mu`` is allowed to be zero so that a constrained configuration can be
    made penalty-free (the revenue dimension then carries no information).
    """

    target: float
    mu: float
    tau: int

    def __post_init__(self) -> None:
        if self.target <= 0:
            raise ValueError("target must be positive")
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")
        if self.tau < 1:
            raise ValueError("tau must be at least 1")


@dataclass(frozen=True)
class Typology:
    """One product: a demand model, its price grid, and starting stock."""

    demand: DemandSpec
    price_grid: tuple[float, ...]
    initial_inventory: int

    def __post_init__(self) -> None:
        if not self.price_grid:
            raise ValueError("price grid must be non-empty")
        if any(b <= a for a, b in zip(self.price_grid, self.price_grid[1:])):
            raise ValueError("price grid must be strictly ascending")
        if self.initial_inventory < 1:
            raise ValueError("initial inventory must be at least 1")


@dataclass(frozen=True)
class EnvConfig:
    """Full environment definition.

    ``revenue_bin_width`` is used only by solvers and tabular learners to
    discretize cumulative revenue; the simulator itself keeps revenue exact.
    It must be set when a constraint is present.
    """

    env_id: Optional[int]
    horizon: int
    typologies: tuple[Typology, ...]
    constraint: Optional[ConstraintSpec]
    revenue_bin_width: Optional[float]

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError("horizon must be positive")
        if not self.typologies:
            raise ValueError("at least one typology required")
        if self.constraint is not None:
            if self.constraint.tau > self.horizon:
                raise ValueError("constraint tau must not exceed the horizon")
            if self.revenue_bin_width is None or self.revenue_bin_width <= 0:
                raise ValueError("constrained configs need a positive revenue_bin_width")


@dataclass(frozen=True)
class EnvState:
    t: int
    inventories: tuple[int, ...]
    cumulative_revenue: float


@dataclass(frozen=True)
class Action:
    """One price-grid index per typology."""

    price_indices: tuple[int, ...]


@dataclass(frozen=True)
class StepOutcome:
    demands: tuple[int, ...]
    sales: tuple[int, ...]
    revenue: float
    penalty: float
    reward: float
    next_state: EnvState
    sold_out_flags: tuple[bool, ...]


def _env1_grid() -> tuple[float, ...]:
    return tuple(i / 10 for i in range(5, 21))


def _env1_typology(horizon: int = 10, inventory: int = 10) -> Typology:
    return Typology(
        demand=LinearDemand(alpha=2.0, beta=1.0, horizon=horizon),
        price_grid=_env1_grid(),
        initial_inventory=inventory,
    )


def make_env(env_id: int) -> EnvConfig:
    """Benchmark environment presets 1..5.

    1. single typology, 16-price grid on [0.5, 2.0], N=10, no constraint;
    2. two copies of the type-1 typology, N=6 each, target 12 with mu=4 at
       step 7, revenue bin 0.5;
    3. two heterogeneous typologies (grids on [0.5, 1.6] and [1.0, 3.0]),
       same constraint as 2;
    4. the type-1 typology with a mild constraint (5.5, mu=1, step 5),
       revenue bin 0.1;
    5. the type-1 grid and stock with nonlinear demand, no constraint.
    """
    horizon = 10
    if env_id == 1:
        return EnvConfig(1, horizon, (_env1_typology(),), None, None)
    if env_id == 2:
        ty = _env1_typology(inventory=6)
        return EnvConfig(2, horizon, (ty, ty), ConstraintSpec(12.0, 4.0, 7), 0.5)
    if env_id == 3:
        grid1 = tuple(float(p) for p in np.linspace(0.5, 1.6, 16))
        grid2 = tuple(float(p) for p in np.linspace(1.0, 3.0, 16))
        ty1 = Typology(LinearDemand(2.5, 1.5, horizon), grid1, 6)
        ty2 = Typology(LinearDemand(3.0, 0.8, horizon), grid2, 6)
        return EnvConfig(3, horizon, (ty1, ty2), ConstraintSpec(12.0, 4.0, 7), 0.5)
    if env_id == 4:
        return EnvConfig(4, horizon, (_env1_typology(),), ConstraintSpec(5.5, 1.0, 5), 0.1)
    if env_id == 5:
        demand = NonlinearDemand(
            time_scale=1.05,
            time_quad=0.01,
            time_lin=-0.032,
            time_const=0.16,
            price_scale=4.7,
            price_slope=0.2,
            ref_price=2.0,
            horizon=horizon,
        )
        ty = Typology(demand, _env1_grid(), 10)
        return EnvConfig(5, horizon, (ty,), None, None)
    raise ValueError(f"unknown environment id: {env_id!r}")


def reset(config: EnvConfig) -> EnvState:
    return EnvState(
        t=0,
        inventories=tuple(ty.initial_inventory for ty in config.typologies),
        cumulative_revenue=0.0,
    )


def step(config: EnvConfig, state: EnvState, action: Action, rng: np.random.Generator) -> StepOutcome:
    """Advance one period: sample demand, sell up to stock, settle the penalty.

    Raises ValueError when called on a terminal state (``t == horizon``).
    The penalty lands in the reward of the step whose completion index equals
    the constraint step; cumulative revenue itself is never reduced.
    """
    if state.t >= config.horizon:
        raise ValueError("cannot step a terminal state")
    if len(action.price_indices) != len(config.typologies):
        raise ValueError("action arity does not match typology count")

    demands = []
    sales = []
    sold_out = []
    new_inventories = []
    revenue = 0.0
    for ty, stock, idx in zip(config.typologies, state.inventories, action.price_indices):
        price = ty.price_grid[idx]
        quantity = sample_demand(ty.demand, price, state.t, rng)
        sold = quantity if quantity < stock else stock
        demands.append(quantity)
        sales.append(sold)
        sold_out.append(sold == stock)
        new_inventories.append(stock - sold)
        revenue += price * sold

    next_t = state.t + 1
    cumulative = state.cumulative_revenue + revenue
    penalty = 0.0
    if config.constraint is not None and next_t == config.constraint.tau:
        shortfall = config.constraint.target - cumulative
        if shortfall > 0.0:
            penalty = config.constraint.mu * shortfall
    next_state = EnvState(next_t, tuple(new_inventories), cumulative)
    return StepOutcome(
        demands=tuple(demands),
        sales=tuple(sales),
        revenue=revenue,
        penalty=penalty,
        reward=revenue - penalty,
        next_state=next_state,
        sold_out_flags=tuple(sold_out),
    )


def n_joint_actions(config: EnvConfig) -> int:
    return math.prod(len(ty.price_grid) for ty in config.typologies)


def flatten_action(config: EnvConfig, action: Action) -> int:
    """Joint categorical index; row-major, first typology varies slowest."""
    joint = 0
    for ty, idx in zip(config.typologies, action.price_indices):
        size = len(ty.price_grid)
        if not 0 <= idx < size:
            raise ValueError(f"price index {idx} out of range for grid of size {size}")
        joint = joint * size + idx
    return joint


def unflatten_action(config: EnvConfig, joint: int) -> Action:
    if not 0 <= joint < n_joint_actions(config):
        raise ValueError(f"joint action {joint} out of range")
    indices = [0] * len(config.typologies)
    rem = joint
    for pos in range(len(config.typologies) - 1, -1, -1):
        size = len(config.typologies[pos].price_grid)
        rem, indices[pos] = divmod(rem, size)
    return Action(tuple(indices))


# --- config (de)serialization -------------------------------------------------
#
# Documented keys: env_id, horizon, typologies[].{alpha,beta | nonlinear},
# typologies[].grid, typologies[].inventory, constraint.{target,mu,tau},
# revenue_bin_width.


def _demand_to_dict(spec: DemandSpec) -> dict:
    if isinstance(spec, LinearDemand):
        return {"alpha": spec.alpha, "beta": spec.beta}
    return {
        "nonlinear": {
            "time_scale": spec.time_scale,
            "time_quad": spec.time_quad,
            "time_lin": spec.time_lin,
            "time_const": spec.time_const,
            "price_scale": spec.price_scale,
            "price_slope": spec.price_slope,
            "ref_price": spec.ref_price,
        }
    }


def _demand_from_dict(entry: dict, horizon: int) -> DemandSpec:
    if "nonlinear" in entry:
        nl = entry["nonlinear"]
        return NonlinearDemand(horizon=horizon, **nl)
    return LinearDemand(alpha=entry["alpha"], beta=entry["beta"], horizon=horizon)


def config_to_dict(config: EnvConfig) -> dict:
    out = {
        "env_id": config.env_id,
        "horizon": config.horizon,
        "typologies": [
            {
                **_demand_to_dict(ty.demand),
                "grid": list(ty.price_grid),
                "inventory": ty.initial_inventory,
            }
            for ty in config.typologies
        ],
        "constraint": None,
        "revenue_bin_width": config.revenue_bin_width,
    }
    if config.constraint is not None:
        c = config.constraint
        out["constraint"] = {"target": c.target, "mu": c.mu, "tau": c.tau}
    return out


def config_from_dict(data: dict) -> EnvConfig:
    horizon = int(data["horizon"])
    typologies = tuple(
        Typology(
            demand=_demand_from_dict(entry, horizon),
            price_grid=tuple(float(p) for p in entry["grid"]),
            initial_inventory=int(entry["inventory"]),
        )
        for entry in data["typologies"]
    )
    constraint = None
    if data.get("constraint"):
        c = data["constraint"]
        constraint = ConstraintSpec(float(c["target"]), float(c["mu"]), int(c["tau"]))
    width = data.get("revenue_bin_width")
    return EnvConfig(
        env_id=data.get("env_id"),
        horizon=horizon,
        typologies=typologies,
        constraint=constraint,
        revenue_bin_width=None if width is None else float(width),
    )


def save_config(config: EnvConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(config), fh, indent=2)
        fh.write("\n")


def load_config(path) -> EnvConfig:
    with open(path, encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))
