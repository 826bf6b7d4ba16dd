"""Random-episode data collection and least-squares demand estimation.

Realized sales are regressed on price/time features to recover a demand-rate
model per typology.  Periods where sales hit the remaining stock are censored
(true demand unobserved) and are dropped before fitting, as are periods that
start with zero stock.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np

from .environments import EnvConfig, n_joint_actions, reset, step, unflatten_action

__all__ = [
    "FeatureSet",
    "SalesObservation",
    "RegressionModel",
    "EstimationError",
    "InsufficientData",
    "RankDeficient",
    "collect_random_episodes",
    "fit_ols",
    "predict_rate",
    "save_observations_csv",
    "load_observations_csv",
]


class EstimationError(Exception):
    """Base class for demand-estimation failures."""


class InsufficientData(EstimationError):
    """Fewer usable observations than regression coefficients."""


class RankDeficient(EstimationError):
    """Design matrix does not have full column rank."""


class FeatureSet(enum.Enum):
    """Regressor sets: BASE is {1, p, t/T, p*(t/T)}; AUGMENTED adds p^2, (t/T)^2."""

    BASE = "base"
    AUGMENTED = "augmented"

    @property
    def n_features(self) -> int:
        return 4 if self is FeatureSet.BASE else 6


@dataclass(frozen=True)
class SalesObservation:
    episode: int
    typology: int
    t: int
    price: float
    sales: int
    censored: bool


@dataclass(frozen=True)
class RegressionModel:
    feature_set: FeatureSet
    coefficients: tuple[float, ...]
    horizon: int

    def __post_init__(self) -> None:
        if len(self.coefficients) != self.feature_set.n_features:
            raise ValueError("coefficient count does not match feature set")


def _features(feature_set: FeatureSet, prices: np.ndarray, ts: np.ndarray, horizon: int) -> np.ndarray:
    tn = ts / horizon
    cols = [np.ones_like(prices), prices, tn, prices * tn]
    if feature_set is FeatureSet.AUGMENTED:
        cols.extend([prices**2, tn**2])
    return np.column_stack(cols)


def collect_random_episodes(
    config: EnvConfig, n_episodes: int, rng: np.random.Generator
) -> list[SalesObservation]:
    """Play uniformly random joint actions and record per-period sales.

    One observation per (typology, period); periods starting with zero stock
    are skipped, and sell-out periods are kept but flagged censored.
    """
    if n_episodes < 1:
        raise ValueError("n_episodes must be at least 1")
    n_actions = n_joint_actions(config)
    observations: list[SalesObservation] = []
    for episode in range(n_episodes):
        state = reset(config)
        for _ in range(config.horizon):
            joint = int(rng.integers(n_actions))
            action = unflatten_action(config, joint)
            start_inventories = state.inventories
            outcome = step(config, state, action, rng)
            for i, ty in enumerate(config.typologies):
                if start_inventories[i] == 0:
                    continue
                observations.append(
                    SalesObservation(
                        episode=episode,
                        typology=i,
                        t=state.t,
                        price=ty.price_grid[action.price_indices[i]],
                        sales=outcome.sales[i],
                        censored=outcome.sales[i] == start_inventories[i],
                    )
                )
            state = outcome.next_state
    return observations


def fit_ols(
    observations: list[SalesObservation],
    feature_set: FeatureSet,
    horizon: int,
) -> RegressionModel:
    """Least-squares fit of sales on the chosen features.

    Censored observations are dropped first.  Raises InsufficientData when
    fewer rows than coefficients remain and RankDeficient when the design
    matrix is rank-deficient (degenerate price/time coverage); neither case
    is silently regularized.
    """
    usable = [o for o in observations if not o.censored]
    k = feature_set.n_features
    if len(usable) < k:
        raise InsufficientData(f"need at least {k} uncensored observations, have {len(usable)}")
    prices = np.array([o.price for o in usable], dtype=float)
    ts = np.array([o.t for o in usable], dtype=float)
    y = np.array([o.sales for o in usable], dtype=float)
    X = _features(feature_set, prices, ts, horizon)
    if np.linalg.matrix_rank(X) < k:
        raise RankDeficient("design matrix is rank deficient")
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    return RegressionModel(feature_set, tuple(float(b) for b in beta), horizon)


def predict_rate(model: RegressionModel, price, t):
    """Predicted demand rate, clipped at zero.  Accepts scalar or array price."""
    prices = np.atleast_1d(np.asarray(price, dtype=float))
    ts = np.full_like(prices, float(t))
    X = _features(model.feature_set, prices, ts, model.horizon)
    raw = X @ np.asarray(model.coefficients)
    clipped = np.maximum(0.0, raw)
    return clipped if np.ndim(price) else float(clipped[0])


# --- dataset CSV (episode, typology, t, price, sales, censored) ---------------

_CSV_HEADER = ["episode", "typology", "t", "price", "sales", "censored"]


def save_observations_csv(observations: list[SalesObservation], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_HEADER)
        for o in observations:
            writer.writerow([o.episode, o.typology, o.t, repr(o.price), o.sales, int(o.censored)])


def load_observations_csv(path) -> list[SalesObservation]:
    observations = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != _CSV_HEADER:
            raise ValueError(f"unexpected dataset header: {reader.fieldnames}")
        for row in reader:
            observations.append(
                SalesObservation(
                    episode=int(row["episode"]),
                    typology=int(row["typology"]),
                    t=int(row["t"]),
                    price=float(row["price"]),
                    sales=int(row["sales"]),
                    censored=bool(int(row["censored"])),
                )
            )
    return observations
