"""Demand-intensity models, Poisson sampling, and truncated sales distributions.

Each product typology carries a demand model mapping (price, period) to a
Poisson arrival rate.  Two families are supported:

* :class:`LinearDemand` -- truncated-linear price response with a linear
  time-ramp over the selling horizon,
* :class:`NonlinearDemand` -- separable exponential level/attraction curves
  with a quadratic-in-time level.

Sales within a period are capped by the remaining inventory, so the sales
distribution is the Poisson pmf with its upper tail folded onto the stock
level; :func:`sales_pmf` computes it without factorials via the pmf
recurrence, which is stable at the small rates used here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "LinearDemand",
    "NonlinearDemand",
    "DemandSpec",
    "intensity",
    "sample_demand",
    "sample_poisson_batch",
    "sales_pmf",
]


@dataclass(frozen=True)
class LinearDemand:
    """Truncated-linear demand: ``max(0, alpha - beta*p) * (1 + t/horizon)``.

    Parameters
    ----------
    alpha : float
        Baseline arrival rate (expected buyers per period at price 0).
    beta : float
        Price slope (buyers lost per unit of price).
    horizon : int
        Number of selling periods; scales the time ramp.
    """

    alpha: float
    beta: float
    horizon: int

    def __post_init__(self) -> None:
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")
        if self.horizon < 1:
            raise ValueError("horizon must be a positive integer")

    def rate(self, price, t):
        if isinstance(price, np.ndarray):
            base = np.maximum(0.0, self.alpha - self.beta * price)
            return base * (1.0 + t / self.horizon)
        base = self.alpha - self.beta * price
        if base < 0.0:
            base = 0.0
        return base * (1.0 + t / self.horizon)


@dataclass(frozen=True)
class NonlinearDemand:
    """Separable nonlinear demand: ``level(t) * attraction(p)``.

    ``level(t) = time_scale * exp(time_quad*t^2 + time_lin*t + time_const)``
    ``attraction(p) = max(0, price_scale * exp(price_slope*(ref_price - p) - 1))``
    """

    time_scale: float
    time_quad: float
    time_lin: float
    time_const: float
    price_scale: float
    price_slope: float
    ref_price: float
    horizon: int

    def level(self, t: float) -> float:
        return self.time_scale * math.exp(
            self.time_quad * t * t + self.time_lin * t + self.time_const
        )

    def attraction(self, price):
        if isinstance(price, np.ndarray):
            raw = self.price_scale * np.exp(self.price_slope * (self.ref_price - price) - 1.0)
            return np.maximum(0.0, raw)
        raw = self.price_scale * math.exp(self.price_slope * (self.ref_price - price) - 1.0)
        return raw if raw > 0.0 else 0.0

    def rate(self, price, t):
        return self.level(t) * self.attraction(price)


DemandSpec = Union[LinearDemand, NonlinearDemand]


def intensity(spec: DemandSpec, price, t):
    """Poisson arrival rate for ``spec`` at the given price and period index.

    Accepts a scalar or ndarray price; never returns a negative rate.
    """
    return spec.rate(price, t)


def _poisson_knuth(rate: float, rng: np.random.Generator) -> int:
    # Multiplicative method: exact for the small rates used here (< ~10),
    # and consumes an rng-determined number of uniforms, so streams are
    # reproducible per seed.
    threshold = math.exp(-rate)
    count = 0
    acc = 1.0
    while True:
        acc *= rng.random()
        if acc <= threshold:
            return count
        count += 1


def sample_demand(spec: DemandSpec, price, t, rng: np.random.Generator) -> int:
    """Draw one Poisson demand realization with mean ``intensity(spec, price, t)``."""
    return _poisson_knuth(float(intensity(spec, price, t)), rng)


def sample_poisson_batch(rates: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw independent Poisson counts for an array of rates.

    Vectorized multiplicative sampler; one uniform per still-active lane per
    round.  Deterministic given the rng state.
    """
    rates = np.asarray(rates, dtype=float)
    thresholds = np.exp(-rates)
    counts = np.zeros(rates.shape, dtype=np.int64)
    prods = np.ones_like(thresholds)
    active = np.arange(rates.size)
    flat_prods = prods.reshape(-1)
    flat_thr = thresholds.reshape(-1)
    flat_counts = counts.reshape(-1)
    while active.size:
        flat_prods[active] *= rng.random(active.size)
        alive = flat_prods[active] > flat_thr[active]
        flat_counts[active[alive]] += 1
        active = active[alive]
    return counts


def sales_pmf(rate: float, inventory: int) -> np.ndarray:
    """Distribution of sales ``min(Q, inventory)`` with ``Q ~ Poisson(rate)``.

    Entry ``k`` is the Poisson pmf at ``k`` for ``k < inventory``; the final
    entry absorbs the whole upper tail (a sell-out).  Uses the recurrence
    ``p(k+1) = p(k) * rate / (k+1)`` and clamps the tail at zero to absorb
    rounding.
    """
    if inventory < 0:
        raise ValueError("inventory must be nonnegative")
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    if inventory == 0:
        return np.ones(1)
    pmf = np.empty(inventory + 1)
    term = math.exp(-rate)
    acc = 0.0
    for k in range(inventory):
        pmf[k] = term
        acc += term
        term = term * rate / (k + 1)
    pmf[inventory] = max(0.0, 1.0 - acc)
    return pmf
