"""Model-free tabular learners over the flattened joint action space.

Two desk-scale stand-ins for the usual deep-RL families: one-step tabular
Q-learning with an epsilon-greedy behavior policy (value-based) and episodic
softmax policy gradient with a mean-return baseline (policy-gradient).  Both
interact with the environment exclusively through ``step`` -- they never
touch demand intensities or sales distributions -- and both look states up
through the same discretization the DP solver uses, so the two method
families operate on comparable information.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dp_solver import PolicyTable, StateSpace, state_space
from .environments import EnvConfig, n_joint_actions, reset, step, unflatten_action

__all__ = [
    "TrainSpec",
    "QTable",
    "SoftmaxPolicy",
    "train_q_learning",
    "train_policy_gradient",
    "policy_from_q",
]


@dataclass(frozen=True)
class TrainSpec:
    """Episode budget, schedules, and seed for one training run.

    Learning rates anneal linearly from the start value to the final value
    over the episode budget; a final value of ``None`` keeps the rate
    constant.  Benchmark runs use budgets {40, 100, 200, 400, 1000, 2000}.
    """

    episodes: int
    seed: int = 0
    learning_rate: float = 0.1
    learning_rate_final: Optional[float] = 0.01
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    step_size: float = 0.2
    step_size_final: Optional[float] = None
    baseline: bool = True

    def __post_init__(self) -> None:
        if self.episodes < 1:
            raise ValueError("episodes must be at least 1")
        if self.learning_rate <= 0 or self.step_size <= 0:
            raise ValueError("learning rates must be positive")
        if not 0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0:
            raise ValueError("epsilon schedule must satisfy 0 <= end <= start <= 1")


@dataclass
class QTable:
    """Per-epoch action-value tables aligned with the DP state indexing."""

    space: StateSpace
    tables: list[np.ndarray]


@dataclass
class SoftmaxPolicy:
    """Per-epoch action-preference tables; action probabilities are softmax rows."""

    space: StateSpace
    preferences: list[np.ndarray]

    def probabilities(self, t: int) -> np.ndarray:
        prefs = self.preferences[t]
        shifted = prefs - prefs.max(axis=1, keepdims=True)
        expd = np.exp(shifted)
        return expd / expd.sum(axis=1, keepdims=True)


def _schedule(start: float, end: Optional[float], episode: int, episodes: int) -> float:
    if end is None or episodes == 1:
        return start
    frac = episode / (episodes - 1)
    return start + (end - start) * frac


def train_q_learning(
    config: EnvConfig, spec: TrainSpec, clock=time.perf_counter
) -> tuple[QTable, PolicyTable, float]:
    """One-step Q-learning (gamma=1) with linearly annealed epsilon-greedy.

    Tables start at zero and unvisited entries stay there.  Cumulative revenue
    is discretized through the DP revenue bins for state lookup only; the
    environment itself keeps revenue exact.  Returns the Q tables, the greedy
    policy, and the training wall time.
    """
    rng = np.random.default_rng(spec.seed)
    space = state_space(config)
    n_actions = n_joint_actions(config)
    horizon = config.horizon
    tables = [np.zeros((space.n_states(t), n_actions)) for t in range(horizon)]
    joint_actions = [unflatten_action(config, a) for a in range(n_actions)]

    start = clock()
    for episode in range(spec.episodes):
        eps = _schedule(spec.epsilon_start, spec.epsilon_end, episode, spec.episodes)
        lr = _schedule(spec.learning_rate, spec.learning_rate_final, episode, spec.episodes)
        state = reset(config)
        for t in range(horizon):
            sidx = space.index(t, state.inventories, state.cumulative_revenue)
            if rng.random() < eps:
                a = int(rng.integers(n_actions))
            else:
                a = int(np.argmax(tables[t][sidx]))
            outcome = step(config, state, joint_actions[a], rng)
            nxt = outcome.next_state
            if t + 1 == horizon:
                bootstrap = 0.0
            else:
                nidx = space.index(t + 1, nxt.inventories, nxt.cumulative_revenue)
                bootstrap = float(tables[t + 1][nidx].max())
            row = tables[t][sidx]
            row[a] += lr * (outcome.reward + bootstrap - row[a])
            state = nxt
    wall = clock() - start
    qtable = QTable(space, tables)
    return qtable, policy_from_q(qtable), wall


def train_policy_gradient(
    config: EnvConfig, spec: TrainSpec, clock=time.perf_counter
) -> tuple[SoftmaxPolicy, float]:
    """Episodic softmax policy gradient with undiscounted returns.

    Updates each visited (epoch, state) preference row by
    ``step_size * (G_t - b_t) * (onehot(a) - pi)``, where ``b_t`` is the
    running mean of returns-from-epoch-``t`` over past episodes (a
    state-independent baseline, so the gradient estimate stays unbiased).
    Deterministic per seed.
    """
    rng = np.random.default_rng(spec.seed)
    space = state_space(config)
    n_actions = n_joint_actions(config)
    horizon = config.horizon
    prefs = [np.zeros((space.n_states(t), n_actions)) for t in range(horizon)]
    joint_actions = [unflatten_action(config, a) for a in range(n_actions)]

    start = clock()
    return_sums = np.zeros(horizon)
    for episode in range(spec.episodes):
        lr = _schedule(spec.step_size, spec.step_size_final, episode, spec.episodes)
        state = reset(config)
        visited: list[tuple[int, int, int, np.ndarray, float]] = []
        for t in range(horizon):
            sidx = space.index(t, state.inventories, state.cumulative_revenue)
            row = prefs[t][sidx]
            shifted = row - row.max()
            probs = np.exp(shifted)
            probs /= probs.sum()
            u = rng.random()
            a = int(min(np.searchsorted(np.cumsum(probs), u, side="right"), n_actions - 1))
            outcome = step(config, state, joint_actions[a], rng)
            visited.append((t, sidx, a, probs, outcome.reward))
            state = outcome.next_state

        ret = 0.0
        returns = [0.0] * horizon
        for t in range(horizon - 1, -1, -1):
            ret += visited[t][4]
            returns[t] = ret
        for t, sidx, a, probs, _ in visited:
            baseline = return_sums[t] / episode if (spec.baseline and episode > 0) else 0.0
            advantage = returns[t] - baseline
            grad = -probs
            grad[a] += 1.0
            prefs[t][sidx] += lr * advantage * grad
        return_sums += returns
    wall = clock() - start
    return SoftmaxPolicy(space, prefs), wall


def policy_from_q(qtable: QTable) -> PolicyTable:
    """Greedy policy; ties resolve to the lowest joint action index."""
    return PolicyTable([np.argmax(t, axis=1).astype(np.int64) for t in qtable.tables])
