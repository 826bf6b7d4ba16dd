"""Render benchmark figures from tidy CSVs.

Two figure kinds mirror the benchmark's report style:

* ``curves`` -- mean revenue with a one-standard-deviation band per
  algorithm over a log-scaled episode axis, from ``learning_curves.csv``
  (columns env, algo, episodes, mean, std);
* ``violins`` -- the distribution of cumulative revenue at the constraint
  step per algorithm with a dashed target line, from ``violins.csv``
  (columns env, algo, sample).

Rendering is read-only over its inputs.  Both entry points return the
statistics they annotated so callers (and golden tests) can verify the
figure against an independent recomputation.  SVG output is written without
a creation date, so identical input produces identical bytes.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
# stable element ids (plus date-free metadata at save time) keep SVG bytes
# reproducible for identical input
matplotlib.rcParams["svg.hashsalt"] = "plotgen"

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["ALGO_ORDER", "ALGO_COLORS", "render_curves", "render_violins"]

# fixed ordering and palette so figures stay visually comparable across runs
ALGO_ORDER = ("fitted_dp", "q_learning", "policy_gradient")
ALGO_COLORS = {
    "fitted_dp": "#1f77b4",
    "q_learning": "#d62728",
    "policy_gradient": "#2ca02c",
}
_FALLBACK_COLOR = "#7f7f7f"


def _ordered(algos):
    known = [a for a in ALGO_ORDER if a in algos]
    extra = sorted(a for a in algos if a not in ALGO_ORDER)
    return known + extra


def _save(fig, out_path) -> None:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, format=out_path.suffix.lstrip(".") or "svg", metadata={"Date": None})
    plt.close(fig)


def render_curves(csv_path, env: int, out_path) -> dict:
    """Mean +- std learning curves for one environment.

    Returns the plotted statistics: per algorithm the episode budgets,
    means, and stds in plotting order.  Raises ValueError when the CSV has
    no rows for ``env``.
    """
    rows = []
    with open(csv_path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if int(row["env"]) == env:
                rows.append((row["algo"], int(row["episodes"]), float(row["mean"]), float(row["std"])))
    if not rows:
        raise ValueError(f"no learning-curve rows for environment {env} in {csv_path}")

    by_algo: dict[str, list[tuple[int, float, float]]] = {}
    for algo, episodes, mean, std in rows:
        by_algo.setdefault(algo, []).append((episodes, mean, std))

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    stats: dict = {"env": env, "kind": "curves", "algorithms": {}}
    for algo in _ordered(by_algo):
        series = sorted(by_algo[algo])
        episodes = np.array([s[0] for s in series])
        means = np.array([s[1] for s in series])
        stds = np.array([s[2] for s in series])
        color = ALGO_COLORS.get(algo, _FALLBACK_COLOR)
        ax.plot(episodes, means, marker="o", label=algo, color=color)
        ax.fill_between(episodes, means - stds, means + stds, alpha=0.2, color=color)
        ax.annotate(
            f"{means[-1]:.2f}",
            (episodes[-1], means[-1]),
            textcoords="offset points",
            xytext=(5, 4),
            fontsize=8,
            color=color,
        )
        stats["algorithms"][algo] = {
            "episodes": episodes.tolist(),
            "mean": means.tolist(),
            "std": stds.tolist(),
        }
    ax.set_xscale("log")
    ax.set_xlabel("training episodes")
    ax.set_ylabel("expected revenue")
    ax.set_title(f"Environment {env}")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, out_path)
    return stats


def render_violins(csv_path, env: int, target: float, out_path) -> dict:
    """Constraint-step revenue distributions with a dashed target line.

    Returns per-algorithm medians and sample counts plus the target value.
    Raises ValueError when the CSV has no samples for ``env``.
    """
    samples: dict[str, list[float]] = {}
    with open(csv_path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if int(row["env"]) == env:
                samples.setdefault(row["algo"], []).append(float(row["sample"]))
    if not samples:
        raise ValueError(f"no revenue samples for environment {env} in {csv_path}")

    order = _ordered(samples)
    data = [np.asarray(samples[a]) for a in order]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    parts = ax.violinplot(data, showmedians=True, widths=0.8)
    for body, algo in zip(parts["bodies"], order):
        body.set_facecolor(ALGO_COLORS.get(algo, _FALLBACK_COLOR))
        body.set_alpha(0.5)
    medians = {}
    for pos, (algo, values) in enumerate(zip(order, data), start=1):
        med = float(np.median(values))
        medians[algo] = med
        ax.annotate(
            f"{med:.2f}",
            (pos, med),
            textcoords="offset points",
            xytext=(8, 0),
            fontsize=8,
        )
    ax.axhline(target, linestyle="--", color="black", linewidth=1.2, label=f"target {target:g}")
    ax.set_xticks(range(1, len(order) + 1), order)
    ax.set_ylabel("cumulative revenue at the constraint step")
    ax.set_title(f"Environment {env}")
    ax.legend()
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    _save(fig, out_path)
    return {
        "env": env,
        "kind": "violins",
        "target": float(target),
        "medians": medians,
        "n_samples": {algo: int(len(values)) for algo, values in zip(order, data)},
    }
