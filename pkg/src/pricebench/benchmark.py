"""End-to-end experiment matrix: train, evaluate, time, and emit CSV results.

Every (environment, algorithm, episode budget, seed) cell is an independent
job.  Per-cell rng streams are derived from the plan's global seed and the
cell coordinates, and the evaluation stream deliberately excludes the
algorithm so all methods face identical demand noise at a fixed seed.  Rows
are merged in a fixed sort order, so reruns of the same plan produce
identical data bytes; wall-clock columns are the only nondeterministic
fields and the clock is injectable for tests that need full byte equality.

Estimation failures (rank-deficient or too-little data at tiny budgets) are
recorded as failed rows rather than aborting the run.
"""

from __future__ import annotations

import csv
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dp_solver import exact_policy_value, fitted_dp, oracle_rate_fn
from .environments import make_env
from .estimation import EstimationError
from .evaluation import EvalReport, RunResult, aggregate_runs, monte_carlo_eval
from .rl_baselines import TrainSpec, train_policy_gradient, train_q_learning

__all__ = [
    "ALGORITHMS",
    "DEFAULT_BUDGETS",
    "BenchmarkPlan",
    "run_benchmark",
    "emit_plot_data",
    "RESULTS_HEADER",
]

ALGORITHMS = ("fitted_dp", "q_learning", "policy_gradient")
DEFAULT_BUDGETS = (40, 100, 200, 400, 1000, 2000)

RESULTS_HEADER = [
    "env_id",
    "algorithm",
    "episodes",
    "seed",
    "mean_revenue",
    "std_revenue",
    "standard_error",
    "satisfaction_rate",
    "exact_value",
    "train_s",
    "solve_s",
    "eval_s",
    "status",
]

_TRAIN_TAG = 15485863
_EVAL_TAG = 86028157


@dataclass(frozen=True)
class BenchmarkPlan:
    env_ids: tuple[int, ...] = (1, 2, 3, 4, 5)
    algorithms: tuple[str, ...] = ALGORITHMS
    budgets: tuple[int, ...] = DEFAULT_BUDGETS
    seeds: tuple[int, ...] = tuple(range(10))
    n_sims: int = 10_000
    out_dir: str = "results"
    global_seed: int = 0
    jobs: int = 1

    def __post_init__(self) -> None:
        if not (self.env_ids and self.algorithms and self.budgets and self.seeds):
            raise ValueError("plan selections must be non-empty")
        if any(b < 1 for b in self.budgets):
            raise ValueError("budgets must be positive")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms: {sorted(unknown)}")

    def cells(self) -> list[tuple[int, str, int, int]]:
        return [
            (env, algo, budget, seed)
            for env in self.env_ids
            for algo in self.algorithms
            for budget in self.budgets
            for seed in self.seeds
        ]


def _derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1, np.uint64)[0])


def _run_cell(
    env_id: int,
    algo: str,
    budget: int,
    seed: int,
    n_sims: int,
    global_seed: int,
    clock=time.perf_counter,
) -> RunResult:
    config = make_env(env_id)
    algo_code = ALGORITHMS.index(algo)
    train_seed = _derive_seed(global_seed, _TRAIN_TAG, env_id, algo_code, budget, seed)
    eval_seed = _derive_seed(global_seed, _EVAL_TAG, env_id, budget, seed)

    train_s = solve_s = 0.0
    policy = None
    status = "ok"
    try:
        if algo == "fitted_dp":
            rng = np.random.default_rng(train_seed)
            policy, _, timings = fitted_dp(config, budget, rng, clock=clock)
            train_s, solve_s = timings.train_s, timings.solve_s
        elif algo == "q_learning":
            spec = TrainSpec(episodes=budget, seed=train_seed)
            _, policy, train_s = train_q_learning(config, spec, clock=clock)
        else:
            spec = TrainSpec(episodes=budget, seed=train_seed)
            policy, train_s = train_policy_gradient(config, spec, clock=clock)
    except EstimationError as exc:
        status = f"failed:{type(exc).__name__}"
        return RunResult(env_id, algo, budget, seed, None, None, train_s, solve_s, 0.0, status)

    start_eval = clock()
    report = monte_carlo_eval(config, policy, n_sims, np.random.default_rng(eval_seed))
    exact = None
    if env_id == 1:
        exact = exact_policy_value(config, policy, oracle_rate_fn(config))
    eval_s = clock() - start_eval
    return RunResult(env_id, algo, budget, seed, report, exact, train_s, solve_s, eval_s, status)


def _fmt(value, timing: bool = False) -> str:
    if value is None:
        return ""
    if timing:
        return f"{value:.3f}"
    return repr(float(value))


def _result_row(r: RunResult) -> list[str]:
    rep = r.report
    return [
        str(r.env_id),
        r.algorithm,
        str(r.episodes),
        str(r.seed),
        _fmt(rep.mean_revenue if rep else None),
        _fmt(rep.std_revenue if rep else None),
        _fmt(rep.standard_error if rep else None),
        _fmt(rep.satisfaction_rate if rep else None),
        _fmt(r.exact_value),
        _fmt(r.train_s, timing=True),
        _fmt(r.solve_s, timing=True),
        _fmt(r.eval_s, timing=True),
        r.status,
    ]


def _sort_key(r: RunResult):
    return (r.env_id, ALGORITHMS.index(r.algorithm), r.episodes, r.seed)


def _samples_name(env_id: int, algo: str, budget: int, seed: int) -> str:
    return f"env{env_id}_{algo}_ep{budget}_seed{seed}.csv"


def run_benchmark(plan: BenchmarkPlan, clock=time.perf_counter) -> list[RunResult]:
    """Execute the plan and write results.csv, timing.csv, and samples files.

    Returns the per-cell results sorted by (env, algorithm, budget, seed).
    """
    out = Path(plan.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    samples_dir = out / "samples"

    cells = plan.cells()
    results: list[RunResult] = []
    if plan.jobs > 1:
        with ProcessPoolExecutor(max_workers=plan.jobs) as pool:
            futures = [
                pool.submit(_run_cell, env, algo, budget, seed, plan.n_sims, plan.global_seed)
                for env, algo, budget, seed in cells
            ]
            for done, fut in enumerate(futures, 1):
                results.append(fut.result())
                print(f"[{done}/{len(cells)}] completed", file=sys.stderr)
    else:
        for done, (env, algo, budget, seed) in enumerate(cells, 1):
            results.append(_run_cell(env, algo, budget, seed, plan.n_sims, plan.global_seed, clock))
            print(
                f"[{done}/{len(cells)}] env={env} algo={algo} episodes={budget} seed={seed}",
                file=sys.stderr,
            )
    results.sort(key=_sort_key)

    with open(out / "results.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULTS_HEADER)
        for r in results:
            writer.writerow(_result_row(r))

    any_samples = False
    for r in results:
        if r.report is not None and r.report.revenue_at_tau_samples is not None:
            if not any_samples:
                samples_dir.mkdir(exist_ok=True)
                any_samples = True
            path = samples_dir / _samples_name(r.env_id, r.algorithm, r.episodes, r.seed)
            with open(path, "w", newline="", encoding="utf-8") as fh:
                fh.write("sample\n")
                for v in r.report.revenue_at_tau_samples:
                    fh.write(repr(float(v)) + "\n")

    _write_timing_table(results, out / "timing.csv")
    return results


def _write_timing_table(results: list[RunResult], path: Path) -> None:
    cells: dict[tuple[int, str, int], list[RunResult]] = {}
    for r in results:
        cells.setdefault((r.env_id, r.algorithm, r.episodes), []).append(r)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["env_id", "algorithm", "episodes", "mean_train_s", "mean_solve_s", "mean_eval_s", "runs"])
        for key in sorted(cells, key=lambda k: (k[0], ALGORITHMS.index(k[1]), k[2])):
            rs = cells[key]
            writer.writerow(
                [
                    key[0],
                    key[1],
                    key[2],
                    f"{np.mean([r.train_s for r in rs]):.3f}",
                    f"{np.mean([r.solve_s for r in rs]):.3f}",
                    f"{np.mean([r.eval_s for r in rs]):.3f}",
                    len(rs),
                ]
            )


def _read_results_csv(path: Path) -> list[RunResult]:
    results = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RESULTS_HEADER:
            raise ValueError(f"unexpected results header in {path}")
        for row in reader:
            report = None
            if row["mean_revenue"]:
                report = EvalReport(
                    n_sims=0,
                    mean_revenue=float(row["mean_revenue"]),
                    std_revenue=float(row["std_revenue"]),
                    standard_error=float(row["standard_error"]),
                    satisfaction_rate=float(row["satisfaction_rate"]) if row["satisfaction_rate"] else None,
                    revenue_at_tau_samples=None,
                    env_id=int(row["env_id"]),
                )
            results.append(
                RunResult(
                    env_id=int(row["env_id"]),
                    algorithm=row["algorithm"],
                    episodes=int(row["episodes"]),
                    seed=int(row["seed"]),
                    report=report,
                    exact_value=float(row["exact_value"]) if row["exact_value"] else None,
                    train_s=float(row["train_s"]),
                    solve_s=float(row["solve_s"]),
                    eval_s=float(row["eval_s"]),
                    status=row["status"],
                )
            )
    return results


def emit_plot_data(results_dir, out_dir=None) -> tuple[Path, Path | None]:
    """Produce tidy plot inputs from a benchmark output directory.

    ``learning_curves.csv`` holds (env, algo, episodes, mean, std) aggregated
    over seeds; ``violins.csv`` pools the constraint-step revenue samples of
    every seed at the largest available budget per (env, algo).  Cells with
    no successful run are flagged on stderr but do not abort the export.
    """
    results_dir = Path(results_dir)
    out_dir = Path(out_dir) if out_dir is not None else results_dir
    results_path = results_dir / "results.csv"
    if not results_path.exists():
        raise FileNotFoundError(f"no results.csv under {results_dir}")
    results = _read_results_csv(results_path)
    if not results:
        raise ValueError(f"results.csv under {results_dir} is empty")

    aggregated = aggregate_runs(results)
    envs = sorted({r.env_id for r in results})
    algos = [a for a in ALGORITHMS if any(r.algorithm == a for r in results)]
    budgets = sorted({r.episodes for r in results})
    for env in envs:
        for algo in algos:
            for budget in budgets:
                if (env, algo, budget) not in aggregated:
                    print(f"warning: missing cell env={env} algo={algo} episodes={budget}", file=sys.stderr)

    out_dir.mkdir(parents=True, exist_ok=True)
    curves_path = out_dir / "learning_curves.csv"
    with open(curves_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["env", "algo", "episodes", "mean", "std"])
        for env in envs:
            for algo in algos:
                for budget in budgets:
                    cell = aggregated.get((env, algo, budget))
                    if cell is None:
                        continue
                    writer.writerow([env, algo, budget, repr(cell[0]), repr(cell[1])])

    samples_dir = results_dir / "samples"
    violins_path = None
    if samples_dir.is_dir():
        violins_path = out_dir / "violins.csv"
        with open(violins_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["env", "algo", "sample"])
            for env in envs:
                env_budgets = [
                    r.episodes for r in results if r.env_id == env and r.status == "ok"
                ]
                if not env_budgets:
                    continue
                top_budget = max(env_budgets)
                for algo in algos:
                    seeds = sorted(
                        r.seed
                        for r in results
                        if r.env_id == env and r.algorithm == algo and r.episodes == top_budget
                    )
                    for seed in seeds:
                        sample_file = samples_dir / _samples_name(env, algo, top_budget, seed)
                        if not sample_file.exists():
                            continue
                        with open(sample_file, newline="", encoding="utf-8") as sf:
                            next(sf)  # header
                            for line in sf:
                                writer.writerow([env, algo, line.strip()])
    return curves_path, violins_path
