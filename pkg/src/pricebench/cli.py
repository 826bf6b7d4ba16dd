"""Command-line interface.

Subcommands cover the full pipeline: ``simulate`` collects a random-episode
sales dataset, ``fit`` estimates demand rates from it, ``solve-dp`` runs the
fitted (or oracle) backward induction, ``train-rl`` trains a tabular
learner, ``evaluate`` scores a saved policy, ``benchmark`` runs the whole
experiment matrix, and ``emit-plot-data`` reduces benchmark output to tidy
CSVs for figure rendering.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import benchmark as bench
from .dp_solver import fitted_dp, oracle_rate_fn, solve_backward
from .environments import EnvConfig, load_config, make_env
from .estimation import FeatureSet, fit_ols, load_observations_csv, save_observations_csv
from .estimation import collect_random_episodes
from .evaluation import monte_carlo_eval
from .policy_io import load_policy, save_policy, save_value_function
from .rl_baselines import TrainSpec, train_policy_gradient, train_q_learning


def _env_config(args) -> EnvConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    if getattr(args, "env", None) is None:
        raise SystemExit("one of --env or --config is required")
    return make_env(args.env)


def _add_env_flags(parser, config_help="environment config JSON (alternative to --env)"):
    parser.add_argument("--env", type=int, choices=range(1, 6), help="environment preset id")
    parser.add_argument("--config", help=config_help)


def _cmd_simulate(args) -> int:
    config = _env_config(args)
    rng = np.random.default_rng(args.seed)
    observations = collect_random_episodes(config, args.episodes, rng)
    save_observations_csv(observations, args.out)
    print(f"wrote {len(observations)} observations to {args.out}")
    return 0


def _cmd_fit(args) -> int:
    config = _env_config(args)
    observations = load_observations_csv(args.data)
    feature_set = FeatureSet(args.features) if args.features else None
    if feature_set is None:
        from .dp_solver import default_feature_set

        feature_set = default_feature_set(config)
    models = []
    for i in range(len(config.typologies)):
        rows = [o for o in observations if o.typology == i]
        models.append(fit_ols(rows, feature_set, config.horizon))
    payload = {
        "horizon": config.horizon,
        "feature_set": feature_set.value,
        "models": [
            {"typology": i, "coefficients": list(m.coefficients)} for i, m in enumerate(models)
        ],
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    print(f"wrote {len(models)} model(s) to {args.out}")
    return 0


def _cmd_solve_dp(args) -> int:
    config = _env_config(args)
    if args.oracle:
        values, policy = solve_backward(config, oracle_rate_fn(config))
        if args.value_out:
            save_value_function(values, config, args.value_out)
    else:
        rng = np.random.default_rng(args.seed)
        feature_set = FeatureSet(args.features) if args.features else None
        policy, _, timings = fitted_dp(config, args.episodes, rng, feature_set=feature_set)
        print(f"collection+fit {timings.train_s:.3f}s, solve {timings.solve_s:.3f}s")
    save_policy(policy, config, args.out)
    print(f"wrote policy to {args.out}")
    return 0


def _cmd_train_rl(args) -> int:
    config = _env_config(args)
    spec = TrainSpec(episodes=args.episodes, seed=args.seed)
    if args.algo == "q":
        _, policy, wall = train_q_learning(config, spec)
    else:
        policy, wall = train_policy_gradient(config, spec)
    save_policy(policy, config, args.out)
    print(f"trained in {wall:.3f}s, wrote policy to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    config = _env_config(args)
    policy = load_policy(args.policy)
    report = monte_carlo_eval(config, policy, args.sims, np.random.default_rng(args.seed))
    summary = {
        "n_sims": report.n_sims,
        "mean_revenue": report.mean_revenue,
        "std_revenue": report.std_revenue,
        "standard_error": report.standard_error,
    }
    if report.satisfaction_rate is not None:
        summary["satisfaction_rate"] = report.satisfaction_rate
    print(json.dumps(summary, indent=2))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
    if args.samples_out and report.revenue_at_tau_samples is not None:
        with open(args.samples_out, "w", encoding="utf-8") as fh:
            fh.write("sample\n")
            for v in report.revenue_at_tau_samples:
                fh.write(repr(float(v)) + "\n")
    return 0


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok)


def _cmd_benchmark(args) -> int:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
        plan = bench.BenchmarkPlan(
            env_ids=tuple(raw.get("env_ids", (1, 2, 3, 4, 5))),
            algorithms=tuple(raw.get("algorithms", bench.ALGORITHMS)),
            budgets=tuple(raw.get("budgets", bench.DEFAULT_BUDGETS)),
            seeds=tuple(raw.get("seeds", range(10))),
            n_sims=int(raw.get("n_sims", 10_000)),
            out_dir=raw.get("out_dir", args.out),
            global_seed=int(raw.get("global_seed", args.seed)),
            jobs=int(raw.get("jobs", args.jobs)),
        )
    else:
        plan = bench.BenchmarkPlan(
            env_ids=_parse_int_list(args.env) if args.env else (1, 2, 3, 4, 5),
            algorithms=tuple(args.algo.split(",")) if args.algo else bench.ALGORITHMS,
            budgets=_parse_int_list(args.episodes) if args.episodes else bench.DEFAULT_BUDGETS,
            seeds=tuple(range(args.runs)),
            n_sims=args.sims,
            out_dir=args.out,
            global_seed=args.seed,
            jobs=args.jobs,
        )
    results = bench.run_benchmark(plan)
    failures = [r for r in results if r.status != "ok"]
    print(f"{len(results)} cells, {len(failures)} failed, results in {plan.out_dir}")
    return 1 if failures else 0


def _cmd_emit_plot_data(args) -> int:
    curves, violins = bench.emit_plot_data(args.results, args.out)
    print(f"wrote {curves}" + (f" and {violins}" if violins else ""))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pricebench",
        description="Finite-horizon dynamic pricing benchmark: fitted DP vs. tabular RL",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="collect a random-episode sales dataset (CSV)")
    _add_env_flags(p)
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="dataset CSV path")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="fit demand rates from a dataset CSV")
    _add_env_flags(p)
    p.add_argument("--data", required=True, help="dataset CSV from `simulate`")
    p.add_argument("--features", choices=[f.value for f in FeatureSet])
    p.add_argument("--out", required=True, help="model JSON path")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("solve-dp", help="fitted (or oracle) backward induction")
    _add_env_flags(p)
    p.add_argument("--episodes", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--oracle", action="store_true", help="use true demand rates")
    p.add_argument("--features", choices=[f.value for f in FeatureSet])
    p.add_argument("--out", required=True, help="policy JSON path")
    p.add_argument("--value-out", help="value-function JSON path (oracle mode)")
    p.set_defaults(func=_cmd_solve_dp)

    p = sub.add_parser("train-rl", help="train a tabular RL baseline")
    _add_env_flags(p)
    p.add_argument("--algo", choices=["q", "pg"], required=True)
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="policy JSON path")
    p.set_defaults(func=_cmd_train_rl)

    p = sub.add_parser("evaluate", help="Monte Carlo evaluation of a saved policy")
    _add_env_flags(p)
    p.add_argument("--policy", required=True)
    p.add_argument("--sims", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="summary JSON path")
    p.add_argument("--samples-out", help="constraint-step revenue samples CSV")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("benchmark", help="run the experiment matrix")
    p.add_argument("--env", help="comma-separated environment ids (default all)")
    p.add_argument("--algo", help="comma-separated algorithms (default all)")
    p.add_argument("--episodes", help="comma-separated budgets (default 40..2000)")
    p.add_argument("--runs", type=int, default=10, help="seeds 0..runs-1 per cell")
    p.add_argument("--sims", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0, help="global seed")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--config", help="benchmark plan JSON (overrides the flags above)")
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("emit-plot-data", help="aggregate benchmark output into tidy CSVs")
    p.add_argument("--results", required=True, help="benchmark output directory")
    p.add_argument("--out", help="destination directory (default: results dir)")
    p.set_defaults(func=_cmd_emit_plot_data)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
