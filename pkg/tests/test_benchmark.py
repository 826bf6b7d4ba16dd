import csv
import json
from pathlib import Path

import numpy as np
import pytest

import pricebench.benchmark as bench
from pricebench.benchmark import (
    ALGORITHMS,
    RESULTS_HEADER,
    BenchmarkPlan,
    emit_plot_data,
    run_benchmark,
)
from pricebench.cli import main
from pricebench.estimation import RankDeficient
from pricebench.evaluation import aggregate_runs


class FakeClock:
    """Deterministic stand-in for perf_counter (1 ms per tick)."""

    def __init__(self):
        self.now = 0.0

    def __call__(self):
        self.now += 0.001
        return self.now


def _tree_bytes(root: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()
    }


class TestBenchmarkPlan:
    def test_default_cardinality(self):
        assert len(BenchmarkPlan().cells()) == 5 * 3 * 6 * 10

    def test_validation(self):
        with pytest.raises(ValueError):
            BenchmarkPlan(env_ids=())
        with pytest.raises(ValueError):
            BenchmarkPlan(algorithms=("sarsa",))
        with pytest.raises(ValueError):
            BenchmarkPlan(budgets=(0,))


class TestRunBenchmark:
    def test_smallest_plan_reports_exact_and_mc(self, tmp_path):
        plan = BenchmarkPlan(
            env_ids=(1,), algorithms=("fitted_dp",), budgets=(40,), seeds=(0,),
            n_sims=500, out_dir=str(tmp_path / "out"),
        )
        results = run_benchmark(plan)
        assert len(results) == 1
        row = results[0]
        assert row.status == "ok"
        assert row.exact_value is not None
        assert row.report.mean_revenue > 0
        with open(tmp_path / "out" / "results.csv", newline="") as fh:
            reader = csv.DictReader(fh)
            assert reader.fieldnames == RESULTS_HEADER
            rows = list(reader)
        assert len(rows) == 1
        assert float(rows[0]["exact_value"]) == pytest.approx(row.exact_value)

    def test_constrained_env_emits_samples(self, tmp_path):
        plan = BenchmarkPlan(
            env_ids=(4,), algorithms=("q_learning",), budgets=(40,), seeds=(0, 1),
            n_sims=200, out_dir=str(tmp_path / "out"),
        )
        run_benchmark(plan)
        samples = sorted((tmp_path / "out" / "samples").glob("*.csv"))
        assert [p.name for p in samples] == [
            "env4_q_learning_ep40_seed0.csv",
            "env4_q_learning_ep40_seed1.csv",
        ]
        lines = samples[0].read_text().splitlines()
        assert lines[0] == "sample" and len(lines) == 201

    def test_failures_are_rows_not_crashes(self, tmp_path, monkeypatch):
        def broken(*args, **kwargs):
            raise RankDeficient("degenerate data")

        monkeypatch.setattr(bench, "fitted_dp", broken)
        plan = BenchmarkPlan(
            env_ids=(1,), algorithms=("fitted_dp",), budgets=(40,), seeds=(0,),
            n_sims=100, out_dir=str(tmp_path / "out"),
        )
        results = run_benchmark(plan)
        assert results[0].status == "failed:RankDeficient"
        assert results[0].report is None
        text = (tmp_path / "out" / "results.csv").read_text()
        assert "failed:RankDeficient" in text

    def test_eval_stream_shared_across_algorithms(self, tmp_path):
        # the evaluation seed must not depend on the algorithm
        from pricebench.benchmark import _derive_seed, _EVAL_TAG

        assert _derive_seed(0, _EVAL_TAG, 1, 40, 0) == _derive_seed(0, _EVAL_TAG, 1, 40, 0)
        plan = BenchmarkPlan(
            env_ids=(1,), algorithms=("fitted_dp", "q_learning"), budgets=(2000,), seeds=(3,),
            n_sims=100, out_dir=str(tmp_path / "out"),
        )
        results = run_benchmark(plan)
        assert {r.algorithm for r in results} == {"fitted_dp", "q_learning"}

    def test_byte_identical_reruns_with_injected_clock(self, tmp_path):
        trees = []
        for run in ("a", "b"):
            out = tmp_path / run
            plan = BenchmarkPlan(
                env_ids=(1, 4), algorithms=ALGORITHMS, budgets=(40, 100), seeds=(0, 1),
                n_sims=300, out_dir=str(out), global_seed=7,
            )
            run_benchmark(plan, clock=FakeClock())
            emit_plot_data(out)
            trees.append(_tree_bytes(out))
        assert trees[0] == trees[1]


class TestEmitPlotData:
    def test_missing_results_dir_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            emit_plot_data(tmp_path / "nope")

    def test_single_cell_single_curve_row(self, tmp_path):
        plan = BenchmarkPlan(
            env_ids=(1,), algorithms=("policy_gradient",), budgets=(40,), seeds=(0,),
            n_sims=100, out_dir=str(tmp_path / "out"),
        )
        run_benchmark(plan)
        curves, violins = emit_plot_data(tmp_path / "out")
        rows = list(csv.DictReader(open(curves, newline="")))
        assert len(rows) == 1
        assert rows[0]["algo"] == "policy_gradient"
        assert violins is None

    def test_aggregation_matches_oracle(self, tmp_path):
        plan = BenchmarkPlan(
            env_ids=(1,), algorithms=("q_learning",), budgets=(40,), seeds=(0, 1, 2),
            n_sims=100, out_dir=str(tmp_path / "out"),
        )
        results = run_benchmark(plan)
        curves, _ = emit_plot_data(tmp_path / "out")
        rows = list(csv.DictReader(open(curves, newline="")))
        mean, std, n = aggregate_runs(results)[(1, "q_learning", 40)]
        assert n == 3
        assert float(rows[0]["mean"]) == pytest.approx(mean, abs=1e-12)
        assert float(rows[0]["std"]) == pytest.approx(std, abs=1e-12)

    def test_violin_samples_pool_top_budget(self, tmp_path):
        plan = BenchmarkPlan(
            env_ids=(4,), algorithms=("q_learning",), budgets=(40, 100), seeds=(0, 1),
            n_sims=50, out_dir=str(tmp_path / "out"),
        )
        run_benchmark(plan)
        _, violins = emit_plot_data(tmp_path / "out")
        rows = list(csv.DictReader(open(violins, newline="")))
        assert len(rows) == 2 * 50  # two seeds at the top budget only
        assert all(r["env"] == "4" for r in rows)


class TestCli:
    def test_pipeline_commands(self, tmp_path):
        data = tmp_path / "data.csv"
        model = tmp_path / "model.json"
        policy = tmp_path / "policy.json"
        report = tmp_path / "report.json"
        assert main(["simulate", "--env", "1", "--episodes", "30", "--seed", "0", "--out", str(data)]) == 0
        assert main(["fit", "--env", "1", "--data", str(data), "--out", str(model)]) == 0
        payload = json.loads(model.read_text())
        assert payload["feature_set"] == "base"
        assert len(payload["models"][0]["coefficients"]) == 4
        assert main([
            "solve-dp", "--env", "1", "--episodes", "50", "--seed", "0", "--out", str(policy),
        ]) == 0
        assert main([
            "evaluate", "--env", "1", "--policy", str(policy), "--sims", "200",
            "--seed", "1", "--out", str(report),
        ]) == 0
        assert json.loads(report.read_text())["mean_revenue"] > 0

    def test_train_rl_and_oracle_solve(self, tmp_path):
        policy = tmp_path / "rl_policy.json"
        assert main([
            "train-rl", "--algo", "pg", "--env", "1", "--episodes", "30",
            "--seed", "0", "--out", str(policy),
        ]) == 0
        oracle = tmp_path / "oracle.json"
        values = tmp_path / "values.json"
        assert main([
            "solve-dp", "--env", "4", "--oracle", "--out", str(oracle),
            "--value-out", str(values),
        ]) == 0
        assert json.loads(oracle.read_text())["kind"] == "deterministic"
        assert json.loads(values.read_text())["format"] == "pricing-value-v1"

    def test_custom_config_file(self, tmp_path):
        from pricebench.environments import make_env, save_config

        cfg_path = tmp_path / "env.json"
        save_config(make_env(1), cfg_path)
        out = tmp_path / "data.csv"
        assert main([
            "simulate", "--config", str(cfg_path), "--episodes", "5", "--seed", "0",
            "--out", str(out),
        ]) == 0
        assert out.exists()

    def test_benchmark_exit_codes(self, tmp_path, monkeypatch, capsys):
        out = tmp_path / "bench"
        code = main([
            "benchmark", "--env", "1", "--algo", "q_learning", "--episodes", "40",
            "--runs", "1", "--sims", "50", "--out", str(out),
        ])
        assert code == 0
        assert (out / "results.csv").exists()
        assert (out / "timing.csv").exists()

        def broken(*args, **kwargs):
            raise RankDeficient("nope")

        monkeypatch.setattr(bench, "fitted_dp", broken)
        code = main([
            "benchmark", "--env", "1", "--algo", "fitted_dp", "--episodes", "40",
            "--runs", "1", "--sims", "50", "--out", str(tmp_path / "bench2"),
        ])
        assert code == 1

    def test_emit_plot_data_command(self, tmp_path):
        out = tmp_path / "bench"
        main([
            "benchmark", "--env", "1", "--algo", "q_learning", "--episodes", "40,100",
            "--runs", "2", "--sims", "50", "--out", str(out),
        ])
        assert main(["emit-plot-data", "--results", str(out)]) == 0
        assert (out / "learning_curves.csv").exists()


class TestPolicyIo:
    def test_roundtrip_deterministic_and_softmax(self, tmp_path, env1):
        from pricebench.dp_solver import oracle_rate_fn, solve_backward
        from pricebench.policy_io import load_policy, save_policy
        from pricebench.rl_baselines import TrainSpec, train_policy_gradient

        _, policy = solve_backward(env1, oracle_rate_fn(env1))
        path = tmp_path / "dp.json"
        save_policy(policy, env1, path)
        loaded = load_policy(path)
        for t in range(env1.horizon):
            assert np.array_equal(loaded.actions[t], policy.actions[t])

        soft, _ = train_policy_gradient(env1, TrainSpec(episodes=20, seed=0))
        spath = tmp_path / "pg.json"
        save_policy(soft, env1, spath)
        sloaded = load_policy(spath)
        for t in range(env1.horizon):
            assert np.allclose(sloaded.preferences[t], soft.preferences[t])

    def test_rejects_unknown_format(self, tmp_path):
        from pricebench.policy_io import load_policy

        bad = tmp_path / "bad.json"
        bad.write_text('{"format": "other"}')
        with pytest.raises(ValueError):
            load_policy(bad)
