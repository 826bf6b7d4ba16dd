"""Finite-horizon dynamic pricing benchmark.

Five Poisson-demand pricing environments, a fitted dynamic-programming
solver (demand estimated from random episodes, then exact backward
induction), tabular model-free baselines, and a reproducible evaluation
harness.
"""

from .demand import LinearDemand, NonlinearDemand, intensity, sales_pmf, sample_demand
from .environments import (
    Action,
    ConstraintSpec,
    EnvConfig,
    EnvState,
    StepOutcome,
    Typology,
    flatten_action,
    make_env,
    n_joint_actions,
    reset,
    step,
    unflatten_action,
)
from .estimation import (
    FeatureSet,
    InsufficientData,
    RankDeficient,
    RegressionModel,
    SalesObservation,
    collect_random_episodes,
    fit_ols,
    predict_rate,
)
from .dp_solver import (
    PolicyTable,
    StateSpace,
    ValueFunction,
    exact_policy_value,
    fitted_dp,
    oracle_rate_fn,
    revenue_to_bin,
    solve_backward,
    state_space,
)
from .rl_baselines import (
    QTable,
    SoftmaxPolicy,
    TrainSpec,
    policy_from_q,
    train_policy_gradient,
    train_q_learning,
)
from .evaluation import (
    EvalReport,
    RunResult,
    UniformRandomPolicy,
    aggregate_runs,
    monte_carlo_eval,
    satisfaction_gap,
)
from .benchmark import ALGORITHMS, DEFAULT_BUDGETS, BenchmarkPlan, emit_plot_data, run_benchmark

__version__ = "0.1.0"
