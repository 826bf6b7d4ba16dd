import numpy as np
import pytest

from pricebench.dp_solver import oracle_rate_fn, solve_backward, state_space
from pricebench.environments import ConstraintSpec, EnvConfig, Typology, make_env
from pricebench.demand import LinearDemand


@pytest.fixture(scope="session")
def env1():
    return make_env(1)


@pytest.fixture(scope="session")
def env1_oracle(env1):
    """Oracle solve of environment 1: (values, policy, V0 at the start state)."""
    values, policy = solve_backward(env1, oracle_rate_fn(env1))
    start = state_space(env1).index(0, (env1.typologies[0].initial_inventory,))
    return values, policy, float(values.values[0][start])


@pytest.fixture(scope="session")
def two_armed_bandit():
    """T=1, two prices with expected revenues ~0.75 and ~1.0 (stock non-binding)."""
    ty = Typology(LinearDemand(2.0, 1.0, horizon=1), (0.5, 1.0), 10)
    return EnvConfig(None, 1, (ty,), None, None)


def reduced_env2():
    """Two type-1 typologies at desk scale: N=3 each, T=5, coarse revenue bins.

    The constraint is scaled to the shorter horizon (target 6 at step 4,
    mu=4, width 1.0) so the revenue dimension stays active.
    """
    ty = Typology(LinearDemand(2.0, 1.0, horizon=5), tuple(i / 10 for i in range(5, 21)), 3)
    return EnvConfig(None, 5, (ty, ty), ConstraintSpec(6.0, 4.0, 4), 1.0)


@pytest.fixture(scope="session")
def reduced_env2_config():
    return reduced_env2()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
