import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from pricebench.demand import (
    LinearDemand,
    NonlinearDemand,
    intensity,
    sales_pmf,
    sample_demand,
    sample_poisson_batch,
)


class TestIntensity:
    def test_linear_examples(self):
        spec = LinearDemand(2.0, 1.0, horizon=10)
        assert intensity(spec, 1.0, 10) == pytest.approx(2.0, abs=1e-12)
        assert intensity(spec, 2.0, 5) == 0.0
        assert intensity(LinearDemand(2.5, 1.5, 10), 1.0, 0) == pytest.approx(1.0, abs=1e-12)

    def test_truncation_above_choke_price(self):
        spec = LinearDemand(2.0, 1.0, horizon=10)
        assert intensity(spec, 3.5, 7) == 0.0

    def test_nonlinear_matches_direct_formula(self):
        spec = NonlinearDemand(1.05, 0.01, -0.032, 0.16, 4.7, 0.2, 2.0, horizon=10)
        for p in (0.5, 1.3, 2.0):
            for t in (0, 4, 9):
                level = 1.05 * math.exp(0.01 * t**2 - 0.032 * t + 0.16)
                attraction = max(0.0, 4.7 * math.exp(0.2 * (2.0 - p) - 1.0))
                assert intensity(spec, p, t) == pytest.approx(level * attraction, rel=1e-12)

    def test_vector_price(self):
        spec = LinearDemand(2.0, 1.0, horizon=10)
        prices = np.array([0.5, 2.0, 1.0])
        out = intensity(spec, prices, 5)
        assert out.shape == (3,)
        assert out[1] == 0.0
        assert np.all(out >= 0)

    @given(
        alpha=st.floats(0.1, 5.0),
        beta=st.floats(0.1, 3.0),
        price=st.floats(0.0, 10.0),
        t=st.integers(0, 10),
    )
    def test_never_negative(self, alpha, beta, price, t):
        assert intensity(LinearDemand(alpha, beta, 10), price, t) >= 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            LinearDemand(0.0, 1.0, 10)
        with pytest.raises(ValueError):
            LinearDemand(2.0, -1.0, 10)


class TestSampleDemand:
    def test_zero_rate_is_always_zero(self, rng):
        spec = LinearDemand(2.0, 1.0, horizon=10)
        assert all(sample_demand(spec, 2.0, 3, rng) == 0 for _ in range(200))

    def test_law_of_large_numbers(self):
        # E[Q] = Var(Q) = rate for Poisson demand
        spec = LinearDemand(2.0, 1.0, horizon=10)
        rng = np.random.default_rng(7)
        draws = np.array([sample_demand(spec, 1.0, 10, rng) for _ in range(100_000)])
        assert draws.mean() == pytest.approx(2.0, abs=0.03)
        assert draws.var() == pytest.approx(2.0, abs=0.1)

    def test_deterministic_per_seed(self):
        spec = LinearDemand(2.0, 1.0, horizon=10)
        rng = np.random.default_rng(9)
        seq1 = [sample_demand(spec, 0.5, 0, rng) for _ in range(50)]
        rng = np.random.default_rng(9)
        seq2 = [sample_demand(spec, 0.5, 0, rng) for _ in range(50)]
        assert seq1 == seq2

    def test_empirical_pmf_matches_sales_pmf(self):
        # capped draws converge to the truncated distribution
        rate, cap = 1.7, 3
        rng = np.random.default_rng(11)
        draws = sample_poisson_batch(np.full(100_000, rate), rng)
        capped = np.minimum(draws, cap)
        empirical = np.bincount(capped, minlength=cap + 1) / len(capped)
        assert np.max(np.abs(empirical - sales_pmf(rate, cap))) < 0.01

    def test_batch_sampler_moments_and_determinism(self):
        rates = np.array([0.0, 0.5, 2.0, 4.0])
        rng = np.random.default_rng(3)
        draws = np.stack([sample_poisson_batch(rates, rng) for _ in range(20_000)])
        assert np.all(draws[:, 0] == 0)
        assert np.allclose(draws.mean(axis=0)[1:], rates[1:], atol=0.06)
        a = sample_poisson_batch(np.full(1000, 1.5), np.random.default_rng(5))
        b = sample_poisson_batch(np.full(1000, 1.5), np.random.default_rng(5))
        assert np.array_equal(a, b)


class TestSalesPmf:
    def test_zero_inventory(self):
        assert sales_pmf(3.7, 0).tolist() == [1.0]

    def test_zero_rate(self):
        assert sales_pmf(0.0, 5).tolist() == [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]

    def test_unit_inventory_analytic_tail(self):
        pmf = sales_pmf(1.0, 1)
        assert pmf[0] == pytest.approx(math.exp(-1.0), abs=1e-12)
        assert pmf[1] == pytest.approx(1.0 - math.exp(-1.0), abs=1e-12)

    def test_matches_scipy_oracle(self):
        # independent route: scipy pmf below the cap, survival mass at the cap
        for rate in (0.3, 1.0, 2.85, 6.2):
            for cap in (1, 4, 10):
                pmf = sales_pmf(rate, cap)
                expected = stats.poisson.pmf(np.arange(cap), rate)
                assert np.allclose(pmf[:cap], expected, atol=1e-13)
                assert pmf[cap] == pytest.approx(stats.poisson.sf(cap - 1, rate), abs=1e-12)

    @settings(max_examples=200)
    @given(rate=st.floats(0.0, 8.0), cap=st.integers(0, 12))
    def test_normalization_and_bounds(self, rate, cap):
        pmf = sales_pmf(rate, cap)
        assert len(pmf) == cap + 1
        assert abs(pmf.sum() - 1.0) <= 1e-12
        assert np.all(pmf >= 0.0) and np.all(pmf <= 1.0)
        truncated_mean = float(np.arange(cap + 1) @ pmf)
        assert truncated_mean <= rate + 1e-12
        assert truncated_mean <= cap + 1e-12

    def test_rejects_negative_arguments(self):
        with pytest.raises(ValueError):
            sales_pmf(1.0, -1)
        with pytest.raises(ValueError):
            sales_pmf(-0.5, 3)
