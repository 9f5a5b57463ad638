"""Tests for the one-dimensional Wright–Fisher diffusion."""

import logging
import math

import numpy as np
import pytest
import scipy.stats

from src.gemdiff.core import ParameterError
from src.gemdiff.parallel import TaskPool
from src.gemdiff.rng import RngStream
from src.gemdiff.wf_diffusion import (
    SimConfig,
    WFParams,
    WFState,
    eigenfunction,
    linear_eigen_prediction,
    reversibility_gap,
    scale_function,
    stationary_cdf,
    stationary_density,
    stationary_sample,
    step_count,
    wf_simulate,
    wf_step,
    wf_step_array,
)

SYMMETRIC = WFParams(0.5, 0.5)


def ode_solution(p: WFParams, x0: float, t: float) -> float:
    m = p.stationary_mean
    return m + (x0 - m) * math.exp(-p.rate * t)


def euler_without_noise(p: WFParams, x0: float, t: float, dt: float) -> float:
    x = np.float64(x0)
    for _ in range(step_count(t, dt)):
        x = wf_step_array(x, p.a, p.b, dt, np.float64(0.0))
    return float(x)


# --- Types ---

class TestTypes:
    def test_params_must_be_positive(self):
        with pytest.raises(ParameterError, match="a:"):
            WFParams(0.0, 1.0)
        with pytest.raises(ParameterError, match="b:"):
            WFParams(1.0, -0.5)

    def test_boundary_safe_flag(self):
        assert WFParams(0.5, 0.5).boundary_safe
        assert not WFParams(0.5, 0.49).boundary_safe

    def test_state_in_unit_interval(self):
        with pytest.raises(ParameterError):
            WFState(1.5)
        assert WFState(1.0).x == 1.0

    def test_sim_config_dt_exceeds_horizon(self):
        with pytest.raises(ParameterError, match="exceeds horizon"):
            SimConfig(dt=0.1, horizon=0.05)

    def test_sim_config_zero_horizon_allowed(self):
        assert SimConfig(dt=0.1, horizon=0.0).steps == 0

    def test_step_count_does_not_round_up(self):
        assert step_count(1.0, 1e-3) == 1000
        assert step_count(1.0, 0.3) == 4


# --- wf_step ---

class TestStep:
    def test_zero_noise_drift_step(self):
        assert wf_step(WFState(0.3), SYMMETRIC, 0.1, 0.0).x == pytest.approx(0.32)

    def test_at_zero_only_drift_survives(self):
        p = WFParams(0.7, 1.3)
        assert wf_step(WFState(0.0), p, 0.05, 0.0).x == pytest.approx(0.7 * 0.05)
        assert wf_step(WFState(0.0), p, 0.05, 2.5).x == pytest.approx(0.7 * 0.05)

    def test_at_one_noise_is_ignored(self):
        for z in (-3.0, 0.0, 4.0):
            assert wf_step(WFState(1.0), SYMMETRIC, 0.1, z).x == pytest.approx(0.95)

    def test_clamped_to_unit_interval(self):
        rng = RngStream(11)
        size = 10**6
        x = rng.uniform(size)
        a = rng.uniform(size) * 3 + 1e-3
        b = rng.uniform(size) * 3 + 1e-3
        z = rng.normal(size) * 3
        for dt in (1e-4, 1e-2, 0.5):
            out = wf_step_array(x, a, b, dt, z)
            assert np.all((out >= 0.0) & (out <= 1.0))

    def test_rejects_nonpositive_dt(self):
        with pytest.raises(ParameterError):
            wf_step(WFState(0.3), SYMMETRIC, 0.0, 0.0)


class TestDeterministicConvergence:
    def test_first_order_in_dt(self):
        p = WFParams(0.5, 1.0)
        exact = ode_solution(p, 0.9, 1.0)
        coarse = abs(euler_without_noise(p, 0.9, 1.0, 1e-2) - exact)
        fine = abs(euler_without_noise(p, 0.9, 1.0, 1e-3) - exact)
        assert 7.0 < coarse / fine < 13.0


# --- Simulation ---

class TestSimulate:
    def test_zero_horizon_returns_start(self):
        run = wf_simulate(WFState(0.37), SYMMETRIC, SimConfig(1e-3, 0.0, n_paths=5), RngStream(1))
        assert np.all(run.endpoints == 0.37)

    def test_same_seed_same_paths(self):
        cfg = SimConfig(1e-2, 0.5, n_paths=200)
        one = wf_simulate(WFState(0.2), SYMMETRIC, cfg, RngStream(5), pool=TaskPool(1, 64))
        two = wf_simulate(WFState(0.2), SYMMETRIC, cfg, RngStream(5), pool=TaskPool(4, 64))
        assert np.array_equal(one.endpoints, two.endpoints)

    def test_sample_times_include_horizon(self):
        cfg = SimConfig(1e-2, 1.0, n_paths=10)
        run = wf_simulate(WFState(0.2), SYMMETRIC, cfg, RngStream(2), sample_times=[0.25, 0.5])
        assert list(run.times) == [0.25, 0.5, 1.0]
        assert run.path.shape == (3, 10)
        assert np.array_equal(run.path[-1], run.endpoints)

    def test_sample_time_beyond_horizon(self):
        with pytest.raises(ParameterError, match="beyond horizon"):
            wf_simulate(WFState(0.2), SYMMETRIC, SimConfig(1e-2, 1.0), RngStream(2), sample_times=[2.0])

    def test_endpoint_law_is_stationary(self):
        p = WFParams(1.0, 1.0)
        n = 4000
        run = wf_simulate(WFState(0.1), p, SimConfig(5e-3, 4.0, n_paths=n), RngStream(3))
        ks = scipy.stats.kstest(run.endpoints, lambda x: stationary_cdf(p, x)).statistic
        assert ks < 0.04

    def test_eigenfunction_mean_decays(self):
        n = 20_000
        run = wf_simulate(WFState(0.2), SYMMETRIC, SimConfig(1e-3, 1.0, n_paths=n), RngStream(4))
        values = eigenfunction(SYMMETRIC, run.endpoints)
        stderr = values.std(ddof=1) / math.sqrt(n)
        assert abs(values.mean() - linear_eigen_prediction(SYMMETRIC, 0.2, 1.0)) < 4 * stderr + 5e-3

    def test_unsafe_parameters_warn(self, caplog):
        with caplog.at_level(logging.WARNING):
            wf_simulate(WFState(0.5), WFParams(0.5, 0.25), SimConfig(1e-2, 0.1, n_paths=3), RngStream(0))
        assert any("boundary 1 is accessible" in r.message for r in caplog.records)


# --- Stationary law ---

class TestStationaryLaw:
    def test_symmetric_sample_is_uniform(self):
        draws = stationary_sample(SYMMETRIC, RngStream(8), 20_000)
        assert scipy.stats.kstest(draws, "uniform").pvalue > 1e-3

    def test_sample_mean(self):
        draws = stationary_sample(WFParams(0.5, 1.0), RngStream(9), 10**5)
        stderr = draws.std(ddof=1) / math.sqrt(draws.size)
        assert draws.mean() == pytest.approx(1 / 3, abs=4 * stderr)

    def test_tiny_shapes_match_reference_law(self):
        draws = stationary_sample(WFParams(1e-3, 1e-3), RngStream(10), 10**5)
        assert not np.any(draws == 0.5)
        assert np.mean((draws > 0.01) & (draws < 0.99)) < 0.011

    def test_density_and_cdf(self):
        p = WFParams(0.5, 1.0)
        assert stationary_density(p, 0.25) == pytest.approx(2 * 0.75)
        assert stationary_cdf(p, 0.5) == pytest.approx(0.75)


# --- Scale function and eigenfunction ---

class TestScaleFunction:
    def test_zero_at_half(self):
        assert scale_function(WFParams(0.8, 1.7), 0.5) == 0.0

    def test_closed_form_symmetric(self):
        assert scale_function(SYMMETRIC, 0.9) == pytest.approx(0.25 * math.log(9), rel=1e-8)

    def test_diverges_toward_one(self):
        values = [scale_function(SYMMETRIC, 1 - 10.0**-k) for k in range(1, 8)]
        assert all(b > a for a, b in zip(values, values[1:]))
        assert values[-1] > 3.5

    def test_negative_below_half(self):
        assert scale_function(WFParams(1.0, 1.0), 0.2) < 0

    def test_domain(self):
        with pytest.raises(ParameterError):
            scale_function(SYMMETRIC, 1.0)


class TestEigenPrediction:
    def test_at_time_zero(self):
        p = WFParams(0.7, 1.1)
        assert linear_eigen_prediction(p, 0.3, 0.0) == pytest.approx(0.7 - 1.8 * 0.3)

    def test_zero_at_stationary_mean(self):
        p = WFParams(0.7, 1.1)
        assert linear_eigen_prediction(p, p.stationary_mean, 2.0) == pytest.approx(0.0, abs=1e-15)

    def test_symmetric_example(self):
        assert linear_eigen_prediction(SYMMETRIC, 0.2, 1.0) == pytest.approx(0.110364, abs=1e-6)

    def test_negative_time(self):
        with pytest.raises(ParameterError):
            linear_eigen_prediction(SYMMETRIC, 0.2, -1.0)


class TestReversibility:
    def test_gap_vanishes(self):
        cfg = SimConfig(5e-3, 0.5, n_paths=20_000)
        gap = reversibility_gap(WFParams(0.5, 1.0), lambda x: x, lambda x: x**2, 0.5, cfg, RngStream(12))
        assert abs(gap.mean) <= 4 * gap.stderr + 1e-3
