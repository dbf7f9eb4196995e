import math

import numpy as np
import pytest

from sivi.numkit import RngStream
from sivi.oracle import (
    BatchSchedule,
    MissingExactMeanError,
    StochasticOracle,
    additive_gaussian_oracle,
    batch_mean,
    batch_size,
    verify_variance_decay,
)
from sivi.problems import build_example1


def test_batch_size_first_iteration_is_one():
    assert batch_size(BatchSchedule(0.7), 0) == 1


def test_batch_size_cubic_at_half_delta():
    assert batch_size(BatchSchedule(0.5), 3) == 64


def test_batch_size_cap_binds():
    assert batch_size(BatchSchedule(0.5, cap=500), 9) == 500
    assert batch_size(BatchSchedule(0.5), 9) == 1000


def test_batch_size_nondecreasing():
    schedule = BatchSchedule(0.25)
    sizes = [batch_size(schedule, k) for k in range(200)]
    assert all(b >= a for a, b in zip(sizes, sizes[1:]))


def test_schedule_validation():
    with pytest.raises(ValueError):
        BatchSchedule(0.0)
    with pytest.raises(ValueError):
        BatchSchedule(0.5, cap=0)
    with pytest.raises(ValueError):
        batch_size(BatchSchedule(0.5), -1)


def _plain_linear_oracle(noise_scale=1.0):
    """Loop-path oracle (no exact batch sampler)."""
    mean = lambda x: 2.0 * x + 1.0

    def sample(x, rng):
        return mean(x) + noise_scale * rng.standard_normal(x.shape[0])

    return StochasticOracle(3, sample, exact_mean_fn=mean, name="plain-linear")


def test_batch_mean_zero_noise_returns_exact_mean():
    oracle = additive_gaussian_oracle(lambda x: 3.0 * x, dim=2, noise_scale=0.0)
    x = np.array([1.0, -2.0])
    out = batch_mean(oracle, x, 17, RngStream(0, 0))
    assert np.array_equal(out, 3.0 * x)


def test_batch_mean_single_draw_verbatim():
    oracle = _plain_linear_oracle()
    x = np.array([0.5, 0.0, -0.5])
    via_batch = batch_mean(oracle, x, 1, RngStream(9, 1))
    direct = oracle.sample(x, RngStream(9, 1))
    assert np.array_equal(via_batch, direct)


def test_batch_mean_example1_large_batch_close_to_mean():
    problem = build_example1()
    out = batch_mean(problem.oracle, np.zeros(3), 1_000_000, RngStream(3, 0))
    assert np.max(np.abs(out - np.array([0.0, -3.0, -5.5]))) < 0.01


def test_batch_mean_loop_path_consumes_n_times_dim_scalars():
    oracle = _plain_linear_oracle()
    x = np.zeros(3)
    rng = batch_mean_rng = RngStream(21, 2)
    batch_mean(oracle, x, 5, batch_mean_rng)
    probe_after_batch = rng.standard_normal(1)
    reference = RngStream(21, 2)
    reference.standard_normal(5 * 3)
    assert probe_after_batch == reference.standard_normal(1)


def test_batch_mean_exact_path_consumes_dim_scalars():
    # Documented equivalent of "N draws": the exact batch sampler advances the
    # stream by one dim-sized draw regardless of N.
    oracle = additive_gaussian_oracle(lambda x: x, dim=3)
    rng = RngStream(21, 2)
    batch_mean(oracle, np.zeros(3), 1000, rng)
    reference = RngStream(21, 2)
    reference.standard_normal(3)
    assert rng.standard_normal(1) == reference.standard_normal(1)


def test_batch_mean_reports_non_finite_draw_index():
    calls = {"count": 0}

    def sample(x, rng):
        calls["count"] += 1
        if calls["count"] == 4:
            return np.array([np.nan, 0.0])
        return np.zeros(2)

    oracle = StochasticOracle(2, sample, name="broken")
    with pytest.raises(FloatingPointError, match="index 3"):
        batch_mean(oracle, np.zeros(2), 10, RngStream(0, 0))


def test_exact_batch_path_matches_loop_path_statistics():
    # The scaled-single-draw batch sampler must agree with true averaging in
    # first and second moments.
    mean = lambda x: np.zeros(2)
    fast = additive_gaussian_oracle(mean, dim=2, noise_scale=1.0)
    slow = StochasticOracle(2, lambda x, rng: rng.standard_normal(2), exact_mean_fn=mean)
    n_draws, trials = 25, 4000
    x = np.zeros(2)
    rng_fast, rng_slow = RngStream(5, 0), RngStream(5, 1)
    fast_vals = np.array([batch_mean(fast, x, n_draws, rng_fast) for _ in range(trials)])
    slow_vals = np.array([batch_mean(slow, x, n_draws, rng_slow) for _ in range(trials)])
    assert np.allclose(fast_vals.mean(axis=0), slow_vals.mean(axis=0), atol=0.01)
    assert np.allclose(fast_vals.var(axis=0), 1.0 / n_draws, rtol=0.12)
    assert np.allclose(slow_vals.var(axis=0), 1.0 / n_draws, rtol=0.12)


def test_batch_mean_unbiasedness_bound():
    problem = build_example1()
    oracle = problem.oracle
    x = np.array([0.3, -0.2, 0.9])
    center = oracle.exact_mean(x)
    trials, n_draws, nu = 10_000, 4, math.sqrt(3.0)
    rng = RngStream(77, 0)
    acc = np.zeros(3)
    for _ in range(trials):
        acc += batch_mean(oracle, x, n_draws, rng) - center
    assert np.linalg.norm(acc / trials) <= 4.0 * nu / math.sqrt(trials * n_draws)


def test_variance_decay_zero_noise_is_degenerate():
    oracle = additive_gaussian_oracle(lambda x: x, dim=2, noise_scale=0.0)
    result = verify_variance_decay(oracle, np.ones(2), [10, 100, 1000], 30, RngStream(0, 0))
    assert result.degenerate
    assert math.isnan(result.slope)
    assert result.nu_estimate == 0.0


def test_variance_decay_example1_slope_band():
    problem = build_example1()
    result = verify_variance_decay(
        problem.oracle, np.zeros(3), [10, 100, 1000, 10000], 100, RngStream(13, 0)
    )
    assert -1.15 <= result.slope <= -0.85
    # nu^2 = dim for unit Gaussian noise per coordinate.
    assert result.nu_estimate == pytest.approx(math.sqrt(3.0), rel=0.2)


def test_variance_decay_loop_path_slope_band():
    oracle = _plain_linear_oracle()
    result = verify_variance_decay(oracle, np.zeros(3), [10, 100, 1000], 100, RngStream(29, 0))
    assert -1.2 <= result.slope <= -0.8


def test_variance_decay_scaled_noise_intercept():
    # Noise with covariance 4*I gives msd = 4*dim/N, so the fit intercept at
    # log N = 0 is log(4*dim).
    oracle = additive_gaussian_oracle(lambda x: x, dim=3, noise_scale=2.0)
    result = verify_variance_decay(oracle, np.zeros(3), [10, 100, 1000, 10000], 200, RngStream(31, 0))
    assert -1.15 <= result.slope <= -0.85
    assert result.intercept == pytest.approx(math.log(12.0), abs=0.25)


def test_variance_decay_requires_exact_mean():
    oracle = StochasticOracle(2, lambda x, rng: rng.standard_normal(2))
    with pytest.raises(MissingExactMeanError):
        verify_variance_decay(oracle, np.zeros(2), [10, 100, 1000], 30, RngStream(0, 0))


def test_variance_decay_input_validation():
    oracle = additive_gaussian_oracle(lambda x: x, dim=2)
    rng = RngStream(0, 0)
    with pytest.raises(ValueError):
        verify_variance_decay(oracle, np.zeros(2), [10, 100], 30, rng)
    with pytest.raises(ValueError):
        verify_variance_decay(oracle, np.zeros(2), [10, 10, 100], 30, rng)
    with pytest.raises(ValueError):
        verify_variance_decay(oracle, np.zeros(2), [10, 100, 1000], 10, rng)


def test_exact_mean_missing_raises():
    oracle = StochasticOracle(2, lambda x, rng: rng.standard_normal(2))
    assert not oracle.has_exact_mean
    with pytest.raises(MissingExactMeanError):
        oracle.exact_mean(np.zeros(2))
