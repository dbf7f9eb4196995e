"""Stochastic first-order oracles, mini-batch averaging, and batch schedules.

An oracle produces random evaluations of an unknown mean map; the solver only
ever consumes batch means. The batch schedule grows as ceil((k+1)^(2+2*delta)),
which keeps the sum of 1/sqrt(N_k) finite whenever delta > 0 and no cap is set,
the condition under which iterate convergence is guaranteed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .numkit import RngStream, Vector, as_vector

# Relative snap radius for float powers that land on integers (e.g. 4**3.0).
_CEIL_SNAP = 1e-9


class MissingExactMeanError(ValueError):
    """The operation needs exact_mean but the oracle does not expose one."""


class StochasticOracle:
    """Random evaluations of a mean map, with optional exact-mean access.

    sample_fn(x, rng) realizes one draw. exact_mean_fn(x), when available,
    returns the exact expectation of a draw at x. batch_mean_fn(x, N, rng),
    when available, must return a value equal in distribution to the
    arithmetic mean of N independent draws; oracles with additive Gaussian
    noise use this to sample the batch mean exactly from a single scaled draw
    instead of materializing N samples.
    """

    def __init__(
        self,
        dim: int,
        sample_fn: Callable[[Vector, RngStream], Vector],
        exact_mean_fn: Callable[[Vector], Vector] | None = None,
        batch_mean_fn: Callable[[Vector, int, RngStream], Vector] | None = None,
        name: str = "oracle",
    ):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = int(dim)
        self._sample_fn = sample_fn
        self._exact_mean_fn = exact_mean_fn
        self._batch_mean_fn = batch_mean_fn
        self.name = name

    @property
    def has_exact_mean(self) -> bool:
        return self._exact_mean_fn is not None

    def sample(self, x: Vector, rng: RngStream) -> Vector:
        return self._sample_fn(x, rng)

    def exact_mean(self, x: Vector) -> Vector:
        if self._exact_mean_fn is None:
            raise MissingExactMeanError(f"{self.name} exposes no exact mean")
        return self._exact_mean_fn(x)


def additive_gaussian_oracle(
    mean_fn: Callable[[Vector], Vector],
    dim: int,
    noise_scale: float = 1.0,
    exact_batch: bool = True,
    name: str = "additive-gaussian",
) -> StochasticOracle:
    """Oracle returning mean_fn(x) plus i.i.d. Gaussian noise of the given scale.

    With exact_batch (the default) the oracle samples the mean of N draws
    directly: that mean is Gaussian with covariance (noise_scale^2/N)*I, so one
    draw scaled by 1/sqrt(N) is distributionally exact and the stream advances
    by dim scalars per batch instead of N*dim.
    """
    if noise_scale < 0:
        raise ValueError("noise_scale must be >= 0")

    def sample(x: Vector, rng: RngStream) -> Vector:
        value = mean_fn(x)
        if noise_scale == 0.0:
            return value
        return value + noise_scale * rng.standard_normal(dim)

    batch = None
    if exact_batch:

        def batch(x: Vector, n_draws: int, rng: RngStream) -> Vector:
            value = mean_fn(x)
            if noise_scale == 0.0:
                return value
            return value + (noise_scale / math.sqrt(n_draws)) * rng.standard_normal(dim)

    return StochasticOracle(dim, sample, exact_mean_fn=mean_fn, batch_mean_fn=batch, name=name)


@dataclass(frozen=True)
class BatchSchedule:
    """Batch-size schedule N_k = ceil((k+1)^(2+2*delta)), optionally capped."""

    delta: float
    cap: int | None = None

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be > 0")
        if self.cap is not None and self.cap < 1:
            raise ValueError("cap must be >= 1 when given")

    def exponent(self) -> float:
        return 2.0 + 2.0 * self.delta

    def size(self, k: int) -> int:
        return batch_size(self, k)


def batch_size(schedule: BatchSchedule, k: int) -> int:
    """N_k for iteration k, snapping float powers that land on integers."""
    if k < 0:
        raise ValueError("iteration index must be >= 0")
    power = float(k + 1) ** schedule.exponent()
    nearest = round(power)
    if abs(power - nearest) <= _CEIL_SNAP * max(1.0, nearest):
        n = int(nearest)
    else:
        n = int(math.ceil(power))
    if schedule.cap is not None:
        n = min(n, schedule.cap)
    return max(n, 1)


def batch_mean(oracle: StochasticOracle, x: Vector, n_draws: int, rng: RngStream) -> Vector:
    """Arithmetic mean of n_draws independent oracle draws at x.

    Uses the oracle's distributionally exact batch sampler when it has one;
    otherwise accumulates individual draws and reports the index of any draw
    that comes back non-finite.
    """
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    point = as_vector(x, n=oracle.dim, context="batch_mean point")
    if oracle._batch_mean_fn is not None:
        value = oracle._batch_mean_fn(point, n_draws, rng)
        if not np.all(np.isfinite(value)):
            raise FloatingPointError(f"{oracle.name}: non-finite batch mean (N={n_draws})")
        return value
    acc = np.zeros(oracle.dim)
    for j in range(n_draws):
        draw = oracle.sample(point, rng)
        if not np.all(np.isfinite(draw)):
            raise FloatingPointError(f"{oracle.name}: non-finite draw at index {j}")
        acc += draw
    return acc / n_draws


@dataclass
class VarianceDecayResult:
    """Least-squares fit of log mean-squared deviation against log batch size."""

    slope: float
    intercept: float
    batch_sizes: list[int]
    mean_squared_deviations: list[float]
    degenerate: bool

    @property
    def nu_estimate(self) -> float:
        """Noise magnitude implied by the fit at N=1 (msd ~ nu^2/N)."""
        if self.degenerate:
            return 0.0
        return math.exp(0.5 * self.intercept)


def verify_variance_decay(
    oracle: StochasticOracle,
    x: Vector,
    batch_sizes: list[int],
    reps: int,
    rng: RngStream,
) -> VarianceDecayResult:
    """Empirically check that batch-mean noise variance decays like 1/N.

    For each batch size, averages the squared deviation of the batch mean from
    the exact mean over reps repetitions, then fits a line in log-log space.
    A slope near -1 is the signature of i.i.d. averaging. All-zero deviations
    (a noise-free oracle) are reported with the degenerate flag instead of a
    slope.
    """
    if not oracle.has_exact_mean:
        raise MissingExactMeanError("verify_variance_decay requires exact_mean")
    if len(batch_sizes) < 3 or any(b <= a for a, b in zip(batch_sizes, batch_sizes[1:])):
        raise ValueError("batch_sizes must be strictly increasing with length >= 3")
    if reps < 30:
        raise ValueError("reps must be >= 30")
    point = as_vector(x, n=oracle.dim, context="verify_variance_decay point")
    center = oracle.exact_mean(point)
    msds = []
    for n_draws in batch_sizes:
        total = 0.0
        for _ in range(reps):
            dev = batch_mean(oracle, point, n_draws, rng) - center
            total += float(dev @ dev)
        msds.append(total / reps)
    if max(msds) == 0.0:
        return VarianceDecayResult(math.nan, math.nan, list(batch_sizes), msds, degenerate=True)
    if min(msds) == 0.0:
        raise FloatingPointError("zero deviation for some batch sizes only; log-log fit undefined")
    log_n = np.log(np.asarray(batch_sizes, dtype=np.float64))
    log_msd = np.log(np.asarray(msds))
    slope, intercept = np.polyfit(log_n, log_msd, 1)
    return VarianceDecayResult(float(slope), float(intercept), list(batch_sizes), msds, degenerate=False)
