"""Inverse projected-gradient solver for stochastic inverse variational inequalities.

The problem: find x with F(x) in X and <y - F(x), x> >= 0 for every y in X,
where F is only accessible through a stochastic oracle. A point solves the
problem exactly when the fixed-point residual

    H(x, eta) = (F(x) - P_X(F(x) - eta*x)) / eta

vanishes, so ||H|| doubles as the convergence diagnostic. Each iteration
projects a batch-averaged oracle value shifted by -eta*x onto X and steps the
iterate along the resulting correction; growing the batch size over iterations
drives the oracle noise to zero.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .feasible import FeasibleSet
from .numkit import RngStream, Vector, as_vector, symmetric_eigen_range
from .oracle import BatchSchedule, MissingExactMeanError, StochasticOracle, batch_mean

# Stream-id layout under one master seed: id 0 is reserved for model
# construction; replication r uses 1 + 2r for update batches and 2 + 2r for
# Monte Carlo gap evaluation.
STREAM_MODEL = 0


def update_stream_id(replication: int) -> int:
    return 1 + 2 * replication


def gap_stream_id(replication: int) -> int:
    return 2 + 2 * replication


class DivergedError(RuntimeError):
    """The iterate became non-finite or exceeded the divergence guard."""

    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


class ParameterDomainError(ValueError):
    """A theory formula was evaluated outside its domain of validity."""


@dataclass
class SiviProblem:
    """A stochastic oracle, a feasible set, a start point, and optional truth.

    x0 is not required to lie in X: the iterates are never projected onto X
    (only oracle values are), and the network experiment deliberately starts
    outside. Construction warns in that case rather than failing.
    """

    oracle: StochasticOracle
    feasible_set: FeasibleSet
    x0: Vector
    x_star: Vector | None = None
    name: str = "problem"
    deterministic: bool = False

    def __post_init__(self):
        self.x0 = as_vector(self.x0, n=self.oracle.dim, context=f"{self.name} x0")
        if self.feasible_set.dim != self.oracle.dim:
            raise ValueError(
                f"{self.name}: feasible set dimension {self.feasible_set.dim} "
                f"!= oracle dimension {self.oracle.dim}"
            )
        if self.x_star is not None:
            self.x_star = as_vector(self.x_star, n=self.oracle.dim, context=f"{self.name} x_star")
        if not self.feasible_set.contains(self.x0, tol=1e-9):
            warnings.warn(f"{self.name}: start point lies outside the feasible set", stacklevel=2)

    @property
    def dim(self) -> int:
        return self.oracle.dim


@dataclass(frozen=True)
class SolverConfig:
    """Step size, horizon, batch schedule, seeding, and recording cadence.

    gap_mode selects how the mean map is evaluated inside recorded gap values:
    "exact" uses the oracle's exact mean, "mc" draws a fresh Monte Carlo batch
    (gap_batch draws, default 10*N_k) independent of the update batches, and
    "auto" picks "exact" when available. Monte Carlo gap values carry an
    O(1/sqrt(gap_batch)) bias relative to the exact gap.
    """

    eta: float
    iterations: int
    schedule: BatchSchedule
    master_seed: int
    gap_mode: str = "auto"
    gap_batch: int | None = None
    record_every: int = 1
    divergence_limit: float = 1e12

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be > 0")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.gap_mode not in ("auto", "exact", "mc"):
            raise ValueError('gap_mode must be one of "auto", "exact", "mc"')
        if self.gap_batch is not None and self.gap_batch < 1:
            raise ValueError("gap_batch must be >= 1 when given")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass
class TraceRecord:
    k: int
    x: Vector
    gap_norm: float
    err: float | None
    cum_samples: int
    wall_time: float


@dataclass
class Trace:
    """Per-iteration diagnostics of one solver run.

    The record at index position i holds the iterate after its k-th update,
    the gap norm there, the distance to the known solution when available, and
    the cumulative number of oracle draws consumed before iteration k (update
    batches plus any Monte Carlo gap draws).
    """

    problem_name: str
    eta: float
    schedule: BatchSchedule
    master_seed: int
    gap_mode: str
    deterministic: bool
    x_star: Vector | None = None
    records: list[TraceRecord] = field(default_factory=list)

    def append(self, record: TraceRecord) -> None:
        if self.records and record.cum_samples <= self.records[-1].cum_samples:
            raise ValueError("cumulative sample counts must be strictly increasing")
        self.records.append(record)

    def ks(self) -> np.ndarray:
        return np.array([r.k for r in self.records], dtype=np.int64)

    def gap_norms(self) -> np.ndarray:
        return np.array([r.gap_norm for r in self.records])

    def errors(self) -> np.ndarray | None:
        if self.x_star is None:
            return None
        return np.array([r.err for r in self.records])

    def cum_samples(self) -> np.ndarray:
        return np.array([r.cum_samples for r in self.records], dtype=np.int64)

    def iterates(self) -> list[Vector]:
        return [r.x for r in self.records]

    def final_error(self) -> float | None:
        return self.records[-1].err if self.records else None


def gap(x: Vector, eta: float, mean_value: Vector, feasible_set: FeasibleSet) -> tuple[Vector, float]:
    """Fixed-point residual H(x, eta) and its Euclidean norm.

    mean_value is F(x) (exact or estimated); the residual is
    (F(x) - P_X(F(x) - eta*x)) / eta and vanishes exactly at solutions.
    """
    if not eta > 0:
        raise ValueError("eta must be > 0")
    projected = feasible_set.project(mean_value - eta * x)
    h = (mean_value - projected) / eta
    return h, float(np.linalg.norm(h))


def ipg_step(x: Vector, g_bar: Vector, eta: float, feasible_set: FeasibleSet) -> tuple[Vector, Vector]:
    """One inverse projected-gradient update.

    z = P_X(g_bar - eta*x) is the projected shifted oracle mean and the new
    iterate is x - (g_bar - z)/eta. Returns (z, x_next).
    """
    if not eta > 0:
        raise ValueError("eta must be > 0")
    if x.shape != g_bar.shape:
        raise ValueError("x and g_bar must have matching shapes")
    z = feasible_set.project(g_bar - eta * x)
    x_next = x - (g_bar - z) / eta
    return z, x_next


def _resolve_gap_mode(problem: SiviProblem, config: SolverConfig) -> str:
    if config.gap_mode == "auto":
        return "exact" if problem.oracle.has_exact_mean else "mc"
    if config.gap_mode == "exact" and not problem.oracle.has_exact_mean:
        raise MissingExactMeanError(
            f"{problem.name}: gap_mode 'exact' requires an oracle with exact_mean"
        )
    return config.gap_mode


def solve(problem: SiviProblem, config: SolverConfig, replication: int = 0) -> Trace:
    """Run the variance-reduced inverse projected-gradient loop.

    Executes config.iterations updates from problem.x0, recording diagnostics
    every record_every iterations and always at the start and final iterate.
    Raises DivergedError when an iterate goes non-finite or its norm passes
    the divergence guard.
    """
    x = problem.x0.copy()
    update_rng = RngStream(config.master_seed, update_stream_id(replication))
    gap_rng = RngStream(config.master_seed, gap_stream_id(replication))
    gap_mode = _resolve_gap_mode(problem, config)

    trace = Trace(
        problem_name=problem.name,
        eta=config.eta,
        schedule=config.schedule,
        master_seed=config.master_seed,
        gap_mode=gap_mode,
        deterministic=problem.deterministic,
        x_star=None if problem.x_star is None else problem.x_star.copy(),
    )
    cum_samples = 0
    started = time.perf_counter()

    def record(k: int) -> None:
        nonlocal cum_samples
        if gap_mode == "exact":
            mean_value = problem.oracle.exact_mean(x)
        else:
            draws = config.gap_batch or 10 * config.schedule.size(k)
            mean_value = batch_mean(problem.oracle, x, draws, gap_rng)
            cum_samples += draws
        _, gap_norm = gap(x, config.eta, mean_value, problem.feasible_set)
        err = None if problem.x_star is None else float(np.linalg.norm(x - problem.x_star))
        trace.append(TraceRecord(k, x.copy(), gap_norm, err, cum_samples, time.perf_counter() - started))

    for k in range(config.iterations):
        if k % config.record_every == 0:
            record(k)
        n_draws = config.schedule.size(k)
        g_bar = batch_mean(problem.oracle, x, n_draws, update_rng)
        cum_samples += n_draws
        _, x = ipg_step(x, g_bar, config.eta, problem.feasible_set)
        if not np.all(np.isfinite(x)):
            raise DivergedError(f"{problem.name}: non-finite iterate at iteration {k}", k)
        if float(np.linalg.norm(x)) > config.divergence_limit:
            raise DivergedError(
                f"{problem.name}: iterate norm exceeded {config.divergence_limit:.1e} at iteration {k}", k
            )
    record(config.iterations)
    return trace


def theoretical_rate_bound(
    iterations: int,
    eta: float,
    mu: float,
    nu: float,
    delta: float,
    dist0_sq: float,
    xstar_norm: float,
) -> float:
    """Upper bound on the smallest expected squared gap over a horizon.

    Evaluates
        [dist0_sq + pi^2 nu^2 / eta^2 + 2 nu xstar_norm (1 + 1/delta) / eta]
            / (T (1 - 1/(2 eta mu)))
    which is valid for the uncapped batch schedule with the given delta and
    requires eta strictly above 1/(2 mu).
    """
    if iterations < 1:
        raise ParameterDomainError("iterations must be >= 1")
    if not delta > 0:
        raise ParameterDomainError("delta must be > 0")
    if not (mu > 0 and eta > 0):
        raise ParameterDomainError("eta and mu must be > 0")
    if not eta > 1.0 / (2.0 * mu):
        raise ParameterDomainError("bound requires eta > 1/(2*mu) strictly")
    if nu < 0 or dist0_sq < 0 or xstar_norm < 0:
        raise ParameterDomainError("nu, dist0_sq, xstar_norm must be >= 0")
    numerator = dist0_sq + (math.pi ** 2) * nu ** 2 / eta ** 2
    numerator += 2.0 * nu * xstar_norm * (1.0 + 1.0 / delta) / eta
    return numerator / (iterations * (1.0 - 1.0 / (2.0 * eta * mu)))


def check_one_step_descent(trace: Trace, eta: float, mu: float) -> float:
    """Largest violation of the noise-free one-step descent inequality.

    For a deterministic run recorded at every iteration with known solution,
    checks ||x_{k+1}-x*||^2 <= ||x_k-x*||^2 - (1 - 1/(2 eta mu)) ||H(x_k)||^2
    at each step and returns max(lhs - rhs); conforming runs stay at numerical
    noise, at most 1e-10 * (1 + ||x_0 - x*||^2).
    """
    if trace.x_star is None:
        raise ValueError("descent check requires a trace with known solution")
    if not trace.deterministic:
        raise ValueError("descent check applies to noise-free runs only")
    if not eta > 1.0 / (2.0 * mu):
        raise ParameterDomainError("descent check requires eta > 1/(2*mu)")
    ks = trace.ks()
    if len(ks) < 2 or np.any(np.diff(ks) != 1):
        raise ValueError("descent check requires consecutive records (record_every=1)")
    coefficient = 1.0 - 1.0 / (2.0 * eta * mu)
    worst = -math.inf
    for prev, nxt in zip(trace.records[:-1], trace.records[1:]):
        lhs = float(np.linalg.norm(nxt.x - trace.x_star)) ** 2
        rhs = float(np.linalg.norm(prev.x - trace.x_star)) ** 2 - coefficient * prev.gap_norm ** 2
        worst = max(worst, lhs - rhs)
    return worst


def estimate_cocoercivity_linear(mat) -> float:
    """Co-coercivity modulus 1/lambda_max for a symmetric PSD linear map.

    For symmetric PSD A, <Av, v> >= ||Av||^2 / lambda_max(A), so 1/lambda_max
    is a valid modulus. Raises on asymmetric input (the formula is invalid)
    and on matrices with negative eigenvalues.
    """
    lam_min, lam_max = symmetric_eigen_range(np.asarray(mat, dtype=np.float64))
    if lam_max <= 0:
        raise ValueError("matrix must have a positive largest eigenvalue")
    if lam_min < -1e-8 * max(1.0, lam_max):
        raise ValueError(f"matrix is not positive semidefinite (lambda_min ~ {lam_min:.3e})")
    return 1.0 / lam_max


def sampled_solution_residual(
    x: Vector,
    mean_value: Vector,
    feasible_set: FeasibleSet,
    n_samples: int,
    rng: RngStream,
) -> float:
    """Smallest sampled inner product <y - F(x), x> over random y in X.

    Nonnegative (up to noise) exactly when x satisfies the inverse
    variational inequality with F(x) = mean_value.
    """
    worst = math.inf
    for _ in range(n_samples):
        y = feasible_set.sample_point(rng)
        worst = min(worst, float((y - mean_value) @ x))
    return worst
