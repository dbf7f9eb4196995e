"""Runtime-checkable property suites.

These are the library's self-checks: projection identities, oracle moment
conditions, solver descent behavior, and inner-equilibrium complementarity.
The `verify` CLI subcommand runs them end to end; the test suite reuses them
with the sample counts pinned by the acceptance criteria.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .feasible import FeasibleSet, PolyhedronSet, project_polyhedron
from .numkit import RngStream
from .oracle import BatchSchedule, batch_mean, verify_variance_decay
from .problems import build_example1, build_example2, inner_equilibrium_solve
from .solver import (
    SolverConfig,
    check_one_step_descent,
    estimate_cocoercivity_linear,
    gap,
    sampled_solution_residual,
    solve,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.detail}"


def _draw_center_span(feasible_set: FeasibleSet) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(feasible_set, PolyhedronSet):
        box = feasible_set.box
        center = feasible_set.interior_point
    else:
        box = feasible_set
        center = 0.5 * (box.lo + box.hi)
    span = box.hi - box.lo
    if not np.all(np.isfinite(span)):
        raise ValueError("projection property suite needs finite box bounds")
    return center, span


def projection_property_suite(
    feasible_set: FeasibleSet,
    n_pairs: int,
    seed: int,
    draw_scale: float = 0.5,
    proj_tol: float = 1e-12,
    max_iter: int = 100_000,
    label: str = "set",
) -> list[CheckResult]:
    """Nonexpansiveness, obtuse-angle, and idempotence checks on random points.

    Points are drawn around the set with Gaussian spread draw_scale times the
    box span. Nonexpansiveness and the obtuse-angle inequality must hold to
    1e-9; two successive projections must agree to twice the projection
    tolerance.
    """

    def project(u):
        if isinstance(feasible_set, PolyhedronSet):
            return project_polyhedron(u, feasible_set, tol=proj_tol, max_iter=max_iter)
        return feasible_set.project(u)

    center, span = _draw_center_span(feasible_set)
    rng = RngStream(seed, 0)
    dim = feasible_set.dim

    worst_nonexpansive = -math.inf
    worst_obtuse = -math.inf
    worst_idempotence = 0.0
    for _ in range(n_pairs):
        u = center + draw_scale * span * rng.standard_normal(dim)
        v = center + draw_scale * span * rng.standard_normal(dim)
        pu, pv = project(u), project(v)
        worst_nonexpansive = max(
            worst_nonexpansive,
            float(np.linalg.norm(pu - pv) - np.linalg.norm(u - v)),
        )
        x = feasible_set.sample_point(rng)
        worst_obtuse = max(worst_obtuse, float((u - pu) @ (x - pu)))
        worst_idempotence = max(worst_idempotence, float(np.linalg.norm(project(pu) - pu)))
    return [
        CheckResult(
            f"nonexpansiveness ({label})",
            worst_nonexpansive <= 1e-9,
            f"max ||Pu-Pv|| - ||u-v|| = {worst_nonexpansive:.3e} (allowed 1e-9), {n_pairs} pairs",
        ),
        CheckResult(
            f"obtuse angle ({label})",
            worst_obtuse <= 1e-9,
            f"max (u-Pu).(x-Pu) = {worst_obtuse:.3e} (allowed 1e-9), {n_pairs} pairs",
        ),
        CheckResult(
            f"idempotence ({label})",
            worst_idempotence <= 2.0 * proj_tol,
            f"max ||P(Pu)-Pu|| = {worst_idempotence:.3e} (allowed {2.0 * proj_tol:.1e})",
        ),
    ]


def unbiasedness_check(problem_name: str, oracle, x, n_draws: int, trials: int, nu: float, seed: int) -> CheckResult:
    """Empirical mean of batch-mean noise stays within 4 nu / sqrt(trials * N)."""
    rng = RngStream(seed, 0)
    center = oracle.exact_mean(x)
    acc = np.zeros(oracle.dim)
    for _ in range(trials):
        acc += batch_mean(oracle, x, n_draws, rng) - center
    norm = float(np.linalg.norm(acc / trials))
    bound = 4.0 * nu / math.sqrt(trials * n_draws)
    return CheckResult(
        f"batch-mean unbiasedness ({problem_name})",
        norm <= bound,
        f"||empirical bias|| = {norm:.3e} <= {bound:.3e} over {trials} trials at N={n_draws}",
    )


def variance_decay_check(problem_name: str, oracle, x, seed: int, reps: int = 100) -> CheckResult:
    """Log-log slope of batch-mean noise versus batch size sits in [-1.15, -0.85]."""
    rng = RngStream(seed, 0)
    result = verify_variance_decay(oracle, x, [10, 100, 1000, 10000], reps, rng)
    ok = (not result.degenerate) and -1.15 <= result.slope <= -0.85
    return CheckResult(
        f"variance decay ({problem_name})",
        ok,
        f"slope = {result.slope:.4f} (band [-1.15, -0.85]), nu estimate {result.nu_estimate:.3f}",
    )


def example1_suite(seed: int = 7) -> list[CheckResult]:
    """Solution identities and deterministic descent on the linear benchmark."""
    results = []
    problem = build_example1(deterministic=True)
    mean_at_star = problem.oracle.exact_mean(problem.x_star)
    _, gap_norm = gap(problem.x_star, 1.0, mean_at_star, problem.feasible_set)
    results.append(
        CheckResult(
            "gap vanishes at the known solution",
            gap_norm <= 1e-12,
            f"||H(x*, 1)|| = {gap_norm:.3e} (allowed 1e-12)",
        )
    )
    residual = sampled_solution_residual(
        problem.x_star, mean_at_star, problem.feasible_set, 10_000, RngStream(seed, 0)
    )
    results.append(
        CheckResult(
            "sampled inverse-VI residual at the solution",
            residual >= -1e-12,
            f"min <y - F(x*), x*> = {residual:.3e} (allowed >= -1e-12)",
        )
    )

    mu = estimate_cocoercivity_linear(np.array([[5.0, 2.0, 1.0], [2.0, 5.0, 0.0], [1.0, 0.0, 6.0]]))
    config = SolverConfig(
        eta=4.0, iterations=300, schedule=BatchSchedule(0.5, cap=1), master_seed=seed, record_every=1
    )
    trace = solve(problem, config)
    errs = trace.errors()
    monotone = float(np.max(np.diff(errs))) if len(errs) > 1 else 0.0
    results.append(
        CheckResult(
            "deterministic distance monotone nonincreasing",
            monotone <= 1e-12,
            f"max per-step increase of ||x_k - x*|| = {monotone:.3e} (allowed 1e-12)",
        )
    )
    violation = check_one_step_descent(trace, eta=4.0, mu=mu)
    budget = 1e-10 * (1.0 + float(np.linalg.norm(problem.x0 - problem.x_star)) ** 2)
    results.append(
        CheckResult(
            "noise-free one-step descent inequality",
            violation <= budget,
            f"max violation = {violation:.3e} (allowed {budget:.3e})",
        )
    )
    return results


def complementarity_violation(matrix: np.ndarray, affine: np.ndarray, a: np.ndarray) -> tuple[float, float]:
    """(largest |a_i * phi_i|, most negative phi_i) at a candidate solution."""
    phi = matrix @ a + affine
    return float(np.max(np.abs(a * phi))), float(np.min(phi))


def example2_inner_suite(seed: int = 7, n_controls: int = 3) -> list[CheckResult]:
    """Complementarity of the inner equilibrium solve at random controls."""
    _, model = build_example2(seed)
    rng = RngStream(seed, 0)
    results = []
    controls = [np.zeros(model.dim)]
    controls += [20.0 * rng.standard_normal(model.dim) for _ in range(n_controls - 1)]
    for idx, x in enumerate(controls):
        solution = inner_equilibrium_solve(model, x)
        matrix, affine = model.inner_affine_terms(x)
        scale = 1.0 + float(np.max(np.abs(affine)))
        max_prod, min_phi = complementarity_violation(matrix, affine, solution.a_star)
        ok = max_prod <= 1e-6 * scale and min_phi >= -1e-6 * scale and float(np.min(solution.a_star)) >= -1e-10
        results.append(
            CheckResult(
                f"inner-equilibrium complementarity (control {idx})",
                ok,
                f"max |a_i phi_i| = {max_prod:.3e}, min phi_i = {min_phi:.3e} "
                f"(scale {scale:.1f}, allowed 1e-6*scale)",
            )
        )
    return results


def run_verify_suites(seed: int = 7, n_pairs: int = 2000) -> list[CheckResult]:
    """All invariant suites at a desk-scale sample count."""
    results: list[CheckResult] = []
    example1 = build_example1()
    results += projection_property_suite(
        example1.feasible_set, n_pairs, seed, label="3d box"
    )
    problem2, _ = build_example2(seed)
    results += projection_property_suite(
        problem2.feasible_set, max(n_pairs // 10, 100), seed, label="network polyhedron"
    )
    results.append(
        unbiasedness_check("linear-3d", example1.oracle, example1.x0, 10, 10_000, math.sqrt(3.0), seed)
    )
    results.append(variance_decay_check("linear-3d", example1.oracle, example1.x0, seed))
    results += example1_suite(seed)
    results += example2_inner_suite(seed)
    return results
