"""Builders for the two benchmark problems.

The first is a 3-dimensional linear map with additive Gaussian noise, a box
feasible set, and a known solution, small enough that every quantity can be
checked by hand. The second is a supply/demand network control problem: the
mean map evaluates equilibrium shipments between 10 supply and 30 demand
markets by solving an affine complementarity problem over the nonnegative
orthant, then aggregates them per market; the feasible set is a box plus two
generated halfspaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .feasible import BoxSet, PolyhedronSet
from .numkit import RngStream, Vector, as_vector, largest_eigenvalue, symmetric_eigen_range
from .oracle import additive_gaussian_oracle
from .solver import STREAM_MODEL, SiviProblem, gap

EXAMPLE1_MATRIX = np.array([[5.0, 2.0, 1.0], [2.0, 5.0, 0.0], [1.0, 0.0, 6.0]])
EXAMPLE1_OFFSET = np.array([0.0, -3.0, -5.5])
EXAMPLE1_BOX_LO = np.full(3, -1.0)
EXAMPLE1_BOX_HI = np.full(3, 10.0)
EXAMPLE1_SOLUTION = np.array([0.0, 0.4, 0.75])

# Table of parameter distributions for the network model, drawn once per seed:
# transaction costs c ~ U[0.1, 0.2] and tau ~ U[1, 2] per shipment lane,
# supply price slopes ~ U[1, 2] and intercepts ~ U[270, 370] per supply market,
# demand price slopes ~ U[1, 2] and intercepts ~ U[620, 720] per demand market.
NETWORK_PARAM_RANGES = {
    "c": (0.1, 0.2),
    "tau": (1.0, 2.0),
    "a_coef": (1.0, 2.0),
    "a0": (270.0, 370.0),
    "rho": (1.0, 2.0),
    "rho0": (620.0, 720.0),
}


class InnerSolveError(RuntimeError):
    """The inner equilibrium solver hit its iteration limit."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass
class InnerViSolution:
    """Nonnegative equilibrium shipments and the natural-map residual there."""

    a_star: Vector
    residual: float
    iterations: int


@dataclass
class NetworkModel:
    """All data of the network control problem.

    supply_agg (m x mn) sums shipments per supply market and demand_agg
    (n x mn) per demand market. The inner equilibrium operator is affine,
    Phi(a) = M a + r(x), with

        M = diag(c) + supply_agg^T diag(a_coef) supply_agg
                    + demand_agg^T diag(rho) demand_agg

    under the standard sign convention (demand price decreasing in shipments,
    making M positive definite) and with the demand block subtracted under the
    literal convention, which is kept only to demonstrate that it produces an
    indefinite inner problem. Under the standard convention the controls enter
    as r(x) = r_const - supply_agg^T x1 - demand_agg^T x2, the orientation
    for which the outer mean map is co-coercive.
    """

    m: int
    n: int
    q: int
    c: Vector
    tau: Vector
    a_coef: Vector
    a0: Vector
    rho: Vector
    rho0: Vector
    alpha: Vector
    beta: Vector
    L: np.ndarray
    b: Vector
    f_min: Vector
    f_max: Vector
    inner_sign: str
    seed: int
    supply_agg: np.ndarray = field(repr=False, default=None)
    demand_agg: np.ndarray = field(repr=False, default=None)
    inner_matrix: np.ndarray = field(repr=False, default=None)
    r_const: Vector = field(repr=False, default=None)
    inner_step: float = 0.0

    @property
    def dim(self) -> int:
        return self.m + self.n

    @property
    def n_shipments(self) -> int:
        return self.m * self.n

    def control_shift(self, x: Vector) -> Vector:
        """Contribution of the control x to the inner affine term r(x)."""
        x1, x2 = x[: self.m], x[self.m :]
        shift = self.supply_agg.T @ x1 + self.demand_agg.T @ x2
        return shift if self.inner_sign == "literal" else -shift

    def inner_affine_terms(self, x: Vector) -> tuple[np.ndarray, Vector]:
        """(M, r(x)) of the inner equilibrium operator at control x."""
        return self.inner_matrix, self.r_const + self.control_shift(x)

    def aggregate(self, shipments: Vector) -> Vector:
        """Per-market totals [supply; demand] of a shipment vector."""
        return np.concatenate([self.supply_agg @ shipments, self.demand_agg @ shipments])


def build_network_model(
    seed: int,
    m: int = 10,
    n: int = 30,
    q: int = 2,
    alpha=None,
    beta=None,
    inner_sign: str = "standard",
) -> NetworkModel:
    """Draw a network instance from the seed and assemble the inner operator.

    Parameters are drawn from NETWORK_PARAM_RANGES in a fixed order, then the
    q halfspace rows get i.i.d. U[0, 1] entries with offsets placed at the box
    midpoint, which leaves the lower corner strictly feasible. Construction
    verifies that the inner matrix is positive semidefinite and fails with a
    diagnostic otherwise (which is exactly what happens under the literal sign
    convention).
    """
    if inner_sign not in ("standard", "literal"):
        raise ValueError('inner_sign must be "standard" or "literal"')
    rng = RngStream(seed, STREAM_MODEL)
    mn = m * n
    c = rng.uniform(*NETWORK_PARAM_RANGES["c"], mn)
    tau = rng.uniform(*NETWORK_PARAM_RANGES["tau"], mn)
    a_coef = rng.uniform(*NETWORK_PARAM_RANGES["a_coef"], m)
    a0 = rng.uniform(*NETWORK_PARAM_RANGES["a0"], m)
    rho = rng.uniform(*NETWORK_PARAM_RANGES["rho"], n)
    rho0 = rng.uniform(*NETWORK_PARAM_RANGES["rho0"], n)
    L = rng.uniform(0.0, 1.0, (q, m + n))

    alpha = np.zeros(m) if alpha is None else as_vector(alpha, n=m, context="alpha")
    beta = np.zeros(n) if beta is None else as_vector(beta, n=n, context="beta")
    f_min = np.concatenate([np.zeros(m), np.full(n, 20.0)])
    f_max = np.concatenate([np.full(m, 160.0), np.full(n, 60.0)])
    b = L @ (f_min + 0.5 * (f_max - f_min))

    supply_agg = np.kron(np.eye(m), np.ones((1, n)))
    demand_agg = np.kron(np.ones((1, m)), np.eye(n))

    demand_block = demand_agg.T @ np.diag(rho) @ demand_agg
    inner_matrix = np.diag(c) + supply_agg.T @ np.diag(a_coef) @ supply_agg
    if inner_sign == "standard":
        inner_matrix = inner_matrix + demand_block
    else:
        inner_matrix = inner_matrix - demand_block
    lam_min = float(np.min(np.linalg.eigvalsh(inner_matrix)))
    if lam_min < -1e-10:
        raise ValueError(
            f"inner equilibrium matrix is indefinite (lambda_min ~ {lam_min:.4f}) "
            f'under inner_sign="{inner_sign}"; the standard convention keeps it positive definite'
        )
    r_const = tau + supply_agg.T @ (a0 + alpha) - demand_agg.T @ (rho0 - beta)
    inner_step = 1.0 / largest_eigenvalue(inner_matrix, tol=1e-8)

    return NetworkModel(
        m=m, n=n, q=q,
        c=c, tau=tau, a_coef=a_coef, a0=a0, rho=rho, rho0=rho0,
        alpha=alpha, beta=beta, L=L, b=b, f_min=f_min, f_max=f_max,
        inner_sign=inner_sign, seed=int(seed),
        supply_agg=supply_agg, demand_agg=demand_agg,
        inner_matrix=inner_matrix, r_const=r_const, inner_step=inner_step,
    )


def solve_affine_vi_orthant(
    matrix: np.ndarray,
    affine: Vector,
    step: float,
    tol: float = 1e-8,
    max_iter: int = 200_000,
    warm_start: Vector | None = None,
) -> InnerViSolution:
    """Projected gradient for the affine VI over the nonnegative orthant.

    Iterates a <- max(a - step*(M a + r), 0) until the natural-map residual
    ||a - max(a - (M a + r), 0)|| falls to tol. Raises InnerSolveError with the
    last residual if max_iter is not enough.
    """
    a = np.zeros(matrix.shape[0]) if warm_start is None else np.maximum(warm_start, 0.0)
    residual = math.inf
    for iteration in range(max_iter):
        phi = matrix @ a + affine
        # For a >= 0 the natural-map residual vector is min(a, phi) componentwise.
        residual = float(np.linalg.norm(np.minimum(a, phi)))
        if residual <= tol:
            return InnerViSolution(a, residual, iteration)
        a = np.maximum(a - step * phi, 0.0)
    raise InnerSolveError(
        f"inner solver stalled at residual {residual:.3e} after {max_iter} iterations", residual
    )


def inner_equilibrium_solve(
    model: NetworkModel,
    x: Vector,
    tol: float = 1e-8,
    max_iter: int = 200_000,
    warm_start: Vector | None = None,
) -> InnerViSolution:
    """Equilibrium shipments for control x, by projected gradient with step 1/lambda_max."""
    point = as_vector(x, n=model.dim, context="control vector")
    matrix, affine = model.inner_affine_terms(point)
    return solve_affine_vi_orthant(matrix, affine, model.inner_step, tol, max_iter, warm_start)


class _NetworkMeanMap:
    """Mean map of the network oracle: aggregate equilibrium shipments.

    Memoizes the most recent control (one inner solve covers the gap
    evaluation and the update batch at the same point) and warm-starts each
    solve from the previous shipments. Holds per-instance state; build a fresh
    problem per replication rather than sharing one.
    """

    def __init__(self, model: NetworkModel, tol: float, max_iter: int):
        self.model = model
        self.tol = tol
        self.max_iter = max_iter
        self.inner_solves = 0
        self._warm: Vector | None = None
        self._memo_key: bytes | None = None
        self._memo_value: Vector | None = None

    def __call__(self, x: Vector) -> Vector:
        key = np.asarray(x, dtype=np.float64).tobytes()
        if key == self._memo_key:
            return self._memo_value
        solution = inner_equilibrium_solve(self.model, x, self.tol, self.max_iter, warm_start=self._warm)
        self._warm = solution.a_star
        value = self.model.aggregate(solution.a_star)
        self._memo_key = key
        self._memo_value = value
        self.inner_solves += 1
        return value


def build_example1(
    deterministic: bool = False,
    x0=None,
    exact_batch: bool = True,
) -> SiviProblem:
    """The 3-dimensional linear benchmark with known solution.

    Oracle draws are A x + offset + xi with xi standard Gaussian (omitted in
    deterministic mode), the feasible set is the box [-1, 10]^3, and the
    known solution is [0, 0.4, 0.75]. Construction re-verifies that the matrix
    is symmetric positive definite, that the gap vanishes at the solution, and
    that the solution passes a sampled inverse-VI residual check.
    """
    matrix = EXAMPLE1_MATRIX
    offset = EXAMPLE1_OFFSET
    lam_min, _ = symmetric_eigen_range(matrix)
    if lam_min <= 0:
        raise ValueError("benchmark matrix must be positive definite")

    def mean_map(x: Vector) -> Vector:
        return matrix @ x + offset

    box = BoxSet(EXAMPLE1_BOX_LO, EXAMPLE1_BOX_HI)
    x_star = EXAMPLE1_SOLUTION.copy()
    _, gap_at_solution = gap(x_star, 1.0, mean_map(x_star), box)
    if gap_at_solution > 1e-12:
        raise ValueError(f"gap at the known solution is {gap_at_solution:.3e}, expected 0")
    check_rng = RngStream(20240501, STREAM_MODEL)
    samples = check_rng.uniform(0.0, 1.0, (10_000, 3)) * (box.hi - box.lo) + box.lo
    residual = float(np.min((samples - mean_map(x_star)) @ x_star))
    if residual < -1e-12:
        raise ValueError(f"known solution fails the sampled inverse-VI check ({residual:.3e})")

    oracle = additive_gaussian_oracle(
        mean_map,
        dim=3,
        noise_scale=0.0 if deterministic else 1.0,
        exact_batch=exact_batch,
        name="linear-3d",
    )
    start = np.zeros(3) if x0 is None else as_vector(x0, n=3, context="x0")
    return SiviProblem(
        oracle=oracle,
        feasible_set=box,
        x0=start,
        x_star=x_star,
        name="example1",
        deterministic=deterministic,
    )


def build_example2(
    seed: int,
    deterministic: bool = False,
    inner_sign: str = "standard",
    alpha=None,
    beta=None,
    exact_batch: bool = True,
    inner_tol: float = 1e-8,
    inner_max_iter: int = 200_000,
) -> tuple[SiviProblem, NetworkModel]:
    """The network equilibrium control benchmark (40 controls, 300 shipments).

    Oracle draws are the aggregated equilibrium shipments plus standard
    Gaussian noise on both market blocks; the exact mean requires one inner
    equilibrium solve per distinct control. The start point is the zero
    vector, which lies outside the feasible set (demand controls are bounded
    below by 20), so construction emits the documented warning.
    """
    model = build_network_model(seed, alpha=alpha, beta=beta, inner_sign=inner_sign)
    mean_map = _NetworkMeanMap(model, inner_tol, inner_max_iter)
    oracle = additive_gaussian_oracle(
        mean_map,
        dim=model.dim,
        noise_scale=0.0 if deterministic else 1.0,
        exact_batch=exact_batch,
        name="network-equilibrium",
    )
    box = BoxSet(model.f_min, model.f_max)
    polyhedron = PolyhedronSet(box, model.L, model.b)
    problem = SiviProblem(
        oracle=oracle,
        feasible_set=polyhedron,
        x0=np.zeros(model.dim),
        x_star=None,
        name="example2",
        deterministic=deterministic,
    )
    return problem, model
