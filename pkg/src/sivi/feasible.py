"""Feasible-set representations and Euclidean projection.

Two set types cover the library's needs: axis-aligned boxes (projection is a
componentwise clamp) and boxes intersected with finitely many halfspaces
L x <= b (projection computed by Dykstra's alternating scheme, which converges
to the exact Euclidean projection onto the intersection, unlike plain
alternating projections, which only reach a feasible point).
"""

from __future__ import annotations

import math

import numpy as np

from .numkit import RngStream, Vector, as_matrix, as_vector, ensure_finite


class ProjectionError(RuntimeError):
    """Iterative projection failed to converge; carries the last residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class BoxSet:
    """Componentwise bounds lo <= x <= hi; entries may be +-inf."""

    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=np.float64)
        self.hi = np.asarray(hi, dtype=np.float64)
        if self.lo.ndim != 1 or self.lo.shape != self.hi.shape:
            raise ValueError("lo and hi must be 1-D with equal length")
        if np.any(np.isnan(self.lo)) or np.any(np.isnan(self.hi)):
            raise ValueError("box bounds must not be NaN")
        if np.any(self.lo > self.hi):
            raise ValueError("box requires lo <= hi componentwise")
        self.dim = self.lo.shape[0]

    def project(self, u: Vector) -> Vector:
        return project_box(u, self)

    def contains(self, u: Vector, tol: float = 0.0) -> bool:
        return bool(np.all(u >= self.lo - tol) and np.all(u <= self.hi + tol))

    def sample_point(self, rng: RngStream) -> Vector:
        """Uniform draw from the box (finite bounds only)."""
        if not (np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi))):
            raise ValueError("cannot sample uniformly from an unbounded box")
        return rng.uniform(0.0, 1.0, self.dim) * (self.hi - self.lo) + self.lo


class PolyhedronSet:
    """A box intersected with halfspaces L x <= b.

    Construction certifies nonemptiness: an interior point satisfying every
    constraint with slack >= feasibility_margin is stored. One may be supplied;
    otherwise a clamp-then-shift heuristic searches for one and construction
    fails loudly if it cannot.
    """

    def __init__(self, box: BoxSet, L, b, interior_point=None, feasibility_margin: float = 1e-6):
        self.box = box
        self.L = as_matrix(L, context="halfspace matrix")
        self.b = as_vector(b, context="halfspace offsets")
        if self.L.shape[0] != self.b.shape[0]:
            raise ValueError("L and b must have matching row counts")
        if self.L.shape[1] != box.dim:
            raise ValueError("L column count must match box dimension")
        self.dim = box.dim
        self.n_halfspaces = self.L.shape[0]
        self.feasibility_margin = float(feasibility_margin)
        self._row_sq = np.einsum("ij,ij->i", self.L, self.L)
        if np.any(self._row_sq == 0.0):
            raise ValueError("halfspace rows must be nonzero")
        if interior_point is None:
            interior_point = self._find_interior_point()
        point = as_vector(interior_point, n=self.dim, context="interior point")
        if self._slack(point) < self.feasibility_margin:
            raise ValueError(
                "interior point violates the feasibility margin "
                f"(slack {self._slack(point):.3e} < {self.feasibility_margin:.3e})"
            )
        self.interior_point = point

    def _slack(self, x: Vector) -> float:
        slacks = [float(np.min(x - self.box.lo)), float(np.min(self.box.hi - x))]
        if self.n_halfspaces:
            slacks.append(float(np.min(self.b - self.L @ x)))
        return min(slacks)

    def _find_interior_point(self) -> Vector:
        lo, hi = self.box.lo, self.box.hi
        margin = self.feasibility_margin
        # Start strictly inside the box: midpoint where finite, clamped zero otherwise.
        x = np.where(
            np.isfinite(lo) & np.isfinite(hi),
            0.5 * (lo + hi),
            np.clip(0.0, np.where(np.isfinite(lo), lo + 1.0, -1.0), np.where(np.isfinite(hi), hi - 1.0, 1.0)),
        ).astype(np.float64)
        if self.n_halfspaces == 0:
            if self._slack(x) < margin:
                raise ValueError("box is too thin to hold an interior point at the feasibility margin")
            return x
        # Cyclic alternating projections onto the margin-shrunk constraints;
        # converges to a point of the shrunk intersection whenever it is nonempty.
        inset = 2.0 * margin
        shrunk_lo = np.where(np.isfinite(lo), lo + inset, -np.inf)
        shrunk_hi = np.where(np.isfinite(hi), hi - inset, np.inf)
        for _ in range(10_000):
            if self._slack(x) >= margin:
                return x
            x = np.clip(x, shrunk_lo, shrunk_hi)
            for i in range(self.n_halfspaces):
                excess = float(self.L[i] @ x) - (self.b[i] - inset)
                if excess > 0.0:
                    x = x - self.L[i] * (excess / self._row_sq[i])
        raise ValueError("no interior point supplied and the clamp-then-shift heuristic failed")

    def project(self, u: Vector, tol: float = 1e-10, max_iter: int = 10_000) -> Vector:
        return project_polyhedron(u, self, tol=tol, max_iter=max_iter)

    def contains(self, u: Vector, tol: float = 0.0) -> bool:
        return self.box.contains(u, tol) and bool(np.all(self.L @ u <= self.b + tol))

    def violation(self, u: Vector) -> float:
        """Largest constraint violation at u (0 when feasible)."""
        v_box = max(float(np.max(self.box.lo - u, initial=0.0)), float(np.max(u - self.box.hi, initial=0.0)))
        v_half = float(np.max(self.L @ u - self.b, initial=0.0))
        return max(v_box, v_half, 0.0)

    def sample_point(self, rng: RngStream, max_tries: int = 100_000) -> Vector:
        """Uniform draw via rejection from the box."""
        for _ in range(max_tries):
            x = self.box.sample_point(rng)
            if np.all(self.L @ x <= self.b):
                return x
        raise RuntimeError("rejection sampling failed; the polyhedron occupies too little of the box")


FeasibleSet = BoxSet | PolyhedronSet


def project_box(u: Vector, box: BoxSet) -> Vector:
    """Exact Euclidean projection onto a box (componentwise clamp)."""
    v = as_vector(u, n=box.dim, context="project_box input")
    return np.clip(v, box.lo, box.hi)


def _project_halfspace(u: Vector, row: Vector, offset: float, row_sq: float) -> Vector:
    excess = float(row @ u) - offset
    if excess <= 0.0:
        return u
    return u - row * (excess / row_sq)


def project_polyhedron(u: Vector, poly: PolyhedronSet, tol: float = 1e-10, max_iter: int = 10_000) -> Vector:
    """Euclidean projection onto a box/halfspace intersection via Dykstra.

    Cycles through the box and each halfspace with Dykstra's correction
    vectors. The stopping residual is the root of the summed squared change
    of the correction vectors over a full cycle (the iterate itself can stall
    for many cycles while the corrections still evolve, so iterate movement
    alone is not a sound test), combined with the remaining constraint
    violation. Raises ProjectionError with the last residual when max_iter
    cycles are not enough.
    """
    if tol <= 0.0:
        raise ValueError("tol must be > 0")
    x = as_vector(u, n=poly.dim, context="project_polyhedron input")
    if poly.n_halfspaces == 0:
        return project_box(x, poly.box)

    corrections = np.zeros((1 + poly.n_halfspaces, poly.dim))
    residual = np.inf
    for _ in range(max_iter):
        correction_change = 0.0
        prev = x + corrections[0]
        y = project_box(prev, poly.box)
        correction_change += float(np.sum((prev - y - corrections[0]) ** 2))
        corrections[0] = prev - y
        x = y
        for i in range(poly.n_halfspaces):
            prev = x + corrections[i + 1]
            y = _project_halfspace(prev, poly.L[i], poly.b[i], poly._row_sq[i])
            correction_change += float(np.sum((prev - y - corrections[i + 1]) ** 2))
            corrections[i + 1] = prev - y
            x = y
        residual = max(math.sqrt(correction_change), poly.violation(x))
        if residual <= tol:
            return ensure_finite(x, "projection result")
    raise ProjectionError(
        f"Dykstra did not converge in {max_iter} cycles (residual {residual:.3e}, tol {tol:.1e})",
        residual,
    )
