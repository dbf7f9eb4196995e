"""Dense vector/matrix helpers, seeded random streams, and spectral utilities.

Everything downstream works on plain float64 numpy arrays; the helpers here
enforce the two contracts the rest of the library relies on: values are always
finite, and random draws are bit-reproducible given (master_seed, stream_id).
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

Vector = NDArray[np.float64]
Matrix = NDArray[np.float64]


class NonFiniteError(ValueError):
    """A NaN or infinity entered a numeric operation."""


class EigenSolveError(RuntimeError):
    """Power iteration did not reach the requested residual."""


def ensure_finite(arr: np.ndarray, context: str = "array") -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"non-finite entries in {context}")
    return arr


def as_vector(data, n: int | None = None, context: str = "vector") -> Vector:
    """Validate and return a finite 1-D float64 array."""
    v = np.asarray(data, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{context}: expected 1-D data, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise ValueError(f"{context}: expected length {n}, got {v.shape[0]}")
    return ensure_finite(v, context)


def as_matrix(data, shape: tuple[int, int] | None = None, context: str = "matrix") -> Matrix:
    """Validate and return a finite 2-D float64 array (row-major semantics)."""
    m = np.asarray(data, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"{context}: expected 2-D data, got shape {m.shape}")
    if shape is not None and m.shape != shape:
        raise ValueError(f"{context}: expected shape {shape}, got {m.shape}")
    return ensure_finite(m, context)


class RngStream:
    """A deterministic, independently seeded random stream.

    The same (master_seed, stream_id) always reproduces the same sample
    sequence; distinct stream_ids give statistically independent streams.
    Backed by numpy's counter-based Philox generator keyed through
    SeedSequence(master_seed, spawn_key=(stream_id,)), whose output is
    version-stable for a fixed bit generator.

    A stream is single-owner mutable state: hand distinct streams to code
    that must not interact (e.g. one per replication).
    """

    def __init__(self, master_seed: int, stream_id: int = 0):
        if master_seed < 0 or stream_id < 0:
            raise ValueError("master_seed and stream_id must be non-negative")
        self.master_seed = int(master_seed)
        self.stream_id = int(stream_id)
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.Philox(seq))

    def standard_normal(self, size) -> np.ndarray:
        return self.generator.standard_normal(size)

    def uniform(self, low: float, high: float, size) -> np.ndarray:
        return self.generator.uniform(low, high, size)

    def __repr__(self) -> str:
        return f"RngStream(master_seed={self.master_seed}, stream_id={self.stream_id})"


def gaussian_vector(rng: RngStream, n: int) -> Vector:
    """n i.i.d. standard normal draws, advancing the stream."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return rng.standard_normal(n)


def largest_eigenvalue(
    mat: Matrix,
    tol: float = 1e-10,
    max_iter: int | None = None,
    return_vector: bool = False,
):
    """Largest eigenvalue of a symmetric matrix by power iteration.

    Starts from the deterministic direction e/sqrt(n) so repeated calls give
    identical results. Stops when the residual ||M v - lam v|| <= tol for the
    current unit direction v; raises EigenSolveError after 200*n iterations
    without convergence.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    m = as_matrix(mat, context="largest_eigenvalue input")
    n_rows, n_cols = m.shape
    if n_rows != n_cols:
        raise ValueError(f"matrix must be square, got {m.shape}")
    scale = np.max(np.abs(m))
    if scale > 0 and np.max(np.abs(m - m.T)) > 1e-10 * scale:
        raise ValueError("matrix must be symmetric (relative asymmetry above 1e-10)")

    if max_iter is None:
        max_iter = 200 * n_rows
    v = np.full(n_rows, 1.0 / np.sqrt(n_rows))
    lam = 0.0
    for _ in range(max_iter):
        w = m @ v
        lam = float(v @ w)
        residual = float(np.linalg.norm(w - lam * v))
        if residual <= tol:
            return (lam, v) if return_vector else lam
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            # v is in the kernel; 0 is an exact eigenvalue for this direction.
            return (0.0, v) if return_vector else 0.0
        v = w / norm_w
    raise EigenSolveError(
        f"power iteration did not converge in {max_iter} iterations (last residual {residual:.3e})"
    )


def symmetric_eigen_range(mat: Matrix, tol: float = 1e-8) -> tuple[float, float]:
    """(lambda_min, lambda_max) of a symmetric matrix via shifted power iterations.

    The extremes are recovered from the positive-definite shifts s*I - M and
    s*I + M, avoiding a full eigendecomposition. Intended for definiteness
    checks, not for clustered spectra.
    """
    m = as_matrix(mat, context="symmetric_eigen_range input")
    dominant = largest_eigenvalue(m, tol=tol)
    shift = abs(dominant) + 1.0
    eye = np.eye(m.shape[0])
    lam_min = shift - largest_eigenvalue(shift * eye - m, tol=tol)
    lam_max = largest_eigenvalue(shift * eye + m, tol=tol) - shift
    return lam_min, lam_max
