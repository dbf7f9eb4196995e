"""Brute-force reference solvers used as independent test oracles.

These deliberately share no code with the library: projections are found by
enumerating candidate active sets of the constraint system and solving the
corresponding equality-constrained least-distance problems; complementarity
problems are solved by enumerating support sets and solving the reduced
linear systems.
"""

from itertools import combinations

import numpy as np


def projection_by_enumeration(u, lo, hi, L, b, tol=1e-9):
    """Exact projection onto {lo <= x <= hi, L x <= b} via active-set enumeration.

    Every subset of the stacked constraint rows is treated as a candidate
    active set; the equality-constrained projection onto that subset is kept
    when it satisfies the full constraint system, and the feasible candidate
    closest to u is the projection.
    """
    u = np.asarray(u, dtype=np.float64)
    n = u.shape[0]
    rows = [np.asarray(L, dtype=np.float64).reshape(-1, n)]
    offs = [np.asarray(b, dtype=np.float64).ravel()]
    rows.append(-np.eye(n))
    offs.append(-np.asarray(lo, dtype=np.float64))
    rows.append(np.eye(n))
    offs.append(np.asarray(hi, dtype=np.float64))
    rows = np.vstack(rows)
    offs = np.concatenate(offs)
    m = rows.shape[0]

    def feasible(x):
        return np.all(rows @ x <= offs + tol)

    best = None
    best_dist = np.inf
    for size in range(m + 1):
        for subset in combinations(range(m), size):
            if size == 0:
                x = u
            else:
                a_s = rows[list(subset)]
                c_s = offs[list(subset)]
                lam, *_ = np.linalg.lstsq(a_s @ a_s.T, a_s @ u - c_s, rcond=None)
                x = u - a_s.T @ lam
                if np.max(np.abs(a_s @ x - c_s)) > tol:
                    continue
            if feasible(x):
                dist = float(np.linalg.norm(x - u))
                if dist < best_dist - 0.0:
                    best_dist = dist
                    best = x
    assert best is not None, "no feasible candidate found; instance is infeasible"
    return best


def lcp_by_enumeration(matrix, affine, tol=1e-9):
    """Solve a >= 0, M a + r >= 0, a.(M a + r) = 0 by support enumeration."""
    matrix = np.asarray(matrix, dtype=np.float64)
    r = np.asarray(affine, dtype=np.float64)
    n = r.shape[0]
    for size in range(n + 1):
        for support in combinations(range(n), size):
            idx = list(support)
            a = np.zeros(n)
            if idx:
                sub = matrix[np.ix_(idx, idx)]
                try:
                    a_sub = np.linalg.solve(sub, -r[idx])
                except np.linalg.LinAlgError:
                    a_sub, *_ = np.linalg.lstsq(sub, -r[idx], rcond=None)
                    if np.max(np.abs(sub @ a_sub + r[idx])) > tol:
                        continue
                a[idx] = a_sub
            if np.min(a) < -tol:
                continue
            phi = matrix @ a + r
            if np.min(phi) < -tol:
                continue
            return np.maximum(a, 0.0)
    raise AssertionError("no complementary support set found")


def random_projection_instance(rng, n=5, q=2, with_anchor=False):
    """A feasible random box/halfspace instance and a point to project.

    The anchor is strictly feasible by construction and can serve as the
    certified interior point.
    """
    lo = rng.uniform(-2.0, 0.0, n)
    hi = lo + rng.uniform(0.5, 3.0, n)
    L = rng.standard_normal((q, n))
    anchor = lo + rng.uniform(0.2, 0.8, n) * (hi - lo)
    b = L @ anchor + rng.uniform(0.1, 1.0, q)
    u = anchor + rng.standard_normal(n) * 2.0
    if with_anchor:
        return lo, hi, L, b, u, anchor
    return lo, hi, L, b, u


def random_lcp_instance(rng, n=5):
    """A random positive-definite affine complementarity instance."""
    g = rng.standard_normal((n, n))
    matrix = g.T @ g + 0.1 * np.eye(n)
    affine = rng.standard_normal(n) * 2.0
    return matrix, affine
