import numpy as np
import pytest

from brute_force import projection_by_enumeration, random_projection_instance
from sivi.feasible import (
    BoxSet,
    PolyhedronSet,
    ProjectionError,
    project_box,
    project_polyhedron,
)
from sivi.numkit import RngStream

BOX3 = BoxSet(np.full(3, -1.0), np.full(3, 10.0))


def test_project_box_clamps():
    out = project_box(np.array([1.55, -1.4, -1.75]), BOX3)
    assert np.array_equal(out, np.array([1.55, -1.0, -1.0]))


def test_project_box_identity_inside():
    u = np.array([0.0, 3.0, 9.9])
    assert np.array_equal(project_box(u, BOX3), u)


def test_project_box_upper_and_lower():
    out = project_box(np.array([11.0, 5.0, -2.0]), BOX3)
    assert np.array_equal(out, np.array([10.0, 5.0, -1.0]))


def test_project_box_dimension_mismatch():
    with pytest.raises(ValueError):
        project_box(np.array([1.0, 2.0]), BOX3)


def test_box_requires_ordered_bounds():
    with pytest.raises(ValueError):
        BoxSet([0.0, 2.0], [1.0, 1.0])


def _simple_polyhedron():
    box = BoxSet(np.zeros(2), np.full(2, 4.0))
    return PolyhedronSet(box, np.array([[1.0, 1.0]]), np.array([4.0]))


def test_polyhedron_certifies_interior_point():
    poly = _simple_polyhedron()
    assert poly.contains(poly.interior_point)
    assert np.min(poly.b - poly.L @ poly.interior_point) >= poly.feasibility_margin


def test_polyhedron_accepts_explicit_interior_point():
    box = BoxSet(np.zeros(2), np.full(2, 4.0))
    poly = PolyhedronSet(box, np.array([[1.0, 1.0]]), np.array([4.0]), interior_point=[0.5, 0.5])
    assert np.array_equal(poly.interior_point, [0.5, 0.5])


def test_polyhedron_rejects_infeasible_interior_point():
    box = BoxSet(np.zeros(2), np.full(2, 4.0))
    with pytest.raises(ValueError, match="feasibility margin"):
        PolyhedronSet(box, np.array([[1.0, 1.0]]), np.array([4.0]), interior_point=[3.0, 3.0])


def test_polyhedron_construction_fails_when_empty():
    box = BoxSet(np.zeros(2), np.ones(2))
    with pytest.raises(ValueError):
        PolyhedronSet(box, np.array([[-1.0, -1.0]]), np.array([-10.0]))


def test_project_polyhedron_inside_is_fixed():
    poly = _simple_polyhedron()
    u = np.array([1.0, 1.0])
    out = project_polyhedron(u, poly, tol=1e-12)
    assert np.linalg.norm(out - u) <= 1e-12


def test_project_polyhedron_without_halfspaces_reduces_to_clamp():
    box = BoxSet(np.full(3, -1.0), np.full(3, 10.0))
    poly = PolyhedronSet(box, np.zeros((0, 3)), np.zeros(0))
    u = np.array([11.0, 5.0, -2.0])
    assert np.array_equal(project_polyhedron(u, poly), project_box(u, box))


def test_project_polyhedron_matches_enumeration_oracle():
    rng = np.random.default_rng(7)
    for _ in range(25):
        lo, hi, L, b, u = random_projection_instance(rng)
        reference = projection_by_enumeration(u, lo, hi, L, b)
        poly = PolyhedronSet(BoxSet(lo, hi), L, b)
        out = project_polyhedron(u, poly, tol=1e-10)
        assert np.linalg.norm(out - reference) <= 1e-7


def test_project_polyhedron_iteration_limit():
    poly = _simple_polyhedron()
    with pytest.raises(ProjectionError) as excinfo:
        project_polyhedron(np.array([10.0, 10.0]), poly, tol=1e-14, max_iter=1)
    assert excinfo.value.residual > 0


def test_nonexpansiveness_and_obtuse_angle_quick():
    poly = _simple_polyhedron()
    rng = RngStream(5, 0)
    for _ in range(300):
        u = 4.0 * rng.standard_normal(2)
        v = 4.0 * rng.standard_normal(2)
        pu = project_polyhedron(u, poly, tol=1e-12)
        pv = project_polyhedron(v, poly, tol=1e-12)
        assert np.linalg.norm(pu - pv) <= np.linalg.norm(u - v) + 1e-9
        x = poly.sample_point(rng)
        assert float((u - pu) @ (x - pu)) <= 1e-9


def test_sample_point_rejects_unbounded_box():
    box = BoxSet([-np.inf], [np.inf])
    with pytest.raises(ValueError):
        box.sample_point(RngStream(1, 0))


def test_orthant_box_projection():
    # Half-infinite bounds cover the nonnegative orthant.
    box = BoxSet(np.zeros(3), np.full(3, np.inf))
    out = project_box(np.array([-1.0, 0.5, 1e9]), box)
    assert np.array_equal(out, np.array([0.0, 0.5, 1e9]))
