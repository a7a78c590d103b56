import itertools

import numpy as np
import pytest

from mmdi import Ball, IntervalProduct, Polytope, project
from mmdi.errors import InfeasibleSetError


def test_interval_clamps_to_upper_bound():
    assert project(IntervalProduct([-1.0], [2.0]), [3.0]) == pytest.approx([2.0])


def test_ball_radial_scaling():
    np.testing.assert_allclose(project(Ball([0.0, 0.0], 1.0), [3.0, 4.0]), [0.6, 0.8])


def _grid_projection(normals, offsets, y, lo=-1.0, hi=2.0, step=1e-3):
    # brute-force oracle: nearest feasible point of a fine grid, then refine
    g = np.arange(lo, hi + step / 2, step)
    pts = np.array(list(itertools.product(g, g)))
    feas = pts[np.all(pts @ np.asarray(normals).T <= np.asarray(offsets) + 1e-12, axis=1)]
    return feas[np.argmin(np.linalg.norm(feas - y, axis=1))]


def test_polytope_projection_matches_grid_oracle():
    normals, offsets = [[1.0, 1.0], [-1.0, 0.0], [0.0, -1.0]], [1.0, 0.0, 0.0]
    poly = Polytope(normals, offsets)
    got = project(poly, [1.0, 1.0])
    np.testing.assert_allclose(got, [0.5, 0.5], atol=1e-12)
    np.testing.assert_allclose(got, _grid_projection(normals, offsets, np.array([1.0, 1.0])), atol=2e-3)


def test_polytope_batch_agrees_with_active_set():
    poly = Polytope([[1, 0], [0, 1], [-1, -1], [1, -2]], [1, 1, 1, 1.5])
    rng = np.random.default_rng(0)
    y = rng.uniform(-4, 4, (500, 2))
    batch = poly.project(y)
    single = np.array([poly._project_one(row) for row in y])
    np.testing.assert_allclose(batch, single, atol=1e-10)


def test_polytope_projection_is_optimal():
    poly = Polytope([[1, 0], [0, 1], [-1, -1]], [1, 1, 1])
    rng = np.random.default_rng(1)
    for y in rng.uniform(-4, 4, (100, 2)):
        p = poly.project(y)
        assert poly.contains(p, tol=1e-9)
        # variational inequality <y - p, v - p> <= 0 at every vertex
        for v in poly.vertices():
            assert (y - p) @ (v - p) <= 1e-9


def test_empty_sets_rejected():
    with pytest.raises(InfeasibleSetError):
        IntervalProduct([1.0], [0.0])
    with pytest.raises(InfeasibleSetError):
        Ball([0.0], -1.0)
    with pytest.raises(InfeasibleSetError):
        Polytope([[1.0], [-1.0]], [0.0, -1.0])


def test_unbounded_interval_projection():
    box = IntervalProduct([0.0, -np.inf], [np.inf, 1.0])
    np.testing.assert_allclose(box.project([-2.0, 5.0]), [0.0, 1.0])
    assert not box.bounded


def test_polytope_vertices_of_triangle():
    verts = Polytope([[1, 1], [-1, 0], [0, -1]], [1, 0, 0]).vertices()
    got = sorted(map(tuple, np.round(verts, 12)))
    assert got == [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)]


def test_support_functions():
    u = np.array([0.6, 0.8])
    assert Ball([1.0, 0.0], 2.0).support(u) == pytest.approx(0.6 + 2.0)
    assert IntervalProduct([0, 0], [1, 1]).support(u) == pytest.approx(1.4)
    assert Polytope([[1, 0], [0, 1], [-1, 0], [0, -1]], [1, 1, 0, 0]).support(u) == pytest.approx(1.4)
