import math

import numpy as np
import pytest

from mmdi import (Ball, IntervalProduct, NormalCone, Polytope, SignRelay, continuous_gronwall_bound,
                  dis_estimate, discrete_gronwall_bound, hausdorff, resolvent_gap_bound, shift_operator)


def test_hausdorff_examples():
    a = IntervalProduct([0.0], [1.0])
    assert hausdorff(a, a) == 0.0
    assert hausdorff(a, IntervalProduct([0.5], [2.0])) == pytest.approx(1.0)
    assert hausdorff(Ball([0.0, 0.0], 1.0), Ball([0.0, 0.0], 2.0)) == pytest.approx(1.0)


def test_hausdorff_ball_against_boundary_sampling():
    b1, b2 = Ball([0.0, 0.0], 1.0), Ball([0.5, 0.0], 2.0)
    th = np.linspace(0, 2 * np.pi, 20001)
    circle = np.stack([np.cos(th), np.sin(th)], axis=1)
    # sup over each boundary of the distance to the other set
    d12 = np.max(b2.distance(b1.center + b1.radius * circle))
    d21 = np.max(b1.distance(b2.center + b2.radius * circle))
    assert hausdorff(b1, b2) == pytest.approx(max(d12, d21), abs=1e-6)


def test_hausdorff_polytope_vs_box():
    tri = Polytope([[1, 1], [-1, 0], [0, -1]], [1, 0, 0])
    box = IntervalProduct([0, 0], [1, 1])
    # the corner (1, 1) is at distance 1/sqrt(2) from the triangle
    assert hausdorff(tri, box) == pytest.approx(1 / math.sqrt(2))


def test_hausdorff_unbounded_mismatch():
    with pytest.raises(ValueError):
        hausdorff(IntervalProduct([0.0], [np.inf]), IntervalProduct([0.0], [1.0]))
    assert hausdorff(IntervalProduct([0.0], [np.inf]), IntervalProduct([1.0], [np.inf])) == 1.0


def test_dis_identical_operators_is_zero():
    op = NormalCone(IntervalProduct([0.0], [1.0]))
    est = dis_estimate(op, op, 0.0, (None, None), 2500)
    assert est.lower_bound == pytest.approx(0.0, abs=1e-12)


def test_dis_normal_cones_approach_hausdorff():
    f1 = NormalCone(IntervalProduct([0.0], [1.0]))
    f2 = NormalCone(IntervalProduct([0.5], [2.0]))
    vals = [dis_estimate(f1, f2, 0.0, (None, None), b).lower_bound for b in (100, 10_000, 100_000)]
    assert vals == sorted(vals)
    assert 0.9 <= vals[-1] <= 1.0 + 1e-9


def test_dis_shifted_relay_with_zero_state_is_zero():
    base = SignRelay(1.0)
    sh = shift_operator(base, 0.8)
    est = dis_estimate(base, sh, 0.0, (None, np.zeros(1)), 10_000)
    assert est.lower_bound == pytest.approx(0.0, abs=1e-9)


def test_resolvent_gap_bound_examples():
    assert resolvent_gap_bound(0.1, 1.0, 2.0, 0.5) == pytest.approx(1.275)
    assert resolvent_gap_bound(0.3, 2.0, 0.0, 0.0) == pytest.approx(0.3 / 8)
    assert resolvent_gap_bound(1e-12, 1.0, 0.0, 0.0) < 1e-12
    with pytest.raises(ValueError):
        resolvent_gap_bound(0.0, 1.0, 0.0, 0.0)


def test_discrete_gronwall_examples():
    np.testing.assert_allclose(discrete_gronwall_bound(1.0, [0, 0, 0]), [1, 1, 1, 1])
    np.testing.assert_allclose(discrete_gronwall_bound(2.0, [0.1, 0.2]),
                               [2, 2 * math.exp(0.1), 2 * math.exp(0.3)])


def test_discrete_gronwall_dominates_recursion():
    rng = np.random.default_rng(3)
    alpha = 1.5
    betas = rng.uniform(0, 0.3, 40)
    u = []
    for n in range(41):
        u.append(alpha + sum(b * uk for b, uk in zip(betas[:n], u)))
    assert np.all(np.array(u) <= discrete_gronwall_bound(alpha, betas) + 1e-12)


def test_continuous_gronwall_examples():
    grid = np.linspace(0, 2, 2001)
    np.testing.assert_allclose(continuous_gronwall_bound(4.0, lambda t: 0.0, lambda t: 0.0, 0.5, grid), 2.0)
    np.testing.assert_allclose(continuous_gronwall_bound(3.0, lambda t: 0.7, lambda t: 0.0, 0.0, grid),
                               3.0 * np.exp(0.7 * grid), rtol=1e-12)
    step = grid[1] - grid[0]
    got = continuous_gronwall_bound(3.0, lambda t: 0.0, lambda t: 1.0, 0.0, grid)
    assert np.max(np.abs(got - (3.0 + grid))) <= step ** 2
