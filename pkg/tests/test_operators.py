import numpy as np
import pytest

from mmdi import (Ball, DirectSum, GraphPoint, IntervalProduct, LinearPSD, LureComposed, NormalCone,
                  SignRelay, graph_membership_residual, minimal_norm, resolvent, shift_operator,
                  solve_generalized_equation, yosida, zero_operator)
from mmdi.errors import DomainError
from mmdi.operators import range_projector


def _soft_threshold_oracle(y, lam, gamma=1.0):
    # grid minimisation of lam*gamma*|z| + (z - y)^2 / 2 on [-3, 3], step 1e-6
    z = np.linspace(-3.0, 3.0, 6_000_001)
    return z[np.argmin(lam * gamma * np.abs(z) + 0.5 * (z - y) ** 2)]


def test_normal_cone_resolvent_is_projection():
    op = NormalCone(IntervalProduct([0.0], [1.0]))
    for lam in (0.01, 1.0, 100.0):
        assert resolvent(op, lam, 0.0, None, [5.0]) == pytest.approx([1.0])


def test_relay_resolvent_matches_grid_oracle():
    got = resolvent(SignRelay(1.0), 0.5, 0.0, None, [1.2])[0]
    assert got == pytest.approx(0.7, abs=1e-12)
    assert got == pytest.approx(_soft_threshold_oracle(1.2, 0.5), abs=1e-6)


def test_linear_psd_resolvent():
    np.testing.assert_allclose(resolvent(LinearPSD(np.eye(2)), 1.0, 0.0, None, [2.0, -4.0]), [1.0, -2.0])


def test_yosida_examples():
    assert yosida(SignRelay(1.0), 0.5, 0.0, None, [0.2]) == pytest.approx([0.4])
    assert yosida(NormalCone(IntervalProduct([0.0], [1.0])), 3.0, 0.0, None, [0.5]) == pytest.approx([0.0])
    np.testing.assert_allclose(yosida(LinearPSD(np.eye(2)), 1.0, 0.0, None, [2.0, -4.0]), [1.0, -2.0])


def test_minimal_norm_examples():
    relay = SignRelay(1.0)
    assert minimal_norm(relay, 0.0, None, [0.0]) == pytest.approx([0.0])
    assert minimal_norm(relay, 0.0, None, [0.3]) == pytest.approx([1.0])
    assert minimal_norm(NormalCone(IntervalProduct([0.0], [1.0])), 0.0, None, [1.0]) == pytest.approx([0.0])
    with pytest.raises(DomainError):
        minimal_norm(NormalCone(IntervalProduct([0.0], [1.0])), 0.0, None, [2.0])


def test_shift_zero_is_base():
    base = SignRelay(1.0)
    sh = shift_operator(base, 0.0)
    for y in np.linspace(-3, 3, 13):
        assert sh.resolvent(0.7, 0.0, [0.4], [y]) == pytest.approx(base.resolvent(0.7, 0.0, None, [y]))


def test_shifted_relay_resolvent():
    # z + Sign(z + 0.5) contains 0  ->  z = -0.5
    sh = shift_operator(SignRelay(1.0), 1.0)
    assert sh.resolvent(1.0, 0.0, [0.5], [0.0]) == pytest.approx([-0.5])


def test_shift_rejects_alpha_le_minus_one():
    with pytest.raises(ValueError):
        shift_operator(SignRelay(1.0), -1.0)


def test_shifted_graph_is_monotone():
    sh = shift_operator(SignRelay(1.0), 0.7)
    rng = np.random.default_rng(0)
    pts = []
    for y in rng.uniform(-3, 3, 200):
        gp = sh.self_graph_point(rng.uniform(0.05, 5), 0.0, np.array([y]))
        pts.append((gp.base, gp.image))
    for (x1, e1), (x2, e2) in zip(pts, pts[1:]):
        assert (e1 - e2) @ (x1 - x2) >= -1e-9


def test_graph_membership_residual_examples():
    relay = SignRelay(1.0)
    assert graph_membership_residual(relay, 0.0, None, GraphPoint(np.zeros(1), np.array([0.5]))) == 0.0
    # (1, -1): J(1 - 1) = J(0) = 0, so the defect is |1 - 0| = 1
    assert graph_membership_residual(relay, 0.0, None, GraphPoint(np.ones(1), -np.ones(1))) == pytest.approx(1.0)
    cone = NormalCone(IntervalProduct([0.0], [1.0]))
    assert graph_membership_residual(cone, 0.0, None, GraphPoint(np.array([0.5]), np.zeros(1)), 2.0) == 0.0


def test_normal_cone_value_box_and_domain():
    cone = NormalCone(IntervalProduct([0.0, 0.0], [1.0, 1.0]))
    lo, hi = cone.value_box(0.0, None, np.array([1.0, 0.5]))
    assert lo.tolist() == [0.0, 0.0] and hi[0] == np.inf and hi[1] == 0.0
    assert cone.in_domain(0.0, None, [0.5, 0.5])
    assert not cone.in_domain(0.0, None, [1.5, 0.5])


def test_moving_cone_uses_state_parameter():
    op = NormalCone(lambda t, s: IntervalProduct([s[0]], [s[0] + 1.0]), dim=1)
    assert op.resolvent(1.0, 0.0, np.array([2.0]), [0.0]) == pytest.approx([2.0])
    assert not op.state_independent


def test_ball_cone_minimal_norm_zero_on_boundary():
    op = NormalCone(Ball([0.0, 0.0], 1.0))
    np.testing.assert_allclose(op.minimal_norm(0.0, None, np.array([0.6, 0.8])), [0.0, 0.0])


def test_direct_sum_acts_blockwise():
    op = DirectSum([(NormalCone(IntervalProduct([0.0], [1.0])), [0]), (SignRelay(1.0), [1])])
    np.testing.assert_allclose(op.resolvent(0.5, 0.0, np.zeros(2), [3.0, 1.2]), [1.0, 0.7])


def test_zero_operator_is_identity_resolvent():
    op = zero_operator(3)
    y = np.array([1.0, -2.0, 3.0])
    np.testing.assert_allclose(op.resolvent(0.3, 0.0, None, y), y)


def test_generalized_equation_relay_cases():
    relay = SignRelay(1.0)
    for x, z in ((2.0, 1.0), (0.5, 0.5), (-2.0, -1.0)):
        res = solve_generalized_equation(relay, 0.0, None, [x], [[1.0]])
        assert res.converged and res.z == pytest.approx([z], abs=1e-10)


def test_generalized_equation_interval_minimal_norm():
    cone = NormalCone(IntervalProduct([-1.0], [1.0]))
    res = solve_generalized_equation(cone, 0.0, None, [0.5], [[0.0]])
    assert res.z == pytest.approx([0.0])


def test_generalized_equation_detects_empty_solution_set():
    # z in N_[-1,1](3) is empty
    cone = NormalCone(IntervalProduct([-1.0], [1.0]))
    res = solve_generalized_equation(cone, 0.0, None, [3.0], [[0.0]], max_iter=100_000)
    assert res.diverged and not res.converged


def test_generalized_equation_skew_matrix():
    # D skew: the FBF variant must be used and the residual must vanish
    relay = SignRelay([1.0, 1.0])
    d = np.array([[1.0, 1.0], [-1.0, 1.0]])
    res = solve_generalized_equation(relay, 0.0, None, [2.0, -0.3], d)
    assert res.method == "forward-backward-forward"
    assert res.converged and res.residual <= 1e-9


def test_range_projector():
    p = range_projector(np.diag([1.0, 0.0]))
    np.testing.assert_allclose(p, np.diag([1.0, 0.0]), atol=1e-12)


def test_lure_composed_sat():
    # C = D = 1 with the relay gives A(x) = sat(x)
    op = LureComposed(SignRelay(1.0), [[1.0]], [[1.0]])
    for x in (-3.0, -0.4, 0.0, 0.7, 2.5):
        assert op.minimal_norm(0.0, None, np.array([x])) == pytest.approx([np.clip(x, -1, 1)], abs=1e-10)
    # resolvent of sat at y = 3 with lam = 0.5: z + 0.5 sat(z) = 3 -> z = 2.5
    assert op.resolvent(0.5, 0.0, None, [3.0]) == pytest.approx([2.5], abs=1e-10)


def test_lure_composed_rejects_indefinite_d():
    with pytest.raises(ValueError):
        LureComposed(SignRelay(1.0), [[1.0]], [[-1.0]])
