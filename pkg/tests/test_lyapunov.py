import math

import numpy as np
import pytest

from mmdi import (IntervalProduct, InclusionProblem, NormalCone, SignRelay, LyapunovPair,
                  builtin_scenarios, evaluate_pair_decay, example_1, example_2, proximal_criterion,
                  solve, truncated_velocity_set)
from mmdi.errors import EmptyVelocitySetError


def test_example_1_decay_passes():
    sc = example_1()
    tr = solve(sc.problem, sc.t0, sc.x0, 1e-3)
    rep = evaluate_pair_decay(tr, sc.pair)
    assert rep.verdict and rep.slack == pytest.approx(5e-3)
    assert rep.first_exit is None


def test_example_2_half_norm_nonincreasing():
    sc = example_2()
    tr = solve(sc.problem, sc.t0, sc.x0, 1e-3)
    rep = evaluate_pair_decay(tr, sc.pair)
    assert rep.verdict
    v = 0.5 * np.sum(tr.states ** 2, axis=1)
    assert np.all(np.diff(v) <= 5e-3)
    assert np.all(np.abs(tr.states[:, 1]) <= 1.0)


def test_stationary_trajectory_exactly_constant():
    prob = InclusionProblem(lambda t, x: np.zeros(1), NormalCone(IntervalProduct([0.0], [1.0])), c_f=1.0)
    pair = LyapunovPair(lambda t, x: float(x @ x))
    tr = solve(prob, 0.0, [0.5], 0.1)
    rep = evaluate_pair_decay(tr, pair, slack=0.0)
    assert rep.verdict and np.all(rep.composite == 0.25)


def test_decay_flags_growth_and_domain_exit():
    prob = InclusionProblem(lambda t, x: x, SignRelay(1e-3), c_f=1.0)
    tr = solve(prob, 0.0, [1.0], 0.01)
    assert not evaluate_pair_decay(tr, LyapunovPair(lambda t, x: float(x @ x))).verdict
    capped = LyapunovPair(lambda t, x: 0.0, domain=lambda t, x: x[0] <= 1.5)
    rep = evaluate_pair_decay(tr, capped)
    assert not rep.verdict and rep.first_exit is not None
    assert tr.states[rep.first_exit, 0] > 1.5


def test_example_1_criterion_by_hand():
    sc = example_1()
    x = np.array([1.0, 1.0, 0.5])
    gens = sc.pair.proximal_subdiff(0.0, x)
    assert len(gens) == 1
    np.testing.assert_allclose(gens[0][1], [2.0, 4.0, 1.0])
    # velocity (-2, 0, -0.5): <(2,4,1), v> = -4.5
    assert proximal_criterion(sc.pair, sc.problem, 0.0, x) == pytest.approx(-4.5)


def test_zero_generator_gives_zero():
    prob = InclusionProblem(lambda t, x: np.array([1.0]), SignRelay(1.0), c_f=1.0)
    pair = LyapunovPair(lambda t, x: 0.0, proximal_subdiff=lambda t, x: [(0.0, np.zeros(1))])
    assert proximal_criterion(pair, prob, 0.0, [0.3]) == 0.0


def test_example_2_criterion_below_closed_form():
    sc = example_2()
    rng = np.random.default_rng(4)
    for x in rng.uniform([-2, -0.99], [2, 0.99], (50, 2)):
        val = proximal_criterion(sc.pair, sc.problem, 0.0, x)
        assert val <= -x[0] ** 2 + abs(x[1]) * (abs(x[1]) - 1.0) + 1e-9


def test_velocity_set_relay_at_zero():
    prob = InclusionProblem(lambda t, x: np.zeros(1), SignRelay(1.0), c_f=1.0)
    vs = truncated_velocity_set(prob, 0.0, [0.0], 2.0)
    assert vs.lo.tolist() == [-1.0] and vs.hi.tolist() == [1.0]
    assert vs.min_inner([3.0]) == pytest.approx(-3.0)


def test_velocity_set_interior_cone_is_singleton():
    v0 = np.array([0.3, -0.2])
    prob = InclusionProblem(lambda t, x: v0, NormalCone(IntervalProduct([-1, -1], [1, 1])), c_f=1.0)
    vs = truncated_velocity_set(prob, 0.0, [0.0, 0.0], 5.0)
    np.testing.assert_allclose(vs.lo, v0)
    np.testing.assert_allclose(vs.hi, v0)


def test_velocity_set_example_1_at_zero_third_state():
    sc = example_1()
    x = np.array([0.5, 0.5, 0.0])
    vs = truncated_velocity_set(sc.problem, 0.0, x, 100.0)
    for xi3 in (2.0, -2.0):
        v = vs.argmin_inner(np.array([0.0, 0.0, xi3]))
        assert v[2] == pytest.approx(-math.copysign(1.0, xi3))


def test_velocity_set_ball_truncation():
    prob = InclusionProblem(lambda t, x: np.zeros(2), SignRelay([1.0, 1.0]), c_f=1.0)
    vs = truncated_velocity_set(prob, 0.0, [0.0, 0.0], 0.5)
    xi = np.array([1.0, 1.0])
    # box [-1,1]^2 cut by the 0.5-ball: minimiser is -0.5 xi/|xi|
    assert vs.min_inner(xi) == pytest.approx(-0.5 * math.sqrt(2.0), rel=1e-9)
    with pytest.raises(EmptyVelocitySetError):
        truncated_velocity_set(InclusionProblem(lambda t, x: np.array([3.0, 0.0]), SignRelay([1.0, 1.0]),
                                                c_f=3.0), 0.0, [0.0, 0.0], 0.5)


def test_example_1_accepts_exponential_g():
    sc = example_1(g=lambda t: math.exp(2 * t), gdot=lambda t: 2 * math.exp(2 * t), T=1.0)
    assert sc.problem.c_f >= math.exp(2.0)
    with pytest.raises(ValueError):
        example_1(g=lambda t: math.exp(3 * t), gdot=lambda t: 3 * math.exp(3 * t))


def test_example_2_value_infinite_outside_domain():
    sc = example_2(gamma=1.0)
    assert sc.pair.V(0.0, np.array([0.0, 1.5])) == math.inf
    assert not sc.pair.in_domain(0.0, np.array([0.0, -1.2]))


def test_builtin_scenarios_unpack():
    names = [sc.name for sc in builtin_scenarios()]
    assert names == ["example-1", "example-2"]
    problem, pair = builtin_scenarios()[0]
    assert problem.dim == 3 and pair.V(0.0, np.array([1.0, 1.0, 0.5])) == pytest.approx(3.5)
