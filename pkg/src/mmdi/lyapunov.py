"""Lyapunov pairs checked along trajectories and pointwise.

A pair ``(V, W)`` with rate ``a`` is verified in two ways:

* along a computed trajectory, ``e^{a(t - t0)} V(t, x(t)) + int W`` must not
  rise above ``V(t0, x0)`` (:func:`evaluate_pair_decay`);
* at a point, every supplied proximal subgradient ``(theta, xi)`` must give
  ``theta + min <xi, v> + a V + W <= 0`` with ``v`` ranging over the
  velocity set truncated to a ball (:func:`proximal_criterion`).

Proximal subgradients are supplied by the user as finite generator lists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, EmptyVelocitySetError
from .operators import DirectSum, NormalCone, SignRelay
from .sets import IntervalProduct
from .solver import InclusionProblem, Trajectory, apriori_bounds

__all__ = [
    "LyapunovPair",
    "DecayReport",
    "VelocitySet",
    "BuiltinScenario",
    "evaluate_pair_decay",
    "truncated_velocity_set",
    "proximal_criterion",
    "builtin_scenarios",
    "example_1",
    "example_2",
]

Generators = Callable[[float, np.ndarray], Sequence[tuple[float, np.ndarray]]]


def _zero(t, x):
    return 0.0


@dataclass(frozen=True)
class LyapunovPair:
    """``V`` (may return ``inf``), ``W >= 0`` and rate ``a >= 0``.

    ``proximal_subdiff(t, x)`` and ``singular_subdiff(t, x)`` return lists
    of ``(theta, xi)``; ``domain(t, x)`` decides membership in ``dom V``
    (defaults to ``V < inf``).
    """

    V: Callable[[float, np.ndarray], float]
    W: Callable[[float, np.ndarray], float] = _zero
    a: float = 0.0
    proximal_subdiff: Generators | None = None
    singular_subdiff: Generators | None = None
    domain: Callable[[float, np.ndarray], bool] | None = None

    def __post_init__(self):
        if not self.a >= 0:
            raise ValueError("rate a must be >= 0")

    def in_domain(self, t, x) -> bool:
        if self.domain is not None:
            return bool(self.domain(t, x))
        return math.isfinite(self.V(t, x))


@dataclass
class DecayReport:
    times: np.ndarray
    values: np.ndarray          # V(t, x(t))
    integral: np.ndarray        # int_{t0}^t W
    composite: np.ndarray       # e^{a(t-t0)} V + int W
    V0: float
    slack: float
    max_increment: float
    max_excess: float
    first_exit: int | None
    verdict: bool


def evaluate_pair_decay(traj: Trajectory, pair: LyapunovPair, slack: float | None = None) -> DecayReport:
    """Evaluate the decay composite along ``traj``.

    ``slack`` defaults to ``5 h``. The verdict passes iff no state leaves
    ``dom V``, the composite never exceeds ``V(t0, x0) + slack`` and no
    single increment exceeds ``slack``. On a domain exit the arrays stop at
    the last sample inside the domain and ``first_exit`` holds the index
    of the offending sample.
    """
    slack = 5.0 * traj.h if slack is None else float(slack)
    if slack < 0:
        raise ValueError("slack must be >= 0")
    t, x = traj.times, traj.states
    n = t.size
    first_exit = None
    vals = np.empty(n)
    ws = np.empty(n)
    for i in range(n):
        if not pair.in_domain(t[i], x[i]):
            first_exit = i
            break
        vals[i] = pair.V(t[i], x[i])
        if not math.isfinite(vals[i]):
            first_exit = i
            break
        ws[i] = pair.W(t[i], x[i])
    k = n if first_exit is None else first_exit
    vals, ws, tt = vals[:k], ws[:k], t[:k]
    integral = np.zeros(k)
    if k > 1:
        integral[1:] = np.cumsum(0.5 * (ws[1:] + ws[:-1]) * np.diff(tt))
    comp = np.exp(pair.a * (tt - t[0])) * vals + integral
    v0 = float(vals[0]) if k else math.inf
    inc = float(np.max(np.diff(comp), initial=0.0)) if k > 1 else 0.0
    excess = float(np.max(comp - v0, initial=0.0)) if k else math.inf
    verdict = first_exit is None and inc <= slack and excess <= slack
    return DecayReport(tt, vals, integral, comp, v0, slack, max(inc, 0.0), excess, first_exit, verdict)


@dataclass
class VelocitySet:
    """``(f(t,x) - A_{t,x}(x))`` truncated to the ball of radius ``radius``.

    Either an exact box (``lo``/``hi``, entries may be infinite) intersected
    with the ball, or a finite sample whose first row is the anchor
    ``f - A^0``.
    """

    radius: float
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    samples: np.ndarray | None = None
    anchor: np.ndarray | None = None

    @property
    def exact(self) -> bool:
        return self.lo is not None

    def min_norm_point(self) -> np.ndarray:
        if self.exact:
            return np.clip(0.0, self.lo, self.hi)
        return self.samples[np.argmin(np.linalg.norm(self.samples, axis=1))]

    def min_inner(self, xi) -> float:
        """``min <xi, v>`` over the set."""
        xi = np.asarray(xi, dtype=float)
        if not self.exact:
            return float(np.min(self.samples @ xi))
        return float(xi @ self.argmin_inner(xi))

    def argmin_inner(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if not self.exact:
            return self.samples[np.argmin(self.samples @ xi)]
        lo, hi, r = self.lo, self.hi, self.radius
        # linear minimization over the box alone
        v = np.where(xi > 0, lo, np.where(xi < 0, hi, np.clip(0.0, lo, hi)))
        if np.all(np.isfinite(v)) and np.linalg.norm(v) <= r:
            return v
        # otherwise the ball constraint is active: v(nu) = clip(-xi/nu, lo, hi)
        # with |v(nu)| decreasing in nu; bisect for |v| = r
        def at(nu):
            return np.clip(-xi / nu, lo, hi)

        a, b = 1e-300, 1.0
        while np.linalg.norm(at(b)) > r:
            b *= 2.0
            if b > 1e300:
                break
        a = b / 2.0
        while np.linalg.norm(at(a)) <= r and a > 1e-300:
            a /= 2.0
        for _ in range(200):
            mid = 0.5 * (a + b)
            if np.linalg.norm(at(mid)) > r:
                a = mid
            else:
                b = mid
            if b - a <= 1e-15 * b:
                break
        return at(b)


def truncated_velocity_set(problem: InclusionProblem, t: float, x, M: float, *,
                           n_samples: int = 64, seed: int = 0) -> VelocitySet:
    """``(f(t,x) - A_{t,x}(x)) ∩ M B``; raises when empty."""
    x = np.asarray(x, dtype=float)
    A = problem.A
    if not A.in_domain(t, x, x):
        raise DomainError(f"{x.tolist()} is outside dom(A_(t,x))")
    fx = np.asarray(problem.f(t, x), dtype=float)
    box = A.value_box(t, x, x)
    if box is not None:
        lo_a, hi_a = box
        lo, hi = fx - hi_a, fx - lo_a
        closest = np.clip(0.0, lo, hi)
        if np.linalg.norm(closest) > M:
            raise EmptyVelocitySetError(
                f"velocity set at x={x.tolist()} lies outside the ball of radius {M}")
        return VelocitySet(float(M), lo=lo, hi=hi, anchor=fx - A.minimal_norm(t, x, x))
    anchor = fx - A.minimal_norm(t, x, x)
    if np.linalg.norm(anchor) > M:
        raise EmptyVelocitySetError(
            f"minimal-norm velocity {np.linalg.norm(anchor):.6g} exceeds radius {M}")
    vals = A.value_samples(t, x, x, radius=M + np.linalg.norm(fx), n=n_samples,
                           rng=np.random.default_rng(seed))
    vs = fx - vals
    vs = vs[np.linalg.norm(vs, axis=1) <= M]
    return VelocitySet(float(M), samples=np.vstack([anchor, vs]), anchor=anchor)


def proximal_criterion(pair: LyapunovPair, problem: InclusionProblem, t: float, x,
                       velocity_budget: float | None = None, *, include_singular: bool = True) -> float:
    """Largest criterion value over the supplied subgradient generators.

    Proximal generators contribute ``theta + min <xi, v> + a V + W``;
    singular generators contribute ``theta + min <xi, v>``. A nonpositive
    result means the criterion holds at ``(t, x)`` for every listed
    generator. ``velocity_budget`` defaults to ``M(x)`` from
    :func:`~mmdi.solver.apriori_bounds`.
    """
    if pair.proximal_subdiff is None:
        raise ValueError("pair has no proximal subdifferential description")
    x = np.asarray(x, dtype=float)
    if not pair.in_domain(t, x):
        raise DomainError(f"{x.tolist()} is outside dom V")
    if velocity_budget is None:
        velocity_budget = apriori_bounds(x, c_f=problem.c_f, c_A=problem.c_A, L1=problem.L1,
                                         L2=problem.L2, optimize=True).M
    vset = truncated_velocity_set(problem, t, x, velocity_budget)
    extra = pair.a * pair.V(t, x) + pair.W(t, x)
    best = -math.inf
    for theta, xi in pair.proximal_subdiff(t, x):
        best = max(best, float(theta) + vset.min_inner(xi) + extra)
    if include_singular and pair.singular_subdiff is not None:
        for theta, xi in pair.singular_subdiff(t, x):
            best = max(best, float(theta) + vset.min_inner(xi))
    return best


# ---------------------------------------------------------------------------
# built-in scenarios
# ---------------------------------------------------------------------------

@dataclass
class BuiltinScenario:
    name: str
    problem: InclusionProblem
    pair: LyapunovPair
    t0: float
    x0: np.ndarray
    h: float
    params: dict = field(default_factory=dict)

    def __iter__(self):
        # unpacks as (problem, pair)
        return iter((self.problem, self.pair))


def example_1(p: float = 1.0, g: Callable[[float], float] | None = None,
              gdot: Callable[[float], float] | None = None, *, x0=(1.0, 1.0, 0.5),
              T: float = 2.0, h: float = 1e-3, check_points: int = 201) -> BuiltinScenario:
    """Three-state example with a relay on the third coordinate.

        x1' = -x1 - g(t) x2
        x2' =  x1 - x2
        x3' in -Sign(x3) + p |x3|

    with ``V = x1^2 + (1 + g) x2^2 + |x3|`` on ``x3 <= 1/p``. ``g`` must
    satisfy ``g' <= 2 g``; this is checked on ``check_points`` times in
    ``[0, T]``. The default is ``g = 1``.
    """
    if not p > 0:
        raise ValueError("p must be > 0")
    if g is None:
        g, gdot = (lambda t: 1.0), (lambda t: 0.0)
    elif gdot is None:
        raise ValueError("gdot is required with a custom g")
    ts = np.linspace(0.0, T, check_points)
    gv = np.array([g(s) for s in ts])
    gdv = np.array([gdot(s) for s in ts])
    if np.any(gdv > 2.0 * gv + 1e-12 * (1.0 + np.abs(gv))):
        raise ValueError("g violates g' <= 2 g on [0, T]")
    if np.any(1.0 + gv < 0):
        raise ValueError("1 + g must be >= 0 for V to be bounded below")
    gmax = float(np.max(np.abs(gv)))

    def f(t, x):
        return np.array([-x[0] - g(t) * x[1], x[0] - x[1], p * abs(x[2])])

    lin = np.linalg.norm(np.array([[-1.0, -gmax], [1.0, -1.0]]), 2)
    c_f = float(max(lin, np.linalg.norm([[-1.0, gmax], [1.0, -1.0]], 2), p))
    A = SignRelay(1.0, mask=[False, False, True], c_A=1.0)
    problem = InclusionProblem(f, A, c_f=c_f, T=T, name="example-1")
    cap = 1.0 / p

    def domain(t, x):
        return x[2] <= cap

    def V(t, x):
        if x[2] > cap:
            return math.inf
        return x[0] ** 2 + (1.0 + g(t)) * x[1] ** 2 + abs(x[2])

    def prox(t, x):
        theta = gdot(t) * x[1] ** 2
        base = [2.0 * x[0], 2.0 * x[1] * (1.0 + g(t))]
        if x[2] > cap:
            return []
        if x[2] == cap:
            # 1 + R_+: the extreme generator and one interior sample
            third = [1.0, 2.0]
        elif x[2] == 0.0:
            third = [-1.0, 0.0, 1.0]
        else:
            third = [math.copysign(1.0, x[2])]
        return [(theta, np.array(base + [k])) for k in third]

    def singular(t, x):
        if x[2] == cap:
            return [(0.0, np.array([0.0, 0.0, 1.0]))]
        return []

    pair = LyapunovPair(V, _zero, 0.0, prox, singular, domain)
    return BuiltinScenario("example-1", problem, pair, 0.0, np.asarray(x0, dtype=float), h,
                           {"p": p, "T": T})


def example_2(alpha: float = 1.0, beta: float = 0.5, gamma: float = 1.0, *,
              x0=(0.5, 0.5), T: float = 2.0, h: float = 1e-3) -> BuiltinScenario:
    """Planar example with a state-dependent moving interval.

        x1' in -alpha x1 + beta x2 - N_{C(t, x1)}(x1)
        x2' in -beta x1 + x2 - gamma Sign(x2)

    with ``C(t, x1) = [-(t + 2|x01|), t + 2|x01|] + x1 / 2`` and
    ``V = (x1^2 + x2^2) / 2`` on ``|x2| <= gamma``.
    """
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    if not gamma > 0:
        raise ValueError("gamma must be > 0")
    x0 = np.asarray(x0, dtype=float)
    r0 = 2.0 * abs(x0[0])

    def moving(t, s):
        r = t + r0
        c = 0.5 * float(np.asarray(s).reshape(-1)[0])
        return IntervalProduct([c - r], [c + r])

    nc = NormalCone(moving, dim=1, c_A=0.0, L1=1.0, L2=0.5)
    relay = SignRelay(gamma, c_A=gamma)
    A = DirectSum([(nc, [0]), (relay, [1])], c_A=gamma, L1=1.0, L2=0.5)
    mat = np.array([[-alpha, beta], [-beta, 1.0]])

    def f(t, x):
        return mat @ x

    problem = InclusionProblem(f, A, c_f=float(np.linalg.norm(mat, 2)), T=T, name="example-2")

    def domain(t, x):
        return abs(x[1]) <= gamma

    def V(t, x):
        if abs(x[1]) > gamma:
            return math.inf
        return 0.5 * (x[0] ** 2 + x[1] ** 2)

    def prox(t, x):
        if abs(x[1]) > gamma:
            return []
        if abs(x[1]) == gamma:
            return [(0.0, np.array([x[0], k * x[1]])) for k in (1.0, 2.0)]
        return [(0.0, np.array([x[0], x[1]]))]

    def singular(t, x):
        if abs(x[1]) == gamma:
            return [(0.0, np.array([0.0, math.copysign(1.0, x[1])]))]
        return []

    pair = LyapunovPair(V, _zero, 0.0, prox, singular, domain)
    return BuiltinScenario("example-2", problem, pair, 0.0, x0, h,
                           {"alpha": alpha, "beta": beta, "gamma": gamma, "T": T})


def builtin_scenarios() -> list[BuiltinScenario]:
    """Both examples with default parameters."""
    return [example_1(), example_2()]
