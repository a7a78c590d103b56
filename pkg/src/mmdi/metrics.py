"""Distances between sets and operators, and Gronwall-type bounds.

``dis_estimate`` samples both graphs by resolvent sweeps and maximizes the
pseudo-distance quotient over all sample pairs, so the result is a certified
lower bound on ``dis``, never an estimate from above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .operators import GraphPoint, MonotoneOperator
from .sets import Ball, ConvexSet, IntervalProduct, Polytope

__all__ = [
    "DisEstimate",
    "hausdorff",
    "dis_estimate",
    "resolvent_gap_bound",
    "discrete_gronwall_bound",
    "continuous_gronwall_bound",
]


def _check_dims(s1: ConvexSet, s2: ConvexSet):
    if s1.dim != s2.dim:
        raise ValueError(f"dimension mismatch: {s1.dim} vs {s2.dim}")


def _hausdorff_boxes(a: IntervalProduct, b: IntervalProduct) -> float:
    # The sup-distance from one box to another is attained at a vertex and
    # separates over coordinates.
    if np.any(np.isinf(a.lo) != np.isinf(b.lo)) or np.any(np.isinf(a.hi) != np.isinf(b.hi)):
        raise ValueError("interval products with different unbounded sides: distance is infinite")
    with np.errstate(invalid="ignore"):
        # matching infinite sides give inf - inf = nan, which contributes nothing
        dlo = np.nan_to_num(b.lo - a.lo, nan=0.0)
        dhi = np.nan_to_num(a.hi - b.hi, nan=0.0)
    # one-sided: sup_{x in A} d(x_i, [lo_i^B, hi_i^B]) per coordinate
    ab = np.maximum(np.maximum(dlo, 0.0), np.maximum(dhi, 0.0))
    ba = np.maximum(np.maximum(-dlo, 0.0), np.maximum(-dhi, 0.0))
    return float(max(np.linalg.norm(ab), np.linalg.norm(ba)))


def _one_sided_vertices(verts: np.ndarray, other: ConvexSet) -> float:
    return float(np.max(np.linalg.norm(verts - other.project(verts), axis=-1)))


def _support_gap(s1: ConvexSet, s2: ConvexSet, n_dir: int, seed: int) -> float:
    # d_H = sup_{|u|=1} |h_1(u) - h_2(u)|; sampled directions give a lower bound
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((n_dir, s1.dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    u = np.vstack([u, np.eye(s1.dim), -np.eye(s1.dim)])
    return float(max(abs(s1.support(d) - s2.support(d)) for d in u))


def hausdorff(s1: ConvexSet, s2: ConvexSet, *, n_dir: int = 4096, seed: int = 0) -> float:
    """Hausdorff distance between two nonempty closed convex sets.

    Exact for box/box, ball/ball and any pair of bounded polytopes or boxes
    (vertex enumeration, since a convex distance function peaks at a
    vertex). Other bounded pairs use sampled support-function differences,
    which bound ``d_H`` from below.
    """
    _check_dims(s1, s2)
    if isinstance(s1, IntervalProduct) and isinstance(s2, IntervalProduct):
        return _hausdorff_boxes(s1, s2)
    if s1.bounded != s2.bounded:
        raise ValueError("cannot compare a bounded with an unbounded set")
    if not s1.bounded:
        raise ValueError("Hausdorff distance of unbounded non-box sets is not supported")
    if isinstance(s1, Ball) and isinstance(s2, Ball):
        # h_1(u) - h_2(u) = <u, c1 - c2> + r1 - r2 peaks at u parallel to c1 - c2
        return float(np.linalg.norm(s1.center - s2.center) + abs(s1.radius - s2.radius))
    vert = (IntervalProduct, Polytope)
    if isinstance(s1, vert) and isinstance(s2, vert):
        return max(_one_sided_vertices(s1.vertices(), s2),
                   _one_sided_vertices(s2.vertices(), s1))
    return _support_gap(s1, s2, n_dir, seed)


@dataclass(frozen=True)
class DisEstimate:
    """Lower bound on ``dis(F1, F2)`` together with the pair attaining it."""

    lower_bound: float
    samples_used: int
    witness: tuple[GraphPoint, GraphPoint]


def _graph_samples(op: MonotoneOperator, t, s, n, rng, box, lam_range):
    # one row per sample so that a larger n extends the same sequence
    u = rng.random((n, op.dim + 1))
    y = box * (2.0 * u[:, :-1] - 1.0)
    lo, hi = np.log(lam_range[0]), np.log(lam_range[1])
    lam = np.exp(lo + (hi - lo) * u[:, -1])
    z = np.empty_like(y)
    for i in range(n):
        z[i] = op.resolvent(lam[i], t, s, y[i])
    eta = (y - z) / lam[:, None]
    return z, eta


def dis_estimate(op1: MonotoneOperator, op2: MonotoneOperator, t, state_params: tuple,
                 budget: int, *, seed: int = 0, box: float = 4.0,
                 lam_range: tuple[float, float] = (1e-3, 1e2)) -> DisEstimate:
    """Sampled lower bound on ``dis(A1_{t,s1}, A2_{t,s2})``, ``state_params = (s1, s2)``.

    ``budget`` counts pairs: ``isqrt(budget)`` graph points are drawn from
    each operator by resolvent sweeps ``y -> (J y, (y - J y)/lam)`` with
    ``y`` uniform in ``[-box, box]^n`` and ``lam`` log-uniform. The streams
    for the two operators are seeded independently and drawn
    sequentially, so for a fixed seed a larger budget evaluates a superset
    of pairs and the bound never decreases.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if op1.dim != op2.dim:
        raise ValueError("operators act on different spaces")
    s1, s2 = state_params
    n = max(1, math.isqrt(int(budget)))
    z1, e1 = _graph_samples(op1, t, s1, n, np.random.default_rng([seed, 1]), box, lam_range)
    z2, e2 = _graph_samples(op2, t, s2, n, np.random.default_rng([seed, 2]), box, lam_range)
    val, i, j = _kernels.dis_pair_max(z1, e1, z2, e2)
    # dis >= 0 for any pair of operators sharing a graph point; report the clipped value
    val = max(val, 0.0)
    witness = (GraphPoint(z1[i], e1[i]), GraphPoint(z2[j], e2[j]))
    return DisEstimate(float(val), n * n, witness)


def resolvent_gap_bound(lam: float, delta: float, f0norm: float, dis: float) -> float:
    """``lam (1 + (4 delta + 1) f0norm) / (4 delta) + (1 + delta) dis``."""
    if not (lam > 0 and delta > 0):
        raise ValueError("lam and delta must be > 0")
    if f0norm < 0 or dis < 0:
        raise ValueError("f0norm and dis must be >= 0")
    return lam * (1.0 + (4.0 * delta + 1.0) * f0norm) / (4.0 * delta) + (1.0 + delta) * dis


def discrete_gronwall_bound(alpha: float, betas: Sequence[float]) -> np.ndarray:
    """Bounds ``alpha * exp(sum_{k<n} beta_k)`` for ``n = 0..len(betas)``."""
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    b = np.asarray(betas, dtype=float).reshape(-1)
    if np.any(b < 0):
        raise ValueError("betas must be >= 0")
    return alpha * np.exp(np.concatenate([[0.0], np.cumsum(b)]))


def _cumtrapz(y, x):
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


def continuous_gronwall_bound(w0: float, a: Callable[[float], float], b: Callable[[float], float],
                              alpha_exp: float, grid) -> np.ndarray:
    """Right-hand side of the nonlinear Gronwall bound on ``grid``.

    Returns ``w0^{1-alpha} exp(int_0^t a) + int_0^t exp(int_s^t a) b(s) ds``
    by the trapezoid rule, which bounds ``w^{1-alpha}(t)``. ``grid[0]`` is
    the origin of integration.
    """
    if not 0.0 <= alpha_exp < 1.0:
        raise ValueError("alpha_exp must lie in [0, 1)")
    if w0 < 0:
        raise ValueError("w0 must be >= 0")
    tg = np.asarray(grid, dtype=float)
    av = np.array([a(s) for s in tg], dtype=float)
    bv = np.array([b(s) for s in tg], dtype=float)
    if np.any(bv < 0):
        raise ValueError("b must be nonnegative on the grid")
    big_a = _cumtrapz(av, tg)
    # int_0^t exp(A(t) - A(s)) b(s) ds = exp(A(t)) * int_0^t exp(-A(s)) b(s) ds
    inner = _cumtrapz(np.exp(-big_a) * bv, tg)
    return w0 ** (1.0 - alpha_exp) * np.exp(big_a) + np.exp(big_a) * inner
