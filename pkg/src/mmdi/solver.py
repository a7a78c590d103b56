"""Implicit catching-up scheme for x' in f(t, x) - A_{t,x}(x).

One step from ``(t_i, x_i)`` to ``t_{i+1} = t_i + h`` is

    y_i     = x_i + h f(t_i, x_i)
    x_{i+1} = J^h_{A_{t_{i+1}, x_i}}(y_i)

The operator is advanced in time but its state parameter stays at ``x_i``:
the step is implicit only in the operator's own argument.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .errors import InadmissibleError, SolverError, StepSizeError
from .operators import GraphPoint, MonotoneOperator, graph_membership_residual

__all__ = [
    "InclusionProblem",
    "Trajectory",
    "AprioriConstants",
    "ConvergenceReport",
    "admissible",
    "step",
    "solve",
    "step_constant",
    "optimal_delta",
    "apriori_bounds",
    "convergence_study",
    "hypo_probe",
    "lipschitz_fit",
]

log = logging.getLogger(__name__)

#: Residual threshold for an accepted step.
STEP_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class InclusionProblem:
    """Perturbation ``f``, operator family ``A`` and their constants.

    ``c_A``, ``L1`` and ``L2`` default to the values declared on ``A``.
    """

    f: Callable[[float, np.ndarray], np.ndarray]
    A: MonotoneOperator
    c_f: float
    T: float = 1.0
    c_A: float | None = None
    L1: float | None = None
    L2: float | None = None
    name: str = ""

    def __post_init__(self):
        for key, default in (("c_A", self.A.c_A), ("L1", self.A.L1), ("L2", self.A.L2)):
            if getattr(self, key) is None:
                object.__setattr__(self, key, float(default))
        if not self.c_f > 0:
            raise ValueError("c_f must be > 0")
        if self.c_A < 0 or self.L1 < 0 or self.L2 < 0:
            raise ValueError("c_A, L1, L2 must be >= 0")
        if not self.L2 < 1:
            raise ValueError(f"L2 must be < 1, got {self.L2}")
        if not self.T > 0:
            raise ValueError("horizon T must be > 0")

    @property
    def dim(self) -> int:
        return self.A.dim

    def check_growth(self, box: float = 10.0, samples: int = 1000, t_grid=None, seed: int = 0) -> float:
        """Largest sampled ``|f(t,x)| / (1 + |x|)``; compare against ``c_f``."""
        rng = np.random.default_rng(seed)
        t_grid = np.linspace(0.0, self.T, 11) if t_grid is None else np.asarray(t_grid)
        x = rng.uniform(-box, box, size=(samples, self.dim))
        ts = rng.choice(t_grid, size=samples)
        return max(float(np.linalg.norm(self.f(t, xi))) / (1.0 + np.linalg.norm(xi))
                   for t, xi in zip(ts, x))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    h: float
    residuals: np.ndarray = field(default_factory=lambda: np.empty(0))
    selection_norms: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def velocities(self) -> np.ndarray:
        return np.diff(self.states, axis=0) / self.h

    @property
    def speeds(self) -> np.ndarray:
        return np.linalg.norm(self.velocities, axis=1)

    def __len__(self):
        return self.times.size


@dataclass(frozen=True)
class AprioriConstants:
    delta: float
    c1: float
    m: float
    M: float


def admissible(problem: InclusionProblem, t0: float, x0) -> bool:
    """``x0 in dom(A_{t0, x0})``."""
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (problem.dim,) or not np.all(np.isfinite(x0)):
        return False
    return bool(problem.A.in_domain(t0, x0, x0))


def step(problem: InclusionProblem, t_i: float, t_next: float, x_i):
    """One catching-up step; returns ``x_{i+1}``."""
    h = t_next - t_i
    if not h > 0:
        raise ValueError("step must advance time")
    x_i = np.asarray(x_i, dtype=float)
    y = x_i + h * np.asarray(problem.f(t_i, x_i), dtype=float)
    return problem.A.resolvent(h, t_next, x_i, y)


def step_constant(delta: float, c_f: float, c_A: float, L1: float) -> float:
    """``c_f + (1 + (4 delta + 1) c_A) / (4 delta) + (1 + delta) L1``."""
    return c_f + (1.0 + (4.0 * delta + 1.0) * c_A) / (4.0 * delta) + (1.0 + delta) * L1


def optimal_delta(c_A: float, L1: float, L2: float) -> float:
    """``delta`` minimizing :func:`step_constant` subject to ``(1 + delta) L2 < 1``."""
    cap = math.inf if L2 == 0 else (1.0 / L2 - 1.0) * (1.0 - 1e-9)
    if not cap > 0:
        raise ValueError("no delta > 0 satisfies (1 + delta) L2 < 1")
    best = math.sqrt((1.0 + c_A) / (4.0 * L1)) if L1 > 0 else 1e8
    return min(best, cap)


def _m_of(delta, x0n, c_f, c_A, L1, L2):
    c1 = step_constant(delta, c_f, c_A, L1)
    q = 1.0 - (1.0 + delta) * L2
    expo = 6.0 * c1 / q
    if expo > 700.0:
        return c1, math.inf
    return c1, (2.0 * x0n + 2.0 * c1 / q) * math.exp(expo)


def apriori_bounds(x0, delta: float = 1.0, *, c_f: float, c_A: float, L1: float, L2: float,
                   optimize: bool = False) -> AprioriConstants:
    """Velocity bound ``m(x0)`` and truncation radius ``M(x0)``.

    With ``optimize`` the fixed ``delta`` is replaced by the minimizer of
    ``m`` over a log grid inside the admissible range.
    """
    x0n = float(np.linalg.norm(np.asarray(x0, dtype=float)))
    if optimize:
        cap = math.inf if L2 == 0 else 1.0 / L2 - 1.0
        hi = min(cap, 1e4)
        grid = np.geomspace(1e-4, hi, 400)
        grid = grid[(1.0 + grid) * L2 < 1.0]
        vals = [(_m_of(d, x0n, c_f, c_A, L1, L2)[1], d) for d in grid]
        delta = min(vals)[1]
    if not delta > 0:
        raise ValueError("delta must be > 0")
    if not (1.0 + delta) * L2 < 1.0:
        raise ValueError(f"(1 + delta) L2 = {(1 + delta) * L2} must be < 1")
    c1, m = _m_of(delta, x0n, c_f, c_A, L1, L2)
    big_m = c_f + c_A + (c_f + 2.0 * c_A + 1.0) * (x0n + m)
    return AprioriConstants(float(delta), float(c1), float(m), float(big_m))


def solve(problem: InclusionProblem, t0: float, x0, h: float, *, T: float | None = None,
          allow_large_step: bool = False, check_velocity: bool = True,
          residual_lambda: float = 1.0) -> Trajectory:
    """Run the scheme on ``[t0, t0 + T]`` with uniform step ``h``.

    ``T`` defaults to ``problem.T`` and must be a multiple of ``h`` up to
    rounding. Steps are rejected unless ``h c1 < 1/2`` for the best
    admissible ``delta`` (override with ``allow_large_step``).

    Each step's residual is the graph-membership defect of the computed
    point, measured with resolvent parameter ``residual_lambda`` rather
    than ``h`` so that it checks the step independently.
    """
    x0 = np.asarray(x0, dtype=float)
    T = problem.T if T is None else float(T)
    if not h > 0:
        raise ValueError("h must be > 0")
    if not admissible(problem, t0, x0):
        raise InadmissibleError(f"x0={x0.tolist()} is not in dom(A_(t0,x0)) at t0={t0}")
    delta = optimal_delta(problem.c_A, problem.L1, problem.L2)
    c1 = step_constant(delta, problem.c_f, problem.c_A, problem.L1)
    if h * c1 >= 0.5 and not allow_large_step:
        raise StepSizeError(f"h={h} violates h*c1 < 1/2 (c1={c1:.6g}, limit h < {0.5 / c1:.6g})")
    n = int(round(T / h))
    if n < 1 or abs(n * h - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"horizon T={T} is not a multiple of h={h}")
    times = t0 + h * np.arange(n + 1)
    states = np.empty((n + 1, x0.size))
    states[0] = x0
    residuals = np.empty(n)
    sel = np.empty(n)
    A, f = problem.A, problem.f

    for i in range(n):
        xi = states[i]
        try:
            y = xi + h * np.asarray(f(times[i], xi), dtype=float)
            xn = A.resolvent(h, times[i + 1], xi, y)
        except Exception as exc:
            raise SolverError(f"step {i} failed: {exc}", last_index=i,
                              trajectory=Trajectory(times[:i + 1], states[:i + 1].copy(), h,
                                                    residuals[:i], sel[:i])) from exc
        if not np.all(np.isfinite(xn)):
            raise SolverError(f"non-finite state at step {i + 1}", last_index=i,
                              trajectory=Trajectory(times[:i + 1], states[:i + 1].copy(), h,
                                                    residuals[:i], sel[:i]))
        image = (y - xn) / h
        states[i + 1] = xn
        residuals[i] = graph_membership_residual(A, times[i + 1], xi, GraphPoint(xn, image),
                                                 residual_lambda)
        sel[i] = np.linalg.norm(image)

    traj = Trajectory(times, states, h, residuals, sel)
    if check_velocity:
        _warn_velocity(problem, traj, x0)
    return traj


def _warn_velocity(problem, traj, x0):
    try:
        bounds = apriori_bounds(x0, c_f=problem.c_f, c_A=problem.c_A, L1=problem.L1,
                                L2=problem.L2, optimize=True)
    except ValueError:
        return
    window = traj.times[1:] <= traj.times[0] + 1.0 + 1e-12
    if window.any():
        vmax = float(traj.speeds[window].max())
        if vmax > bounds.m + 1e-6:
            log.warning("discrete speed %.6g exceeds the a-priori bound m(x0)=%.6g", vmax, bounds.m)


# ---------------------------------------------------------------------------
# refinement
# ---------------------------------------------------------------------------

@dataclass
class ConvergenceReport:
    h_list: list[float]
    gaps: np.ndarray
    ratios: np.ndarray
    extrapolated_times: np.ndarray
    extrapolated_states: np.ndarray
    trajectories: list[Trajectory]

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.gaps) < 0)) if self.gaps.size > 1 else True


def _restrict(fine: Trajectory, coarse: Trajectory) -> np.ndarray:
    q = coarse.h / fine.h
    qi = int(round(q))
    if qi < 1 or abs(q - qi) > 1e-9 * q:
        raise ValueError("each step must divide the previous one")
    return fine.states[::qi][: coarse.states.shape[0]]


def convergence_study(problem: InclusionProblem, t0: float, x0, h_list: Sequence[float], *,
                      workers: int | None = None, allow_large_step: bool = False) -> ConvergenceReport:
    """Solve for every step in ``h_list`` and compare consecutive grids.

    ``gaps[k]`` is the sup-norm distance between the runs with
    ``h_list[k]`` and ``h_list[k+1]`` on the coarser grid; ``ratios`` are
    successive gap quotients. The limit is estimated by first-order
    Richardson extrapolation of the two finest runs.
    """
    hs = [float(h) for h in h_list]
    if len(hs) < 1 or any(b >= a for a, b in zip(hs, hs[1:])):
        raise ValueError("h_list must be nonempty and strictly decreasing")

    def run(h):
        return solve(problem, t0, x0, h, allow_large_step=allow_large_step, check_velocity=False)

    if workers == 1 or len(hs) == 1:
        trajs = [run(h) for h in hs]
    else:
        with ThreadPoolExecutor(max_workers=workers or min(4, len(hs))) as pool:
            trajs = list(pool.map(run, hs))

    gaps = []
    for c, fn in zip(trajs, trajs[1:]):
        gaps.append(float(np.max(np.linalg.norm(_restrict(fn, c) - c.states, axis=1))))
    gaps = np.array(gaps)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = gaps[1:] / gaps[:-1] if gaps.size > 1 else np.empty(0)
    if len(trajs) >= 2:
        c, fn = trajs[-2], trajs[-1]
        q = c.h / fn.h
        xf = _restrict(fn, c)
        ext = xf + (xf - c.states) / (q - 1.0)
        ext_t = c.times
    else:
        ext_t, ext = trajs[0].times, trajs[0].states
    return ConvergenceReport(hs, gaps, ratios, ext_t, ext, trajs)


# ---------------------------------------------------------------------------
# probes
# ---------------------------------------------------------------------------

def hypo_probe(op: MonotoneOperator, t_grid, box, M: float, samples: int, *, seed: int = 0,
               lam_range: tuple[float, float] = (1e-2, 1e1)) -> float:
    """Sampled lower bound on the hypo-monotonicity constant on ``M``-ball.

    Graph points ``(x, x*)`` with ``x* in A_{t,x}(x)`` are generated per
    time by :meth:`~mmdi.operators.MonotoneOperator.self_graph_point`; the
    largest ``-<x1* - x2*, x1 - x2> / |x1 - x2|^2`` over pairs is returned,
    clipped below at 0. ``box`` is a half-width (scalar or per coordinate).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    half = np.broadcast_to(np.asarray(box, dtype=float), (op.dim,))
    best = 0.0
    lo, hi = np.log(lam_range[0]), np.log(lam_range[1])
    for t in np.atleast_1d(np.asarray(t_grid, dtype=float)):
        xs, images = [], []
        for _ in range(samples):
            y = rng.uniform(-half, half)
            lam = math.exp(rng.uniform(lo, hi))
            gp = op.self_graph_point(lam, t, y)
            if gp is not None and np.linalg.norm(gp.base) <= M:
                xs.append(gp.base)
                images.append(gp.image)
        if len(xs) >= 2:
            val, _, _ = _kernels.hypo_pair_max(np.array(xs), np.array(images))
            best = max(best, val)
    return float(best)


def lipschitz_fit(f: Callable, t_grid, box, samples: int = 2000, *, seed: int = 0,
                  dim: int | None = None) -> float:
    """Largest sampled quotient ``|f(t,x) - f(t,y)| / |x - y|`` over the box."""
    half = np.atleast_1d(np.asarray(box, dtype=float))
    if dim is not None:
        half = np.broadcast_to(half, (dim,))
    rng = np.random.default_rng(seed)
    best = 0.0
    ts = np.atleast_1d(np.asarray(t_grid, dtype=float))
    for _ in range(samples):
        t = ts[rng.integers(ts.size)]
        x = rng.uniform(-half, half)
        y = rng.uniform(-half, half)
        d = np.linalg.norm(x - y)
        if d > 1e-12:
            best = max(best, float(np.linalg.norm(np.asarray(f(t, x)) - np.asarray(f(t, y)))) / d)
    return best
