"""Sweeping processes and Lur'e systems as inclusion problems.

A sweeping process drives ``x`` by a moving convex set:
``x' in f(t, x) - N_{C(t, x)}(x)``.

A Lur'e system

    x' = g(t, x) + B lam,   y = C x + D lam,   lam in -F_{t,x}(y)

reduces to ``x' in g(t, x) - B Phi(t, x, x)`` with
``Phi(t, x, y) = (F_{t,y}^{-1} + D)^{-1} C x``; splitting
``B = C^T + (B - C^T)`` gives the operator ``A_{t,y}(x) = C^T Phi(t, x, y)``
and the perturbation ``f = g - (B - C^T) Phi^0(t, x, x)``, where ``Phi^0``
is the minimal-norm selection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .errors import DomainError, ResolventError
from .metrics import hausdorff
from .operators import (
    LureComposed,
    MonotoneOperator,
    NormalCone,
    SignRelay,
    range_projector,
    solve_generalized_equation,
)
from .sets import ConvexSet, IntervalProduct
from .solver import InclusionProblem

__all__ = [
    "SweepingScenario",
    "LureSystem",
    "Phi0Result",
    "AssumptionReport",
    "sweeping_problem",
    "check_sweeping_lipschitz",
    "phi0_solve",
    "phi0_enumerate",
    "fit_phi0_growth",
    "lure_problem",
    "check_assumptions",
    "coercivity_constant",
    "output_constant",
    "range_residual",
]


# ---------------------------------------------------------------------------
# sweeping processes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepingScenario:
    """Moving set ``C(t, s)`` with ``d_H(C(t,x), C(s,y)) <= L1|t-s| + L2|x-y|``.

    ``C`` is a :class:`~mmdi.sets.ConvexSet` (static) or a callable
    ``(t, s) -> ConvexSet``; ``dim`` is required for the callable form.
    """

    C: ConvexSet | Callable[[float, np.ndarray], ConvexSet]
    f: Callable[[float, np.ndarray], np.ndarray]
    c_f: float
    L1: float = 0.0
    L2: float = 0.0
    T: float = 1.0
    dim: int | None = None
    c_A: float = 0.0
    name: str = "sweeping"


def sweeping_problem(sc: SweepingScenario) -> InclusionProblem:
    """Inclusion problem with ``A_{t,s} = N_{C(t,s)}``; rejects ``L2 >= 1``."""
    if not sc.L2 < 1:
        raise ValueError(f"L2={sc.L2} must be < 1 for a sweeping process")
    if sc.L1 < 0 or sc.L2 < 0:
        raise ValueError("L1, L2 must be >= 0")
    op = NormalCone(sc.C, dim=sc.dim, c_A=sc.c_A, L1=sc.L1, L2=sc.L2)
    return InclusionProblem(sc.f, op, c_f=sc.c_f, T=sc.T, name=sc.name)


def check_sweeping_lipschitz(sc: SweepingScenario, *, box: float = 2.0, samples: int = 200,
                             seed: int = 0) -> float:
    """Largest sampled ``d_H(C(t,x), C(s,y)) - (L1|t-s| + L2|x-y|)``.

    Nonpositive means the declared constants are consistent with the
    samples; the check is one-sided (a sample can only refute).
    """
    if isinstance(sc.C, ConvexSet):
        return 0.0
    dim = sc.dim
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(samples):
        t, s = rng.uniform(0.0, sc.T, size=2)
        x, y = rng.uniform(-box, box, size=(2, dim))
        d = hausdorff(sc.C(t, x), sc.C(s, y))
        worst = max(worst, d - (sc.L1 * abs(t - s) + sc.L2 * np.linalg.norm(x - y)))
    return float(worst)


# ---------------------------------------------------------------------------
# Lur'e systems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LureSystem:
    """Matrices ``B (n x m)``, ``C (m x n)``, ``D (m x m)`` and feedback ``F``.

    ``F`` is a :class:`~mmdi.operators.MonotoneOperator` on R^m whose state
    parameter is the system state ``x``. ``c_f`` bounds the growth of
    ``g``; ``beta1`` (growth of ``Phi^0``) is fitted when omitted.
    """

    g: Callable[[float, np.ndarray], np.ndarray]
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    F: MonotoneOperator
    c_f: float
    P: np.ndarray | None = None
    L_F1: float = 0.0
    L_F2: float = 0.0
    beta1: float | None = None
    T: float = 1.0
    name: str = "lure"

    def __post_init__(self):
        for key in ("B", "C", "D"):
            object.__setattr__(self, key, np.atleast_2d(np.asarray(getattr(self, key), dtype=float)))
        if self.P is not None:
            object.__setattr__(self, "P", np.atleast_2d(np.asarray(self.P, dtype=float)))
        m, n = self.C.shape
        if self.B.shape != (n, m) or self.D.shape != (m, m):
            raise ValueError(f"need B {(n, m)}, D {(m, m)} for C of shape {(m, n)}")
        if self.F.dim != m:
            raise ValueError(f"feedback acts on R^{self.F.dim}, expected R^{m}")

    @property
    def n(self) -> int:
        return self.C.shape[1]

    @property
    def m(self) -> int:
        return self.C.shape[0]


def coercivity_constant(D) -> float:
    """Largest ``c`` with ``<Dz, z> >= c|z|^2`` on ``rge(D + D^T)``.

    This is half the smallest positive eigenvalue of ``D + D^T`` (zero for
    ``D + D^T = 0``).
    """
    d = np.atleast_2d(np.asarray(D, dtype=float))
    w = np.linalg.eigvalsh(d + d.T)
    pos = w[w > 1e-10 * max(1.0, float(np.abs(w).max(initial=0.0)))]
    return float(pos.min() / 2.0) if pos.size else 0.0


def output_constant(C) -> float:
    """Smallest positive eigenvalue of ``C C^T`` (0 when none)."""
    c = np.atleast_2d(np.asarray(C, dtype=float))
    w = np.linalg.eigvalsh(c @ c.T)
    pos = w[w > 1e-10 * max(1.0, float(np.abs(w).max(initial=0.0)))]
    return float(pos.min()) if pos.size else 0.0


@dataclass(frozen=True)
class Phi0Result:
    z: np.ndarray
    residual: float
    in_range_component: bool
    iterations: int


def phi0_solve(sys: LureSystem, t: float, x, y, *, rho: float | None = None,
               tol: float = 1e-13, max_iter: int = 20000,
               membership_tol: float = 1e-8) -> Phi0Result:
    """Minimal-norm solution of ``z in F_{t,y}(C x - D z)``.

    Forward-backward splitting (see
    :func:`~mmdi.operators.solve_generalized_equation`), followed by
    projection onto ``rge(D + D^T)`` when the projected point still solves
    the equation. Raises :class:`DomainError` when the iterates diverge
    (no solution) and :class:`ResolventError` when they stall.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    c = sys.C @ x
    res = solve_generalized_equation(sys.F, t, y, c, sys.D, rho=rho, tol=tol, max_iter=max_iter,
                                     minimal_norm=True, membership_tol=membership_tol)
    if not res.converged or res.residual > membership_tol:
        if res.diverged:
            raise DomainError(f"(F^-1 + D)^-1 C x appears empty at x={x.tolist()}")
        raise ResolventError("generalized equation did not converge",
                             residual=float(res.residual), iterations=res.iterations)
    return Phi0Result(res.z, float(res.residual), bool(res.in_range), res.iterations)


def _coordinatewise(F: MonotoneOperator):
    if isinstance(F, SignRelay):
        return "relay"
    if isinstance(F, NormalCone) and F.state_independent and isinstance(F.set_at(0.0, None), IntervalProduct):
        return "interval"
    return None


def phi0_enumerate(sys: LureSystem, t: float, x, y=None) -> np.ndarray:
    """Exact ``Phi^0`` by case enumeration for diagonal ``D`` and coordinatewise ``F``.

    Supported feedbacks: :class:`~mmdi.operators.SignRelay` and normal
    cones of fixed interval products. Returns NaN entries where the
    equation has no solution.
    """
    d = sys.D
    if np.any(d != np.diag(np.diag(d))):
        raise ValueError("enumeration needs a diagonal D")
    kind = _coordinatewise(sys.F)
    if kind is None:
        raise ValueError("enumeration needs a relay or fixed-interval normal-cone feedback")
    c = sys.C @ np.asarray(x, dtype=float)
    if kind == "relay":
        return _kernels.relay_enumerate(c, np.diag(d), sys.F.threshold)
    box = sys.F.set_at(t, None)
    return _kernels.interval_enumerate(c, np.diag(d), box.lo, box.hi)


def fit_phi0_growth(sys: LureSystem, *, box: float = 5.0, samples: int = 500, seed: int = 0) -> float:
    """Sampled ``max |Phi^0(t,x,y)| / (1 + |x| + |y|)``."""
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(samples):
        t = rng.uniform(0.0, sys.T)
        x, y = rng.uniform(-box, box, size=(2, sys.n))
        try:
            z = phi0_solve(sys, t, x, y).z
        except (DomainError, ResolventError):
            continue
        best = max(best, float(np.linalg.norm(z)) / (1.0 + np.linalg.norm(x) + np.linalg.norm(y)))
    return best


def _is_identity(a) -> bool:
    return a.shape[0] == a.shape[1] and np.array_equal(a, np.eye(a.shape[0]))


def lure_problem(sys: LureSystem) -> InclusionProblem:
    """Inclusion problem ``x' in f(t,x) - C^T Phi(t, x, x)``.

    With ``B = C = I`` and ``D = 0`` the operator is ``F`` itself, since
    ``(F^{-1})^{-1} = F``; this case is built directly so it reproduces the
    plain problem step for step.
    """
    c2 = output_constant(sys.C)
    if c2 <= 0 or np.linalg.matrix_rank(sys.C @ sys.C.T) < sys.m:
        raise ValueError("C C^T must be full rank")
    cnorm = float(np.linalg.norm(sys.C, 2))
    L1p = cnorm * sys.L_F1 / c2
    L2p = cnorm * sys.L_F2 / c2
    if not L2p < 1:
        raise ValueError(f"derived L2' = |C| L_F2 / c2 = {L2p} must be < 1")

    if not np.any(sys.D) and _is_identity(sys.C) and _is_identity(sys.B):
        return InclusionProblem(sys.g, sys.F, c_f=sys.c_f, T=sys.T, c_A=sys.F.c_A,
                                L1=L1p, L2=L2p, name=sys.name)

    beta1 = fit_phi0_growth(sys) if sys.beta1 is None else float(sys.beta1)
    op = LureComposed(sys.F, sys.C, sys.D, c_A=cnorm * beta1, L1=L1p, L2=L2p)
    skew = sys.B - sys.C.T
    if not np.any(skew):
        f = sys.g
        c_f = sys.c_f
    else:
        def f(t, x):
            z = phi0_solve(sys, t, x, x).z
            return np.asarray(sys.g(t, x), dtype=float) - skew @ z

        # |(B - C^T) Phi^0| <= |B - C^T| beta1 (1 + 2|x|)
        c_f = sys.c_f + 2.0 * float(np.linalg.norm(skew, 2)) * beta1
    return InclusionProblem(f, op, c_f=c_f, T=sys.T, name=sys.name)


# ---------------------------------------------------------------------------
# assumption report
# ---------------------------------------------------------------------------

@dataclass
class AssumptionReport:
    """Verdicts per assumption: ``pass``, ``fail``, ``sampled`` or ``skipped``."""

    verdicts: dict[str, str] = field(default_factory=dict)
    details: dict[str, str] = field(default_factory=dict)
    c1: float = 0.0
    c2: float = 0.0

    def ok(self) -> bool:
        return all(v != "fail" for v in self.verdicts.values())

    def as_dict(self) -> dict:
        return {"verdicts": dict(self.verdicts), "details": dict(self.details),
                "c1": self.c1, "c2": self.c2}


def _null_basis(a, tol=1e-10):
    w, v = np.linalg.eigh(a)
    return v[:, np.abs(w) <= tol * max(1.0, float(np.abs(w).max(initial=0.0)))]


def check_assumptions(sys: LureSystem, *, samples: int = 50, box: float = 3.0, seed: int = 0,
                      tol: float = 1e-10) -> AssumptionReport:
    """Check the structural assumptions of a Lur'e system.

    Matrix conditions (``D`` PSD, ``C C^T`` full rank, kernel inclusion,
    the bound on ``L_F2``) are decided exactly up to ``tol``. Growth of
    ``g``, the range condition on ``Phi`` and the relative-interior
    condition are probed on random samples and reported as ``sampled``
    unless a sample refutes them.
    """
    rep = AssumptionReport()
    d = sys.D
    sym = d + d.T
    wmin = float(np.linalg.eigvalsh(sym).min())
    rep.verdicts["D_psd"] = "pass" if wmin >= -tol * max(1.0, np.abs(sym).max()) else "fail"
    rep.details["D_psd"] = f"smallest eigenvalue of D + D^T: {wmin:.6g}"
    rep.c1 = coercivity_constant(d)
    rep.c2 = output_constant(sys.C)

    full = np.linalg.matrix_rank(sys.C @ sys.C.T) == sys.m
    rep.verdicts["CCt_full_rank"] = "pass" if full else "fail"
    rep.details["CCt_full_rank"] = f"c2 = {rep.c2:.6g}"

    if sys.P is None:
        rep.verdicts["kernel_inclusion"] = "skipped"
        rep.details["kernel_inclusion"] = "no P supplied"
    else:
        p = sys.P
        if not (np.allclose(p, p.T) and np.linalg.eigvalsh(0.5 * (p + p.T)).min() > 0):
            rep.verdicts["kernel_inclusion"] = "fail"
            rep.details["kernel_inclusion"] = "P is not symmetric positive definite"
        else:
            k = _null_basis(sym)
            lhs = p @ sys.B - sys.C.T
            err = float(np.linalg.norm(lhs @ k)) if k.size else 0.0
            scale = max(1.0, float(np.linalg.norm(lhs)))
            rep.verdicts["kernel_inclusion"] = "pass" if err <= 1e-9 * scale else "fail"
            rep.details["kernel_inclusion"] = (f"dim ker(D + D^T) = {k.shape[1]}, "
                                               f"|(PB - C^T) K| = {err:.3g}")

    cnorm = float(np.linalg.norm(sys.C, 2))
    if rep.c2 > 0:
        bound = rep.c2 / cnorm
        if sys.L_F2 < bound:
            rep.verdicts["L_F2_bound"] = "pass"
        else:
            rep.verdicts["L_F2_bound"] = "fail"
        rep.details["L_F2_bound"] = (f"L_F2 = {sys.L_F2:.6g}, strict bound c2/|C| = {bound:.6g}"
                                     + (" (boundary case)" if sys.L_F2 == bound else ""))
    else:
        rep.verdicts["L_F2_bound"] = "fail"
        rep.details["L_F2_bound"] = "c2 = 0"

    rng = np.random.default_rng(seed)
    growth = 0.0
    range_bad = 0
    solved = 0
    interior = 0
    for _ in range(samples):
        t = rng.uniform(0.0, sys.T)
        x, y = rng.uniform(-box, box, size=(2, sys.n))
        growth = max(growth, float(np.linalg.norm(sys.g(t, x))) / (1.0 + np.linalg.norm(x)))
        try:
            r = phi0_solve(sys, t, x, y)
        except (DomainError, ResolventError):
            continue
        solved += 1
        if not r.in_range_component:
            range_bad += 1
        # relative-interior probe: the equation stays solvable for nearby C x
        eps = 1e-3 * (1.0 + np.linalg.norm(x))
        ok = True
        for e in np.vstack([np.eye(sys.n), -np.eye(sys.n)]):
            try:
                phi0_solve(sys, t, x + eps * e, x, max_iter=5000)
            except (DomainError, ResolventError):
                ok = False
                break
        interior += ok
    rep.verdicts["g_growth"] = "sampled" if growth <= sys.c_f * (1 + 1e-12) else "fail"
    rep.details["g_growth"] = f"max |g|/(1+|x|) = {growth:.6g}, c_f = {sys.c_f:.6g}"
    rep.verdicts["range_condition"] = "fail" if range_bad else "sampled"
    rep.details["range_condition"] = f"{solved - range_bad}/{solved} solved samples in rge(D + D^T)"
    rep.verdicts["relative_interior"] = "sampled" if interior == solved and solved else "fail"
    rep.details["relative_interior"] = f"{interior}/{solved} samples solvable in a neighbourhood"
    return rep


def range_residual(sys: LureSystem, z) -> float:
    """Distance from ``z`` to ``rge(D + D^T)``."""
    p = range_projector(sys.D)
    z = np.asarray(z, dtype=float)
    return float(np.linalg.norm(z - p @ z))

