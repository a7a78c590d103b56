"""Parameterized maximal monotone operators.

An operator here is a family ``A_{t,s}`` indexed by time ``t`` and a state
parameter ``s``. Each variant knows its resolvent ``(I + lam A_{t,s})^{-1}``
in closed form, except :class:`LureComposed`, whose resolvent reduces to a
generalized equation solved by forward-backward splitting
(:func:`solve_generalized_equation`).

Resolvents broadcast over leading axes of ``y``: a batch of shape ``(k, n)``
returns ``(k, n)``. The state parameter is always a single vector.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, ResolventError
from .sets import ConvexSet, IntervalProduct, Ball, Polytope

__all__ = [
    "MEMBERSHIP_TOL",
    "GraphPoint",
    "MonotoneOperator",
    "NormalCone",
    "SignRelay",
    "LinearPSD",
    "Shifted",
    "LureComposed",
    "DirectSum",
    "GEResult",
    "zero_operator",
    "shift_operator",
    "resolvent",
    "yosida",
    "minimal_norm",
    "graph_membership_residual",
    "solve_generalized_equation",
    "range_projector",
]

#: Euclidean tolerance for graph membership tests.
MEMBERSHIP_TOL = 1e-8


@dataclass(frozen=True)
class GraphPoint:
    """A pair ``(base, image)`` with ``image`` in ``A(base)``."""

    base: np.ndarray
    image: np.ndarray


def _vec(x, dim=None, name="vector"):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if dim is not None and x.shape[-1] != dim:
        raise ValueError(f"{name}: expected dimension {dim}, got shape {x.shape}")
    return x


def _check_lam(lam):
    lam = float(lam)
    if not lam > 0.0:
        raise ValueError(f"resolvent parameter must be > 0, got {lam}")
    return lam


class MonotoneOperator(ABC):
    """Family ``(t, s) -> A_{t,s}`` of maximal monotone operators on R^n.

    Subclasses implement :meth:`resolvent`, :meth:`minimal_norm` and
    :meth:`in_domain`. The constants ``c_A`` (linear growth of the
    minimal-norm selection), ``L1`` and ``L2`` (Lipschitz bounds of the
    pseudo-distance in time and state) are declarations used by the solver's
    a-priori bounds; they are not verified here.
    """

    dim: int
    c_A: float = 0.0
    L1: float = 0.0
    L2: float = 0.0

    def _set_constants(self, c_A, L1, L2):
        if c_A < 0 or L1 < 0 or L2 < 0:
            raise ValueError("c_A, L1, L2 must be nonnegative")
        self.c_A, self.L1, self.L2 = float(c_A), float(L1), float(L2)

    @abstractmethod
    def resolvent(self, lam, t, s, y): ...

    def yosida(self, lam, t, s, y):
        lam = _check_lam(lam)
        y = _vec(y, self.dim)
        return (y - self.resolvent(lam, t, s, y)) / lam

    @abstractmethod
    def minimal_norm(self, t, s, x): ...

    @abstractmethod
    def in_domain(self, t, s, x, tol: float = MEMBERSHIP_TOL) -> bool: ...

    def value_box(self, t, s, x):
        """``A_{t,s}(x)`` as an interval product ``(lo, hi)``, or ``None``.

        Only coordinatewise variants have such a description.
        """
        return None

    def value_samples(self, t, s, x, radius, n=32, rng=None):
        """Finite subset of ``A_{t,s}(x)``, first row the minimal-norm element."""
        return self.minimal_norm(t, s, x)[None, :]

    @property
    def state_independent(self) -> bool:
        return False

    def self_graph_point(self, lam, t, y, tol=1e-12, max_iter=200):
        """Point ``(x, x*)`` with ``x*`` in ``A_{t,x}(x)``, or ``None``.

        Iterates ``s <- J^lam_{A_{t,s}}(y)``; for ``L2 < 1`` operators whose
        resolvent moves with the state parameter at rate ``L2`` this is a
        contraction.
        """
        lam = _check_lam(lam)
        y = _vec(y, self.dim)
        s = y.copy()
        for _ in range(max_iter):
            z = self.resolvent(lam, t, s, y)
            if np.linalg.norm(z - s) <= tol * (1.0 + np.linalg.norm(z)):
                return GraphPoint(z, (y - z) / lam)
            s = z
        return None


# ---------------------------------------------------------------------------
# variants
# ---------------------------------------------------------------------------

class NormalCone(MonotoneOperator):
    """Normal cone ``N_{C(t,s)}`` of a closed convex set.

    ``sets`` is either a fixed :class:`~mmdi.sets.ConvexSet` or a callable
    ``(t, s) -> ConvexSet``; in the latter case ``dim`` is required.
    """

    def __init__(self, sets, dim=None, *, c_A=0.0, L1=0.0, L2=0.0, boundary_tol=1e-12):
        if isinstance(sets, ConvexSet):
            self._fixed = sets
            self._map = None
            self.dim = sets.dim
        else:
            if dim is None:
                raise ValueError("dim is required when the set depends on (t, s)")
            self._fixed = None
            self._map = sets
            self.dim = int(dim)
        self.boundary_tol = boundary_tol
        self._set_constants(c_A, L1, L2)

    @property
    def state_independent(self):
        return self._fixed is not None

    def set_at(self, t, s) -> ConvexSet:
        if self._fixed is not None:
            return self._fixed
        out = self._map(t, s)
        if out.dim != self.dim:
            raise ValueError(f"set map returned dimension {out.dim}, expected {self.dim}")
        return out

    def resolvent(self, lam, t, s, y):
        _check_lam(lam)
        return self.set_at(t, s).project(_vec(y, self.dim))

    def minimal_norm(self, t, s, x):
        x = _vec(x, self.dim)
        if not self.in_domain(t, s, x):
            raise DomainError(f"{x} is outside the set {self.set_at(t, s)!r}")
        return np.zeros(self.dim)

    def in_domain(self, t, s, x, tol=MEMBERSHIP_TOL):
        return self.set_at(t, s).contains(_vec(x, self.dim), tol)

    def value_box(self, t, s, x):
        c = self.set_at(t, s)
        if not isinstance(c, IntervalProduct):
            return None
        x = _vec(x, self.dim)
        if not c.contains(x, MEMBERSHIP_TOL):
            raise DomainError(f"{x} is outside {c!r}")
        tol = self.boundary_tol * (1.0 + np.abs(x))
        at_hi = np.abs(x - c.hi) <= tol
        at_lo = np.abs(x - c.lo) <= tol
        lo = np.where(at_lo, -np.inf, 0.0)
        hi = np.where(at_hi, np.inf, 0.0)
        return lo, hi

    def value_samples(self, t, s, x, radius, n=32, rng=None):
        c = self.set_at(t, s)
        x = _vec(x, self.dim)
        if not c.contains(x, MEMBERSHIP_TOL):
            raise DomainError(f"{x} is outside {c!r}")
        gens = []
        if isinstance(c, Ball):
            d = x - c.center
            if np.linalg.norm(d) >= c.radius * (1 - self.boundary_tol) and c.radius > 0:
                gens.append(d / np.linalg.norm(d))
        elif isinstance(c, Polytope):
            act = np.abs(c.normals @ x - c.offsets) <= self.boundary_tol * (1 + np.abs(c.offsets))
            gens.extend(a / np.linalg.norm(a) for a in c.normals[act])
        elif isinstance(c, IntervalProduct):
            lo, hi = self.value_box(t, s, x)
            for i in range(self.dim):
                for side in (lo[i], hi[i]):
                    if np.isinf(side):
                        e = np.zeros(self.dim)
                        e[i] = np.sign(side)
                        gens.append(e)
        out = [np.zeros(self.dim)]
        if gens:
            rng = np.random.default_rng(0) if rng is None else rng
            g = np.array(gens)
            scales = radius * np.linspace(0.0, 1.0, n)[1:]
            for k in scales:
                w = rng.dirichlet(np.ones(len(g)))
                v = w @ g
                nv = np.linalg.norm(v)
                if nv > 0:
                    out.append(k * v / nv)
        return np.array(out)


class SignRelay(MonotoneOperator):
    """Coordinatewise relay ``gain * Sign(x_i)`` on the masked coordinates.

    Unmasked coordinates carry the zero operator. The resolvent is the
    soft-threshold with threshold ``lam * gain``.
    """

    def __init__(self, gain=1.0, mask=None, dim=None, *, c_A=None, L1=0.0, L2=0.0):
        gain = np.atleast_1d(np.asarray(gain, dtype=float))
        if mask is not None:
            mask = np.atleast_1d(np.asarray(mask, dtype=bool))
        if dim is None:
            dim = max(gain.size, 0 if mask is None else mask.size)
        self.dim = int(dim)
        gain = np.broadcast_to(gain, (self.dim,)).astype(float)
        if np.any(gain <= 0.0):
            raise ValueError("relay gain must be > 0")
        mask = np.ones(self.dim, bool) if mask is None else np.broadcast_to(mask, (self.dim,))
        self.gain = gain
        self.mask = mask.copy()
        self.threshold = np.where(self.mask, gain, 0.0)
        self.threshold.flags.writeable = False
        if c_A is None:
            c_A = float(np.linalg.norm(self.threshold))
        self._set_constants(c_A, L1, L2)

    @property
    def state_independent(self):
        return True

    def resolvent(self, lam, t, s, y):
        lam = _check_lam(lam)
        y = _vec(y, self.dim)
        thr = lam * self.threshold
        return np.sign(y) * np.maximum(np.abs(y) - thr, 0.0)

    def minimal_norm(self, t, s, x):
        x = _vec(x, self.dim)
        return self.threshold * np.sign(x)

    def in_domain(self, t, s, x, tol=MEMBERSHIP_TOL):
        return True

    def value_box(self, t, s, x):
        x = _vec(x, self.dim)
        sgn = np.sign(x)
        lo = np.where(x == 0.0, -self.threshold, self.threshold * sgn)
        hi = np.where(x == 0.0, self.threshold, self.threshold * sgn)
        return lo, hi


class LinearPSD(MonotoneOperator):
    """Single-valued linear operator ``x -> M x`` with ``M + M^T`` PSD."""

    def __init__(self, matrix, *, c_A=None, L1=0.0, L2=0.0, tol=1e-12):
        m = np.atleast_2d(np.asarray(matrix, dtype=float))
        if m.shape[0] != m.shape[1]:
            raise ValueError("matrix must be square")
        sym = 0.5 * (m + m.T)
        scale = max(1.0, float(np.abs(m).max(initial=0.0)))
        if m.size and np.linalg.eigvalsh(sym).min() < -tol * scale:
            raise ValueError("matrix is not monotone: M + M^T has a negative eigenvalue")
        self.matrix = m.copy()
        self.matrix.flags.writeable = False
        self.dim = m.shape[0]
        self._zero = not np.any(m)
        if c_A is None:
            c_A = float(np.linalg.norm(m, 2)) if m.size else 0.0
        self._set_constants(c_A, L1, L2)
        self._cache: dict[float, np.ndarray] = {}

    @property
    def state_independent(self):
        return True

    def resolvent(self, lam, t, s, y):
        lam = _check_lam(lam)
        y = _vec(y, self.dim)
        if self._zero:
            return y.copy()
        a = np.eye(self.dim) + lam * self.matrix
        return np.linalg.solve(a, y.reshape(-1, self.dim).T).T.reshape(y.shape)

    def minimal_norm(self, t, s, x):
        return self.matrix @ _vec(x, self.dim)

    def in_domain(self, t, s, x, tol=MEMBERSHIP_TOL):
        return True

    def value_box(self, t, s, x):
        v = self.matrix @ _vec(x, self.dim)
        return v, v.copy()


def zero_operator(dim: int) -> LinearPSD:
    """The operator ``A = 0``; its resolvent is the identity."""
    return LinearPSD(np.zeros((dim, dim)), c_A=0.0)


class Shifted(MonotoneOperator):
    """``A_{t,s}(y) = B_{t,s}(y + alpha * s)`` with ``alpha > -1``."""

    def __init__(self, base: MonotoneOperator, alpha: float, *, c_A=None, L1=None, L2=None):
        alpha = float(alpha)
        if not alpha > -1.0:
            raise ValueError(f"shift factor must be > -1, got {alpha}")
        self.base, self.alpha = base, alpha
        self.dim = base.dim
        self._set_constants(
            base.c_A * (1 + abs(alpha)) if c_A is None else c_A,
            base.L1 if L1 is None else L1,
            base.L2 + abs(alpha) if L2 is None else L2,
        )

    def _shift(self, s):
        return self.alpha * _vec(s, self.dim, "state parameter")

    def resolvent(self, lam, t, s, y):
        sh = self._shift(s)
        return self.base.resolvent(lam, t, s, _vec(y, self.dim) + sh) - sh

    def minimal_norm(self, t, s, x):
        return self.base.minimal_norm(t, s, _vec(x, self.dim) + self._shift(s))

    def in_domain(self, t, s, x, tol=MEMBERSHIP_TOL):
        return self.base.in_domain(t, s, _vec(x, self.dim) + self._shift(s), tol)

    def value_box(self, t, s, x):
        return self.base.value_box(t, s, _vec(x, self.dim) + self._shift(s))

    def value_samples(self, t, s, x, radius, n=32, rng=None):
        return self.base.value_samples(t, s, _vec(x, self.dim) + self._shift(s), radius, n, rng)

    def self_graph_point(self, lam, t, y, tol=1e-12, max_iter=200):
        if not self.base.state_independent:
            return super().self_graph_point(lam, t, y, tol, max_iter)
        # x* in B((1 + alpha) x): sample the graph of B, then rescale the base point
        lam = _check_lam(lam)
        y = _vec(y, self.dim)
        w = self.base.resolvent(lam, t, np.zeros(self.dim), y)
        return GraphPoint(w / (1.0 + self.alpha), (y - w) / lam)


def shift_operator(base: MonotoneOperator, alpha: float) -> Shifted:
    """Build ``A_{t,x}(.) = B_t(. + alpha x)``; rejects ``alpha <= -1``."""
    return Shifted(base, alpha)


class DirectSum(MonotoneOperator):
    """Blockwise operator; every block sees the full state parameter."""

    def __init__(self, blocks: Sequence[tuple[MonotoneOperator, Sequence[int]]], *,
                 c_A=None, L1=None, L2=None):
        idx = [np.asarray(ix, dtype=int).reshape(-1) for _, ix in blocks]
        for (op, _), ix in zip(blocks, idx):
            if op.dim != ix.size:
                raise ValueError(f"block of dim {op.dim} given {ix.size} coordinates")
        allidx = np.concatenate(idx) if idx else np.empty(0, int)
        self.dim = int(allidx.size)
        if sorted(allidx.tolist()) != list(range(self.dim)):
            raise ValueError("block coordinates must partition 0..n-1")
        self.blocks = [(op, ix) for (op, _), ix in zip(blocks, idx)]
        ops = [op for op, _ in self.blocks]
        self._set_constants(
            float(np.sqrt(sum(o.c_A ** 2 for o in ops))) if c_A is None else c_A,
            max((o.L1 for o in ops), default=0.0) if L1 is None else L1,
            max((o.L2 for o in ops), default=0.0) if L2 is None else L2,
        )

    @property
    def state_independent(self):
        return all(op.state_independent for op, _ in self.blocks)

    def resolvent(self, lam, t, s, y):
        y = _vec(y, self.dim)
        out = np.empty_like(y)
        for op, ix in self.blocks:
            out[..., ix] = op.resolvent(lam, t, s, y[..., ix])
        return out

    def minimal_norm(self, t, s, x):
        x = _vec(x, self.dim)
        out = np.empty(self.dim)
        for op, ix in self.blocks:
            out[ix] = op.minimal_norm(t, s, x[ix])
        return out

    def in_domain(self, t, s, x, tol=MEMBERSHIP_TOL):
        x = _vec(x, self.dim)
        return all(op.in_domain(t, s, x[ix], tol) for op, ix in self.blocks)

    def value_box(self, t, s, x):
        x = _vec(x, self.dim)
        lo, hi = np.empty(self.dim), np.empty(self.dim)
        for op, ix in self.blocks:
            box = op.value_box(t, s, x[ix])
            if box is None:
                return None
            lo[ix], hi[ix] = box
        return lo, hi

    def value_samples(self, t, s, x, radius, n=32, rng=None):
        x = _vec(x, self.dim)
        parts = [(op.value_samples(t, s, x[ix], radius, n, rng), ix) for op, ix in self.blocks]
        k = max(p.shape[0] for p, _ in parts)
        out = np.zeros((k, self.dim))
        for p, ix in parts:
            out[:, ix] = p[np.minimum(np.arange(k), p.shape[0] - 1)]
        return out


# ---------------------------------------------------------------------------
# generalized equation  z in F(c - D z)
# ---------------------------------------------------------------------------

def range_projector(d: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthogonal projector onto ``rge(D + D^T)``."""
    d = np.atleast_2d(np.asarray(d, dtype=float))
    w, v = np.linalg.eigh(d + d.T)
    scale = max(1.0, float(np.abs(w).max(initial=0.0)))
    keep = w > tol * scale
    basis = v[:, keep]
    return basis @ basis.T


@dataclass(frozen=True)
class GEResult:
    """Solution of ``z in F(c - D z)``.

    ``residual`` is the graph-membership defect of ``(c - D z, z)`` in
    ``F``; ``in_range`` reports whether ``z`` lies in ``rge(D + D^T)``.
    """

    z: np.ndarray
    residual: np.ndarray | float
    in_range: np.ndarray | bool
    iterations: int
    converged: bool
    method: str
    diverged: np.ndarray | bool = False


def _ge_residual(F, t, s, c, dmat, z):
    w = c - z @ dmat.T
    return np.linalg.norm(w - F.resolvent(1.0, t, s, w + z), axis=-1)


def solve_generalized_equation(F: MonotoneOperator, t, s, c, D, *, rho=None,
                               tol=1e-13, max_iter=20000, minimal_norm=True,
                               membership_tol=MEMBERSHIP_TOL, divergence_factor=1e3):
    """Solve ``z in F_{t,s}(c - D z)`` by forward-backward splitting.

    The inclusion is ``0 in F^{-1}(z) + (D z - c)``. The backward step on
    ``F^{-1}`` uses Moreau's identity
    ``J^rho_{F^{-1}}(u) = u - rho * J^{1/rho}_F(u / rho)``; the forward step
    is on the affine part. For symmetric ``D`` the affine part is
    ``1/lambda_max``-cocoercive and plain forward-backward with
    ``rho = 1/lambda_max`` is used. A nonsymmetric ``D`` is only monotone
    and Lipschitz, so Tseng's forward-backward-forward correction is added.

    With ``minimal_norm`` the iterate is projected onto ``rge(D + D^T)``;
    the projection is kept only if it still satisfies the inclusion, which
    it does whenever the range intersects the solution set.

    ``c`` may be a batch ``(k, m)``; every row is iterated in lockstep.
    Rows whose iterates leave the ball of radius
    ``divergence_factor * (1 + |c|)`` are stopped and flagged in
    ``diverged``: since the iterates are Fejer monotone with respect to
    every solution, this certifies that no solution of norm below half
    that radius exists.
    """
    c = np.asarray(c, dtype=float)
    single = c.ndim == 1
    c2 = np.atleast_2d(c)
    dmat = np.atleast_2d(np.asarray(D, dtype=float))
    m = dmat.shape[0]
    if c2.shape[1] != m or F.dim != m:
        raise ValueError("dimension mismatch in generalized equation")
    sym = 0.5 * (dmat + dmat.T)
    skew = np.linalg.norm(dmat - dmat.T) > 1e-12 * max(1.0, np.linalg.norm(dmat))
    lmax = float(np.linalg.eigvalsh(sym).max()) if m else 0.0
    if rho is None:
        if skew:
            rho = 0.5 / np.linalg.norm(dmat, 2)
        else:
            rho = 1.0 / lmax if lmax > 1e-14 else 1.0
    rho = float(rho)
    if not skew and lmax > 0 and rho >= 2.0 / lmax:
        raise ValueError(f"step {rho} exceeds the cocoercivity bound 2/{lmax}")

    def backward(u):
        return u - rho * F.resolvent(1.0 / rho, t, s, u / rho)

    z = np.zeros_like(c2)
    active = np.ones(c2.shape[0], bool)
    converged = np.zeros(c2.shape[0], bool)
    diverged = np.zeros(c2.shape[0], bool)
    cap = divergence_factor * (1.0 + np.linalg.norm(c2, axis=-1))
    it = 0
    for it in range(1, max_iter + 1):
        zk = z[active]
        ck = c2[active]
        fz = zk @ dmat.T - ck
        u = backward(zk - rho * fz)
        if skew:
            u = u - rho * ((u @ dmat.T - ck) - fz)
        stepn = np.linalg.norm(u - zk, axis=-1)
        moved = stepn > tol * (1.0 + np.linalg.norm(zk, axis=-1))
        z[active] = u
        idx = np.flatnonzero(active)
        converged[idx[~moved]] = True
        active[idx[~moved]] = False
        # Fejer monotonicity from z0 = 0 gives |z_k| <= 2 |z*| for any solution z*
        bad = ~np.all(np.isfinite(u), axis=-1) | (np.linalg.norm(u, axis=-1) > cap[idx])
        diverged[idx[bad]] = True
        active[idx[bad]] = False
        if not active.any():
            break
    res = _ge_residual(F, t, s, c2, dmat, z)
    in_range = np.ones(c2.shape[0], bool)
    if minimal_norm:
        p = range_projector(dmat)
        zp = z @ p.T
        off = np.linalg.norm(zp - z, axis=-1)
        res_p = _ge_residual(F, t, s, c2, dmat, zp)
        take = (off > 0) & (res_p <= membership_tol)
        z = np.where(take[:, None], zp, z)
        res = np.where(take, res_p, res)
        in_range = np.linalg.norm(z @ p.T - z, axis=-1) <= 1e-9 * (1 + np.linalg.norm(z, axis=-1))
    method = "forward-backward-forward" if skew else "forward-backward"
    if single:
        return GEResult(z[0], float(res[0]), bool(in_range[0]), it, bool(converged[0]), method,
                        bool(diverged[0]))
    return GEResult(z, res, in_range, it, converged, method, diverged)


class LureComposed(MonotoneOperator):
    """``A_{t,s}(x) = C^T (F_{t,s}^{-1} + D)^{-1} C x``.

    ``F`` acts on R^m, ``C`` is ``m x n`` and ``D`` is ``m x m`` with
    ``D + D^T`` PSD. The resolvent at ``y`` is ``z = y - lam C^T w`` where
    ``w`` solves ``w in F(C y - (D + lam C C^T) w)``.
    """

    def __init__(self, F: MonotoneOperator, C, D, *, c_A=0.0, L1=0.0, L2=0.0,
                 tol=1e-13, max_iter=20000):
        cm = np.atleast_2d(np.asarray(C, dtype=float))
        dm = np.atleast_2d(np.asarray(D, dtype=float))
        if dm.shape != (cm.shape[0], cm.shape[0]) or F.dim != cm.shape[0]:
            raise ValueError("need F on R^m, C of shape (m, n), D of shape (m, m)")
        if np.linalg.eigvalsh(0.5 * (dm + dm.T)).min() < -1e-12 * max(1.0, np.abs(dm).max()):
            raise ValueError("D is not positive semidefinite")
        self.F, self.C, self.D = F, cm, dm
        self.dim = cm.shape[1]
        self.tol, self.max_iter = tol, max_iter
        self._set_constants(c_A, L1, L2)

    def _solve(self, t, s, c, dmat, minimal_norm):
        return solve_generalized_equation(self.F, t, s, c, dmat, tol=self.tol,
                                          max_iter=self.max_iter, minimal_norm=minimal_norm)

    def resolvent(self, lam, t, s, y):
        lam = _check_lam(lam)
        y = _vec(y, self.dim)
        dprime = self.D + lam * self.C @ self.C.T
        res = self._solve(t, s, y @ self.C.T, dprime, minimal_norm=False)
        bad = ~np.atleast_1d(res.converged) | (np.atleast_1d(res.residual) > MEMBERSHIP_TOL)
        if np.any(bad):
            raise ResolventError("Lur'e resolvent did not converge",
                                 residual=float(np.max(res.residual)), iterations=res.iterations)
        return y - lam * (res.z @ self.C)

    def phi(self, t, s, x, minimal_norm=True) -> GEResult:
        """Solve ``z in (F_{t,s}^{-1} + D)^{-1} C x``."""
        x = _vec(x, self.dim)
        return self._solve(t, s, x @ self.C.T, self.D, minimal_norm)

    def minimal_norm(self, t, s, x):
        res = self.phi(t, s, x)
        if not np.all(res.converged) or np.any(res.residual > MEMBERSHIP_TOL):
            raise DomainError(f"(F^-1 + D)^-1 C x is empty at x={x}")
        # C^T applied to the least-norm element of the solution set: exact when
        # that set is a singleton (D + D^T positive definite), a selection otherwise
        return res.z @ self.C

    def in_domain(self, t, s, x, tol=MEMBERSHIP_TOL):
        res = self.phi(t, s, x, minimal_norm=False)
        return bool(np.all(res.converged) and np.all(res.residual <= tol))


# ---------------------------------------------------------------------------
# functional interface
# ---------------------------------------------------------------------------

def resolvent(op: MonotoneOperator, lam, t, s, y):
    """``(I + lam A_{t,s})^{-1} y``."""
    return op.resolvent(lam, t, s, y)


def yosida(op: MonotoneOperator, lam, t, s, y):
    """Yosida approximation ``(y - J^lam y) / lam``."""
    return op.yosida(lam, t, s, y)


def minimal_norm(op: MonotoneOperator, t, s, x):
    """Least-norm element of ``A_{t,s}(x)``; raises :class:`DomainError` off-domain."""
    return op.minimal_norm(t, s, x)


def graph_membership_residual(op: MonotoneOperator, t, s, pt: GraphPoint, lam=1.0) -> float:
    """``|base - J^lam(base + lam * image)|``; zero iff ``image in A(base)``."""
    base = _vec(pt.base, op.dim)
    image = _vec(pt.image, op.dim)
    return float(np.linalg.norm(base - op.resolvent(lam, t, s, base + lam * image)))

