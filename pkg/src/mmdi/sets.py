"""Closed convex sets with exact projections.

Three variants are provided: axis-aligned interval products (endpoints may
be infinite), Euclidean balls and polytopes given by halfspaces. All
projections accept a single point of shape ``(n,)`` or a batch of shape
``(k, n)``; polytopes fall back to a per-point loop.
"""

from __future__ import annotations

import itertools
from abc import ABC, abstractmethod

import numpy as np
from scipy.optimize import linprog

from .errors import InfeasibleSetError

__all__ = ["ConvexSet", "IntervalProduct", "Ball", "Polytope", "project"]

POLYTOPE_MAX_DIM = 8
POLYTOPE_MAX_FACETS = 32


def _as_points(y, dim):
    y = np.asarray(y, dtype=float)
    if y.shape[-1:] != (dim,):
        raise ValueError(f"dimension mismatch: expected last axis {dim}, got shape {y.shape}")
    return y


class ConvexSet(ABC):
    """Nonempty closed convex subset of R^n."""

    dim: int

    @abstractmethod
    def project(self, y):
        """Nearest point of the set to ``y`` (batched along leading axes)."""

    @abstractmethod
    def support(self, u) -> float:
        """Support function ``sup_{x in set} <u, x>`` (may be ``inf``)."""

    @property
    @abstractmethod
    def bounded(self) -> bool: ...

    def contains(self, y, tol: float = 1e-12) -> bool:
        y = _as_points(y, self.dim)
        return bool(np.all(np.linalg.norm(y - self.project(y), axis=-1) <= tol))

    def distance(self, y):
        y = _as_points(y, self.dim)
        d = np.linalg.norm(y - self.project(y), axis=-1)
        return float(d) if d.ndim == 0 else d


class IntervalProduct(ConvexSet):
    """Box ``prod_i [lo_i, hi_i]``; ``-inf``/``inf`` mark unbounded sides."""

    def __init__(self, lo, hi):
        lo = np.atleast_1d(np.asarray(lo, dtype=float)).copy()
        hi = np.atleast_1d(np.asarray(hi, dtype=float)).copy()
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be 1-D arrays of equal length")
        if np.isnan(lo).any() or np.isnan(hi).any():
            raise ValueError("interval endpoints must not be NaN")
        if np.any(lo > hi):
            raise InfeasibleSetError(f"empty interval product: lo={lo}, hi={hi}")
        lo.flags.writeable = False
        hi.flags.writeable = False
        self.lo, self.hi = lo, hi
        self.dim = lo.size

    def project(self, y):
        y = _as_points(y, self.dim)
        return np.minimum(np.maximum(y, self.lo), self.hi)

    def support(self, u):
        u = _as_points(u, self.dim)
        # only finite sides contribute when the direction is zero
        with np.errstate(invalid="ignore"):
            terms = np.where(u > 0, u * self.hi, np.where(u < 0, u * self.lo, 0.0))
        return float(np.sum(terms))

    @property
    def bounded(self):
        return bool(np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi)))

    def vertices(self):
        if not self.bounded:
            raise ValueError("unbounded interval product has no vertex list")
        return np.array(list(itertools.product(*zip(self.lo, self.hi))), dtype=float)

    def __repr__(self):
        return f"IntervalProduct(lo={self.lo.tolist()}, hi={self.hi.tolist()})"


class Ball(ConvexSet):
    """Closed Euclidean ball."""

    def __init__(self, center, radius):
        center = np.atleast_1d(np.asarray(center, dtype=float)).copy()
        radius = float(radius)
        if not radius >= 0.0:
            raise InfeasibleSetError(f"ball radius must be >= 0, got {radius}")
        center.flags.writeable = False
        self.center, self.radius = center, radius
        self.dim = center.size

    def project(self, y):
        y = _as_points(y, self.dim)
        d = y - self.center
        r = np.linalg.norm(d, axis=-1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(r > self.radius, self.radius / r, 1.0)
        return self.center + d * scale

    def support(self, u):
        u = _as_points(u, self.dim)
        return float(u @ self.center + self.radius * np.linalg.norm(u))

    @property
    def bounded(self):
        return True

    def __repr__(self):
        return f"Ball(center={self.center.tolist()}, radius={self.radius})"


class Polytope(ConvexSet):
    """Intersection of halfspaces ``<a_i, x> <= b_i``.

    Feasibility is checked with a linear program at construction. The
    projection is an active-set quadratic program, limited to
    ``dim <= 8`` and at most 32 halfspaces.
    """

    def __init__(self, normals, offsets, tol: float = 1e-10, max_iter: int | None = None):
        a = np.atleast_2d(np.asarray(normals, dtype=float))
        b = np.atleast_1d(np.asarray(offsets, dtype=float))
        if a.shape[0] != b.shape[0]:
            raise ValueError("need one offset per normal")
        if a.shape[1] > POLYTOPE_MAX_DIM or a.shape[0] > POLYTOPE_MAX_FACETS:
            raise ValueError(
                f"polytope too large: dim {a.shape[1]} (max {POLYTOPE_MAX_DIM}), "
                f"facets {a.shape[0]} (max {POLYTOPE_MAX_FACETS})")
        zero = np.linalg.norm(a, axis=1) == 0.0
        if np.any(b[zero] < 0.0):
            raise InfeasibleSetError("halfspace 0 <= b with b < 0")
        a, b = a[~zero].copy(), b[~zero].copy()
        self.dim = int(np.atleast_2d(np.asarray(normals)).shape[1])
        self.normals, self.offsets = a, b
        self.normals.flags.writeable = False
        self.offsets.flags.writeable = False
        self.tol = tol
        self.max_iter = max_iter or 50 * (a.shape[0] + self.dim + 1)
        self._feasible = self._find_feasible()

    def _find_feasible(self):
        if self.normals.shape[0] == 0:
            return np.zeros(self.dim)
        res = linprog(np.zeros(self.dim), A_ub=self.normals, b_ub=self.offsets,
                      bounds=[(None, None)] * self.dim, method="highs")
        if res.status != 0:
            raise InfeasibleSetError(f"polytope is empty ({res.message})")
        return np.asarray(res.x, dtype=float)

    def _project_one(self, y):
        a, b, tol = self.normals, self.offsets, self.tol
        if np.all(a @ y <= b + tol):
            return y.copy()
        x = self._feasible.copy()
        work: list[int] = []
        for _ in range(self.max_iter):
            g = x - y
            if work:
                aw = a[work]
                lam = np.linalg.lstsq(aw.T, -g, rcond=None)[0]
                p = -g - aw.T @ lam
            else:
                lam = np.empty(0)
                p = -g
            if np.linalg.norm(p) <= tol * (1.0 + np.linalg.norm(g)):
                if lam.size == 0 or lam.min() >= -tol:
                    return x
                work.pop(int(np.argmin(lam)))
                continue
            alpha, block = 1.0, None
            ap = a @ p
            for i in range(a.shape[0]):
                if i in work or ap[i] <= tol * np.linalg.norm(p):
                    continue
                step = (b[i] - a[i] @ x) / ap[i]
                if step < alpha:
                    alpha, block = max(step, 0.0), i
            x = x + alpha * p
            if block is not None:
                work.append(block)
        raise RuntimeError("active-set projection did not terminate")

    def project(self, y):
        y = _as_points(y, self.dim)
        if y.ndim == 1:
            return self._project_one(y)
        flat = y.reshape(-1, self.dim)
        out = flat.copy()
        a, b, tol = self.normals, self.offsets, self.tol
        if a.shape[0] == 0:
            return out.reshape(y.shape)
        viol = flat @ a.T - b
        todo = np.flatnonzero(np.any(viol > tol, axis=1))
        # a feasible projection onto one violated halfspace is the projection onto P
        sq = np.einsum("ij,ij->i", a, a)
        for i in range(a.shape[0]):
            if todo.size == 0:
                break
            rows = todo[viol[todo, i] > tol]
            if rows.size == 0:
                continue
            cand = flat[rows] - np.outer(viol[rows, i] / sq[i], a[i])
            ok = np.all(cand @ a.T <= b + tol, axis=1)
            out[rows[ok]] = cand[ok]
            todo = np.setdiff1d(todo, rows[ok], assume_unique=True)
        for r in todo:
            out[r] = self._project_one(flat[r])
        return out.reshape(y.shape)

    def support(self, u):
        u = _as_points(u, self.dim)
        res = linprog(-u, A_ub=self.normals, b_ub=self.offsets,
                      bounds=[(None, None)] * self.dim, method="highs")
        if res.status == 3:
            return float("inf")
        return float(-res.fun)

    @property
    def bounded(self):
        return all(np.isfinite(self.support(s * e))
                   for e in np.eye(self.dim) for s in (1.0, -1.0))

    def vertices(self):
        """Enumerate vertices by solving every square active subsystem."""
        if not self.bounded:
            raise ValueError("unbounded polytope has no vertex list")
        a, b = self.normals, self.offsets
        verts = []
        for idx in itertools.combinations(range(a.shape[0]), self.dim):
            sub = a[list(idx)]
            if abs(np.linalg.det(sub)) < 1e-12:
                continue
            v = np.linalg.solve(sub, b[list(idx)])
            if np.all(a @ v <= b + 1e-9) and not any(np.allclose(v, w) for w in verts):
                verts.append(v)
        return np.array(verts)

    def __repr__(self):
        return f"Polytope({self.normals.shape[0]} halfspaces in R^{self.dim})"


def project(convex_set: ConvexSet, y):
    """Euclidean projection of ``y`` onto ``convex_set``."""
    return convex_set.project(y)
