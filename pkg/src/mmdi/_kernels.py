"""Hot numeric loops.

Every kernel has a pure-numpy implementation. When numba is importable and
the environment variable ``MMDI_DISABLE_NUMBA`` is unset (or falsy), the
public names are bound to ``@njit`` compiled loop versions instead. Both
paths are exposed as ``NUMPY_KERNELS`` / ``NUMBA_KERNELS`` so tests and the
benchmark can compare them directly.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:  # pragma: no cover - exercised implicitly
    import numba
except ImportError:  # pragma: no cover
    numba = None

__all__ = [
    "NUMBA_AVAILABLE",
    "NUMBA_ENABLED",
    "dis_pair_max",
    "hypo_pair_max",
    "relay_enumerate",
    "interval_enumerate",
    "relay_forward_backward",
]


def _flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in {"1", "true", "yes", "on"}


NUMBA_AVAILABLE = numba is not None
NUMBA_ENABLED = NUMBA_AVAILABLE and not _flag("MMDI_DISABLE_NUMBA")

_CHUNK = 1 << 21


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _dis_pair_max_np(z1, e1, z2, e2):
    """Maximize <e1_i - e2_j, z2_j - z1_i> / (1 + |e1_i| + |e2_j|) over pairs."""
    n1, n2 = z1.shape[0], z2.shape[0]
    n_e1 = np.linalg.norm(e1, axis=1)
    n_e2 = np.linalg.norm(e2, axis=1)
    best, bi, bj = -np.inf, -1, -1
    step = max(1, _CHUNK // max(n2, 1))
    for start in range(0, n1, step):
        stop = min(n1, start + step)
        de = e1[start:stop, None, :] - e2[None, :, :]
        dz = z2[None, :, :] - z1[start:stop, None, :]
        val = np.einsum("ijk,ijk->ij", de, dz)
        val /= 1.0 + n_e1[start:stop, None] + n_e2[None, :]
        k = int(np.argmax(val))
        i, j = divmod(k, n2)
        if val[i, j] > best:
            best, bi, bj = float(val[i, j]), start + i, j
    return best, bi, bj


def _hypo_pair_max_np(x, xs, eps):
    """Maximize -<xs_i - xs_j, x_i - x_j> / |x_i - x_j|^2 over pairs i < j."""
    n = x.shape[0]
    best, bi, bj = -np.inf, -1, -1
    for i in range(n - 1):
        dx = x[i] - x[i + 1:]
        ds = xs[i] - xs[i + 1:]
        den = np.einsum("ij,ij->i", dx, dx)
        ok = den > eps
        if not np.any(ok):
            continue
        val = -np.einsum("ij,ij->i", ds[ok], dx[ok]) / den[ok]
        k = int(np.argmax(val))
        if val[k] > best:
            best = float(val[k])
            bi, bj = i, i + 1 + int(np.flatnonzero(ok)[k])
    return best, bi, bj


def _relay_enumerate_np(c, d, gain):
    """Minimal-norm solution of z in gain*Sign(c - d*z), case by case."""
    c, d, gain = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (c, d, gain)))
    z = np.zeros(c.shape)
    pos = c - d * gain > 0.0
    neg = c + d * gain < 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        mid = np.where(d > 0.0, c / d, 0.0)
    z = np.where(pos, gain, z)
    z = np.where(neg, -gain, z)
    free = ~pos & ~neg
    z = np.where(free & (d > 0.0), mid, z)
    return z


def _interval_enumerate_np(c, d, lo, hi):
    """Minimal-norm solution of z in N_[lo,hi](c - d*z); NaN when empty."""
    c, d, lo, hi = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (c, d, lo, hi)))
    z = np.full(c.shape, np.nan)
    inside = (c >= lo) & (c <= hi)
    z = np.where(inside, 0.0, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        up = np.where(d > 0.0, (c - hi) / d, np.nan)
        down = np.where(d > 0.0, (c - lo) / d, np.nan)
    z = np.where((c > hi) & (d > 0.0), up, z)
    z = np.where((c < lo) & (d > 0.0), down, z)
    return z


def _relay_forward_backward_np(c, d, gain, tol, max_iter):
    """Batched scalar forward-backward for z in gain*Sign(c - d*z)."""
    c, d, gain = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (c, d, gain)))
    rho = np.where(d > 0.0, 1.0 / np.where(d > 0.0, d, 1.0), 1.0)
    z = np.zeros(c.shape)
    iters = np.zeros(c.shape, dtype=np.int64)
    active = np.ones(c.shape, dtype=bool)
    for k in range(max_iter):
        if not active.any():
            break
        u = z - rho * (d * z - c)
        # backward step on Sign^{-1} = N_[-g, g]: a clamp
        z_new = np.clip(u, -gain, gain)
        moved = np.abs(z_new - z) > tol * (1.0 + np.abs(z))
        z = np.where(active, z_new, z)
        iters = np.where(active, k + 1, iters)
        active &= moved
    return z, iters


# ---------------------------------------------------------------------------
# loop implementations (compiled with numba when enabled)
# ---------------------------------------------------------------------------

def _dis_pair_max_loop(z1, e1, z2, e2):
    n1, n2, dim = z1.shape[0], z2.shape[0], z1.shape[1]
    n_e1 = np.empty(n1)
    n_e2 = np.empty(n2)
    for i in range(n1):
        s = 0.0
        for k in range(dim):
            s += e1[i, k] * e1[i, k]
        n_e1[i] = math.sqrt(s)
    for j in range(n2):
        s = 0.0
        for k in range(dim):
            s += e2[j, k] * e2[j, k]
        n_e2[j] = math.sqrt(s)
    best, bi, bj = -np.inf, -1, -1
    for i in range(n1):
        for j in range(n2):
            num = 0.0
            for k in range(dim):
                num += (e1[i, k] - e2[j, k]) * (z2[j, k] - z1[i, k])
            val = num / (1.0 + n_e1[i] + n_e2[j])
            if val > best:
                best, bi, bj = val, i, j
    return best, bi, bj


def _hypo_pair_max_loop(x, xs, eps):
    n, dim = x.shape[0], x.shape[1]
    best, bi, bj = -np.inf, -1, -1
    for i in range(n - 1):
        for j in range(i + 1, n):
            den = 0.0
            num = 0.0
            for k in range(dim):
                dx = x[i, k] - x[j, k]
                den += dx * dx
                num += (xs[i, k] - xs[j, k]) * dx
            if den > eps:
                val = -num / den
                if val > best:
                    best, bi, bj = val, i, j
    return best, bi, bj


def _relay_enumerate_loop(c, d, gain):
    n = c.shape[0]
    z = np.zeros(n)
    for i in range(n):
        g = gain[i]
        if c[i] - d[i] * g > 0.0:          # output w > 0, z = +g
            z[i] = g
        elif c[i] + d[i] * g < 0.0:        # output w < 0, z = -g
            z[i] = -g
        elif d[i] > 0.0:                   # w = 0, z = c/d in [-g, g]
            z[i] = c[i] / d[i]
        else:                              # d = 0, c = 0: Sign(0), minimal norm 0
            z[i] = 0.0
    return z


def _interval_enumerate_loop(c, d, lo, hi):
    n = c.shape[0]
    z = np.empty(n)
    for i in range(n):
        if lo[i] <= c[i] <= hi[i]:
            z[i] = 0.0
        elif d[i] > 0.0 and c[i] > hi[i]:
            z[i] = (c[i] - hi[i]) / d[i]
        elif d[i] > 0.0 and c[i] < lo[i]:
            z[i] = (c[i] - lo[i]) / d[i]
        else:
            z[i] = np.nan
    return z


def _relay_forward_backward_loop(c, d, gain, tol, max_iter):
    n = c.shape[0]
    z = np.zeros(n)
    iters = np.zeros(n, dtype=np.int64)
    for i in range(n):
        rho = 1.0 / d[i] if d[i] > 0.0 else 1.0
        zi = 0.0
        for k in range(max_iter):
            u = zi - rho * (d[i] * zi - c[i])
            zn = min(max(u, -gain[i]), gain[i])
            done = abs(zn - zi) <= tol * (1.0 + abs(zi))
            zi = zn
            iters[i] = k + 1
            if done:
                break
        z[i] = zi
    return z, iters


NUMPY_KERNELS = {
    "dis_pair_max": _dis_pair_max_np,
    "hypo_pair_max": _hypo_pair_max_np,
    "relay_enumerate": _relay_enumerate_np,
    "interval_enumerate": _interval_enumerate_np,
    "relay_forward_backward": _relay_forward_backward_np,
}

if NUMBA_AVAILABLE:
    _jit = numba.njit(cache=True, nogil=True)
    NUMBA_KERNELS = {
        "dis_pair_max": _jit(_dis_pair_max_loop),
        "hypo_pair_max": _jit(_hypo_pair_max_loop),
        "relay_enumerate": _jit(_relay_enumerate_loop),
        "interval_enumerate": _jit(_interval_enumerate_loop),
        "relay_forward_backward": _jit(_relay_forward_backward_loop),
    }
else:  # pragma: no cover
    NUMBA_KERNELS = {}


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _vec(a, n):
    out = np.asarray(a, dtype=np.float64)
    if out.ndim == 0:
        out = np.full(n, float(out))
    return np.ascontiguousarray(out.reshape(-1))


def _pick(name):
    return (NUMBA_KERNELS if NUMBA_ENABLED else NUMPY_KERNELS)[name]


def dis_pair_max(z1, e1, z2, e2):
    """Best pair for the pseudo-distance quotient; returns ``(value, i, j)``."""
    best, i, j = _pick("dis_pair_max")(_f64(z1), _f64(e1), _f64(z2), _f64(e2))
    return float(best), int(i), int(j)


def hypo_pair_max(x, xs, eps=1e-24):
    """Largest hypo-monotonicity quotient over sample pairs; ``(value, i, j)``."""
    best, i, j = _pick("hypo_pair_max")(_f64(x), _f64(xs), float(eps))
    return float(best), int(i), int(j)


def relay_enumerate(c, d, gain):
    c = _f64(c).reshape(-1)
    n = c.shape[0]
    if NUMBA_ENABLED:
        return NUMBA_KERNELS["relay_enumerate"](c, _vec(d, n), _vec(gain, n))
    return _relay_enumerate_np(c, _vec(d, n), _vec(gain, n))


def interval_enumerate(c, d, lo, hi):
    c = _f64(c).reshape(-1)
    n = c.shape[0]
    args = (c, _vec(d, n), _vec(lo, n), _vec(hi, n))
    if NUMBA_ENABLED:
        return NUMBA_KERNELS["interval_enumerate"](*args)
    return _interval_enumerate_np(*args)


def relay_forward_backward(c, d, gain, tol=1e-14, max_iter=1000):
    c = _f64(c).reshape(-1)
    n = c.shape[0]
    args = (c, _vec(d, n), _vec(gain, n), float(tol), int(max_iter))
    if NUMBA_ENABLED:
        return NUMBA_KERNELS["relay_forward_backward"](*args)
    return _relay_forward_backward_np(*args)
