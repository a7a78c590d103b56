"""Scenario files: parsing, validation and construction.

A scenario is a TOML document with one table per concern::

    [problem]       kind, name, t0, x0, T
    [solver]        h, refine | h_list, allow_large_step
    [perturbation]  matrix, offset, c_f          f(t, x) = matrix x + offset
    [operator]      kind, gain, mask, matrix, shift, c_A, L1, L2
    [set]           kind, lo/hi | center/radius | normals/offsets, rate, coupling
    [lure]          B, C, D, P, feedback, gain, L_F1, L_F2, beta1
    [example]       p, alpha, beta, gamma
    [lyapunov]      kind, Q, a, w, slack
    [output]        dir, trajectory, report

Every error is a :class:`~mmdi.errors.ConfigError` whose message starts
with the dotted key at fault.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .applications import LureSystem, SweepingScenario, lure_problem, sweeping_problem
from .errors import ConfigError
from .lyapunov import LyapunovPair, example_1, example_2
from .operators import LinearPSD, NormalCone, SignRelay, shift_operator, zero_operator
from .sets import Ball, ConvexSet, IntervalProduct, Polytope
from .solver import InclusionProblem

__all__ = ["KINDS", "RunPlan", "load_config", "parse_config", "build_plan"]

KINDS = ("generic", "sweeping", "lure", "builtin-example-1", "builtin-example-2")

SCHEMA: dict[str, set[str]] = {
    "problem": {"kind", "name", "t0", "x0", "T"},
    "solver": {"h", "refine", "h_list", "allow_large_step"},
    "perturbation": {"matrix", "offset", "c_f"},
    "operator": {"kind", "gain", "mask", "matrix", "shift", "c_A", "L1", "L2"},
    "set": {"kind", "lo", "hi", "center", "radius", "normals", "offsets", "rate", "coupling"},
    "lure": {"B", "C", "D", "P", "feedback", "gain", "L_F1", "L_F2", "beta1"},
    "example": {"p", "alpha", "beta", "gamma"},
    "lyapunov": {"kind", "Q", "a", "w", "slack"},
    "output": {"dir", "trajectory", "report"},
}


@dataclass
class RunPlan:
    name: str
    kind: str
    problem: InclusionProblem
    t0: float
    x0: np.ndarray
    h_list: list[float]
    pair: LyapunovPair | None = None
    slack: float | None = None
    allow_large_step: bool = False
    out_dir: Path = Path("out")
    trajectory_name: str = "trajectory.csv"
    report_name: str = "report.json"
    lure: LureSystem | None = None
    echo: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# typed getters
# ---------------------------------------------------------------------------

def _get(cfg, section, key, default=None, required=False):
    sec = cfg.get(section, {})
    if key not in sec:
        if required:
            raise ConfigError(f"{section}.{key}: required key missing")
        return default
    return sec[key]


def _num(cfg, section, key, default=None, *, required=False, positive=False, nonneg=False):
    v = _get(cfg, section, key, default, required)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{section}.{key}: expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(f"{section}.{key}: must be finite")
    if positive and not v > 0:
        raise ConfigError(f"{section}.{key}: must be > 0, got {v}")
    if nonneg and v < 0:
        raise ConfigError(f"{section}.{key}: must be >= 0, got {v}")
    return v


def _arr(cfg, section, key, default=None, *, ndim=1, required=False, allow_inf=False):
    v = _get(cfg, section, key, default, required)
    if v is None:
        return None
    try:
        a = np.array(v, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{section}.{key}: expected a numeric array") from None
    if ndim == 1 and a.ndim == 0:
        a = a.reshape(1)
    if ndim == 2 and a.ndim == 1 and a.size == 1:
        a = a.reshape(1, 1)
    if a.ndim != ndim:
        raise ConfigError(f"{section}.{key}: expected a {ndim}-d array, got shape {a.shape}")
    if np.isnan(a).any() or (not allow_inf and np.isinf(a).any()):
        raise ConfigError(f"{section}.{key}: entries must be finite numbers")
    return a


def _str(cfg, section, key, default=None, choices=None, required=False):
    v = _get(cfg, section, key, default, required)
    if v is None:
        return None
    if not isinstance(v, str):
        raise ConfigError(f"{section}.{key}: expected a string, got {v!r}")
    if choices is not None and v not in choices:
        raise ConfigError(f"{section}.{key}: must be one of {', '.join(choices)}; got {v!r}")
    return v


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def parse_config(text: str, source: str = "<string>") -> dict:
    try:
        cfg = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: invalid TOML ({exc})") from None
    validate_keys(cfg)
    return cfg


def load_config(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config: file not found: {p}")
    return parse_config(p.read_text(encoding="utf-8"), str(p))


def validate_keys(cfg: dict):
    for section, body in cfg.items():
        if section not in SCHEMA:
            raise ConfigError(f"{section}: unknown section")
        if not isinstance(body, dict):
            raise ConfigError(f"{section}: expected a table")
        for key in body:
            if key not in SCHEMA[section]:
                raise ConfigError(f"{section}.{key}: unknown key")


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def _affine_f(cfg, n):
    mat = _arr(cfg, "perturbation", "matrix", ndim=2)
    off = _arr(cfg, "perturbation", "offset")
    mat = np.zeros((n, n)) if mat is None else mat
    off = np.zeros(n) if off is None else off
    if mat.shape != (n, n):
        raise ConfigError(f"perturbation.matrix: expected shape {(n, n)}, got {mat.shape}")
    if off.shape != (n,):
        raise ConfigError(f"perturbation.offset: expected length {n}, got {off.size}")
    # |M x + b| <= max(|M|, |b|) (1 + |x|)
    auto = max(float(np.linalg.norm(mat, 2)), float(np.linalg.norm(off)), 1e-12)
    c_f = _num(cfg, "perturbation", "c_f", auto, positive=True)

    def f(t, x):
        return mat @ x + off

    return f, c_f


def _base_set(cfg, n) -> ConvexSet:
    kind = _str(cfg, "set", "kind", required=True, choices=("interval", "ball", "polytope"))
    try:
        if kind == "interval":
            lo = _arr(cfg, "set", "lo", required=True, allow_inf=True)
            hi = _arr(cfg, "set", "hi", required=True, allow_inf=True)
            out = IntervalProduct(lo, hi)
        elif kind == "ball":
            out = Ball(_arr(cfg, "set", "center", required=True),
                       _num(cfg, "set", "radius", required=True, nonneg=True))
        else:
            out = Polytope(_arr(cfg, "set", "normals", ndim=2, required=True),
                           _arr(cfg, "set", "offsets", required=True))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"set: {exc}") from None
    if out.dim != n:
        raise ConfigError(f"set: dimension {out.dim} does not match x0 dimension {n}")
    return out


def _translate(base: ConvexSet, shift: np.ndarray) -> ConvexSet:
    if isinstance(base, IntervalProduct):
        return IntervalProduct(base.lo + shift, base.hi + shift)
    if isinstance(base, Ball):
        return Ball(base.center + shift, base.radius)
    return Polytope(base.normals, base.offsets + base.normals @ shift)


def _moving_set(cfg, n):
    """``C(t, s) = C0 + t * rate + K s``; returns (set or map, L1, L2)."""
    base = _base_set(cfg, n)
    rate = _arr(cfg, "set", "rate")
    coupling = _get(cfg, "set", "coupling")
    rate = np.zeros(n) if rate is None else rate
    if rate.shape != (n,):
        raise ConfigError(f"set.rate: expected length {n}")
    if coupling is None:
        k = np.zeros((n, n))
    elif isinstance(coupling, (int, float)) and not isinstance(coupling, bool):
        k = float(coupling) * np.eye(n)
    else:
        k = _arr(cfg, "set", "coupling", ndim=2)
        if k.shape != (n, n):
            raise ConfigError(f"set.coupling: expected a scalar or an {n}x{n} matrix")
    L1 = float(np.linalg.norm(rate))
    L2 = float(np.linalg.norm(k, 2))
    if not np.any(rate) and not np.any(k):
        return base, 0.0, 0.0

    def cmap(t, s):
        s = np.zeros(n) if s is None else np.asarray(s, dtype=float)
        return _translate(base, t * rate + k @ s)

    return cmap, L1, L2


def _generic_operator(cfg, n):
    kind = _str(cfg, "operator", "kind", "zero",
                choices=("zero", "sign_relay", "linear_psd", "normal_cone"))
    over = {k: _num(cfg, "operator", k, nonneg=True) for k in ("c_A", "L1", "L2")}
    try:
        if kind == "zero":
            op = zero_operator(n)
        elif kind == "sign_relay":
            gain = _arr(cfg, "operator", "gain", [1.0])
            mask = _get(cfg, "operator", "mask")
            if mask is not None and (not isinstance(mask, list) or
                                     not all(isinstance(b, bool) for b in mask)):
                raise ConfigError("operator.mask: expected a list of booleans")
            op = SignRelay(gain, mask=mask, dim=n)
        elif kind == "linear_psd":
            mat = _arr(cfg, "operator", "matrix", ndim=2, required=True)
            if mat.shape != (n, n):
                raise ConfigError(f"operator.matrix: expected shape {(n, n)}")
            op = LinearPSD(mat)
        else:
            cset, L1, L2 = _moving_set(cfg, n)
            op = NormalCone(cset, dim=n, L1=L1, L2=L2)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"operator: {exc}") from None
    alpha = _num(cfg, "operator", "shift", 0.0)
    if alpha:
        if alpha <= -1:
            raise ConfigError(f"operator.shift: must be > -1, got {alpha}")
        op = shift_operator(op, alpha)
    for key, val in over.items():
        if val is not None:
            setattr(op, key, val)
    return op


def _pair(cfg, n):
    kind = _str(cfg, "lyapunov", "kind", "none", choices=("none", "quadratic", "builtin"))
    if kind == "none":
        return None
    if kind == "builtin":
        raise ConfigError("lyapunov.kind: 'builtin' is only available for built-in examples")
    q = _arr(cfg, "lyapunov", "Q", ndim=2)
    q = np.eye(n) if q is None else q
    if q.shape != (n, n) or not np.allclose(q, q.T):
        raise ConfigError(f"lyapunov.Q: expected a symmetric {n}x{n} matrix")
    a = _num(cfg, "lyapunov", "a", 0.0, nonneg=True)
    w = _num(cfg, "lyapunov", "w", 0.0, nonneg=True)

    def V(t, x):
        return 0.5 * float(x @ q @ x)

    def W(t, x):
        return w * float(x @ x)

    def prox(t, x):
        return [(0.0, q @ x)]

    return LyapunovPair(V, W, a, prox)


def build_plan(cfg: dict, *, scenario: str | None = None, h: float | None = None,
               refine: int | None = None, out: str | None = None,
               slack: float | None = None) -> RunPlan:
    """Turn a validated config (plus CLI overrides) into a runnable plan."""
    validate_keys(cfg)
    kind = scenario or _str(cfg, "problem", "kind", required=True, choices=KINDS)
    if scenario is not None:
        aliases = {"example-1": "builtin-example-1", "example-2": "builtin-example-2"}
        kind = aliases.get(scenario, scenario)
        if kind not in KINDS:
            raise ConfigError(f"--scenario: unknown scenario {scenario!r}")
    name = _str(cfg, "problem", "name", kind)
    lure_sys = None
    pair = None
    if kind.startswith("builtin"):
        if kind == "builtin-example-1":
            p = _num(cfg, "example", "p", 1.0)
            x0 = _arr(cfg, "problem", "x0", [1.0, 1.0, 0.5])
            T = _num(cfg, "problem", "T", 2.0, positive=True)
            try:
                sc = example_1(p, x0=x0, T=T)
            except ValueError as exc:
                raise ConfigError(f"example.p: {exc}") from None
        else:
            vals = {k: _num(cfg, "example", k, d) for k, d in
                    (("alpha", 1.0), ("beta", 0.5), ("gamma", 1.0))}
            x0 = _arr(cfg, "problem", "x0", [0.5, 0.5])
            T = _num(cfg, "problem", "T", 2.0, positive=True)
            try:
                sc = example_2(vals["alpha"], vals["beta"], vals["gamma"], x0=x0, T=T)
            except ValueError as exc:
                raise ConfigError(f"example: {exc}") from None
        if sc.x0.shape != (sc.problem.dim,):
            raise ConfigError(f"problem.x0: expected length {sc.problem.dim}")
        problem, x0, h_default = sc.problem, sc.x0, sc.h
        lk = _str(cfg, "lyapunov", "kind", "builtin", choices=("none", "quadratic", "builtin"))
        pair = sc.pair if lk == "builtin" else _pair(cfg, problem.dim)
        t0 = _num(cfg, "problem", "t0", 0.0)
    else:
        x0 = _arr(cfg, "problem", "x0", required=True)
        n = x0.size
        t0 = _num(cfg, "problem", "t0", 0.0)
        T = _num(cfg, "problem", "T", 1.0, positive=True)
        h_default = None
        try:
            if kind == "generic":
                f, c_f = _affine_f(cfg, n)
                problem = InclusionProblem(f, _generic_operator(cfg, n), c_f=c_f, T=T, name=name)
            elif kind == "sweeping":
                f, c_f = _affine_f(cfg, n)
                cset, L1, L2 = _moving_set(cfg, n)
                if L2 >= 1:
                    raise ConfigError(f"set.coupling: state Lipschitz constant {L2} must be < 1")
                problem = sweeping_problem(SweepingScenario(cset, f, c_f, L1, L2, T, n, name=name))
            else:
                lure_sys = _lure_system(cfg, n, T, name)
                problem = lure_problem(lure_sys)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{kind}: {exc}") from None
        pair = _pair(cfg, n)

    if h is None:
        h = _num(cfg, "solver", "h", h_default, positive=True)
    if h is None and _get(cfg, "solver", "h_list") is None:
        raise ConfigError("solver.h: required key missing")
    h_list = _get(cfg, "solver", "h_list")
    k = refine if refine is not None else _get(cfg, "solver", "refine", 0)
    if isinstance(k, bool) or not isinstance(k, int) or k < 0:
        raise ConfigError(f"solver.refine: expected an integer >= 0, got {k!r}")
    if k >= 2:
        hs = [h * 2.0 ** -i for i in range(k)]
    elif h_list is not None and refine is None:
        hs = [float(v) for v in _arr(cfg, "solver", "h_list")]
        if not hs or any(v <= 0 for v in hs) or any(b >= a for a, b in zip(hs, hs[1:])):
            raise ConfigError("solver.h_list: expected a nonempty strictly decreasing list of steps")
    else:
        hs = [h]
    slack = slack if slack is not None else _num(cfg, "lyapunov", "slack", nonneg=True)
    allow = _get(cfg, "solver", "allow_large_step", False)
    if not isinstance(allow, bool):
        raise ConfigError("solver.allow_large_step: expected a boolean")
    out_dir = Path(out if out is not None else _str(cfg, "output", "dir", "out"))
    return RunPlan(
        name=name, kind=kind, problem=problem, t0=float(t0), x0=np.asarray(x0, dtype=float),
        h_list=hs, pair=pair, slack=slack, allow_large_step=allow, out_dir=out_dir,
        trajectory_name=_str(cfg, "output", "trajectory", "trajectory.csv"),
        report_name=_str(cfg, "output", "report", "report.json"),
        lure=lure_sys, echo=cfg,
    )


def _lure_system(cfg, n, T, name) -> LureSystem:
    C = _arr(cfg, "lure", "C", ndim=2, required=True)
    m = C.shape[0]
    if C.shape[1] != n:
        raise ConfigError(f"lure.C: expected {n} columns, got {C.shape[1]}")
    B = _arr(cfg, "lure", "B", C.T.tolist(), ndim=2)
    D = _arr(cfg, "lure", "D", np.zeros((m, m)).tolist(), ndim=2)
    P = _arr(cfg, "lure", "P", ndim=2)
    fb = _str(cfg, "lure", "feedback", "sign_relay", choices=("sign_relay", "normal_cone"))
    if fb == "sign_relay":
        F = SignRelay(_arr(cfg, "lure", "gain", [1.0]), dim=m)
        lf1, lf2 = 0.0, 0.0
    else:
        cset, lf1, lf2 = _moving_set(cfg, m)
        F = NormalCone(cset, dim=m, L1=lf1, L2=lf2)
    g, c_f = _affine_f(cfg, n)
    return LureSystem(g, B, C, D, F, c_f=c_f, P=P,
                      L_F1=_num(cfg, "lure", "L_F1", lf1, nonneg=True),
                      L_F2=_num(cfg, "lure", "L_F2", lf2, nonneg=True),
                      beta1=_num(cfg, "lure", "beta1", nonneg=True), T=T, name=name)
