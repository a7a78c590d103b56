"""Command-line entry point: ``mmdi run`` and ``mmdi scenarios``.

Exit codes: 0 pass, 1 input error, 2 criterion failure, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from .applications import check_assumptions
from .config import KINDS, RunPlan, build_plan, load_config
from .errors import ConfigError, InadmissibleError, SolverError, StepSizeError
from .lyapunov import LyapunovPair, evaluate_pair_decay
from .solver import Trajectory, admissible, convergence_study, solve

__all__ = ["main", "run", "emit_trajectory", "EXIT_OK", "EXIT_INPUT", "EXIT_CRITERION", "EXIT_SOLVER"]

log = logging.getLogger("mmdi")

EXIT_OK, EXIT_INPUT, EXIT_CRITERION, EXIT_SOLVER = 0, 1, 2, 3
RESIDUAL_TOL = 1e-8


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_trajectory(traj: Trajectory, pair: LyapunovPair | None, path) -> Path:
    """Write ``traj`` as CSV; one row per grid point, ``repr`` floats.

    The speed column holds the outgoing difference quotient; the last row
    repeats the previous one. Without a pair the Lyapunov columns are
    omitted. ``V``/``W`` are ``nan`` outside ``dom V``.
    """
    path = Path(path)
    n = traj.states.shape[1]
    cols = ["t"] + [f"x_{k + 1}" for k in range(n)] + ["speed"]
    speeds = traj.speeds
    speeds = np.append(speeds, speeds[-1]) if speeds.size else np.zeros(1)
    extra = None
    if pair is not None:
        cols += ["V", "W", "lyap_composite"]
        rows = len(traj.times)
        v = np.full(rows, np.nan)
        w = np.full(rows, np.nan)
        comp = np.full(rows, np.nan)
        rep = evaluate_pair_decay(traj, pair, slack=0.0)
        k = rep.values.size
        v[:k] = rep.values
        comp[:k] = rep.composite
        for i in range(k):
            w[i] = pair.W(traj.times[i], traj.states[i])
        extra = (v, w, comp)
    lines = [",".join(cols)]
    for i, t in enumerate(traj.times):
        vals = [float(t), *map(float, traj.states[i]), float(speeds[i])]
        if extra is not None:
            vals += [float(e[i]) for e in extra]
        lines.append(",".join(repr(v) for v in vals))
    _atomic_write(path, "\n".join(lines) + "\n")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def run(plan: RunPlan, *, seed: int = 0) -> tuple[int, dict]:
    """Execute ``plan``; returns ``(exit_code, report)`` and writes both files."""
    timings: dict[str, float] = {}
    report: dict = {"scenario": {"name": plan.name, "kind": plan.kind, "t0": plan.t0,
                                 "x0": plan.x0, "T": plan.problem.T, "h_list": plan.h_list,
                                 "seed": seed, "config": plan.echo}}
    traj_path = plan.out_dir / plan.trajectory_name
    report_path = plan.out_dir / plan.report_name

    if not admissible(plan.problem, plan.t0, plan.x0):
        raise InadmissibleError(f"problem.x0: {plan.x0.tolist()} is not admissible at t0={plan.t0} "
                                "(outside the domain of the operator)")

    if plan.lure is not None:
        t = time.perf_counter()
        report["assumptions"] = check_assumptions(plan.lure, seed=seed).as_dict()
        timings["assumptions"] = time.perf_counter() - t

    t = time.perf_counter()
    if len(plan.h_list) > 1:
        study = convergence_study(plan.problem, plan.t0, plan.x0, plan.h_list,
                                  allow_large_step=plan.allow_large_step)
        traj = study.trajectories[-1]
        report["convergence"] = {
            "rows": [{"h_coarse": a, "h_fine": b, "gap": g}
                     for a, b, g in zip(study.h_list, study.h_list[1:], study.gaps)],
            "ratios": study.ratios, "monotone": study.monotone,
        }
        max_res = max(float(np.max(tr.residuals, initial=0.0)) for tr in study.trajectories)
    else:
        traj = solve(plan.problem, plan.t0, plan.x0, plan.h_list[0],
                     allow_large_step=plan.allow_large_step)
        max_res = float(np.max(traj.residuals, initial=0.0))
    timings["solve"] = time.perf_counter() - t

    ok = max_res <= RESIDUAL_TOL
    report["residual"] = {"max": max_res, "tol": RESIDUAL_TOL, "pass": ok}
    if plan.pair is not None:
        t = time.perf_counter()
        dec = evaluate_pair_decay(traj, plan.pair, plan.slack)
        timings["decay"] = time.perf_counter() - t
        report["decay"] = {"V0": dec.V0, "slack": dec.slack, "max_increment": dec.max_increment,
                           "max_excess": dec.max_excess, "first_exit": dec.first_exit,
                           "pass": dec.verdict}
        ok = ok and dec.verdict

    t = time.perf_counter()
    emit_trajectory(traj, plan.pair, traj_path)
    timings["write"] = time.perf_counter() - t
    report["trajectory"] = str(traj_path)
    report["timings"] = timings
    code = EXIT_OK if ok else EXIT_CRITERION
    report["verdict"] = "pass" if ok else "fail"
    report["exit_code"] = code
    _atomic_write(report_path, json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    return code, report


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmdi", description="Catching-up solver for state-dependent "
                                "maximal monotone differential inclusions.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario file or a built-in scenario")
    r.add_argument("config", nargs="?", help="TOML scenario file")
    r.add_argument("--scenario", help="built-in scenario name (see `mmdi scenarios`)")
    r.add_argument("--h", type=float, help="step size (overrides solver.h)")
    r.add_argument("--refine", type=int, help="run k step sizes h, h/2, ..., h/2^(k-1)")
    r.add_argument("--out", help="output directory")
    r.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
    r.add_argument("--slack", type=float, help="decay slack (default 5h)")
    r.add_argument("-v", "--verbose", action="store_true")
    sub.add_parser("scenarios", help="list built-in scenario names")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "scenarios":
        for k in KINDS:
            if k.startswith("builtin"):
                print(k)
        return EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.seed < 0 or args.seed >= 2 ** 64:
            raise ConfigError("--seed: expected an unsigned 64-bit integer")
        if args.h is not None and not args.h > 0:
            raise ConfigError("--h: must be > 0")
        if args.slack is not None and not args.slack >= 0:
            raise ConfigError("--slack: must be >= 0")
        if args.config is None and args.scenario is None:
            raise ConfigError("config: give a scenario file or --scenario NAME")
        cfg = load_config(args.config) if args.config else {}
        plan = build_plan(cfg, scenario=args.scenario, h=args.h, refine=args.refine,
                          out=args.out, slack=args.slack)
        code, rep = run(plan, seed=args.seed)
    except (ConfigError, InadmissibleError, StepSizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    summary = f"{plan.name}: {rep['verdict']} (max residual {rep['residual']['max']:.3g}"
    if "decay" in rep:
        summary += f", decay {'pass' if rep['decay']['pass'] else 'fail'}"
    if "convergence" in rep:
        summary += f", {len(rep['convergence']['rows'])} gap rows"
    print(summary + f") -> {rep['trajectory']}")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
