"""Benchmark: numba kernels against their pure-numpy counterparts.

Both implementations live side by side in ``mmdi._kernels``; this script
times each pair on the same inputs, checks they agree, and prints a table.
A warm-up call is made first so JIT compilation is not timed.

Run:

    python3 benchmarks/bench_kernels.py [--repeats 5] [--scale 1.0]
"""

import argparse
import statistics
import time

import numpy as np

from mmdi import _kernels


def make_inputs(scale: float, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    n_pair = int(1500 * scale)
    n_hyp = int(1500 * scale)
    n_scal = int(200_000 * scale)
    lo = rng.uniform(-2, 0, n_scal)
    return {
        "dis_pair_max": [rng.normal(size=(n_pair, 2)) for _ in range(4)],
        "hypo_pair_max": [rng.normal(size=(n_hyp, 3)), rng.normal(size=(n_hyp, 3)), 1e-24],
        "relay_enumerate": [rng.uniform(-3, 3, n_scal), rng.choice([0.0, 0.5, 1.0], n_scal),
                            np.ones(n_scal)],
        "interval_enumerate": [rng.uniform(-3, 3, n_scal), rng.choice([0.0, 0.5, 1.0], n_scal),
                               lo, lo + rng.uniform(0, 2, n_scal)],
        "relay_forward_backward": [rng.uniform(-3, 3, n_scal // 20), rng.choice([0.5, 1.0], n_scal // 20),
                                   np.ones(n_scal // 20), 1e-14, 20000],
    }


def timed(fn, args, repeats):
    out = []
    for _ in range(repeats):
        t = time.perf_counter()
        fn(*args)
        out.append(time.perf_counter() - t)
    return statistics.median(out)


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(np.asarray(a, float), np.asarray(b, float), rtol=1e-12, atol=1e-12, equal_nan=True)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--scale", type=float, default=1.0, help="multiply problem sizes")
    args = p.parse_args(argv)

    if not _kernels.NUMBA_AVAILABLE:
        print("numba is not installed; only the numpy path can be timed")
    inputs = make_inputs(args.scale)
    print(f"{'kernel':<24}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}  agree")
    for name, kargs in inputs.items():
        np_fn = _kernels.NUMPY_KERNELS[name]
        t_np = timed(np_fn, kargs, args.repeats)
        if _kernels.NUMBA_AVAILABLE:
            nb_fn = _kernels.NUMBA_KERNELS[name]
            nb_fn(*kargs)  # compile
            t_nb = timed(nb_fn, kargs, args.repeats)
            agree = _same(np_fn(*kargs), nb_fn(*kargs))
            print(f"{name:<24}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>9.1f}x  {agree}")
        else:
            print(f"{name:<24}{1e3 * t_np:>12.2f}{'-':>12}{'-':>10}  -")


if __name__ == "__main__":
    main()
