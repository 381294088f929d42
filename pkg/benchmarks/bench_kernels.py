"""Timing of the numba and numpy kernel paths.

Run with ``python3 benchmarks/bench_kernels.py [--n 200000] [--repeat 5]``.
Both implementations are called directly from ``kernels.IMPLEMENTATIONS``,
so the ``KPLANE_USE_NUMBA`` flag does not matter here; the end-to-end line
times a small Drury evaluation through whichever path the flag selects.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from kplane import kernels


def _cases(n, rng):
    x2 = rng.normal(size=(n, 2))
    x3 = rng.normal(size=(n, 3))
    L = np.eye(3) + 0.3 * rng.normal(size=(3, 3))
    grid = rng.normal(size=(64, 64))
    lo, hi = np.array([-1.0, -1.0]), np.array([1.0, 1.0])
    m = max(n // 10, 1)
    return {
        "gauss_legendre": (64,),
        "extremal_values": (x3, L, rng.normal(size=3), 1.3, 1.5),
        "bump_values": (x2, np.zeros(2), 1.2, 4.0, 1.0),
        "multilinear": (grid, lo, hi, x2),
        "gram_volumes": (rng.normal(size=(m, 3, 3)),),
        "lines_through": (rng.normal(size=(m, 3)), rng.normal(size=(m, 3))),
    }


def bench(n=200_000, repeat=5, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for name, args in _cases(n, rng).items():
        py, nb = kernels.IMPLEMENTATIONS[name]
        nb(*args)  # compile outside the timing
        t_py = min(timeit.repeat(lambda: py(*args), number=1, repeat=repeat))
        t_nb = min(timeit.repeat(lambda: nb(*args), number=1, repeat=repeat))
        rows.append((name, t_py, t_nb))
    return rows


_END_TO_END = """
import time
from kplane.geometry import Dims
from kplane.quadrature import Quadrature
from kplane.suites import drury_pairs
from kplane.transform import drury_sides
f, F = drury_pairs(2, 1)[0]
q = Quadrature(kind="monte_carlo", samples=200_000, seed=1)
drury_sides(f, F, Dims(2, 1), q)
t = time.perf_counter(); drury_sides(f, F, Dims(2, 1), q); print(time.perf_counter() - t)
"""


def end_to_end(flag):
    env = dict(os.environ, KPLANE_USE_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", _END_TO_END], env=env, capture_output=True,
                         text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000, help="points per kernel call")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args(argv)
    print(f"{'kernel':<18}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, t_py, t_nb in bench(args.n, args.repeat):
        print(f"{name:<18}{1e3 * t_py:12.3f}{1e3 * t_nb:12.3f}{t_py / t_nb:10.2f}")
    if not args.skip_end_to_end:
        t0, t1 = end_to_end("0"), end_to_end("1")
        print(f"{'drury (2e5 MC)':<18}{1e3 * t0:12.3f}{1e3 * t1:12.3f}{t0 / t1:10.2f}")


if __name__ == "__main__":
    main()
