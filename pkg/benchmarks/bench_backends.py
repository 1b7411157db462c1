#!/usr/bin/env python3
"""Benchmark the numba-compiled hot kernels against the numpy fallbacks.

Runs the SMO dual solver and the k-means Lloyd sweep on realistic problem
sizes through both implementations and prints a timing table. The two SMO
paths must produce bit-identical multipliers; that is asserted here too.

Usage:
    python benchmarks/bench_backends.py [--n 1500] [--repeat 3]

The active default backend is whatever `pricegrid.BACKEND` reports
(controlled by the PRICEGRID_BACKEND environment variable); this script
calls both implementations directly regardless.
"""

import argparse
import time

import numpy as np

from pricegrid import _accel
from pricegrid.svm import GramPool, KernelSpec
from pricegrid.svm.smo import _bounds, _lattice


def make_problem(n, dim, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, dim))
    w = rng.normal(size=dim)
    t = X @ w / np.sqrt(dim) + rng.normal(scale=0.8, size=n)
    y = np.where(t > np.median(t), 1.0, -1.0)
    K = GramPool(X).kernel(KernelSpec("rbf", gamma=0.05))
    return K, y


def time_call(fn, args, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_smo(n, repeat):
    K, y = make_problem(n, 40, seed=1)
    q, cp, cn = _lattice(10.0, 10.0)
    lo, up = _bounds(y, cp, cn)
    args = (K, y, lo, up, q, 1e-3, 10**7)
    if _accel._HAS_NUMBA:
        _accel._smo_loop_nb(*args)  # compile before timing
        t_nb, r_nb = time_call(_accel._smo_loop_nb, args, repeat)
    else:
        t_nb = r_nb = None
    t_np, r_np = time_call(_accel._smo_loop_np, args, repeat)
    if r_nb is not None:
        assert np.array_equal(r_nb[0], r_np[0]), "backends disagree on nu"
        assert r_nb[2] == r_np[2], "backends disagree on iteration count"
    iters = r_np[2]
    return t_nb, t_np, f"n={n}, {iters} iterations"


def bench_lloyd(n, repeat):
    rng = np.random.default_rng(2)
    hubs = rng.uniform(-40, 40, size=(6, 2))
    points = hubs[rng.integers(6, size=n)] + rng.normal(0, 1.5, size=(n, 2))
    init = points[rng.choice(n, size=6, replace=False)]
    args = (points, init, 300)
    if _accel._HAS_NUMBA:
        _accel._lloyd_nb(*args)
        t_nb, r_nb = time_call(_accel._lloyd_nb, args, repeat)
    else:
        t_nb = r_nb = None
    t_np, r_np = time_call(_accel._lloyd_np, args, repeat)
    if r_nb is not None:
        assert np.array_equal(r_nb[1], r_np[1]), "backends disagree on labels"
    return t_nb, t_np, f"n={n}, k=6, {r_np[3]} sweeps"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=1500, help="problem size")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    rows = [
        ("smo_loop", *bench_smo(args.n, args.repeat)),
        ("lloyd", *bench_lloyd(args.n * 3, args.repeat)),
    ]
    print(f"numba available: {_accel._HAS_NUMBA} (active backend: {_accel.BACKEND})")
    print(f"{'kernel':<10} {'numba':>10} {'numpy':>10} {'speedup':>8}  notes")
    for name, t_nb, t_np, notes in rows:
        nb = f"{t_nb * 1e3:8.1f}ms" if t_nb is not None else "       -"
        ratio = f"{t_np / t_nb:7.2f}x" if t_nb else "       -"
        print(f"{name:<10} {nb:>10} {t_np * 1e3:8.1f}ms {ratio:>8}  {notes}")


if __name__ == "__main__":
    main()
