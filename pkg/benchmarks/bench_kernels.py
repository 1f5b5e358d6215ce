"""Time the numba and numpy backends of the solver kernels.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0] [--json out.json]

Each kernel runs once per backend before timing so JIT compilation is not
counted.  Both backends solve the same instance; the table also reports the
largest difference between their solutions.
"""
import argparse
import json
import statistics
import sys
import time

import numpy as np

from graphtopo import _accel, kernels
from graphtopo.core import edge_index


def _psd(rng, n, t):
    a = rng.standard_normal((n, t))
    return a @ a.T / t


def group_bcd_case(rng, scale):
    n = int(40 * scale)
    g = _psd(rng, n, 2 * n)
    c = rng.standard_normal(n)
    eigs = kernels.group_eigs(g, 4)
    return lambda b: kernels.group_bcd(g, c, 0.05, gsize=4, tol=1e-10, max_iter=2000, eigs=eigs,
                                       backend=b)[0]


def factored_case(rng, scale):
    groups, T, d = int(12 * scale), 200, 6
    C = np.empty((groups, T, d))
    s = np.empty((groups, d))
    for k in range(groups):
        q, r = np.linalg.qr(rng.standard_normal((T, d)))
        C[k] = q * np.abs(np.diag(r))
        s[k] = np.diag(r) ** 2
    y = rng.standard_normal(T)
    return lambda b: kernels.factored_group_bcd(C, s, y, 0.5, tol=1e-10, max_iter=2000,
                                                backend=b)[0]


def admm_case(rng, scale):
    n = int(150 * scale)
    vals, vecs = np.linalg.eigh(_psd(rng, n, 3 * n))
    c = rng.standard_normal(n)
    return lambda b: kernels.admm_lasso(vals, vecs, c, 0.1, tol=1e-10, max_iter=5000,
                                        backend=b)[0]


def fista_case(rng, scale):
    n = int(30 * scale)
    rows, cols = edge_index(n)
    y = rng.standard_normal((n, 20))
    e = np.sum((y[rows] - y[cols]) ** 2, axis=1)
    lam0 = np.zeros(n)
    return lambda b: kernels.fista_dual(e, rows, cols, n, 1.0, 1.0, lam0, 1e-10, 5000,
                                        backend=b)[0]


CASES = {
    "group_bcd": group_bcd_case,
    "factored_group_bcd": factored_case,
    "admm_lasso": admm_case,
    "fista_dual": fista_case,
}


def _time(fn, repeat):
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return statistics.median(out)


def run(repeat=5, scale=1.0, seed=0):
    rows = []
    for name, make in CASES.items():
        fn = make(np.random.default_rng(seed), scale)
        ref = fn("numpy")
        fast = fn("numba")  # warm-up compiles the kernel
        row = {"kernel": name,
               "numpy_s": _time(lambda: fn("numpy"), repeat),
               "numba_s": _time(lambda: fn("numba"), repeat) if _accel.HAS_NUMBA else None,
               "max_abs_diff": float(np.max(np.abs(np.asarray(ref) - np.asarray(fast))))}
        row["speedup"] = row["numpy_s"] / row["numba_s"] if row["numba_s"] else None
        rows.append(row)
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--scale", type=float, default=1.0, help="multiplies the problem sizes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", help="also write the results to this file")
    args = p.parse_args(argv)
    if not _accel.HAS_NUMBA:
        print("numba is not installed; only the numpy backend is timed", file=sys.stderr)
    rows = run(args.repeat, args.scale, args.seed)
    print(f"{'kernel':<20}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}{'max diff':>12}")
    for r in rows:
        nb = f"{r['numba_s']:12.4f}" if r["numba_s"] else f"{'-':>12}"
        sp = f"{r['speedup']:10.1f}" if r["speedup"] else f"{'-':>10}"
        print(f"{r['kernel']:<20}{r['numpy_s']:12.4f}{nb}{sp}{r['max_abs_diff']:12.2e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
