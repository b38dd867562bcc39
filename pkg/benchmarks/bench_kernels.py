"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--rows 100000] [--n 64] [--repeat 3] [--cell]

Each kernel runs on identical inputs in both backends; outputs are compared
before timings are reported.  ``--cell`` also times one full harness cell per
backend in a subprocess (the backend is fixed at import).
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from ndasnr._backend import get_kernels


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def kernel_cases(k, rows, n):
    sigma = (1.0 / 3.0) ** 0.5
    mu = (2.0 / 3.0) ** 0.5
    keys = k.trial_keys(0x5EED, 0, rows)
    y = k.generate(keys, n, mu, sigma, 0.5)
    _, m2, _, a = k.batch_moments(y)
    return {
        "generate": lambda: k.generate(keys, n, mu, sigma, 0.5),
        "moments": lambda: k.batch_moments(y),
        "ml(K=10)": lambda: k.batch_ml(y, m2, a, 10, 1e-9),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(same(u, v) for u, v in zip(a, b))
    if a.dtype.kind == "f":
        return np.allclose(a, b, rtol=1e-12, atol=0)
    return np.array_equal(a, b)


CELL_SNIPPET = (
    "import time;from ndasnr.harness import CellConfig, run_cell;"
    "t=time.perf_counter();run_cell(CellConfig(-2.0,{n},{rows},master_seed=1),workers=1);"
    "print(time.perf_counter()-t)"
)


def time_cell(backend, rows, n):
    env = dict(os.environ, NDASNR_BACKEND=backend)
    out = subprocess.run(
        [sys.executable, "-c", CELL_SNIPPET.format(n=n, rows=rows)],
        env=env, check=True, capture_output=True, text=True,
    )
    return float(out.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=100_000)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--cell", action="store_true", help="also time a full harness cell")
    args = ap.parse_args(argv)

    try:
        cy = get_kernels("cython")
    except ImportError:
        sys.exit("compiled extension not built; run: python3 setup.py build_ext --inplace")
    py = get_kernels("python")

    cases_cy = kernel_cases(cy, args.rows, args.n)
    cases_py = kernel_cases(py, args.rows, args.n)
    print(f"rows={args.rows} n={args.n} best of {args.repeat}")
    print(f"{'kernel':<10} {'cython s':>10} {'python s':>10} {'speedup':>8}  match")
    for name in cases_cy:
        tc, oc = best_of(cases_cy[name], args.repeat)
        tp, op = best_of(cases_py[name], args.repeat)
        print(f"{name:<10} {tc:10.4f} {tp:10.4f} {tp / tc:8.1f}  {same(oc, op)}")

    if args.cell:
        tc = time_cell("cython", args.rows, args.n)
        tp = time_cell("python", args.rows, args.n)
        print(f"{'cell':<10} {tc:10.4f} {tp:10.4f} {tp / tc:8.1f}  -")


if __name__ == "__main__":
    main()
