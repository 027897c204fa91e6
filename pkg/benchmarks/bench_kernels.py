"""Compiled vs numpy kernel timings.

    python3 benchmarks/bench_kernels.py [--paths 2048] [--steps 4096] [--repeat 3]

Each case runs both backends on the same keys, checks that the outputs agree
(bit for bit except the log-sum-exp normalizer) and prints the best of
``--repeat`` wall-clock times per backend and per simulated step.
"""

import argparse
import time

import numpy as np

from parisian_ruin import kernels, rng


def _time(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(paths, steps):
    n, M = paths, steps
    dt = 1.0 / M
    h = M // 16
    yield "normals", n * M, lambda b: kernels.normals(
        rng.path_keys(1, 1, 0, n), np.arange(M, dtype=np.uint64), backend=b)
    base = dict(seed=3, stream=1, n_paths=n, M=M, dt=dt, block=n)
    yield "sup 1-D", n * M, lambda b: kernels.run_paths(**base, drift=(1.0, 0.0), sup_limit=(M, 0),
                                                        backend=b)
    yield "ratio 2-D", 2 * n * M, lambda b: kernels.run_paths(
        **base, ndim=2, rho=0.1, drift=(0.0, 0.0), h=(h, h), levels=[[M - h], [M - h]],
        backend=b)
    yield "constant 1-D", n * M, lambda b: kernels.run_paths(
        **base, drift=(1.0, 0.0), prefix=h, h=(h, 0), levels=[[M // 4 - h, M // 2 - h, M - h], [0, 0, 0]],
        theta=(1.0, 0.0), backend=b)


def _agree(a, b):
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    fields = ("sup", "win", "bend", "kstop", "bstop")
    ok = all(np.array_equal(getattr(a, f), getattr(b, f), equal_nan=True) for f in fields)
    return ok and np.allclose(a.lse, b.lse)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=2048)
    ap.add_argument("--steps", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    have_c = kernels.BACKEND == "compiled"
    print(f"paths={args.paths} steps={args.steps} compiled={'yes' if have_c else 'no'}")
    print(f"{'case':<14}{'numpy s':>10}{'compiled s':>12}{'ns/normal np':>14}{'ns/normal c':>13}{'speedup':>9}  same")
    for name, units, fn in cases(args.paths, args.steps):
        tp, op = _time(lambda: fn("python"), args.repeat)
        if have_c:
            tc, oc = _time(lambda: fn("compiled"), args.repeat)
            same = "yes" if _agree(op, oc) else "NO"
            print(f"{name:<14}{tp:>10.3f}{tc:>12.3f}{1e9 * tp / units:>14.2f}{1e9 * tc / units:>13.2f}"
                  f"{tp / tc:>9.1f}  {same}")
        else:
            print(f"{name:<14}{tp:>10.3f}{'-':>12}{1e9 * tp / units:>14.2f}{'-':>13}{'-':>9}  -")


if __name__ == "__main__":
    main()
