"""Benchmark the numpy and numba kernel backends against each other.

Both implementations are always importable (``*_np`` / ``*_nb``), so the
comparison runs regardless of which backend the package dispatched to.

    python3 benchmarks/bench_kernels.py [--sizes 10000,1000000] [--repeats 30]
"""

import argparse
import time

import numpy as np

from driftkit import kernels


def timeit(fn, *args, repeats: int = 30) -> float:
    fn(*args)  # warm up (first numba call compiles)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="10000,100000,1000000")
    ap.add_argument("--repeats", type=int, default=30)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    print(f"active backend: {kernels.backend()}")
    print(f"{'kernel':<14} {'n':>9} {'numpy':>12} {'numba':>12} {'speedup':>8}")
    rng = np.random.default_rng(0)
    for n in sizes:
        z = rng.normal(size=n) * 5.0
        y = (rng.random(n) < 0.5).astype(np.float64)
        g = rng.normal(size=n)
        cases = [
            ("sigmoid", kernels.sigmoid_np, kernels.sigmoid_nb, (z,)),
            ("loss_forward", kernels.loss_forward_np, kernels.loss_forward_nb,
             (z, y, 2.5, 0.5, 0.1)),
            ("loss_grad", kernels.loss_grad_np, kernels.loss_grad_nb,
             (z, y, 2.5, 0.5, 0.1)),
        ]
        for name, f_np, f_nb, fargs in cases:
            t_np = timeit(f_np, *fargs, repeats=args.repeats)
            t_nb = timeit(f_nb, *fargs, repeats=args.repeats)
            print(f"{name:<14} {n:>9} {t_np * 1e3:>10.3f}ms {t_nb * 1e3:>10.3f}ms "
                  f"{t_np / t_nb:>7.2f}x")

        # adamw mutates state; rebuild fresh buffers per backend
        def bench_adamw(fn):
            p = rng.normal(size=n).copy()
            m = np.zeros(n)
            v = np.zeros(n)
            fn(p, g, m, v, 0.1, 0.001, 1e-4, 0.9, 0.999, 1e-8, 1e-4)
            best = float("inf")
            for t in range(2, args.repeats + 2):
                c1 = 1.0 - 0.9**t
                c2 = 1.0 - 0.999**t
                t0 = time.perf_counter()
                fn(p, g, m, v, c1, c2, 1e-4, 0.9, 0.999, 1e-8, 1e-4)
                best = min(best, time.perf_counter() - t0)
            return best

        t_np = bench_adamw(kernels.adamw_update_np)
        t_nb = bench_adamw(kernels.adamw_update_nb)
        print(f"{'adamw_update':<14} {n:>9} {t_np * 1e3:>10.3f}ms {t_nb * 1e3:>10.3f}ms "
              f"{t_np / t_nb:>7.2f}x")


if __name__ == "__main__":
    main()
