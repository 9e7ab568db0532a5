"""Time the compiled and numpy mask-sweep kernels on the same workload.

    python benchmarks/bench_kernels.py [--F 75] [--T 1000] [--K 100] [--repeat 3]
"""

import argparse
import time

import numpy as np

from bpnmf import mask
from bpnmf.model import GlobalDraw


def workload(F, T, K, seed=0):
    rng = np.random.default_rng(seed)
    g = GlobalDraw(W=rng.gamma(0.5, 2.0, (F, K)), H=rng.gamma(5.0, 0.2, (K, T)), pi=rng.beta(0.5, 5.0, K))
    s = (rng.random((K, T)) < 0.2).astype(np.int8)
    x = rng.poisson(g.W @ (g.H * s))
    return x, g, s


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--F", type=int, default=75)
    p.add_argument("--T", type=int, default=1000)
    p.add_argument("--K", type=int, default=100)
    p.add_argument("--sweeps", type=int, default=2)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--threads", type=int, default=1)
    args = p.parse_args()

    x, g, s = workload(args.F, args.T, args.K)
    print(f"F={args.F} T={args.T} K={args.K} sweeps={args.sweeps} threads={args.threads}")
    results = {}
    for name in sorted(mask.KERNELS):
        sec, out = best_of(lambda: mask.sweep_mask(x, g, s, seed=1, block=1, n_sweeps=args.sweeps,
                                                   threads=args.threads, kernel=name), args.repeat)
        results[name] = (sec, out)
        print(f"{name:>9}: {sec * 1e3:9.1f} ms per mask sweep")
    if len(results) == 2:
        (tc, mc), (tp, mp) = results["compiled"], results["python"]
        print(f"  speedup: {tp / tc:.1f}x, identical masks: {np.array_equal(mc, mp)}")
    else:
        print("  compiled kernel not built; only the fallback was timed")


if __name__ == "__main__":
    main()
