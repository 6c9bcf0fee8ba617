"""Compare the compiled and pure-Python kernels on a batched kernel-eigenvalue sweep.

    python3 benchmarks/bench_kernel.py [--dim 8] [--points 2000] [--repeat 3]
"""
import argparse
import timeit

import numpy as np

from qcert import numeric_kernel as nk


def workload(dim, points, seed=0):
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(points, dim))
    J = rng.normal(size=(points, dim, dim))
    return G, J


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--points", type=int, default=2000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    G, J = workload(args.dim, args.points)
    results = {}
    for name in sorted(nk.available_backends()):
        previous = nk.set_backend(name)
        try:
            out = nk.kernel_max_eig(G, J, 1e-8)
            best = min(timeit.repeat(lambda: nk.kernel_max_eig(G, J, 1e-8), number=1, repeat=args.repeat))
        finally:
            nk.set_backend(previous)
        results[name] = (best, out)
        print(f"{name:>8}: {best * 1e3:9.2f} ms for {args.points} points, n = {args.dim}")
    if len(results) == 2:
        (ta, a), (tb, b) = results["python"], results["cython"]
        print(f"speed-up {ta / tb:.1f}x; max |difference| {np.max(np.abs(a - b)):.3g}")
    else:
        print("compiled kernel not built; only the Python fallback was timed")


if __name__ == "__main__":
    main()
