"""Compare the numba and numpy kernel backends on the hot paths.

    python benchmarks/bench_kernels.py [--repeat 3] [--quick]

Each case runs once per backend to warm up (numba compiles on first call),
then ``--repeat`` times; the best wall time is reported. Outputs of the two
backends are compared and a mismatch aborts the run.
"""

import argparse
import time
from fractions import Fraction

import numpy as np

from heavyset import kernels
from heavyset.exact import parse
from heavyset.groups import PAdicSpace, TorusSpace
from heavyset.heavy import heavy_grid
from heavyset.targets import IntervalUnion, PAdicBallUnion, BoxUnion


def torus_case(R, n):
    T1 = TorusSpace(1)
    A = IntervalUnion([(0, parse("(sqrt5-1)/2"))])
    g = T1.point("sqrt5-2")
    return f"torus sweep R={R} n={n}", lambda b: heavy_grid(T1, A, A.measure(), g, n, R,
                                                            backend=b).status


def torus2_case(R, n):
    T2 = TorusSpace(2)
    A = BoxUnion(T2, [[(0, Fraction(1, 2)), (0, Fraction(1, 3))]])
    g = T2.point("sqrt2-1", "sqrt3-1")
    return f"2-torus sweep R={R} n={n}", lambda b: heavy_grid(T2, A, A.measure(), g, n, R,
                                                              backend=b).status


def padic_case(depth, n):
    Z2 = PAdicSpace(2, depth)
    A = PAdicBallUnion(Z2, [(0, Fraction(1, 2)), (1, Fraction(1, 8))])
    g = Z2.point(3)
    return (f"2-adic sweep 2^{depth} n={n}",
            lambda b: heavy_grid(Z2, A, A.measure(), g, n, 2 ** depth, backend=b).status)


def packing_case(R, T, density):
    rng = np.random.default_rng(0)
    pos = np.sort(rng.choice(R, size=int(R * density), replace=False)).astype(np.int64)
    return (f"circle packing R={R} T={T}",
            lambda b: np.array([kernels.circle_packing(pos, R, T, name=b)]))


def best_time(fn, backend, repeat):
    fn(backend)
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn(backend)
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="small sizes only")
    args = ap.parse_args()
    if kernels.numba_backend is None:
        raise SystemExit("numba is not installed; nothing to compare")
    scale = 10 if args.quick else 1
    cases = [
        torus_case(10 ** 5 // scale, 1000),
        torus_case(10 ** 6 // scale, 100),
        torus2_case(400 // (3 if args.quick else 1), 200),
        padic_case(16 if args.quick else 20, 500),
        packing_case(10 ** 7 // scale, 2000, 0.3),
    ]
    print(f"{'case':<32}{'numba s':>10}{'numpy s':>10}{'speedup':>9}")
    for name, fn in cases:
        t_nb, out_nb = best_time(fn, "numba", args.repeat)
        t_np, out_np = best_time(fn, "numpy", args.repeat)
        if not np.array_equal(out_nb, out_np):
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:<32}{t_nb:>10.4f}{t_np:>10.4f}{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
