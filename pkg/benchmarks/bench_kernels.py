"""Compare the numba and numpy polar kernels.

Usage: python benchmarks/bench_kernels.py [--m 10] [--list 16] [--reps 20]

Both backends decode the same channel outputs; the script checks that the
decisions agree and prints the mean time per call.
"""
import argparse
import time

import numpy as np

from lowcap.channels import BEC, RngStream, transmit
from lowcap.polar import construct, encode, get_kernels, saturate_llrs


def timeit(fn, reps):
    fn()  # warm up (and compile)
    t = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t) / reps


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=10)
    ap.add_argument("--k", type=int, default=40)
    ap.add_argument("--list", dest="list_size", type=int, default=16)
    ap.add_argument("--epsilon", type=float, default=0.95)
    ap.add_argument("--reps", type=int, default=20)
    args = ap.parse_args()

    n = 1 << args.m
    spec = construct(BEC(args.epsilon), args.m, args.k + 6, crc_len=6)
    gen = RngStream(2024, 0).generator()
    payload = gen.integers(0, 2, spec.k_payload, dtype=np.uint8)
    y = saturate_llrs(transmit(BEC(args.epsilon), encode(spec, payload), gen))
    frozen = spec.frozen_mask
    u = gen.integers(0, 2, n, dtype=np.uint8)

    nb, npk = get_kernels("numba"), get_kernels("numpy")
    np.testing.assert_array_equal(nb.polar_transform(u), npk.polar_transform(u))
    np.testing.assert_array_equal(nb.sc_decode(y, frozen, args.m, False),
                                  npk.sc_decode(y, frozen, args.m, False))
    a = nb.scl_decode(y, frozen, args.m, args.list_size, False)
    b = npk.scl_decode(y, frozen, args.m, args.list_size, False)
    np.testing.assert_array_equal(a[2], b[2])
    np.testing.assert_array_equal(a[0][a[2]], b[0][b[2]])

    print(f"n={n} k={spec.k_total} L={args.list_size} eps={args.epsilon}")
    print(f"{'kernel':<16}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    cases = {
        "transform": (lambda: nb.polar_transform(u), lambda: npk.polar_transform(u)),
        "sc": (lambda: nb.sc_decode(y, frozen, args.m, False),
               lambda: npk.sc_decode(y, frozen, args.m, False)),
        "scl": (lambda: nb.scl_decode(y, frozen, args.m, args.list_size, False),
                lambda: npk.scl_decode(y, frozen, args.m, args.list_size, False)),
    }
    for name, (f_nb, f_np) in cases.items():
        t_nb = timeit(f_nb, args.reps)
        t_np = timeit(f_np, max(1, args.reps // 4))
        print(f"{name:<16}{1e3 * t_nb:>12.3f}{1e3 * t_np:>12.3f}{t_np / t_nb:>10.1f}")


if __name__ == "__main__":
    main()
