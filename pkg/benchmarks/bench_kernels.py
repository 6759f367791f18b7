"""Time the groupoid kernels on both backends.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs on the same tables through the numba loop version and the
numpy version; the table prints the best time of ``--repeat`` runs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ample import _accel, gpd, hls, kernels
from ample.grp import cyclic_two_power_chain


def best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases():
    A = hls.build_afs(cyclic_two_power_chain(4), 4).groupoid
    P = gpd.product_groupoid(gpd.pair_groupoid(6), gpd.pair_groupoid(6))
    rng = np.random.default_rng(0)
    a = rng.integers(P.n, size=4000)
    b = rng.integers(P.n, size=4000)
    mat = rng.random((300, 300)) < 0.01
    return [
        (f"associativity (n={A.n})", kernels.first_assoc_violation, (A.comp,)),
        (f"domain (n={A.n})", kernels.first_domain_violation, (A.comp, A.s, A.r)),
        (f"inverse (n={A.n})", kernels.first_inverse_violation, (A.comp, A.s, A.r, A.inv)),
        (f"fib count (n={P.n})", kernels.fib_count, (P.s, P.r, np.arange(P.n), P.n)),
        ("pair fib count (4000 pairs)", kernels.pair_fib_count, (P.s, P.r, a, b, P.n)),
        (f"pair subgroupoid (diagonal, n={A.n})", kernels.pair_subgroupoid_violation,
         (A.comp, A.s, A.r, A.inv, np.arange(A.n), np.arange(A.n))),
        ("transitive closure (300 nodes)", kernels.transitive_closure, (mat,)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        print("numba is not installed; only the numpy path can run")
    kernels.warmup()
    print(f"{'kernel':40s} {'numba':>10s} {'numpy':>10s} {'ratio':>8s}")
    for name, fn, fargs in cases():
        t_np = best_of(lambda: fn(*fargs, use_numba=False), args.repeat)
        if _accel.HAVE_NUMBA:
            fn(*fargs, use_numba=True)
            t_nb = best_of(lambda: fn(*fargs, use_numba=True), args.repeat)
            if not np.array_equal(fn(*fargs, use_numba=True), fn(*fargs, use_numba=False)):
                raise AssertionError(f"backends disagree on {name}")
            print(f"{name:40s} {t_nb * 1e3:9.2f}ms {t_np * 1e3:9.2f}ms {t_np / max(t_nb, 1e-9):7.1f}x")
        else:
            print(f"{name:40s} {'-':>10s} {t_np * 1e3:9.2f}ms")


if __name__ == "__main__":
    main()
