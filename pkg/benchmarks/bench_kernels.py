"""Compare the numba kernels with their pure-numpy counterparts.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is run on the same inputs through both paths; the script
prints the best wall time of each and checks that the outputs agree.
"""
import argparse
import time

import numpy as np

from socpmw import kernels
from socpmw._accel import HAVE_NUMBA
from socpmw.harness import gen_feasible, gen_infeasible_uniform
from socpmw.sq import build_sq


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases():
    rng = np.random.default_rng(0)
    sizes = rng.integers(1, 9, size=2000)
    offsets = np.concatenate(([0], np.cumsum(sizes)[:-1])).astype(np.int64)
    vals = rng.standard_normal(int(sizes.sum()))
    yield "cone_exp (2000 cones)", (
        lambda: kernels.cone_exp_numpy(vals, offsets, sizes, 3.0),
        lambda: kernels.cone_exp_numba(vals, offsets, sizes, 3.0),
    )

    F = gen_infeasible_uniform(0.1, r=4, sizes=3, m=3)
    args = (F.A, F.b, F.partition.offsets, F.partition.sizes, 0.1, 7486)
    yield "mw_direct infeasible (T=7486)", (
        lambda: kernels.mw_direct_numpy(*args)[1],
        lambda: kernels.mw_direct_numba(*args)[1],
    )

    G = gen_feasible(1, r=20, size_range=(1, 8), m=15, theta=0.05).instance
    args = (G.A, G.b - 0.03, G.partition.offsets, G.partition.sizes, 0.05, 53121)
    yield "mw_direct r=20 m=15", (
        lambda: kernels.mw_direct_numpy(*args)[1],
        lambda: kernels.mw_direct_numba(*args)[1],
    )

    sq = build_sq(G.partition, G.A)
    blk = G.partition.block(0)
    p = np.abs(rng.standard_normal(blk.stop - blk.start))
    u = rng.random((27, 20000))
    margs = (sq.rows[0, blk], sq.cum[0, blk], p, float(sq.norm2[0, 0]), int(sq.last[0, 0]), u)
    yield "mom_batch_means (540k draws)", (
        lambda: kernels.mom_batch_means_numpy(*margs),
        lambda: kernels.mom_batch_means_numba(*margs),
    )


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"numba available: {HAVE_NUMBA}")
    print(f"{'kernel':34s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}  agree")
    for name, (f_np, f_nb) in cases():
        f_nb()  # compile outside the timed region
        t_np, out_np = best_of(f_np, args.repeat)
        t_nb, out_nb = best_of(f_nb, args.repeat)
        agree = np.allclose(out_np, out_nb, rtol=1e-10, atol=1e-12)
        print(f"{name:34s} {t_np * 1e3:10.2f} {t_nb * 1e3:10.2f} {t_np / t_nb:8.1f}  {agree}")


if __name__ == "__main__":
    main()
