"""Timing comparison of the numba and pure-numpy kernel lanes.

Run:  python benchmarks/bench_kernels.py [--sizes small|large]

The same inputs are pushed through both lanes; the table reports per-call
wall time and the speedup.  KADBAYM_PURE_NUMPY=1 would force the numpy
lane package-wide; here both lanes are imported explicitly.
"""

import argparse
import time

import numpy as np

from kadbaym import FERMION
from kadbaym.contour import HermMatrix
from kadbaym.weights import bdf_weights, build_weights
from kadbaym import _kernels_np as lane_np

try:
    from kadbaym import _kernels_nb as lane_nb
except ImportError:  # pragma: no cover
    lane_nb = None


def rand_herm(nt, ntau, d, seed, scale=0.1):
    C = HermMatrix(nt, ntau, d, FERMION)
    rng = np.random.default_rng(seed)
    for arr in (C.mat, C.ret, C.les, C.tv):
        arr[:] = scale * (rng.standard_normal(arr.shape)
                          + 1j * rng.standard_normal(arr.shape))
    return C


def timeit(fn, *args, repeat=3):
    fn(*args)  # warm-up (and JIT compile for the numba lane)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", choices=("small", "large"), default="small")
    args = ap.parse_args()
    if args.sizes == "small":
        nt, ntau, d, k = 220, 120, 2, 5
    else:
        nt, ntau, d, k = 900, 400, 2, 5
    h, beta = 0.02, 10.0
    htau = beta / ntau
    W = build_weights(k)
    s, Sg, om, R, I3, D = W.s, W.Sig, W.omega, W.R, W.I, W.D
    bdf = bdf_weights(k + 1)
    A = rand_herm(nt, ntau, d, 1)
    B = rand_herm(nt, ntau, d, 2)
    S = rand_herm(nt, ntau, d, 3)
    rng = np.random.default_rng(4)
    fv = rng.standard_normal((nt + 2, d, d)) + 0j
    eps = rng.standard_normal((nt + 2, d, d))
    eps = (eps + eps.transpose(0, 2, 1)).astype(complex)
    n = nt

    cases = [
        ("conv_mat", lambda L: L.conv_mat(A.mat, B.mat, fv[0], -1.0, htau, k, s, Sg, om, R)),
        ("conv_ret_row", lambda L: L.conv_ret_row(n, h, k, s, Sg, om, I3, A.ret, A.ret,
                                                  B.ret, B.ret, fv)),
        ("conv_tv_row", lambda L: L.conv_tv_row(n, h, htau, k, s, Sg, om, I3, R, A.ret,
                                                A.ret, A.tv, B.tv, B.mat, fv, fv[0], -1.0)),
        ("dyson_ret_row", lambda L: L.dyson_ret_row(n, h, k, s, Sg, om, D, bdf,
                                                    A.copy().ret, S.ret, eps)),
        ("dyson_tv_row", lambda L: L.dyson_tv_row(n, h, htau, k, s, Sg, om, R, bdf,
                                                  A.copy().tv, A.mat, S.ret, S.tv, eps, -1.0)),
        ("dyson_les_col", lambda L: L.dyson_les_col(n, h, htau, k, s, Sg, om, R, D, bdf,
                                                    A.ret, A.copy().les, A.tv, S.ret,
                                                    S.les, S.tv, eps, -1.0)),
    ]
    print(f"sizes: nt={nt}, ntau={ntau}, d={d}, k={k}")
    print(f"{'kernel':<16}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>9}")
    for name, call in cases:
        t_np = timeit(call, lane_np) * 1e3
        if lane_nb is None:
            print(f"{name:<16}{t_np:>12.2f}{'n/a':>12}{'':>9}")
            continue
        t_nb = timeit(call, lane_nb) * 1e3
        print(f"{name:<16}{t_np:>12.2f}{t_nb:>12.2f}{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
