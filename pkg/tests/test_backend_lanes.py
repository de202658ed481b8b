"""The numba lane must reproduce the pure-numpy reference lane bit-for-bit
(up to floating-point associativity differences far below solver tolerance)."""

import numpy as np
import pytest

from kadbaym import FERMION
from kadbaym import backend
from kadbaym.contour import HermMatrix
from kadbaym.weights import bdf_weights, build_weights
from kadbaym import _kernels_np as knp

knb = pytest.importorskip("kadbaym._kernels_nb") if backend.HAVE_NUMBA else None

pytestmark = pytest.mark.skipif(not backend.HAVE_NUMBA,
                                reason="numba lane not active")


def _rand_herm(nt, ntau, d, seed, scale=1.0):
    C = HermMatrix(nt, ntau, d, FERMION)
    rng = np.random.default_rng(seed)
    for arr in (C.mat, C.ret, C.les, C.tv):
        arr[:] = scale * (rng.standard_normal(arr.shape)
                          + 1j * rng.standard_normal(arr.shape))
    return C


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("k", [1, 3, 5])
def test_lanes_agree(d, k):
    nt, ntau = 2 * k + 6, 12
    h, beta = 0.1, 3.0
    htau = beta / ntau
    W = build_weights(k)
    s, Sg, om, R, I3, D = W.s, W.Sig, W.omega, W.R, W.I, W.D
    bdf = bdf_weights(k + 1)
    A = _rand_herm(nt, ntau, d, 1)
    B = _rand_herm(nt, ntau, d, 2)
    S = _rand_herm(nt, ntau, d, 3, scale=0.2)
    F = _rand_herm(nt, ntau, d, 4, scale=0.2)
    Fcc = _rand_herm(nt, ntau, d, 5, scale=0.2)
    Q = _rand_herm(nt, ntau, d, 6)
    rng = np.random.default_rng(7)
    fv = rng.standard_normal((nt + 2, d, d)) + 1j * rng.standard_normal((nt + 2, d, d))
    eps = rng.standard_normal((nt + 2, d, d))
    eps = (eps + eps.transpose(0, 2, 1)).astype(complex)

    assert np.allclose(
        knp.conv_mat(A.mat, B.mat, fv[0], -1.0, htau, k, s, Sg, om, R),
        knb.conv_mat(A.mat, B.mat, fv[0], -1.0, htau, k, s, Sg, om, R),
        atol=1e-12)
    for n in (k, k + 1, nt):
        assert np.allclose(
            knp.conv_ret_row(n, h, k, s, Sg, om, I3, A.ret, A.ret, B.ret, B.ret, fv),
            knb.conv_ret_row(n, h, k, s, Sg, om, I3, A.ret, A.ret, B.ret, B.ret, fv),
            atol=1e-12)
        assert np.allclose(
            knp.conv_tv_row(n, h, htau, k, s, Sg, om, I3, R, A.ret, A.ret, A.tv,
                            B.tv, B.mat, fv, fv[0], -1.0),
            knb.conv_tv_row(n, h, htau, k, s, Sg, om, I3, R, A.ret, A.ret, A.tv,
                            B.tv, B.mat, fv, fv[0], -1.0),
            atol=1e-12)
        assert np.allclose(
            knp.conv_les_col(n, h, htau, k, s, Sg, om, I3, R, A.ret, A.ret, A.les,
                             A.les, A.tv, B.ret, B.ret, B.les, B.les, B.tv,
                             fv, fv[0], -1.0),
            knb.conv_les_col(n, h, htau, k, s, Sg, om, I3, R, A.ret, A.ret, A.les,
                             A.les, A.tv, B.ret, B.ret, B.les, B.les, B.tv,
                             fv, fv[0], -1.0, -1),
            atol=1e-12)
    for n in (k + 1, nt):
        G1, G2 = _rand_herm(nt, ntau, d, 8), _rand_herm(nt, ntau, d, 8)
        knp.dyson_ret_row(n, h, k, s, Sg, om, D, bdf, G1.ret, S.ret, eps)
        knb.dyson_ret_row(n, h, k, s, Sg, om, D, bdf, G2.ret, S.ret, eps, -1)
        assert np.allclose(G1.ret, G2.ret, atol=1e-11)
        knp.dyson_tv_row(n, h, htau, k, s, Sg, om, R, bdf, G1.tv, G1.mat,
                         S.ret, S.tv, eps, -1.0)
        knb.dyson_tv_row(n, h, htau, k, s, Sg, om, R, bdf, G2.tv, G2.mat,
                         S.ret, S.tv, eps, -1.0)
        assert np.allclose(G1.tv, G2.tv, atol=1e-11)
        knp.dyson_les_col(n, h, htau, k, s, Sg, om, R, D, bdf, G1.ret, G1.les,
                          G1.tv, S.ret, S.les, S.tv, eps, -1.0)
        knb.dyson_les_col(n, h, htau, k, s, Sg, om, R, D, bdf, G2.ret, G2.les,
                          G2.tv, S.ret, S.les, S.tv, eps, -1.0)
        assert np.allclose(G1.les, G2.les, atol=1e-11)
        qr = np.ascontiguousarray(Q.ret[n * (n + 1) // 2: n * (n + 1) // 2 + n + 1])
        ql = np.ascontiguousarray(Q.les[n * (n + 1) // 2: n * (n + 1) // 2 + n + 1])
        knp.vie2_ret_row(n, h, k, s, Sg, om, G1.ret, F.ret, qr)
        knb.vie2_ret_row(n, h, k, s, Sg, om, G2.ret, F.ret, qr)
        assert np.allclose(G1.ret, G2.ret, atol=1e-11)
        knp.vie2_les_col(n, h, htau, k, s, Sg, om, R, G1.ret, G1.les, G1.tv,
                         F.ret, F.les, Fcc.les, F.tv, ql, -1.0)
        knb.vie2_les_col(n, h, htau, k, s, Sg, om, R, G2.ret, G2.les, G2.tv,
                         F.ret, F.les, Fcc.les, F.tv, ql, -1.0)
        assert np.allclose(G1.les, G2.les, atol=1e-11)
