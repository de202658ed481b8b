import numpy as np
import pytest

from kadbaym import FERMION, BOSON
from kadbaym.contour import (
    ContourScalarFn,
    HermMatrix,
    TimeSlice,
    distance_norm2,
    extrapolate_timestep,
    init_from_matsubara,
    tri_index,
)
from kadbaym.freegf import green_from_H


def random_herm(nt, ntau, d, sig, seed=0):
    rng = np.random.default_rng(seed)
    C = HermMatrix(nt, ntau, d, sig)
    for arr in (C.mat, C.ret, C.les, C.tv):
        arr[:] = rng.standard_normal(arr.shape) + 1j * rng.standard_normal(arr.shape)
    return C


def test_storage_counts():
    nt, ntau, d = 7, 9, 2
    C = HermMatrix(nt, ntau, d)
    assert C.ret.shape[0] == (nt + 1) * (nt + 2) // 2
    assert C.les.shape[0] == (nt + 1) * (nt + 2) // 2
    assert C.tv.shape == (nt + 1, ntau + 1, d, d)
    assert C.mat.shape == (ntau + 1, d, d)
    M = HermMatrix(-1, ntau, d)
    assert M.ret.shape[0] == 0 and M.tv.shape[0] == 0


def test_timestep_roundtrip():
    C = random_herm(6, 8, 2, FERMION, seed=3)
    out = C.copy()
    for n in range(-1, C.nt + 1):
        sl = C.get_timestep(n)
        out.smul(n, 0.0)
        out.set_timestep(n, sl)
    assert np.array_equal(out.mat, C.mat)
    assert np.array_equal(out.ret, C.ret)
    assert np.array_equal(out.les, C.les)
    assert np.array_equal(out.tv, C.tv)


def test_incr_and_smul():
    C = random_herm(4, 6, 1, FERMION, seed=1)
    ref = C.copy()
    S = C.get_timestep(2)
    C.incr_timestep(2, S, 0.0)
    assert np.array_equal(C.ret, ref.ret)
    C.incr_timestep(2, S, 2.0)
    assert np.allclose(C.ret_row(2), 3 * ref.ret_row(2))
    C.smul(2, 0.5)
    assert np.allclose(C.ret_row(2), 1.5 * ref.ret_row(2))


def test_left_right_multiply_constant_scales():
    C = random_herm(5, 6, 2, FERMION, seed=2)
    ref = C.copy()
    f = ContourScalarFn.constant(C.nt, 2.0 * np.eye(2))
    C.left_multiply(3, f)
    C.right_multiply(3, f)
    assert np.allclose(C.ret_row(3), 4 * ref.ret_row(3))
    assert np.allclose(C.les_col(3), 4 * ref.les_col(3))
    assert np.allclose(C.tv[3], 4 * ref.tv[3])
    assert np.array_equal(C.ret_row(4), ref.ret_row(4))


def test_left_multiply_uses_first_argument_times():
    # C^<(j, n) must pick up f(t_j) on the left, not f(t_n)
    nt, d = 3, 1
    C = random_herm(nt, 4, d, FERMION, seed=5)
    ref = C.copy()
    f = ContourScalarFn(nt, d)
    for n in range(-1, nt + 1):
        f[n] = (n + 2.0) * np.eye(d)
    C.left_multiply(nt, f)
    for j in range(nt + 1):
        assert np.allclose(C.les[tri_index(nt, j)], (j + 2.0) * ref.les[tri_index(nt, j)])
        assert np.allclose(C.ret[tri_index(nt, j)], (nt + 2.0) * ref.ret[tri_index(nt, j)])


def test_get_component_reconstructions():
    G = green_from_H(6, 10, np.array([[0.3]]), 0.0, 4.0, 0.05, FERMION)
    # A at (j, n) equals adjoint of ret at (n, j)
    a = G.get_component("A", 2, 5, conj=G)
    assert np.allclose(a, G.get_ret(5, 2).conj().T)
    # right-mixing from the conjugate of tv
    v = G.get_component("vt", 3, 4, conj=G)
    assert np.allclose(v, -G.sig * G.tv[4, G.ntau - 3].conj().T)
    # lesser above the diagonal
    x = G.get_component("les", 5, 1, conj=G)
    assert np.allclose(x, -G.get_les(1, 5).conj().T)
    with pytest.raises(ValueError):
        G.get_component("les", 5, 1)  # reconstruction without conjugate


def test_hermitian_symmetry_suite_free_gf():
    for sig in (FERMION, BOSON):
        ham = np.array([[1.3, 0.2 - 0.1j], [0.2 + 0.1j, 2.1]])
        G = green_from_H(8, 12, ham, 0.0, 2.0, 0.04, sig)
        # Matsubara hermitian matrices
        for m in range(G.ntau + 1):
            assert np.allclose(G.mat[m], G.mat[m].conj().T, atol=1e-12)
        # C^<(t,t) anti-hermitian
        for n in range(G.nt + 1):
            x = G.get_les(n, n)
            assert np.allclose(x, -x.conj().T, atol=1e-12)


def test_kms_corner_free_gf():
    for sig in (FERMION, BOSON):
        ham = np.array([[0.9]]) if sig == BOSON else np.array([[-0.4]])
        G = green_from_H(5, 16, ham, -0.5 if sig == BOSON else 0.0, 3.0, 0.05, sig)
        init = G.copy()
        init_from_matsubara(init)
        assert np.allclose(init.tv[0], G.tv[0], atol=1e-12)
        assert np.allclose(init.get_les(0, 0), G.get_les(0, 0), atol=1e-12)
        # explicit corner identities
        assert np.allclose(G.tv[0, 3], 1j * sig * G.mat[G.ntau - 3], atol=1e-12)


def test_density_matrix_free_level():
    beta, eps, mu = 5.0, 0.7, 0.2
    G = green_from_H(4, 64, np.array([[eps]]), mu, beta, 0.1, FERMION)
    f = 1.0 / (np.exp(beta * (eps - mu)) + 1.0)
    assert abs(G.density_matrix(-1)[0, 0] - f) < 1e-12
    for n in range(5):
        assert abs(G.density_matrix(n)[0, 0] - f) < 1e-12
    Z = HermMatrix(3, 8, 1, FERMION)
    assert np.allclose(Z.density_matrix(-1), 0)
    assert np.allclose(Z.density_matrix(2), 0)


def test_distance_norm2():
    A = random_herm(4, 6, 2, FERMION, seed=7)
    for n in range(-1, 5):
        assert distance_norm2(A, A, n) == 0.0
    B = A.copy()
    B.les[tri_index(3, 1)][0, 1] += 0.25j
    assert abs(distance_norm2(A, B, 3) - 0.25) < 1e-14
    assert distance_norm2(A, B, 2) == 0.0
    # matches a naive loop oracle
    B = random_herm(4, 6, 2, FERMION, seed=8)
    n = 4
    ref = 0.0
    for m in range(A.ntau + 1):
        ref += np.abs(A.tv[n, m] - B.tv[n, m]).sum()
    for j in range(n + 1):
        ref += np.abs(A.get_ret(n, j) - B.get_ret(n, j)).sum()
        ref += np.abs(A.get_les(j, n) - B.get_les(j, n)).sum()
    assert abs(distance_norm2(A, B, n) - ref) < 1e-12


@pytest.mark.parametrize("k", [1, 2, 3])
def test_extrapolate_polynomial_exact(k):
    # synthetic contour data polynomial (degree <= k) along every
    # extrapolation line is reproduced exactly at slice n+1
    nt, ntau, d = 2 * k + 4, 5, 1
    C = HermMatrix(nt, ntau, d, FERMION)
    coef = np.arange(1, k + 2, dtype=float) / 7.0

    def poly(x):
        return sum(c * x ** p for p, c in enumerate(coef))

    n = nt - 1
    for nn in range(nt + 1):
        for m in range(ntau + 1):
            C.tv[nn, m] = poly(nn) * (1 + 0.1 * m)
        for j in range(nn + 1):
            C.ret[tri_index(nn, j)] = poly(nn - j) * (1.0 + 0.3j)  # diagonal lines
            C.les[tri_index(nn, j)] = poly(nn - j) * (0.2 - 1j)
    ref = C.copy()
    C.smul(n + 1, 0.0)
    extrapolate_timestep(C, n, k)
    assert np.allclose(C.tv[n + 1], ref.tv[n + 1], atol=1e-10)
    lo, hi = tri_index(n + 1, 0), tri_index(n + 1, n + 1) + 1
    # the lesser anti-diagonal lines y(t) = C(j-n-1+t, t) are polynomial in t
    # for this synthesized data only along constant first-minus-second index,
    # which matches both the ret diagonals and les anti-diagonals.
    assert np.allclose(C.ret[lo:hi], ref.ret[lo:hi], atol=1e-10)
    assert np.allclose(C.les[lo:hi], ref.les[lo:hi], atol=1e-10)


def test_extrapolate_constant_and_linear():
    nt, ntau = 6, 4
    C = HermMatrix(nt, ntau, 1, FERMION)
    C.mat[:] = 0.3
    for nn in range(nt + 1):
        C.tv[nn, :] = 2.2 - 0.5j
        for j in range(nn + 1):
            C.ret[tri_index(nn, j)] = 1.1
            C.les[tri_index(nn, j)] = -0.7j
    n = 4
    extrapolate_timestep(C, n, 2)
    assert np.allclose(C.tv[n + 1], 2.2 - 0.5j)
    assert np.allclose(C.ret_row(n + 1), 1.1)
    assert np.allclose(C.les_col(n + 1), -0.7j)
    with pytest.raises(ValueError):
        extrapolate_timestep(C, 1, 2)
    # linear ramp f_n = n continues to n+1
    f = ContourScalarFn(nt, 1)
    for nn in range(-1, nt + 1):
        f[nn] = float(max(nn, 0))
    from kadbaym.contour import extrapolate_function
    val = extrapolate_function(f, 4, 1)
    assert abs(val[0, 0] - 5.0) < 1e-12


def test_timeslice_ops():
    sl = TimeSlice(3, 6, 1, FERMION)
    sl.ret[:] = 1.0
    other = sl.copy()
    sl.incr(other, 1j)
    assert np.allclose(sl.ret, 1.0 + 1j)
    sl.smul(2.0)
    assert np.allclose(sl.ret, 2.0 + 2j)
    bad = TimeSlice(2, 6, 1, FERMION)
    with pytest.raises(ValueError):
        sl.incr(bad)
