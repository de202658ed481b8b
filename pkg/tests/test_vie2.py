import numpy as np
import pytest

from kadbaym import BOSON, FERMION
from kadbaym.contour import ContourScalarFn, HermMatrix
from kadbaym.convolution import conv_matsubara, conv_timestep
from kadbaym.freegf import green_from_H
from kadbaym.vie2 import vie2_mat, vie2_solve, vie2_start, vie2_timestep

BETA, MU = 10.0, 0.0


def make_Q(nt, ntau, h, e=0.7, sig=FERMION):
    return green_from_H(nt, ntau, np.array([[e]]), MU, BETA, h, sig)


def test_zero_kernel_returns_Q():
    nt, ntau, k, h = 12, 24, 3, 0.1
    Q = make_Q(nt, ntau, h)
    Z = HermMatrix(nt, ntau, 1, FERMION)
    G = HermMatrix(nt, ntau, 1, FERMION)
    vie2_solve(G, Z, Z, Q, BETA, h, k)
    assert np.abs(G.mat - Q.mat).max() < 1e-9
    assert np.abs(G.ret - Q.ret).max() < 1e-9
    assert np.abs(G.les - Q.les).max() < 1e-9
    assert np.abs(G.tv - Q.tv).max() < 1e-9


def test_rpa_with_zero_polarization():
    # chi = 0 when P = 0 whatever the kernel containers hold
    nt, ntau, k, h = 8, 16, 2, 0.1
    P = HermMatrix(nt, ntau, 1, BOSON)
    F = HermMatrix(nt, ntau, 1, BOSON)
    chi = HermMatrix(nt, ntau, 1, BOSON)
    vie2_solve(chi, F, F, P, BETA, h, k)
    assert np.abs(chi.mat).max() == 0.0
    assert np.abs(chi.ret).max() < 1e-14


def vie_downfold(nt, ntau, k, h, lam=0.5, e1=-1.0, e2=1.0, lesser_variant="serial",
                 beta=20.0):
    Sig = green_from_H(nt, ntau, np.array([[e2]]), MU, beta, h, FERMION)
    for arr in (Sig.mat, Sig.ret, Sig.les, Sig.tv):
        arr *= lam * lam
    G0 = green_from_H(nt, ntau, np.array([[e1]]), MU, beta, h, FERMION)
    F = HermMatrix(nt, ntau, 1, FERMION)
    Fcc = HermMatrix(nt, ntau, 1, FERMION)
    F.mat[:] = -conv_matsubara(G0, Sig, beta=beta, k=k)
    Fcc.mat[:] = -conv_matsubara(Sig, G0, beta=beta, k=k)
    for n in range(nt + 1):
        F.set_timestep(n, conv_timestep(n, G0, G0, Sig, Sig, beta=beta, h=h, k=k))
        F.smul(n, -1.0)
        Fcc.set_timestep(n, conv_timestep(n, Sig, Sig, G0, G0, beta=beta, h=h, k=k))
        Fcc.smul(n, -1.0)
    G = HermMatrix(nt, ntau, 1, FERMION)
    vie2_mat(G, F, Fcc, G0, beta, k, tol=1e-14, maxiter=12)
    vie2_start(G, F, Fcc, G0, beta, h, k)
    for n in range(k + 1, nt + 1):
        vie2_timestep(n, G, F, Fcc, G0, beta, h, k, lesser_variant=lesser_variant)
    ham2 = np.array([[e1, 1j * lam], [-1j * lam, e2]])
    G2 = green_from_H(nt, ntau, ham2, MU, beta, h, FERMION)
    return G, G2


def test_downfold_integral_form_accuracy():
    nt, ntau, k, h = 40, 128, 5, 0.125
    G, G2 = vie_downfold(nt, ntau, k, h)
    assert np.abs(G.mat[:, 0, 0] - G2.mat[:, 0, 0]).max() < 2e-7
    assert np.abs(G.ret[:, 0, 0] - G2.ret[:, 0, 0]).max() < 2e-5
    assert np.abs(G.les[:, 0, 0] - G2.les[:, 0, 0]).max() < 2e-5


def test_serial_vs_conjugate_lesser():
    # grids fine enough that the inter-variant (truncation-level) deviation
    # sits below the contracted 1e-8
    nt, ntau, k, h = 28, 256, 5, 0.04
    Ga, _ = vie_downfold(nt, ntau, k, h, lesser_variant="serial", beta=10.0)
    Gb, _ = vie_downfold(nt, ntau, k, h, lesser_variant="conjugate", beta=10.0)
    scale = max(1.0, np.abs(Ga.les).max())
    assert np.abs(Ga.les - Gb.les).max() / scale < 1e-8
    assert np.array_equal(Ga.ret, Gb.ret)  # same code path for ret


def test_hermitian_suite_on_output():
    nt, ntau, k, h = 16, 192, 5, 0.05
    G, _ = vie_downfold(nt, ntau, k, h, beta=10.0)
    for m in range(0, ntau + 1, 8):
        assert np.allclose(G.mat[m], G.mat[m].conj().T, atol=1e-8)
    for n in range(nt + 1):
        x = G.get_les(n, n)
        assert np.allclose(x, -x.conj().T, atol=1e-8)
    assert np.allclose(G.tv[0], 1j * G.sig * G.mat[::-1], atol=1e-8)


def test_causality_Q_dependence():
    # slice n of the solution needs Q only at slice n for n > k
    nt, ntau, k, h = 14, 16, 2, 0.1
    Q = make_Q(nt, ntau, h)
    F = HermMatrix(nt, ntau, 1, FERMION)
    Fcc = HermMatrix(nt, ntau, 1, FERMION)
    src = green_from_H(nt, ntau, np.array([[0.4]]), MU, BETA, h, FERMION)
    for arr_dst, arr_src in ((F.mat, src.mat), (F.ret, src.ret), (F.les, src.les), (F.tv, src.tv)):
        arr_dst[:] = 0.2 * arr_src

    Fcc.mat[:], Fcc.ret[:], Fcc.les[:], Fcc.tv[:] = F.mat, F.ret, F.les, F.tv
    n_check = 8
    G1 = HermMatrix(nt, ntau, 1, FERMION)
    vie2_mat(G1, F, Fcc, Q, BETA, k)
    vie2_start(G1, F, Fcc, Q, BETA, h, k)
    for n in range(k + 1, n_check + 1):
        vie2_timestep(n, G1, F, Fcc, Q, BETA, h, k)
    Q2 = Q.copy()
    for n in range(n_check + 1, nt + 1):
        Q2.ret_row(n)[:] += 1.0
        Q2.les_col(n)[:] += 1j
        Q2.tv[n] += 0.7
    G2 = HermMatrix(nt, ntau, 1, FERMION)
    vie2_mat(G2, F, Fcc, Q2, BETA, k)
    vie2_start(G2, F, Fcc, Q2, BETA, h, k)
    for n in range(k + 1, n_check + 1):
        vie2_timestep(n, G2, F, Fcc, Q2, BETA, h, k)
    for n in range(n_check + 1):
        assert np.array_equal(G1.ret_row(n), G2.ret_row(n))
        assert np.array_equal(G1.les_col(n), G2.les_col(n))
        assert np.array_equal(G1.tv[n], G2.tv[n])


def test_singular_frequency_rejected():
    from kadbaym.vie2 import Vie2Error
    ntau, beta, k = 16, 2.0, 2
    F = HermMatrix(-1, ntau, 1, BOSON)
    F.mat[:] = -1.0 / beta  # 1 + F(i w=0) = 0
    Q = HermMatrix(-1, ntau, 1, BOSON)
    Q.mat[:] = 1.0
    G = HermMatrix(-1, ntau, 1, BOSON)
    with pytest.raises(Vie2Error):
        vie2_mat(G, F, F, Q, beta, k, method="fourier")


def test_compatibility_debug_check_warns():
    nt, ntau, k, h = 6, 16, 2, 0.1
    Q = make_Q(nt, ntau, h)
    F = make_Q(nt, ntau, h, e=-0.4)
    bad_Fcc = make_Q(nt, ntau, h, e=1.9)  # not the conjugate of F
    G = HermMatrix(nt, ntau, 1, FERMION)
    with pytest.warns(UserWarning):
        vie2_mat(G, F, bad_Fcc, Q, 10.0, k, method="fourier", debug_check=True)
