import numpy as np
import pytest

from kadbaym import FERMION, BOSON
from kadbaym.contour import ContourScalarFn, HermMatrix, distance_norm2, tri_index
from kadbaym.dyson import (DysonError, dyson_mat, dyson_solve, dyson_start,
                           dyson_timestep, dyson_timestep_parallel)
from kadbaym.freegf import green_from_H

BETA, MU = 10.0, 0.0


def embedded_problem(nt, ntau, h, lam=0.4, e1=-0.3, e2=0.9, sig=FERMION):
    Sig = green_from_H(nt, ntau, np.array([[e2]]), MU, BETA, h, sig)
    for arr in (Sig.mat, Sig.ret, Sig.les, Sig.tv):
        arr *= lam * lam
    eps = ContourScalarFn.constant(nt, np.array([[e1]]))
    return Sig, eps


def test_mat_free_limit_both_methods():
    ntau = 64
    for sig, ham, mu in ((FERMION, np.array([[0.6]]), 0.0),
                         (BOSON, np.array([[1.1]]), 0.2)):
        ref = green_from_H(-1, ntau, ham, mu, BETA, 0.1, sig)
        Z = HermMatrix(-1, ntau, 1, sig)
        eps = ContourScalarFn.constant(-1, ham)
        G = HermMatrix(-1, ntau, 1, sig)
        dyson_mat(G, Z, mu, eps, BETA, 3, method="fixpoint")
        assert np.abs(G.mat - ref.mat).max() < 1e-9
        dyson_mat(G, Z, mu, eps, BETA, 3, method="fourier")
        assert np.abs(G.mat - ref.mat).max() < 1e-3  # tail-limited method


def test_mat_bosonic_zero_mode_rejected():
    Z = HermMatrix(-1, 32, 1, BOSON)
    eps = ContourScalarFn.constant(-1, np.array([[0.0]]))
    G = HermMatrix(-1, 32, 1, BOSON)
    with pytest.raises(DysonError):
        dyson_mat(G, Z, 0.0, eps, BETA, 2)


def test_mat_kms_periodicity():
    # output satisfies the corner identities by construction of the grid
    ntau, k = 48, 3
    Sig, eps = embedded_problem(-1, ntau, 0.1)
    G = HermMatrix(-1, ntau, 1, FERMION)
    dyson_mat(G, Sig, MU, eps, BETA, k)
    # G^M hermitian on the grid
    for m in (0, 7, ntau):
        assert np.allclose(G.mat[m], G.mat[m].conj().T, atol=1e-10)


def test_free_propagation_matches_green_from_H():
    # Sigma = 0, time-independent eps: fine grid reaches 1e-10
    nt, ntau, k = 250, 40, 5
    h = 0.02
    ham = np.array([[0.8, 0.2], [0.2, -0.5]])
    ref = green_from_H(nt, ntau, ham, MU, BETA, h, FERMION)
    Z = HermMatrix(nt, ntau, 2, FERMION)
    eps = ContourScalarFn.constant(nt, ham)
    G = HermMatrix(nt, ntau, 2, FERMION)
    dyson_solve(G, Z, MU, eps, BETA, h, k, tol=1e-13, maxiter=12)
    assert np.abs(G.ret - ref.ret).max() < 1e-10
    assert np.abs(G.tv - ref.tv).max() < 1e-10
    assert np.abs(G.les - ref.les).max() < 1e-10


def test_retarded_diagonal_is_minus_i():
    nt, ntau, k, h = 14, 24, 3, 0.08
    Sig, eps = embedded_problem(nt, ntau, h)
    G = HermMatrix(nt, ntau, 1, FERMION)
    dyson_solve(G, Sig, MU, eps, BETA, h, k)
    for n in range(nt + 1):
        assert np.allclose(G.get_ret(n, n), -1j * np.eye(1), atol=1e-13)


def test_output_hermitian_and_kms_suites():
    nt, ntau, k, h = 16, 32, 3, 0.06
    Sig, eps = embedded_problem(nt, ntau, h)
    G = HermMatrix(nt, ntau, 1, FERMION)
    dyson_solve(G, Sig, MU, eps, BETA, h, k)
    for m in range(ntau + 1):
        assert np.allclose(G.mat[m], G.mat[m].conj().T, atol=1e-8)
    for n in range(nt + 1):
        x = G.get_les(n, n)
        assert np.allclose(x, -x.conj().T, atol=1e-8)
    # KMS corner: G^|>(0, m) = i sig G^M(beta - tau)
    assert np.allclose(G.tv[0], 1j * G.sig * G.mat[::-1], atol=1e-8)
    assert np.allclose(G.get_les(0, 0), G.tv[0, 0], atol=1e-10)


def test_causality_bitwise():
    nt, ntau, k, h = 16, 20, 2, 0.08
    Sig, eps = embedded_problem(nt, ntau, h)
    n_check = 9
    G1 = HermMatrix(nt, ntau, 1, FERMION)
    dyson_mat(G1, Sig, MU, eps, BETA, k)
    dyson_start(G1, Sig, MU, eps, BETA, h, k)
    for n in range(k + 1, n_check + 1):
        dyson_timestep(n, G1, Sig, MU, eps, BETA, h, k)
    # perturb Sigma and eps at slices > n_check, rerun: bitwise identical
    Sig2 = Sig.copy()
    eps2 = eps.copy()
    for n in range(n_check + 1, nt + 1):
        Sig2.ret_row(n)[:] += 0.5
        Sig2.les_col(n)[:] += 0.5j
        Sig2.tv[n] -= 0.3
        eps2[n] = eps2[n] + 2.0 * np.eye(1)
    G2 = HermMatrix(nt, ntau, 1, FERMION)
    dyson_mat(G2, Sig2, MU, eps2, BETA, k)
    dyson_start(G2, Sig2, MU, eps2, BETA, h, k)
    for n in range(k + 1, n_check + 1):
        dyson_timestep(n, G2, Sig2, MU, eps2, BETA, h, k)
    assert np.array_equal(G1.mat, G2.mat)
    for n in range(n_check + 1):
        assert np.array_equal(G1.ret_row(n), G2.ret_row(n))
        assert np.array_equal(G1.les_col(n), G2.les_col(n))
        assert np.array_equal(G1.tv[n], G2.tv[n])


@pytest.mark.parametrize("k", [3, 5])
def test_serial_vs_parallel(k):
    # accuracy chosen so the truncation-level A/B deviation is below 1e-8
    nt, ntau, h = 30, 64, 0.04
    Sig, eps = embedded_problem(nt, ntau, h, lam=0.5)
    Gs = HermMatrix(nt, ntau, 1, FERMION)
    Gp = HermMatrix(nt, ntau, 1, FERMION)
    for G, parallel in ((Gs, False), (Gp, True)):
        dyson_solve(G, Sig, MU, eps, BETA, h, k, parallel=parallel)
    scale = max(1.0, np.abs(Gs.les).max())
    assert np.abs(Gs.ret - Gp.ret).max() / scale < 1e-8
    assert np.abs(Gs.les - Gp.les).max() / scale < 1e-8
    assert np.abs(Gs.tv - Gp.tv).max() / scale < 1e-8


def test_equilibrium_time_invariance():
    # time-independent problem: rho(n) = rho(-1) for all n
    nt, ntau, k, h = 20, 64, 4, 0.05
    Sig, eps = embedded_problem(nt, ntau, h)
    G = HermMatrix(nt, ntau, 1, FERMION)
    dyson_solve(G, Sig, MU, eps, BETA, h, k)
    rho0 = G.density_matrix(-1)
    for n in (0, 7, nt):
        assert np.abs(G.density_matrix(n) - rho0).max() < 5e-7


def test_fixpoint_nonconvergence_reported():
    ntau, k = 32, 2
    Sig, eps = embedded_problem(-1, ntau, 0.1)
    G = HermMatrix(-1, ntau, 1, FERMION)
    with pytest.raises(DysonError, match="residual"):
        dyson_mat(G, Sig, MU, eps, BETA, k, method="fixpoint", tol=1e-30, maxiter=1)
