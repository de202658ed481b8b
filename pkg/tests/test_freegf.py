import numpy as np
import pytest

from kadbaym import FERMION, BOSON
from kadbaym.contour import ContourScalarFn, tri_index
from kadbaym.freegf import CF4, Cf4Coefficients, cf4_step, green_from_H


def test_cf4_coefficient_identities():
    c = Cf4Coefficients()
    assert abs(c.a1 + c.a2 - 0.5) < 1e-15
    assert abs(c.c1 + c.c2 - 1.0) < 1e-15
    assert abs(c.a1 - (3 - 2 * np.sqrt(3)) / 12) < 1e-15
    assert abs(c.a2 - (3 + 2 * np.sqrt(3)) / 12) < 1e-15


def test_cf4_step_trivial():
    z = np.zeros((2, 2))
    assert np.allclose(cf4_step(z, z, 0.3), np.eye(2), atol=1e-15)
    ham = np.array([[0.5, 0.1], [0.1, -0.2]])
    U = cf4_step(ham, ham, 0.4)
    w, V = np.linalg.eigh(ham)
    exact = (V * np.exp(-1j * w * 0.4)) @ V.conj().T
    assert np.allclose(U, exact, atol=1e-13)


def test_cf4_unitarity_random():
    rng = np.random.default_rng(11)
    for _ in range(25):
        a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        h1 = a + a.conj().T
        b = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        h2 = b + b.conj().T
        U = cf4_step(h1, h2, 0.17)
        assert np.linalg.norm(U @ U.conj().T - np.eye(3)) < 1e-12


def test_level_closed_forms():
    eps, beta, h, nt, ntau = 0.8, 4.0, 0.05, 20, 30
    G = green_from_H(nt, ntau, np.array([[eps]]), 0.0, beta, h, FERMION)
    f = 1 / (np.exp(beta * eps) + 1)
    for n in range(nt + 1):
        for j in range(n + 1):
            t, tp = n * h, j * h
            assert abs(G.get_ret(n, j)[0, 0] - (-1j * np.exp(-1j * eps * (t - tp)))) < 1e-12
            assert abs(G.get_les(j, n)[0, 0] - (1j * f * np.exp(-1j * eps * (tp - t)))) < 1e-12
    tau = np.linspace(0, beta, ntau + 1)
    gm = -(1 - f) * np.exp(-eps * tau)
    assert np.max(np.abs(G.mat[:, 0, 0] - gm)) < 1e-13


def test_2x2_eigendecomposition_oracle():
    lam = 0.5
    ham = np.array([[-1.0, 1j * lam], [-1j * lam, 1.0]])
    beta, h, nt, ntau = 20.0, 0.02, 40, 50
    G = green_from_H(nt, ntau, ham, 0.0, beta, h, FERMION)
    w, V = np.linalg.eigh(ham)
    occ = 1 / (np.exp(beta * w) + 1)
    for n, j in ((0, 0), (17, 5), (40, 40), (31, 2)):
        t, tp = n * h, j * h
        exact = (V * (-1j * np.exp(-1j * w * (t - tp)))) @ V.conj().T
        assert np.max(np.abs(G.get_ret(n, j) - exact)) < 1e-12
        exact_les = (V * (1j * occ * np.exp(-1j * w * (tp - t)))) @ V.conj().T
        assert np.max(np.abs(G.get_les(j, n) - exact_les)) < 1e-12
    for n, m in ((0, 0), (12, 31), (40, 50)):
        tau = m * beta / ntau
        exact_tv = (V * (1j * occ * np.exp(-1j * w * n * h) * np.exp(w * tau))) @ V.conj().T
        assert np.max(np.abs(G.tv[n, m] - exact_tv)) < 1e-11


def test_semigroup_property():
    # time-dependent Hamiltonian: U_{n,0} = U_{n,m} U_{m,0}
    nt, d = 24, 2
    eps = ContourScalarFn(nt, d)
    for n in range(-1, nt + 1):
        t = max(n, 0) * 0.1
        eps[n] = np.array([[np.cos(t), 0.3], [0.3, -np.cos(t)]])
    from kadbaym.freegf import _propagators
    U = _propagators(eps, 0.0, 0.1, nt, d, 3)
    for (n, m) in ((10, 4), (24, 12)):
        Unm = U[n] @ np.linalg.inv(U[m])
        assert np.linalg.norm(U[n] - Unm @ U[m]) < 1e-12


def test_time_dependent_cf4_order4():
    # global error of the CF4 propagator ~ h^4 against an h/32 reference
    d = 2
    beta, ntau = 2.0, 8
    tmax = 2.0

    def hamt(t):
        return np.array([[np.sin(0.9 * t), 0.4 + 0.2 * t], [0.4 + 0.2 * t, -0.7 * t]])

    errs = []
    Ns = [8, 16, 32]
    ref_nt = Ns[-1] * 32
    epsr = ContourScalarFn(ref_nt, d)
    for n in range(-1, ref_nt + 1):
        epsr[n] = hamt(max(n, 0) * tmax / ref_nt)
    Gref = green_from_H(ref_nt, ntau, epsr, 0.0, beta, tmax / ref_nt, FERMION, order=5)
    for N in Ns:
        eps = ContourScalarFn(N, d)
        for n in range(-1, N + 1):
            eps[n] = hamt(max(n, 0) * tmax / N)
        G = green_from_H(N, ntau, eps, 0.0, beta, tmax / N, FERMION, order=5)
        stride = ref_nt // N
        errs.append(np.abs(G.get_ret(N, 0) - Gref.get_ret(ref_nt, 0)).max())
    slope = np.polyfit(np.log(Ns), np.log(errs), 1)[0]
    assert abs(slope + 4) < 0.8, (errs, slope)


def test_boson_requires_positive_spectrum():
    with pytest.raises(ValueError):
        green_from_H(4, 8, np.array([[-0.2]]), 0.0, 2.0, 0.1, BOSON)
    G = green_from_H(4, 8, np.array([[0.9]]), 0.0, 2.0, 0.1, BOSON)
    occ = 1 / np.expm1(2.0 * 0.9)
    assert abs(G.density_matrix(-1)[0, 0] - occ) < 1e-12


def test_nonhermitian_rejected():
    with pytest.raises(ValueError):
        green_from_H(2, 4, np.array([[0.0, 1.0], [0.0, 0.0]]), 0.0, 1.0, 0.1)
