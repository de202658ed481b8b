"""Exact noninteracting contour Green's functions.

For a time-independent hermitian Hamiltonian every stored component is
evaluated in closed form (eigendecomposition), so the result is exact up to
round-off.  For a time-dependent Hamiltonian the real-time propagator is
built from fourth-order commutator-free exponential steps combined through
the semi-group property.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .contour import FERMION, BOSON, ContourScalarFn, HermMatrix, tri_index
from .weights import MAX_ORDER, build_weights

__all__ = ["Cf4Coefficients", "cf4_step", "green_from_H", "free_matsubara_values"]


@dataclass(frozen=True)
class Cf4Coefficients:
    """Weights and nodes of the 4th-order commutator-free double exponential."""

    a1: float = (3 - 2 * sqrt(3.0)) / 12
    a2: float = (3 + 2 * sqrt(3.0)) / 12
    c1: float = (1 - 1 / sqrt(3.0)) / 2
    c2: float = (1 + 1 / sqrt(3.0)) / 2


CF4 = Cf4Coefficients()


def _expm_herm_generator(H: np.ndarray) -> np.ndarray:
    """exp(-i H) for hermitian H via eigendecomposition."""
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * w)) @ V.conj().T


def cf4_step(eps_c1: np.ndarray, eps_c2: np.ndarray, h: float) -> np.ndarray:
    """One-step propagator U_{n+1,n} from the Hamiltonian at the two
    interior nodes (n+c1)h and (n+c2)h.

    The product of the two exponentials is 4th-order accurate in h; for
    hermitian input the result is unitary to round-off.
    """
    eps_c1 = np.atleast_2d(np.asarray(eps_c1, dtype=complex))
    eps_c2 = np.atleast_2d(np.asarray(eps_c2, dtype=complex))
    e1 = _expm_herm_generator(h * (CF4.a1 * eps_c1 + CF4.a2 * eps_c2))
    e2 = _expm_herm_generator(h * (CF4.a2 * eps_c1 + CF4.a1 * eps_c2))
    return e1 @ e2


def _stable_occ_weights(lam: np.ndarray, beta: float, tau: np.ndarray, sig: int):
    """Overflow-safe diag factors for the Matsubara and mixing components.

    Returns (fbar_exp, f_exp, f) with
      fbar_exp[m, a] = (1 + sig*f(lam_a)) * exp(-lam_a * tau_m)
      f_exp[m, a]    = f(lam_a) * exp(+lam_a * tau_m)
      f[a]           = f(lam_a)
    where f is the Fermi/Bose function at inverse temperature beta.
    """
    lam = np.asarray(lam, dtype=float)
    t = tau[:, None]
    x = lam[None, :]
    with np.errstate(over="ignore", invalid="ignore"):
        return _occ_weights_branchy(lam, beta, t, x, sig)


def _occ_weights_branchy(lam, beta, t, x, sig):
    if sig == FERMION:
        # fbar = 1/(1+e^{-beta x}); f = 1/(e^{beta x}+1)
        fbar_exp = np.where(x >= 0,
                            np.exp(-x * t) / (1 + np.exp(-beta * x)),
                            np.exp(x * (beta - t)) / (1 + np.exp(beta * x)))
        f_exp = np.where(x >= 0,
                         np.exp(x * (t - beta)) / (1 + np.exp(-beta * x)),
                         np.exp(x * t) / (1 + np.exp(beta * x)))
        f = np.where(lam >= 0,
                     np.exp(-beta * lam) / (1 + np.exp(-beta * lam)),
                     1 / (np.exp(beta * lam) + 1))
    else:
        if np.any(lam <= 0):
            raise ValueError("bosonic free GF requires eps - mu positive definite")
        occ = 1 / np.expm1(beta * lam)
        f = occ
        fbar_exp = (1 + occ)[None, :] * np.exp(-x * t)
        f_exp = np.exp(x * (t - beta)) / (-np.expm1(-beta * x))
    return fbar_exp, f_exp, f


def free_matsubara_values(ham: np.ndarray, mu: float, beta: float, ntau: int, sig: int):
    """g^M(tau_m) = -(1 + sig*f)(eps-mu) * exp(-(eps-mu) tau_m) on the tau grid."""
    ham = np.atleast_2d(np.asarray(ham, dtype=complex))
    lam, R = np.linalg.eigh(ham - mu * np.eye(ham.shape[0]))
    tau = np.linspace(0.0, beta, ntau + 1)
    fbar_exp, _, _ = _stable_occ_weights(lam, beta, tau, sig)
    return -np.einsum("ab,mb,cb->mac", R, fbar_exp, R.conj())


def _eps_samples(eps, nt, d):
    if isinstance(eps, ContourScalarFn):
        if eps.d != d:
            raise ValueError("dimension mismatch")
        if eps.nt < nt:
            raise ValueError("eps must provide values up to nt")
        return eps.values
    arr = np.atleast_2d(np.asarray(eps, dtype=complex))
    if arr.shape != (d, d):
        raise ValueError(f"expected a {d}x{d} Hamiltonian")
    return None  # signals time-independent


def _interp_eps(epsvals, n, frac, k, nt):
    """Hamiltonian at (n + frac)h by degree-k interpolation of the samples.

    Uses the window n-k+1..n+1 where available, shifted at the edges.
    """
    W = build_weights(k)
    lo = min(max(n - k + 1, 0), nt - k)
    x = (n + frac) - lo
    xpow = x ** np.arange(k + 1)
    c = xpow @ W.P
    window = epsvals[lo + 1: lo + k + 2]  # +1 offset: index -1 is slot 0
    return np.einsum("l,lab->ab", c, window)


def _propagators(eps, mu, h, nt, d, order):
    """U_{n,0} for n = 0..nt."""
    U = np.zeros((nt + 1, d, d), dtype=complex)
    U[0] = np.eye(d)
    epsvals = _eps_samples(eps, nt, d)
    if epsvals is None:  # time-independent: exact evolution
        lam, R = np.linalg.eigh(np.atleast_2d(np.asarray(eps, dtype=complex)) - mu * np.eye(d))
        phases = np.exp(-1j * np.outer(np.arange(nt + 1), lam) * h)
        return np.einsum("ab,nb,cb->nac", R, phases, R.conj())
    ident = np.eye(d)
    k_eff = min(order, nt)
    for n in range(nt):
        e1 = _interp_eps(epsvals, n, CF4.c1, k_eff, nt) - mu * ident
        e2 = _interp_eps(epsvals, n, CF4.c2, k_eff, nt) - mu * ident
        U[n + 1] = cf4_step(e1, e2, h) @ U[n]
    return U


def green_from_H(nt: int, ntau: int, eps, mu: float, beta: float, h: float,
                 sig: int = FERMION, order: int = MAX_ORDER) -> HermMatrix:
    """Free contour Green's function for the hermitian Hamiltonian eps.

    eps may be a d x d matrix (time-independent, all components exact up to
    round-off) or a ContourScalarFn (CF4 propagation, global error O(h^4)).
    The generator on every branch is eps - mu.
    """
    if isinstance(eps, ContourScalarFn):
        d = eps.d
        ham0 = eps[-1]
    else:
        ham0 = np.atleast_2d(np.asarray(eps, dtype=complex))
        d = ham0.shape[0]
    if not np.allclose(ham0, ham0.conj().T, atol=1e-12):
        raise ValueError("Hamiltonian must be hermitian")

    G = HermMatrix(nt, ntau, d, sig)
    lam, R = np.linalg.eigh(ham0 - mu * np.eye(d))
    if sig == BOSON and np.any(lam <= 0):
        raise ValueError("bosonic free GF requires eps - mu positive definite")
    tau = np.linspace(0.0, beta, ntau + 1)
    fbar_exp, f_exp, f = _stable_occ_weights(lam, beta, tau, sig)

    G.mat[:] = -np.einsum("ab,mb,cb->mac", R, fbar_exp, R.conj())
    if nt < 0:
        return G

    U = _propagators(eps, mu, h, nt, d, order)
    # M_tau[m] = R diag(f * e^{+lam tau}) R^dag ;  rho0 = R diag(f) R^dag
    M_tau = np.einsum("ab,mb,cb->mac", R, f_exp, R.conj())
    rho0 = (R * f) @ R.conj().T
    Uf = U @ rho0

    for n in range(nt + 1):
        lo = tri_index(n, 0)
        G.ret[lo: lo + n + 1] = -1j * np.einsum("ab,jcb->jac", U[n], U[: n + 1].conj())
        # -i*sig prefactor (not +i) keeps the KMS corner C^<(t,0) = C^rceil(t,0+)
        # valid for bosons as well as fermions
        G.les[lo: lo + n + 1] = -1j * sig * np.einsum("jab,cb->jac", Uf[: n + 1], U[n].conj())
        G.tv[n] = -1j * sig * np.einsum("ab,mbc->mac", U[n], M_tau)
    return G
