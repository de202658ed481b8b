"""Contour Dyson equation in integro-differential form.

[i d/dt - (eps(t) - mu)] G(t,t') - [Sigma*G](t,t') = delta_C(t,t')

with KMS boundary conditions; Sigma and eps hermitian, so G is
hermitian-symmetric.  The solution proceeds through the causal phases
Matsubara -> start-up (slices 0..k) -> time stepping, with a serial and a
column-parallel time-stepping variant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .contour import ContourScalarFn, HermMatrix, init_from_matsubara, tri_index
from .fourier import component_jump, matsubara_dft, matsubara_frequencies, matsubara_idft
from .freegf import free_matsubara_values
from .weights import bdf_weights, build_weights

FOURIER = "fourier"
FIXPOINT = "fixpoint"

__all__ = ["DysonInputs", "DysonError", "dyson_mat", "dyson_start", "dyson_timestep",
           "dyson_timestep_parallel", "dyson_solve", "FOURIER", "FIXPOINT"]


class DysonError(RuntimeError):
    pass


@dataclass
class DysonInputs:
    """Bundle of the Dyson-equation data and solver knobs."""

    Sigma: HermMatrix
    eps: ContourScalarFn
    mu: float
    beta: float
    h: float
    k: int
    matsubara_method: str = FIXPOINT
    oversampling: int = 10
    fixpoint_tol: float = 1e-10
    fixpoint_maxiter: int = 8

    def __post_init__(self):
        for n in range(-1, self.eps.nt + 1):
            e = self.eps[n]
            if not np.allclose(e, e.conj().T, atol=1e-10):
                raise ValueError(f"eps at timestep {n} is not hermitian")


def _tables(k):
    W = build_weights(k)
    # time stepping pairs the order-k quadrature with the order-(k+1) BDF
    return W.s, W.Sig, W.omega, W.R, W.I, W.D, bdf_weights(k + 1)


def _eps_shifted(eps: ContourScalarFn, mu: float, nt: int) -> np.ndarray:
    vals = np.ascontiguousarray(eps.values[: nt + 2]).copy()
    vals -= mu * np.eye(eps.d)
    return vals


def _freq_matrix(w, mat):
    """Stack i*w - mat over frequencies."""
    d = mat.shape[0]
    return 1j * w[:, None, None] * np.eye(d) - mat


def dyson_mat(G: HermMatrix, Sigma: HermMatrix, mu: float, eps: ContourScalarFn,
              beta: float, k: int, method: str = FIXPOINT, oversampling: int = 10,
              tol: float = 1e-10, maxiter: int = 8) -> None:
    """Solve the Matsubara Dyson equation for T[G]_{-1}.

    FOURIER: algebraic solve per frequency with exact leading-tail handling.
    FIXPOINT: Newton iteration on the k-th order residual of the integral
    form G = g + (g*Sigma)*G, with Fourier-method inner solves.
    """
    d = G.d
    epsm = eps[-1] - mu * np.eye(d)
    if G.sig == 1:
        lam = np.linalg.eigvalsh(epsm)
        if np.any(lam <= 1e-12):
            raise DysonError("bosonic free propagator has a zero/negative mode; "
                             "shift mu away from the spectrum")
    nw = oversampling * G.ntau
    w = matsubara_frequencies(G.sig, beta, nw)
    sighat = matsubara_dft(Sigma.mat, beta, G.sig, nw)
    ghat = np.linalg.solve(_freq_matrix(w, epsm) - sighat,
                           np.broadcast_to(np.eye(d), (w.size, d, d)))
    jump = -np.eye(d)
    G.mat[:] = matsubara_idft(ghat, beta, G.sig, G.ntau, jump)
    if method == FOURIER:
        return
    if method != FIXPOINT:
        raise ValueError(f"unknown Matsubara method {method!r}")

    s, Sig_t, om, R, I3, D, a = _tables(k)
    htau = beta / G.ntau
    ident = np.eye(d)
    g0 = free_matsubara_values(eps[-1], mu, beta, G.ntau, G.sig)
    K = backend.conv_mat(g0.astype(complex), Sigma.mat, ident.astype(complex),
                         float(G.sig), htau, k, s, Sig_t, om, R)
    g0hat = np.linalg.inv(_freq_matrix(w, epsm))
    Khat = g0hat @ sighat
    op = np.broadcast_to(ident, Khat.shape) - Khat
    zero_jump = np.zeros((d, d))

    scale = max(1.0, float(np.abs(G.mat).mean()))
    res_prev = np.inf
    for it in range(maxiter):
        R_tau = G.mat - backend.conv_mat(K, G.mat, ident.astype(complex),
                                         float(G.sig), htau, k, s, Sig_t, om, R) - g0
        res = float(np.abs(R_tau).mean())
        if res < tol * scale:
            return
        if res > 0.99 * res_prev:  # stagnation: inner solves no longer help
            break
        res_prev = res
        rhat = matsubara_dft(R_tau, beta, G.sig, nw, jump=zero_jump)
        dghat = np.linalg.solve(op, rhat)
        G.mat[:] -= matsubara_idft(dghat, beta, G.sig, G.ntau, zero_jump)
    R_tau = G.mat - backend.conv_mat(K, G.mat, ident.astype(complex),
                                     float(G.sig), htau, k, s, Sig_t, om, R) - g0
    res = float(np.abs(R_tau).mean())
    if res > tol * scale:
        raise DysonError(f"Matsubara fixpoint did not converge: residual {res:.3e} "
                         f"after {maxiter} iterations")


def dyson_start(G: HermMatrix, Sigma: HermMatrix, mu: float, eps: ContourScalarFn,
                beta: float, h: float, k: int) -> None:
    """Start-up: fill slices 0..k given T[G]_{-1} and Sigma, eps on 0..k."""
    d = G.d
    if G.nt < k:
        raise ValueError("start-up needs nt >= k")
    s, Sig_t, om, R, I3, D, a = _tables(k)
    htau = beta / G.ntau
    ident = np.eye(d)
    epsm = _eps_shifted(eps, mu, max(G.nt, k))
    init_from_matsubara(G)

    def s_ret(i, j):
        if j <= i:
            return Sigma.ret[tri_index(i, j)]
        return -Sigma.ret[tri_index(j, i)].conj().T

    # --- retarded: successive column solves on the (k+1) x (k+1) block
    for n in range(k + 1):
        G.ret[tri_index(n, n)] = -1j * ident
    for m in range(k):
        nun = k - m  # number of unknowns y_n, n = m+1..k
        M = np.zeros((k + 1, k + 1, d, d), dtype=complex)
        for n in range(m + 1, k + 1):
            for l in range(k + 1):
                M[n, l] = (1j * D[n, l] / h) * ident - h * I3[m, n, l] * s_ret(n, l)
                if n == l:
                    M[n, l] -= epsm[n + 1]
        big = np.zeros((nun * d, nun * d), dtype=complex)
        rhs = np.zeros((nun * d, d), dtype=complex)
        for n in range(m + 1, k + 1):
            r = n - (m + 1)
            acc = np.zeros((d, d), dtype=complex)
            for l in range(m + 1):
                yl = -1j * ident if l == m else -G.ret[tri_index(m, l)].conj().T
                acc -= M[n, l] @ yl
            rhs[r * d:(r + 1) * d] = acc
            for l in range(m + 1, k + 1):
                big[r * d:(r + 1) * d, (l - m - 1) * d:(l - m) * d] = M[n, l]
        sol = np.linalg.solve(big, rhs)
        for n in range(m + 1, k + 1):
            r = n - (m + 1)
            G.ret[tri_index(n, m)] = sol[r * d:(r + 1) * d]

    # --- start-block matrix shared by the tv and lesser solves
    Mblk = np.zeros((k * d, k * d), dtype=complex)
    M0 = np.zeros((k, d, d), dtype=complex)
    for n in range(1, k + 1):
        M0[n - 1] = (D[n, 0] / h) * ident + h * s[n, 0] * (1j * s_ret(n, 0))
        for l in range(1, k + 1):
            M = (D[n, l] / h) * ident + h * s[n, l] * (1j * s_ret(n, l))
            if n == l:
                M = M + 1j * epsm[n + 1]
            Mblk[(n - 1) * d:n * d, (l - 1) * d:l * d] = M

    # --- left-mixing: VIDE start per tau column, batched RHS
    ntau = G.ntau
    qtv = np.zeros((k + 1, ntau + 1, d, d), dtype=complex)
    for n in range(1, k + 1):
        qtv[n] = -1j * backend.tv_source(n, htau, k, s, Sig_t, om, R,
                                         Sigma.tv[n], G.mat, ident.astype(complex),
                                         float(G.sig))
    y0 = G.tv[0]
    rhs = np.zeros((k * d, (ntau + 1) * d), dtype=complex)
    for n in range(1, k + 1):
        block = qtv[n] - np.einsum("ab,mbc->mac", M0[n - 1], y0)
        rhs[(n - 1) * d:n * d] = block.transpose(1, 0, 2).reshape(d, -1)
    sol = np.linalg.solve(Mblk, rhs)
    for n in range(1, k + 1):
        G.tv[n] = sol[(n - 1) * d:n * d].reshape(d, ntau + 1, d).transpose(1, 0, 2)

    # --- lesser: VIDE start per column n (second argument), batched RHS
    def s_les(i, j):
        if i <= j:
            return Sigma.les[tri_index(j, i)]
        return -Sigma.les[tri_index(i, j)].conj().T

    def g_adv(j, i):  # ~G^A(j, i) on the start block
        if j <= i:
            return G.ret[tri_index(i, j)].conj().T
        return -G.ret[tri_index(j, i)]

    wt = backend.greg_row(k, s, Sig_t, om, ntau)
    qles = np.zeros((k + 1, k + 1, d, d), dtype=complex)  # [n, m]
    for n in range(k + 1):
        Gvt = np.stack([-G.sig * G.tv[n, ntau - j].conj().T for j in range(ntau + 1)])
        GA = np.stack([g_adv(j, n) for j in range(k + 1)])
        for m in range(1, k + 1):
            acc = -1j * htau * np.einsum("j,jab,jbc->ac", wt, Sigma.tv[m], Gvt)
            SL = np.stack([s_les(m, j) for j in range(k + 1)])
            acc += h * np.einsum("j,jab,jbc->ac", s[n], SL, GA)
            qles[n, m] = -1j * acc
    rhs = np.zeros((k * d, (k + 1) * d), dtype=complex)
    y0s = np.zeros((k + 1, d, d), dtype=complex)
    for n in range(k + 1):
        y0s[n] = -G.tv[n, 0].conj().T
    for m in range(1, k + 1):
        block = qles[:, m] - np.einsum("ab,nbc->nac", M0[m - 1], y0s)
        rhs[(m - 1) * d:m * d] = block.transpose(1, 0, 2).reshape(d, -1)
    sol = np.linalg.solve(Mblk, rhs)
    ymat = sol.reshape(k, d, k + 1, d).transpose(2, 0, 1, 3)  # [n, m-1, :, :]
    for n in range(k + 1):
        G.les[tri_index(n, 0)] = y0s[n]
        for m in range(1, n + 1):
            G.les[tri_index(n, m)] = ymat[n, m - 1]


def _timestep(n, G, Sigma, mu, eps, beta, h, k, parallel: bool) -> None:
    if n <= k:
        raise ValueError("time stepping requires n > k (use dyson_start)")
    if Sigma.nt < n or eps.nt < n:
        raise ValueError("Sigma and eps must be known up to n")
    s, Sig_t, om, R, I3, D, a = _tables(k)
    htau = beta / G.ntau
    epsm = _eps_shifted(eps, mu, max(G.nt, n))
    if parallel:
        backend.dyson_ret_row_para(n, h, k, s, Sig_t, om, D, a, G.ret, Sigma.ret, epsm)
    else:
        backend.dyson_ret_row(n, h, k, s, Sig_t, om, D, a, G.ret, Sigma.ret, epsm)
    backend.dyson_tv_row(n, h, htau, k, s, Sig_t, om, R, a, G.tv, G.mat,
                         Sigma.ret, Sigma.tv, epsm, float(G.sig))
    if parallel:
        backend.dyson_les_col_para(n, h, htau, k, s, Sig_t, om, R, D, a,
                                   G.ret, G.les, G.tv, Sigma.ret, Sigma.les,
                                   Sigma.tv, epsm, float(G.sig))
    else:
        backend.dyson_les_col(n, h, htau, k, s, Sig_t, om, R, D, a,
                              G.ret, G.les, G.tv, Sigma.ret, Sigma.les,
                              Sigma.tv, epsm, float(G.sig))


def dyson_timestep(n: int, G: HermMatrix, Sigma: HermMatrix, mu: float,
                   eps: ContourScalarFn, beta: float, h: float, k: int) -> None:
    """Serial time step: fill slice n from slices -1..n-1 (variant A)."""
    _timestep(n, G, Sigma, mu, eps, beta, h, k, parallel=False)


def dyson_timestep_parallel(n: int, G: HermMatrix, Sigma: HermMatrix, mu: float,
                            eps: ContourScalarFn, beta: float, h: float, k: int) -> None:
    """Column-parallel time step (variant B); boundary band via variant A."""
    _timestep(n, G, Sigma, mu, eps, beta, h, k, parallel=True)


def dyson_solve(G: HermMatrix, Sigma: HermMatrix, mu: float, eps: ContourScalarFn,
                beta: float, h: float, k: int, method: str = FIXPOINT,
                parallel: bool = False, tol: float = 1e-10, maxiter: int = 8,
                oversampling: int = 10) -> None:
    """Full causal solve: Matsubara, start-up, then all time steps."""
    dyson_mat(G, Sigma, mu, eps, beta, k, method=method, tol=tol, maxiter=maxiter,
              oversampling=oversampling)
    if G.nt < 0:
        return
    dyson_start(G, Sigma, mu, eps, beta, h, k)
    step = dyson_timestep_parallel if parallel else dyson_timestep
    for n in range(k + 1, G.nt + 1):
        step(n, G, Sigma, mu, eps, beta, h, k)


def solve(G: HermMatrix, inputs: DysonInputs, parallel: bool = False) -> None:
    """dyson_solve driven by a DysonInputs bundle."""
    dyson_solve(G, inputs.Sigma, inputs.mu, inputs.eps, inputs.beta, inputs.h,
                inputs.k, method=inputs.matsubara_method, parallel=parallel,
                tol=inputs.fixpoint_tol, maxiter=inputs.fixpoint_maxiter,
                oversampling=inputs.oversampling)
