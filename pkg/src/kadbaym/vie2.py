"""Contour integral equation (1 + F) * G = Q (equivalently G * (1 + F^+) = Q).

G and Q are hermitian-symmetric; the kernel F and its hermitian conjugate
are independent inputs.  Same causal phases as the Dyson solver.
"""

from __future__ import annotations

import numpy as np

from . import backend
from .contour import ContourScalarFn, HermMatrix, init_from_matsubara, tri_index
from .fourier import component_jump, matsubara_dft, matsubara_frequencies, matsubara_idft
from .weights import build_weights

FOURIER = "fourier"
FIXPOINT = "fixpoint"

__all__ = ["vie2_mat", "vie2_start", "vie2_timestep", "vie2_solve", "Vie2Error"]


class Vie2Error(RuntimeError):
    pass


def _sampled_compatibility_check(F, Fcc, Q, beta, k, rtol=1e-6):
    """Warn when the sampled Matsubara compatibility F*Q != Q*Fcc."""
    import warnings

    from . import backend
    from .weights import build_weights

    W = build_weights(k)
    htau = beta / F.ntau
    ident = np.eye(F.d).astype(complex)
    lhs = backend.conv_mat(F.mat, Q.mat, ident, float(F.sig), htau, k,
                           W.s, W.Sig, W.omega, W.R)
    rhs = backend.conv_mat(Q.mat, Fcc.mat, ident, float(Q.sig), htau, k,
                           W.s, W.Sig, W.omega, W.R)
    idx = np.linspace(0, F.ntau, 5).astype(int)
    dev = float(np.abs(lhs[idx] - rhs[idx]).max())
    scale = max(1.0, float(np.abs(lhs[idx]).max()))
    if dev > rtol * scale:
        warnings.warn(f"vie2 compatibility F*Q = Q*F^+ violated by {dev:.2e} "
                      "(sampled); the hermitian-solution assumption may fail")


def _tables(k):
    W = build_weights(k)
    return W.s, W.Sig, W.omega, W.R, W.I, W.D, W.a


def vie2_mat(G: HermMatrix, F: HermMatrix, Fcc: HermMatrix, Q: HermMatrix,
             beta: float, k: int, method: str = FIXPOINT, oversampling: int = 10,
             tol: float = 1e-10, maxiter: int = 8, debug_check: bool = False) -> None:
    """Matsubara slice of (1 + F) * G = Q.

    FOURIER solves (1 + F(iw)) G(iw) = Q(iw) per frequency; FIXPOINT refines
    with Newton iterations on the k-th order residual.  A hermitian solution
    exists when F*Q = Q*Fcc; that compatibility is not enforced (cost), but
    debug_check=True samples it on the Matsubara slice and warns.
    """
    if debug_check:
        _sampled_compatibility_check(F, Fcc, Q, beta, k)
    d = G.d
    nw = oversampling * G.ntau
    w = matsubara_frequencies(G.sig, beta, nw)
    fhat = matsubara_dft(F.mat, beta, G.sig, nw)
    qhat = matsubara_dft(Q.mat, beta, G.sig, nw)
    op = np.broadcast_to(np.eye(d), fhat.shape) + fhat
    try:
        ghat = np.linalg.solve(op, qhat)
    except np.linalg.LinAlgError as exc:
        raise Vie2Error(f"1 + F(iw) singular at some frequency: {exc}") from exc
    jq = component_jump(Q.mat, Q.sig)
    G.mat[:] = matsubara_idft(ghat, beta, G.sig, G.ntau, jq)
    if method == FOURIER:
        return
    if method != FIXPOINT:
        raise ValueError(f"unknown Matsubara method {method!r}")

    s, Sig_t, om, R, I3, D, a = _tables(k)
    htau = beta / G.ntau
    ident = np.eye(d).astype(complex)
    zero_jump = np.zeros((d, d))
    scale = max(1.0, float(np.abs(G.mat).mean()))
    res_prev = np.inf
    for it in range(maxiter):
        R_tau = G.mat + backend.conv_mat(F.mat, G.mat, ident, float(F.sig),
                                         htau, k, s, Sig_t, om, R) - Q.mat
        res = float(np.abs(R_tau).mean())
        if res < tol * scale:
            return
        if res > 0.99 * res_prev:  # stagnation: inner solves no longer help
            break
        res_prev = res
        rhat = matsubara_dft(R_tau, beta, G.sig, nw, jump=zero_jump)
        dghat = np.linalg.solve(op, rhat)
        G.mat[:] -= matsubara_idft(dghat, beta, G.sig, G.ntau, zero_jump)
    R_tau = G.mat + backend.conv_mat(F.mat, G.mat, ident, float(F.sig),
                                     htau, k, s, Sig_t, om, R) - Q.mat
    res = float(np.abs(R_tau).mean())
    if res > tol * scale:
        raise Vie2Error(f"Matsubara fixpoint did not converge: residual {res:.3e}")


def vie2_start(G: HermMatrix, F: HermMatrix, Fcc: HermMatrix, Q: HermMatrix,
               beta: float, h: float, k: int) -> None:
    """Start-up: fill slices 0..k of (1 + F) * G = Q."""
    d = G.d
    if G.nt < k:
        raise ValueError("start-up needs nt >= k")
    s, Sig_t, om, R, I3, D, a = _tables(k)
    htau = beta / G.ntau
    ident = np.eye(d)
    init_from_matsubara(G)

    def f_ret(i, j):
        if j <= i:
            return F.ret[tri_index(i, j)]
        return -Fcc.ret[tri_index(j, i)].conj().T

    # --- retarded block, column by column; diagonal G^R(n,n) = Q^R(n,n)
    for n in range(k + 1):
        G.ret[tri_index(n, n)] = Q.ret[tri_index(n, n)]
    for m in range(k):
        nun = k - m
        M = np.zeros((k + 1, k + 1, d, d), dtype=complex)
        for n in range(m + 1, k + 1):
            for l in range(k + 1):
                M[n, l] = h * I3[m, n, l] * f_ret(n, l)
                if n == l:
                    M[n, l] += ident
        big = np.zeros((nun * d, nun * d), dtype=complex)
        rhs = np.zeros((nun * d, d), dtype=complex)
        for n in range(m + 1, k + 1):
            r = n - (m + 1)
            acc = Q.ret[tri_index(n, m)].astype(complex).copy()
            for l in range(m + 1):
                yl = (Q.ret[tri_index(m, m)] if l == m
                      else -G.ret[tri_index(m, l)].conj().T)
                acc -= M[n, l] @ yl
            rhs[r * d:(r + 1) * d] = acc
            for l in range(m + 1, k + 1):
                big[r * d:(r + 1) * d, (l - m - 1) * d:(l - m) * d] = M[n, l]
        sol = np.linalg.solve(big, rhs)
        for n in range(m + 1, k + 1):
            r = n - (m + 1)
            G.ret[tri_index(n, m)] = sol[r * d:(r + 1) * d]

    # --- shared VIE start-block matrix (kernel F^R)
    Mblk = np.zeros((k * d, k * d), dtype=complex)
    M0 = np.zeros((k, d, d), dtype=complex)
    for n in range(1, k + 1):
        M0[n - 1] = h * s[n, 0] * f_ret(n, 0)
        for l in range(1, k + 1):
            M = h * s[n, l] * f_ret(n, l)
            if n == l:
                M = M + ident
            Mblk[(n - 1) * d:n * d, (l - 1) * d:l * d] = M

    # --- left-mixing start
    ntau = G.ntau
    qtv = np.zeros((k + 1, ntau + 1, d, d), dtype=complex)
    for n in range(1, k + 1):
        qtv[n] = Q.tv[n] - backend.tv_source(n, htau, k, s, Sig_t, om, R,
                                             F.tv[n], G.mat, ident.astype(complex),
                                             float(G.sig))
    y0 = G.tv[0]
    rhs = np.zeros((k * d, (ntau + 1) * d), dtype=complex)
    for n in range(1, k + 1):
        block = qtv[n] - np.einsum("ab,mbc->mac", M0[n - 1], y0)
        rhs[(n - 1) * d:n * d] = block.transpose(1, 0, 2).reshape(d, -1)
    sol = np.linalg.solve(Mblk, rhs)
    for n in range(1, k + 1):
        G.tv[n] = sol[(n - 1) * d:n * d].reshape(d, ntau + 1, d).transpose(1, 0, 2)

    # --- lesser start per column n
    def f_les(i, j):
        if i <= j:
            return F.les[tri_index(j, i)]
        return -Fcc.les[tri_index(i, j)].conj().T

    def g_adv(j, i):
        if j <= i:
            return G.ret[tri_index(i, j)].conj().T
        return -G.ret[tri_index(j, i)]

    wt = backend.greg_row(k, s, Sig_t, om, ntau)
    qles = np.zeros((k + 1, k + 1, d, d), dtype=complex)
    for n in range(k + 1):
        Gvt = np.stack([-G.sig * G.tv[n, ntau - j].conj().T for j in range(ntau + 1)])
        GA = np.stack([g_adv(j, n) for j in range(k + 1)])
        for m in range(1, k + 1):
            acc = -1j * htau * np.einsum("j,jab,jbc->ac", wt, F.tv[m], Gvt)
            FL = np.stack([f_les(m, j) for j in range(k + 1)])
            acc += h * np.einsum("j,jab,jbc->ac", s[n], FL, GA)
            qles[n, m] = (Q.les[tri_index(n, m)] if m <= n
                          else -Q.les[tri_index(m, n)].conj().T) - acc
    rhs = np.zeros((k * d, (k + 1) * d), dtype=complex)
    y0s = np.zeros((k + 1, d, d), dtype=complex)
    for n in range(k + 1):
        y0s[n] = -G.tv[n, 0].conj().T
    for m in range(1, k + 1):
        block = qles[:, m] - np.einsum("ab,nbc->nac", M0[m - 1], y0s)
        rhs[(m - 1) * d:m * d] = block.transpose(1, 0, 2).reshape(d, -1)
    sol = np.linalg.solve(Mblk, rhs)
    ymat = sol.reshape(k, d, k + 1, d).transpose(2, 0, 1, 3)
    for n in range(k + 1):
        G.les[tri_index(n, 0)] = y0s[n]
        for m in range(1, n + 1):
            G.les[tri_index(n, m)] = ymat[n, m - 1]


def vie2_timestep(n: int, G: HermMatrix, F: HermMatrix, Fcc: HermMatrix,
                  Q: HermMatrix, beta: float, h: float, k: int,
                  lesser_variant: str = "serial") -> None:
    """Fill slice n of (1 + F) * G = Q from slices -1..n-1.

    lesser_variant 'serial' steps the direct equation forward in the first
    argument; 'conjugate' solves the conjugate equation independently per
    row (the parallel option).
    """
    if n <= k:
        raise ValueError("time stepping requires n > k (use vie2_start)")
    s, Sig_t, om, R, I3, D, a = _tables(k)
    htau = beta / G.ntau
    qret = np.ascontiguousarray(Q.ret[tri_index(n, 0): tri_index(n, n) + 1]).astype(complex)
    backend.vie2_ret_row(n, h, k, s, Sig_t, om, G.ret, F.ret, qret)
    backend.vie2_tv_row(n, h, htau, k, s, Sig_t, om, R, G.tv, G.mat,
                        F.ret, F.tv, Q.tv[n].astype(complex), float(G.sig))
    qles = np.ascontiguousarray(Q.les[tri_index(n, 0): tri_index(n, n) + 1]).astype(complex)
    if lesser_variant == "serial":
        backend.vie2_les_col(n, h, htau, k, s, Sig_t, om, R, G.ret, G.les, G.tv,
                             F.ret, F.les, Fcc.les, F.tv, qles, float(G.sig))
    elif lesser_variant == "conjugate":
        backend.vie2_les_col_para(n, h, htau, k, s, Sig_t, om, R, G.ret, G.les, G.tv,
                                  F.ret, F.les, Fcc.les, F.tv, qles, float(G.sig))
    else:
        raise ValueError("lesser_variant must be 'serial' or 'conjugate'")


def vie2_solve(G: HermMatrix, F: HermMatrix, Fcc: HermMatrix, Q: HermMatrix,
               beta: float, h: float, k: int, method: str = FIXPOINT,
               lesser_variant: str = "serial") -> None:
    """Full causal solve of (1 + F) * G = Q."""
    vie2_mat(G, F, Fcc, Q, beta, k, method=method)
    if G.nt < 0:
        return
    vie2_start(G, F, Fcc, Q, beta, h, k)
    for n in range(k + 1, G.nt + 1):
        vie2_timestep(n, G, F, Fcc, Q, beta, h, k, lesser_variant=lesser_variant)
