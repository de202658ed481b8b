"""Contour convolution C = A*f*B and derived reductions.

The convolution is assembled per Keldysh component from Gregory /
boundary-weight quadratures.  No hermitian symmetry is assumed: the
conjugate functions must be passed explicitly, so that off-triangle values
of A and B can be reconstructed (pass the function itself if it is
hermitian-symmetric).
"""

from __future__ import annotations

import numpy as np

from . import backend
from .contour import ContourScalarFn, HermMatrix, TimeSlice, tri_index
from .weights import build_weights

__all__ = [
    "conv_matsubara",
    "conv_timestep",
    "conv_full",
    "response_convolution",
    "correlation_energy",
]


def _tables(k):
    W = build_weights(k)
    return W.s, W.Sig, W.omega, W.R, W.I, W.D, W.a


def _fvals(f, A: HermMatrix, nt):
    if f is None:
        fv = np.zeros((nt + 2, A.d, A.d), dtype=complex)
        fv[:] = np.eye(A.d)
        return fv
    if isinstance(f, ContourScalarFn):
        if f.nt < nt:
            raise ValueError("f must provide values up to nt")
        return np.ascontiguousarray(f.values[: nt + 2])
    raise TypeError("f must be a ContourScalarFn or None")


def _check_compat(*fns):
    ref = fns[0]
    for g in fns[1:]:
        if (g.ntau, g.d) != (ref.ntau, ref.d):
            raise ValueError("contour functions have incompatible grids")
        if g.sig != ref.sig:
            raise ValueError("statistics mismatch: the contour split carries "
                             "a single xi factor, operands must share it")


def conv_matsubara(A: HermMatrix, B: HermMatrix, f=None, *, beta: float, k: int):
    """Matsubara slice of A*f*B as an (ntau+1, d, d) array."""
    _check_compat(A, B)
    s, Sig, om, R, I3, D, a = _tables(k)
    htau = beta / A.ntau
    fm1 = _fvals(f, A, -1)[0]
    return backend.conv_mat(A.mat, B.mat, fm1, float(A.sig), htau, k, s, Sig, om, R)


def conv_timestep(n: int, A: HermMatrix, Acc: HermMatrix, B: HermMatrix, Bcc: HermMatrix,
                  f=None, *, beta: float, h: float, k: int) -> TimeSlice:
    """Time slice T[C]_n of C = A*f*B (n = -1 gives the Matsubara slice)."""
    _check_compat(A, Acc, B, Bcc)
    out = TimeSlice(n, A.ntau, A.d, A.sig)
    if n == -1:
        out.mat[:] = conv_matsubara(A, B, f, beta=beta, k=k)
        return out
    if A.nt < max(n, k) or B.nt < max(n, k):
        raise ValueError("operands must be known up to max(n, k)")
    s, Sig, om, R, I3, D, a = _tables(k)
    htau = beta / A.ntau
    fv = _fvals(f, A, max(n, k))
    fm1 = fv[0]
    out.ret[:] = backend.conv_ret_row(n, h, k, s, Sig, om, I3,
                                      A.ret, Acc.ret, B.ret, Bcc.ret, fv)
    out.tv[:] = backend.conv_tv_row(n, h, htau, k, s, Sig, om, I3, R,
                                    A.ret, Acc.ret, A.tv, B.tv, B.mat, fv, fm1,
                                    float(B.sig))
    out.les[:] = backend.conv_les_col(n, h, htau, k, s, Sig, om, I3, R,
                                      A.ret, Acc.ret, A.les, Acc.les, A.tv,
                                      B.ret, Bcc.ret, B.les, Bcc.les, Bcc.tv,
                                      fv, fm1, float(B.sig))
    return out


def conv_full(A: HermMatrix, Acc: HermMatrix, B: HermMatrix, Bcc: HermMatrix,
              f=None, *, beta: float, h: float, k: int) -> HermMatrix:
    """Full two-time convolution C = A*f*B on the storage domain."""
    _check_compat(A, Acc, B, Bcc)
    nt = min(A.nt, B.nt)
    C = HermMatrix(nt, A.ntau, A.d, A.sig)
    C.mat[:] = conv_matsubara(A, B, f, beta=beta, k=k)
    for n in range(nt + 1):
        C.set_timestep(n, conv_timestep(n, A, Acc, B, Bcc, f, beta=beta, h=h, k=k))
    return C


def response_convolution(A: HermMatrix, f: ContourScalarFn, n: int, *,
                         beta: float, h: float, k: int, Acc: HermMatrix | None = None):
    """c(t_n) = int_C A(t_n, s) f(s) ds as a d x d matrix.

    For n = -1 the full Matsubara slice c(-i tau_m), m = 0..ntau, is
    returned (equivalent to conv_matsubara with B = 1).
    """
    if f.d != A.d:
        raise ValueError("dimension mismatch")
    s, Sig, om, R, I3, D, a = _tables(k)
    htau = beta / A.ntau
    if n == -1:
        ident = HermMatrix(-1, A.ntau, A.d, A.sig)
        ident.mat[:] = np.eye(A.d)
        return backend.conv_mat(A.mat, ident.mat, f[-1], float(A.sig), htau,
                                k, s, Sig, om, R)
    if A.nt < max(n, k):
        raise ValueError("A must be known up to max(n, k)")
    # real-time part: int_0^{t_n} A^R(n, j) f_j dt
    out = np.zeros((A.d, A.d), dtype=complex)
    if n > k:
        w = backend.greg_row(k, s, Sig, om, n)
        arow = A.ret[tri_index(n, 0): tri_index(n, n) + 1]
        out += h * np.einsum("j,jab,jbc->ac", w, arow, f.values[1: n + 2])
    else:
        cc = Acc if Acc is not None else A
        AR = np.stack([(A.ret[tri_index(n, j)] if j <= n else -cc.ret[tri_index(j, n)].conj().T)
                       for j in range(k + 1)])
        out += h * np.einsum("j,jab,jbc->ac", s[n], AR, f.values[1: k + 2])
    # Matsubara part: -i int_0^beta A^rceil(n, tau) f(0^-) dtau
    wt = backend.greg_row(k, s, Sig, om, A.ntau)
    out += -1j * htau * np.einsum("m,mab,bc->ac", wt, A.tv[n], f[-1])
    return out


def correlation_energy(n: int, G: HermMatrix, Sigma: HermMatrix, *,
                       beta: float, h: float, k: int) -> float:
    """E_corr(t_n) = 1/2 Im Tr [Sigma * G]^<(t_n, t_n).

    Both operands are taken hermitian-symmetric (physical G and Sigma).
    """
    _check_compat(G, Sigma)
    if n < 0:
        raise ValueError("correlation energy is defined for n >= 0")
    s, Sig_t, om, R, I3, D, a = _tables(k)
    htau = beta / G.ntau
    ntau = G.ntau
    d = G.d

    def s_les(i, j):  # Sigma^<(i, j), hermitian-symmetric reconstruction
        if i <= j:
            return Sigma.les[tri_index(j, i)]
        return -Sigma.les[tri_index(i, j)].conj().T

    def s_ret(i, j):  # smooth continuation of Sigma^R
        if j <= i:
            return Sigma.ret[tri_index(i, j)]
        return -Sigma.ret[tri_index(j, i)].conj().T

    def g_adv(j, i):  # ~G^A(j, i): adjoint continuation of G^R
        if j <= i:
            return G.ret[tri_index(i, j)].conj().T
        return -G.ret[tri_index(j, i)]

    def g_les(i, j):
        if i <= j:
            return G.les[tri_index(j, i)]
        return -G.les[tri_index(i, j)].conj().T

    # C^<(n, n) = C1 + C2 + C3 with A = Sigma, B = G
    acc = np.zeros((d, d), dtype=complex)
    # C3: -i int_0^beta S^rceil(n, tau) G^lceil(tau, n)
    wt = backend.greg_row(k, s, Sig_t, om, ntau)
    Gvt = np.stack([-G.sig * G.tv[n, ntau - j].conj().T for j in range(ntau + 1)])
    acc += -1j * htau * np.einsum("j,jab,jbc->ac", wt, Sigma.tv[n], Gvt)
    # C2: int_0^{n h} S^<(n, j) G^A(j, n)
    jmax = n if n > k else k
    w2 = backend.greg_row(k, s, Sig_t, om, n)
    SL = np.stack([s_les(n, j) for j in range(jmax + 1)])
    GA = np.stack([g_adv(j, n) for j in range(jmax + 1)])
    acc += h * np.einsum("j,jab,jbc->ac", w2[: jmax + 1], SL, GA)
    # C1: int_0^{n h} S^R(n, j) G^<(j, n)
    SR = np.stack([s_ret(n, j) for j in range(jmax + 1)])
    GL = np.stack([g_les(j, n) for j in range(jmax + 1)])
    acc += h * np.einsum("j,jab,jbc->ac", w2[: jmax + 1], SR, GL)
    return 0.5 * float(np.imag(np.trace(acc)))
