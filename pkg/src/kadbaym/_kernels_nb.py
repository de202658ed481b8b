"""Numba-compiled hot kernels (mirrors _kernels_np exactly).

Tight loops over the triangular storages with hand-rolled small-matrix
solves; semantics and signatures match the numpy lane, which remains the
reference implementation.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

_OPTS = dict(cache=True, nogil=True)
_INL = dict(cache=True, nogil=True, inline="always")


@njit(**_INL)
def _tri(n, j):
    return n * (n + 1) // 2 + j


@njit(**_INL)
def greg_w(k, s, Sig, om, n, j):
    if n <= k:
        if j <= k:
            return s[n, j]
        return 0.0
    if n <= 2 * k + 1:
        if j <= k:
            return Sig[n - k - 1, j]
        return om[n - j]
    if j <= k:
        return om[j]
    if j >= n - k:
        return om[n - j]
    return 1.0


@njit(**_OPTS)
def _greg_row(k, s, Sig, om, n):
    if n <= k:
        return s[n].copy()
    row = np.ones(n + 1)
    if n <= 2 * k + 1:
        for j in range(k + 1):
            row[j] = Sig[n - k - 1, j]
        for j in range(k + 1, n + 1):
            row[j] = om[n - j]
    else:
        for j in range(k + 1):
            row[j] = om[j]
            row[n - j] = om[j]
    return row


@njit(**_OPTS)
def _gauss_solve(A, B):
    """Solve A X = B in place (partial pivoting); A and B are overwritten,
    the solution lands in B."""
    n = A.shape[0]
    m = B.shape[1]
    for col in range(n):
        piv = col
        best = abs(A[col, col].real) + abs(A[col, col].imag)
        for r in range(col + 1, n):
            cand = abs(A[r, col].real) + abs(A[r, col].imag)
            if cand > best:
                best = cand
                piv = r
        if piv != col:
            for c in range(col, n):
                tmp = A[col, c]
                A[col, c] = A[piv, c]
                A[piv, c] = tmp
            for c in range(m):
                tmp = B[col, c]
                B[col, c] = B[piv, c]
                B[piv, c] = tmp
        inv = 1.0 / A[col, col]
        for r in range(col + 1, n):
            f = A[r, col] * inv
            if f != 0:
                for c in range(col + 1, n):
                    A[r, c] -= f * A[col, c]
                for c in range(m):
                    B[r, c] -= f * B[col, c]
    for col in range(n - 1, -1, -1):
        inv = 1.0 / A[col, col]
        for c in range(m):
            acc = B[col, c]
            for r in range(col + 1, n):
                acc -= A[col, r] * B[r, c]
            B[col, c] = acc * inv
    return B


@njit(**_OPTS)
def _solve_left_nb(A, B):
    return _gauss_solve(A.copy(), B.copy())


@njit(**_OPTS)
def _solve_right_nb(A, B):
    # X A = B  ->  A^T X^T = B^T
    return np.ascontiguousarray(_gauss_solve(A.T.copy(), B.T.copy()).T)


@njit(**_INL)
def _ret_tilde_nb(ret, cc_ret, n, j, d):
    out = np.empty((d, d), dtype=np.complex128)
    if j <= n:
        src = ret[_tri(n, j)]
        for a in range(d):
            for b in range(d):
                out[a, b] = src[a, b]
    else:
        src = cc_ret[_tri(j, n)]
        for a in range(d):
            for b in range(d):
                out[a, b] = -np.conj(src[b, a])
    return out


@njit(**_INL)
def _les_val_nb(les, cc_les, i, j, d):
    out = np.empty((d, d), dtype=np.complex128)
    if i <= j:
        src = les[_tri(j, i)]
        for a in range(d):
            for b in range(d):
                out[a, b] = src[a, b]
    else:
        src = cc_les[_tri(i, j)]
        for a in range(d):
            for b in range(d):
                out[a, b] = -np.conj(src[b, a])
    return out


@njit(**_INL)
def _ret_tilde_to(buf, ret, cc_ret, n, j, d):
    if j <= n:
        src = ret[_tri(n, j)]
        for a in range(d):
            for b in range(d):
                buf[a, b] = src[a, b]
    else:
        src = cc_ret[_tri(j, n)]
        for a in range(d):
            for b in range(d):
                buf[a, b] = -np.conj(src[b, a])


@njit(**_INL)
def _les_val_to(buf, les, cc_les, i, j, d):
    if i <= j:
        src = les[_tri(j, i)]
        for a in range(d):
            for b in range(d):
                buf[a, b] = src[a, b]
    else:
        src = cc_les[_tri(i, j)]
        for a in range(d):
            for b in range(d):
                buf[a, b] = -np.conj(src[b, a])


@njit(**_INL)
def _acc_ab(out, w, A, B, d):
    """out += w * A @ B for (d,d) blocks."""
    for a in range(d):
        for c in range(d):
            acc = 0.0 + 0.0j
            for b in range(d):
                acc += A[a, b] * B[b, c]
            out[a, c] += w * acc


# --------------------------------------------------------------- matsubara

@njit(**_OPTS)
def conv_mat(Amat, Bmat, fm1, sig_a, htau, k, s, Sig, om, R):
    ntau = Amat.shape[0] - 1
    d = Amat.shape[1]
    AF = np.empty_like(Amat)
    for m in range(ntau + 1):
        for a in range(d):
            for c in range(d):
                acc = 0.0 + 0.0j
                for b in range(d):
                    acc += Amat[m, a, b] * fm1[b, c]
                AF[m, a, c] = acc
    out = np.zeros((ntau + 1, d, d), dtype=np.complex128)
    for m in range(ntau + 1):
        if m <= k:
            for j in range(k + 1):
                for l in range(k + 1):
                    _acc_ab(out[m], R[m, j, l], AF[j], Bmat[l], d)
        else:
            for l in range(m + 1):
                _acc_ab(out[m], greg_w(k, s, Sig, om, m, l), AF[m - l], Bmat[l], d)
        mm = ntau - m
        if mm <= k:
            for j in range(k + 1):
                for l in range(k + 1):
                    _acc_ab(out[m], sig_a * R[mm, j, l], AF[ntau - j], Bmat[ntau - l], d)
        else:
            for l in range(mm + 1):
                _acc_ab(out[m], sig_a * greg_w(k, s, Sig, om, mm, l), AF[ntau - l],
                        Bmat[m + l], d)
    for m in range(ntau + 1):
        for a in range(d):
            for b in range(d):
                out[m, a, b] *= htau
    return out


# ------------------------------------------------- convolution, real time

@njit(**_OPTS)
def conv_ret_row(n, h, k, s, Sig, om, I3, Aret, Acc_ret, Bret, Bcc_ret, fvals):
    d = fvals.shape[1]
    if d == 1 and n > k:
        base = _tri(n, 0)
        out1 = np.zeros(n + 1, dtype=np.complex128)
        af = np.empty(n + 1, dtype=np.complex128)
        for j in range(n + 1):
            af[j] = Aret[base + j, 0, 0] * fvals[j + 1, 0, 0]
        for m in range(n + 1):
            nm = n - m
            acc = 0.0 + 0.0j
            if nm > k:
                for j in range(m, n + 1):
                    acc += _greg_w_scalar(k, s, Sig, om, nm, j - m) * af[j] \
                        * Bret[_tri(j, m), 0, 0]
            else:
                for j in range(k + 1):
                    if n - j >= m:
                        bv = Bret[_tri(n - j, m), 0, 0]
                    else:
                        bv = -np.conj(Bcc_ret[_tri(m, n - j), 0, 0])
                    acc += s[nm, j] * af[n - j] * bv
            out1[m] = h * acc
        return out1.reshape(n + 1, 1, 1).copy()
    out = np.zeros((n + 1, d, d), dtype=np.complex128)
    if n <= k:
        AF = np.empty((k + 1, d, d), dtype=np.complex128)
        for j in range(k + 1):
            At = _ret_tilde_nb(Aret, Acc_ret, n, j, d)
            for a in range(d):
                for c in range(d):
                    acc = 0.0 + 0.0j
                    for b in range(d):
                        acc += At[a, b] * fvals[j + 1, b, c]
                    AF[j, a, c] = acc
        for m in range(n + 1):
            for j in range(k + 1):
                Bt = _ret_tilde_nb(Bret, Bcc_ret, j, m, d)
                _acc_ab(out[m], I3[m, n, j], AF[j], Bt, d)
        for m in range(n + 1):
            for a in range(d):
                for b in range(d):
                    out[m, a, b] *= h
        return out
    base = _tri(n, 0)
    AF = np.empty((n + 1, d, d), dtype=np.complex128)
    for j in range(n + 1):
        for a in range(d):
            for c in range(d):
                acc = 0.0 + 0.0j
                for b in range(d):
                    acc += Aret[base + j, a, b] * fvals[j + 1, b, c]
                AF[j, a, c] = acc
    for m in range(n + 1):
        nm = n - m
        if nm > k:
            for j in range(m, n + 1):
                _acc_ab(out[m], greg_w(k, s, Sig, om, nm, j - m), AF[j],
                        Bret[_tri(j, m)], d)
        else:
            for j in range(k + 1):
                Bt = _ret_tilde_nb(Bret, Bcc_ret, n - j, m, d)
                _acc_ab(out[m], s[nm, j], AF[n - j], Bt, d)
    for m in range(n + 1):
        for a in range(d):
            for b in range(d):
                out[m, a, b] *= h
    return out


@njit(**_OPTS)
def _greg_w_scalar(k, s, Sig, om, n, j):
    if n <= k:
        return s[n, j] if j <= k else 0.0
    if n <= 2 * k + 1:
        return Sig[n - k - 1, j] if j <= k else om[n - j]
    if j <= k:
        return om[j]
    if j >= n - k:
        return om[n - j]
    return 1.0


@njit(**_OPTS)
def _tv_source_scalar(htau, k, s, Sig, om, R, af, bm, sig_b):
    """d = 1 fast path of tv_source on flat complex arrays."""
    ntau = bm.shape[0] - 1
    out = np.zeros(ntau + 1, dtype=np.complex128)
    for m in range(ntau + 1):
        acc = 0.0 + 0.0j
        # integral over [0, m h]: weights w[m, l], integrand af[m-l] bm[ntau-l]
        if m <= k:
            for j in range(k + 1):
                bmj = bm[ntau - j]
                for l in range(k + 1):
                    acc += R[m, j, l] * af[l] * bmj
        elif m <= 2 * k + 1:
            for l in range(k + 1):
                acc += Sig[m - k - 1, l] * af[m - l] * bm[ntau - l]
            for l in range(k + 1, m + 1):
                acc += om[m - l] * af[m - l] * bm[ntau - l]
        else:
            for l in range(k + 1):
                acc += om[l] * af[m - l] * bm[ntau - l]
            for l in range(k + 1, m - k):
                acc += af[m - l] * bm[ntau - l]
            for l in range(m - k, m + 1):
                acc += om[m - l] * af[m - l] * bm[ntau - l]
        acc *= sig_b
        # integral over [m h, beta]: weights w[ntau-m, l], integrand af[m+l] bm[l]
        mm = ntau - m
        acc2 = 0.0 + 0.0j
        if mm <= k:
            for j in range(k + 1):
                bmj = bm[j]
                for l in range(k + 1):
                    acc2 += R[mm, j, l] * af[ntau - l] * bmj
        elif mm <= 2 * k + 1:
            for l in range(k + 1):
                acc2 += Sig[mm - k - 1, l] * af[m + l] * bm[l]
            for l in range(k + 1, mm + 1):
                acc2 += om[mm - l] * af[m + l] * bm[l]
        else:
            for l in range(k + 1):
                acc2 += om[l] * af[m + l] * bm[l]
            for l in range(k + 1, mm - k):
                acc2 += af[m + l] * bm[l]
            for l in range(mm - k, mm + 1):
                acc2 += om[mm - l] * af[m + l] * bm[l]
        out[m] = htau * (acc + acc2)
    return out


@njit(**_OPTS)
def tv_source(n, htau, k, s, Sig, om, R, Atv_n, Bmat, fm1, sig_b):
    ntau = Bmat.shape[0] - 1
    d = Bmat.shape[1]
    if d == 1:
        af = (Atv_n[:, 0, 0] * fm1[0, 0]).copy()
        out1 = _tv_source_scalar(htau, k, s, Sig, om, R, af, Bmat[:, 0, 0].copy(), sig_b)
        return out1.reshape(ntau + 1, 1, 1).copy()
    AF = np.empty_like(Atv_n)
    for m in range(ntau + 1):
        for a in range(d):
            for c in range(d):
                acc = 0.0 + 0.0j
                for b in range(d):
                    acc += Atv_n[m, a, b] * fm1[b, c]
                AF[m, a, c] = acc
    out = np.zeros((ntau + 1, d, d), dtype=np.complex128)
    for m in range(ntau + 1):
        if m <= k:
            for j in range(k + 1):
                for l in range(k + 1):
                    _acc_ab(out[m], sig_b * R[m, j, l], AF[l], Bmat[ntau - j], d)
        else:
            for l in range(m + 1):
                _acc_ab(out[m], sig_b * greg_w(k, s, Sig, om, m, l), AF[m - l],
                        Bmat[ntau - l], d)
        mm = ntau - m
        if mm <= k:
            for j in range(k + 1):
                for l in range(k + 1):
                    _acc_ab(out[m], R[mm, j, l], AF[ntau - l], Bmat[j], d)
        else:
            for l in range(mm + 1):
                _acc_ab(out[m], greg_w(k, s, Sig, om, mm, l), AF[m + l], Bmat[l], d)
    for m in range(ntau + 1):
        for a in range(d):
            for b in range(d):
                out[m, a, b] *= htau
    return out


@njit(**_OPTS)
def conv_tv_row(n, h, htau, k, s, Sig, om, I3, R,
                Aret, Acc_ret, Atv, Btv, Bmat, fvals, fm1, sig_b):
    ntau = Bmat.shape[0] - 1
    d = Bmat.shape[1]
    if d == 1:
        out1 = _tv_source_scalar(htau, k, s, Sig, om, R,
                                 (Atv[n, :, 0, 0] * fm1[0, 0]).copy(),
                                 Bmat[:, 0, 0].copy(), sig_b)
        jmax1 = n if n > k else k
        base = _tri(n, 0)
        for j in range(jmax1 + 1):
            if j <= n:
                aj = Aret[base + j, 0, 0]
            else:
                aj = -np.conj(Acc_ret[_tri(j, n), 0, 0])
            wj = h * _greg_w_scalar(k, s, Sig, om, n, j) * aj * fvals[j + 1, 0, 0]
            for m in range(ntau + 1):
                out1[m] += wj * Btv[j, m, 0, 0]
        return out1.reshape(ntau + 1, 1, 1).copy()
    out = tv_source(n, htau, k, s, Sig, om, R, Atv[n], Bmat, fm1, sig_b)
    jmax = n if n > k else k
    AF = np.empty((jmax + 1, d, d), dtype=np.complex128)
    for j in range(jmax + 1):
        At = _ret_tilde_nb(Aret, Acc_ret, n, j, d)
        for a in range(d):
            for c in range(d):
                acc = 0.0 + 0.0j
                for b in range(d):
                    acc += At[a, b] * fvals[j + 1, b, c]
                AF[j, a, c] = acc
    w = _greg_row(k, s, Sig, om, n)
    for m in range(ntau + 1):
        for j in range(jmax + 1):
            _acc_ab(out[m], h * w[j], AF[j], Btv[j, m], d)
    return out


@njit(**_OPTS)
def conv_les_col(n, h, htau, k, s, Sig, om, I3, R,
                 Aret, Acc_ret, Ales, Acc_les, Atv,
                 Bret, Bcc_ret, Bles, Bcc_les, Bcc_tv,
                 fvals, fm1, sig_b, mmax=-1):
    ntau = Bcc_tv.shape[1] - 1
    d = fvals.shape[1]
    if mmax < 0:
        mmax = n
    if d == 1:
        nbase = _tri(n, 0)
        out1 = np.zeros(mmax + 1, dtype=np.complex128)
        # C3
        Bvt1 = np.empty(ntau + 1, dtype=np.complex128)
        for j in range(ntau + 1):
            Bvt1[j] = -sig_b * np.conj(Bcc_tv[n, ntau - j, 0, 0])
        wt = _greg_row(k, s, Sig, om, ntau)
        f0 = fm1[0, 0]
        for m in range(mmax + 1):
            acc = 0.0 + 0.0j
            for j in range(ntau + 1):
                acc += wt[j] * Atv[m, j, 0, 0] * Bvt1[j]
            out1[m] = -1j * htau * f0 * acc
        # C2
        jmax1 = n if n > k else k
        BA1 = np.empty(jmax1 + 1, dtype=np.complex128)
        for j in range(jmax1 + 1):
            if j <= n:
                BA1[j] = np.conj(Bcc_ret[_tri(n, j), 0, 0])
            else:
                BA1[j] = -Bret[_tri(j, n), 0, 0]
            BA1[j] *= _greg_w_scalar(k, s, Sig, om, n, j) * fvals[j + 1, 0, 0]
        for m in range(mmax + 1):
            acc = 0.0 + 0.0j
            for j in range(jmax1 + 1):
                if m <= j:
                    av = Ales[_tri(j, m), 0, 0]
                else:
                    av = -np.conj(Acc_les[_tri(m, j), 0, 0])
                acc += av * BA1[j]
            out1[m] += h * acc
        # C1
        for m in range(mmax + 1):
            jm = m if m > k else k
            acc = 0.0 + 0.0j
            mbase = _tri(m, 0)
            for j in range(jm + 1):
                if j <= m:
                    av = Aret[mbase + j, 0, 0]
                else:
                    av = -np.conj(Acc_ret[_tri(j, m), 0, 0])
                if j <= n:
                    bv = Bles[nbase + j, 0, 0]
                else:
                    bv = -np.conj(Bcc_les[_tri(j, n), 0, 0])
                acc += _greg_w_scalar(k, s, Sig, om, m, j) * av \
                    * fvals[j + 1, 0, 0] * bv
            out1[m] += h * acc
        return out1.reshape(mmax + 1, 1, 1).copy()
    out = np.zeros((mmax + 1, d, d), dtype=np.complex128)

    # C3
    Bvt = np.empty((ntau + 1, d, d), dtype=np.complex128)
    for j in range(ntau + 1):
        src = Bcc_tv[n, ntau - j]
        for a in range(d):
            for b in range(d):
                Bvt[j, a, b] = -sig_b * np.conj(src[b, a])
    wt = _greg_row(k, s, Sig, om, ntau)
    AFj = np.empty((d, d), dtype=np.complex128)
    for m in range(mmax + 1):
        for j in range(ntau + 1):
            for a in range(d):
                for c in range(d):
                    acc = 0.0 + 0.0j
                    for b in range(d):
                        acc += Atv[m, j, a, b] * fm1[b, c]
                    AFj[a, c] = acc
            _acc_ab(out[m], -1j * htau * wt[j], AFj, Bvt[j], d)

    # C2
    jmax = n if n > k else k
    BA = np.empty((jmax + 1, d, d), dtype=np.complex128)
    for j in range(jmax + 1):
        if j <= n:
            src = Bcc_ret[_tri(n, j)]
            for a in range(d):
                for b in range(d):
                    BA[j, a, b] = np.conj(src[b, a])
        else:
            src = Bret[_tri(j, n)]
            for a in range(d):
                for b in range(d):
                    BA[j, a, b] = -src[a, b]
    w2 = _greg_row(k, s, Sig, om, n)
    AL = np.empty((d, d), dtype=np.complex128)
    ALf = np.empty((d, d), dtype=np.complex128)
    for m in range(mmax + 1):
        for j in range(jmax + 1):
            _les_val_to(AL, Ales, Acc_les, m, j, d)
            for a in range(d):
                for c in range(d):
                    acc = 0.0 + 0.0j
                    for b in range(d):
                        acc += AL[a, b] * fvals[j + 1, b, c]
                    ALf[a, c] = acc
            _acc_ab(out[m], h * w2[j], ALf, BA[j], d)

    # C1
    At = np.empty((d, d), dtype=np.complex128)
    Af = np.empty((d, d), dtype=np.complex128)
    Bl = np.empty((d, d), dtype=np.complex128)
    for m in range(mmax + 1):
        jm = m if m > k else k
        w1 = _greg_row(k, s, Sig, om, m)
        for j in range(jm + 1):
            _ret_tilde_to(At, Aret, Acc_ret, m, j, d)
            for a in range(d):
                for c in range(d):
                    acc = 0.0 + 0.0j
                    for b in range(d):
                        acc += At[a, b] * fvals[j + 1, b, c]
                    Af[a, c] = acc
            if j <= n:
                _acc_ab(out[m], h * w1[j], Af, Bles[_tri(n, j)], d)
            else:
                _les_val_to(Bl, Bles, Bcc_les, j, n, d)
                _acc_ab(out[m], h * w1[j], Af, Bl, d)
    return out


# ------------------------------------------------------------ dyson slices

@njit(**_OPTS)
def dyson_ret_row(n, h, k, s, Sig, om, D, bdf, Gret, Sret, eps, lmax=-1):
    d = eps.shape[1]
    if lmax < 0:
        lmax = n
    y = np.zeros((lmax + 1, d, d), dtype=np.complex128)
    for a in range(d):
        y[0, a, a] = -1j

    big = np.zeros((k * d, k * d), dtype=np.complex128)
    rhs = np.zeros((k * d, d), dtype=np.complex128)
    for m in range(1, k + 1):
        kern0 = _ret_tilde_nb(Sret, Sret, n, n - m, d)  # S(n-0, n-m)
        M0 = np.zeros((d, d), dtype=np.complex128)
        for a in range(d):
            M0[a, a] = D[m, 0] / h
        wm0 = h * greg_w(k, s, Sig, om, m, 0)
        for a in range(d):
            for b in range(d):
                M0[a, b] += wm0 * 1j * kern0[a, b]
        # rhs_m = -(y0 @ M0)^T
        for a in range(d):
            for b in range(d):
                acc = 0.0 + 0.0j
                for c in range(d):
                    acc += y[0, a, c] * M0[c, b]
                rhs[(m - 1) * d + b, a] = -acc
        for l in range(1, k + 1):
            kern = _ret_tilde_nb(Sret, Sret, n - l, n - m, d)
            wml = h * greg_w(k, s, Sig, om, m, l)
            for a in range(d):
                for b in range(d):
                    val = wml * 1j * kern[a, b]
                    if a == b:
                        val += D[m, l] / h
                    if l == m:
                        val += 1j * eps[n - m + 1, a, b]
                    big[(m - 1) * d + b, (l - 1) * d + a] = val  # transposed block
    sol = _gauss_solve(big, rhs)
    lend = min(k, lmax)
    for l in range(1, lend + 1):
        for a in range(d):
            for b in range(d):
                y[l, a, b] = sol[(l - 1) * d + b, a]

    kern = np.empty((d, d), dtype=np.complex128)
    acc = np.empty((d, d), dtype=np.complex128)
    op = np.empty((d, d), dtype=np.complex128)
    for l in range(k + 1, lmax + 1):
        w = _greg_row(k, s, Sig, om, l)
        for a in range(d):
            for b in range(d):
                acc[a, b] = 0
        for j in range(1, bdf.shape[0]):
            for a in range(d):
                for b in range(d):
                    acc[a, b] -= (bdf[j] / h) * y[l - j, a, b]
        for j in range(l):
            _ret_tilde_to(kern, Sret, Sret, n - j, n - l, d)
            _acc_ab(acc, -h * w[j] * 1j, y[j], kern, d)
        kd = Sret[_tri(n - l, n - l)]
        for a in range(d):
            for b in range(d):
                op[a, b] = 1j * eps[n - l + 1, a, b] + h * w[l] * 1j * kd[a, b]
            op[a, a] += bdf[0] / h
        y[l] = _solve_right_nb(op, acc)

    base = _tri(n, 0)
    for l in range(lmax + 1):
        for a in range(d):
            for b in range(d):
                Gret[base + n - l, a, b] = y[l, a, b]


@njit(**_OPTS, parallel=True)
def dyson_ret_row_para(n, h, k, s, Sig, om, D, bdf, Gret, Sret, eps):
    d = eps.shape[1]
    if n <= 2 * k + 1:
        dyson_ret_row(n, h, k, s, Sig, om, D, bdf, Gret, Sret, eps, -1)
        return
    dyson_ret_row(n, h, k, s, Sig, om, D, bdf, Gret, Sret, eps, k)
    base = _tri(n, 0)
    for m in prange(n - k):
        nm = n - m
        w = _greg_row(k, s, Sig, om, nm)
        acc = np.zeros((d, d), dtype=np.complex128)
        for j in range(1, bdf.shape[0]):
            for a in range(d):
                for b in range(d):
                    acc[a, b] -= (bdf[j] / h) * Gret[_tri(n - j, m), a, b]
        for l in range(nm):
            _acc_ab(acc, -1j * h * w[l], Sret[base + m + l], Gret[_tri(m + l, m)], d)
        op = np.zeros((d, d), dtype=np.complex128)
        for a in range(d):
            for b in range(d):
                op[a, b] = 1j * eps[n + 1, a, b] + 1j * h * w[nm] * Sret[base + n, a, b]
            op[a, a] += bdf[0] / h
        Gret[base + m] = _solve_left_nb(op, acc)


@njit(**_OPTS)
def dyson_tv_row(n, h, htau, k, s, Sig, om, R, bdf, Gtv, Gmat, Sret, Stv, eps, sig):
    d = eps.shape[1]
    ntau = Gmat.shape[0] - 1
    if d == 1:
        base = _tri(n, 0)
        q1 = -1j * _tv_source_scalar(htau, k, s, Sig, om, R, Stv[n, :, 0, 0].copy(),
                                     Gmat[:, 0, 0].copy(), sig)
        for j in range(1, bdf.shape[0]):
            c = bdf[j] / h
            for m in range(ntau + 1):
                q1[m] -= c * Gtv[n - j, m, 0, 0]
        for l in range(n):
            wl = -1j * h * _greg_w_scalar(k, s, Sig, om, n, l) * Sret[base + l, 0, 0]
            for m in range(ntau + 1):
                q1[m] += wl * Gtv[l, m, 0, 0]
        op1 = (bdf[0] / h) + 1j * eps[n + 1, 0, 0] \
            + 1j * h * _greg_w_scalar(k, s, Sig, om, n, n) * Sret[base + n, 0, 0]
        inv = 1.0 / op1
        for m in range(ntau + 1):
            Gtv[n, m, 0, 0] = inv * q1[m]
        return
    ident = np.eye(d).astype(np.complex128)
    q = tv_source(n, htau, k, s, Sig, om, R, Stv[n], Gmat, ident, sig)
    for m in range(ntau + 1):
        for a in range(d):
            for b in range(d):
                q[m, a, b] *= -1j
    w = _greg_row(k, s, Sig, om, n)
    base = _tri(n, 0)
    for m in range(ntau + 1):
        for j in range(1, bdf.shape[0]):
            for a in range(d):
                for b in range(d):
                    q[m, a, b] -= (bdf[j] / h) * Gtv[n - j, m, a, b]
    for l in range(n):
        wl = -1j * h * w[l]
        Sl = Sret[base + l]
        for m in range(ntau + 1):
            _acc_ab(q[m], wl, Sl, Gtv[l, m], d)
    op = np.zeros((d, d), dtype=np.complex128)
    for a in range(d):
        for b in range(d):
            op[a, b] = 1j * eps[n + 1, a, b] + 1j * h * w[n] * Sret[base + n, a, b]
        op[a, a] += bdf[0] / h
    # one factorization, many right-hand sides
    rhs = np.empty((d, (ntau + 1) * d), dtype=np.complex128)
    for m in range(ntau + 1):
        for a in range(d):
            for b in range(d):
                rhs[a, m * d + b] = q[m, a, b]
    sol = _gauss_solve(op, rhs)
    for m in range(ntau + 1):
        for a in range(d):
            for b in range(d):
                Gtv[n, m, a, b] = sol[a, m * d + b]


@njit(**_OPTS)
def _dyson_les_sources(n, mmax, h, htau, k, s, Sig, om, Gret, Gtv, Sles, Stv, sig):
    d = Gtv.shape[2]
    ntau = Gtv.shape[1] - 1
    out = np.zeros((mmax + 1, d, d), dtype=np.complex128)
    Gvt = np.empty((ntau + 1, d, d), dtype=np.complex128)
    for j in range(ntau + 1):
        src = Gtv[n, ntau - j]
        for a in range(d):
            for b in range(d):
                Gvt[j, a, b] = -sig * np.conj(src[b, a])
    wt = _greg_row(k, s, Sig, om, ntau)
    for m in range(mmax + 1):
        for j in range(ntau + 1):
            _acc_ab(out[m], -1j * htau * wt[j], Stv[m, j], Gvt[j], d)
    GA = np.empty((n + 1, d, d), dtype=np.complex128)
    for j in range(n + 1):
        src = Gret[_tri(n, j)]
        for a in range(d):
            for b in range(d):
                GA[j, a, b] = np.conj(src[b, a])
    w2 = _greg_row(k, s, Sig, om, n)
    SL = np.empty((d, d), dtype=np.complex128)
    for m in range(mmax + 1):
        for j in range(n + 1):
            _les_val_to(SL, Sles, Sles, m, j, d)
            _acc_ab(out[m], h * w2[j], SL, GA[j], d)
    for m in range(mmax + 1):
        for a in range(d):
            for b in range(d):
                out[m, a, b] *= -1j
    return out


@njit(**_OPTS)
def dyson_les_col(n, h, htau, k, s, Sig, om, R, D, bdf,
                  Gret, Gles, Gtv, Sret, Sles, Stv, eps, sig):
    d = eps.shape[1]
    q = _dyson_les_sources(n, n, h, htau, k, s, Sig, om, Gret, Gtv, Sles, Stv, sig)
    y = np.zeros((n + 1, d, d), dtype=np.complex128)
    for a in range(d):
        for b in range(d):
            y[0, a, b] = -np.conj(Gtv[n, 0, b, a])

    big = np.zeros((k * d, k * d), dtype=np.complex128)
    rhs = np.zeros((k * d, d), dtype=np.complex128)
    for m in range(1, k + 1):
        kern0 = _ret_tilde_nb(Sret, Sret, m, 0, d)
        M0 = np.zeros((d, d), dtype=np.complex128)
        for a in range(d):
            M0[a, a] = D[m, 0] / h
        wm0 = h * greg_w(k, s, Sig, om, m, 0)
        for a in range(d):
            for b in range(d):
                M0[a, b] += wm0 * 1j * kern0[a, b]
        for a in range(d):
            for b in range(d):
                acc = q[m, a, b]
                for c in range(d):
                    acc -= M0[a, c] * y[0, c, b]
                rhs[(m - 1) * d + a, b] = acc
        for l in range(1, k + 1):
            kern = _ret_tilde_nb(Sret, Sret, m, l, d)
            wml = h * greg_w(k, s, Sig, om, m, l)
            for a in range(d):
                for b in range(d):
                    val = wml * 1j * kern[a, b]
                    if a == b:
                        val += D[m, l] / h
                    if l == m:
                        val += 1j * eps[m + 1, a, b]
                    big[(m - 1) * d + a, (l - 1) * d + b] = val
    sol = _gauss_solve(big, rhs)
    for l in range(1, k + 1):
        for a in range(d):
            for b in range(d):
                y[l, a, b] = sol[(l - 1) * d + a, b]

    op = np.empty((d, d), dtype=np.complex128)
    for m in range(k + 1, n + 1):
        acc = q[m]
        for j in range(1, bdf.shape[0]):
            for a in range(d):
                for b in range(d):
                    acc[a, b] -= (bdf[j] / h) * y[m - j, a, b]
        w = _greg_row(k, s, Sig, om, m)
        mbase = _tri(m, 0)
        for l in range(m):
            _acc_ab(acc, -1j * h * w[l], Sret[mbase + l], y[l], d)
        for a in range(d):
            for b in range(d):
                op[a, b] = 1j * eps[m + 1, a, b] + 1j * h * w[m] * Sret[mbase + m, a, b]
            op[a, a] += bdf[0] / h
        y[m] = _solve_left_nb(op, acc)

    base = _tri(n, 0)
    for m in range(n + 1):
        for a in range(d):
            for b in range(d):
                Gles[base + m, a, b] = y[m, a, b]


@njit(**_OPTS, parallel=True)
def dyson_les_col_para(n, h, htau, k, s, Sig, om, R, D, bdf,
                       Gret, Gles, Gtv, Sret, Sles, Stv, eps, sig):
    d = eps.shape[1]
    if n <= 2 * k + 1:
        dyson_les_col(n, h, htau, k, s, Sig, om, R, D, bdf,
                      Gret, Gles, Gtv, Sret, Sles, Stv, eps, sig)
        return
    ntau = Gtv.shape[1] - 1
    base = _tri(n, 0)
    w = _greg_row(k, s, Sig, om, n)
    wt = _greg_row(k, s, Sig, om, ntau)
    Svt = np.empty((ntau + 1, d, d), dtype=np.complex128)
    for j in range(ntau + 1):
        src = Stv[n, ntau - j]
        for a in range(d):
            for b in range(d):
                Svt[j, a, b] = -sig * np.conj(src[b, a])
    SA = np.empty((n + 1, d, d), dtype=np.complex128)
    for l in range(n + 1):
        src = Sret[_tri(n, l)]
        for a in range(d):
            for b in range(d):
                SA[l, a, b] = np.conj(src[b, a])
    for m in prange(n - k):
        qm = np.zeros((d, d), dtype=np.complex128)
        GR = np.empty((d, d), dtype=np.complex128)
        gl = np.empty((d, d), dtype=np.complex128)
        op = np.empty((d, d), dtype=np.complex128)
        for j in range(ntau + 1):
            _acc_ab(qm, htau * wt[j], Gtv[m, j], Svt[j], d)
        jm = m if m > k else k
        w1 = _greg_row(k, s, Sig, om, m)
        for j in range(jm + 1):
            _ret_tilde_to(GR, Gret, Gret, m, j, d)
            _acc_ab(qm, 1j * h * w1[j], GR, Sles[base + j], d)
        acc = qm
        for j in range(1, bdf.shape[0]):
            _les_val_to(gl, Gles, Gles, m, n - j, d)
            for a in range(d):
                for b in range(d):
                    acc[a, b] -= (bdf[j] / h) * gl[a, b]
        for l in range(n):
            _les_val_to(gl, Gles, Gles, m, l, d)
            _acc_ab(acc, 1j * h * w[l], gl, SA[l], d)
        for a in range(d):
            for b in range(d):
                op[a, b] = -1j * eps[n + 1, a, b] - 1j * h * w[n] * SA[n, a, b]
            op[a, a] += bdf[0] / h
        Gles[base + m] = _solve_right_nb(op, acc)
    q = _dyson_les_sources(n, n, h, htau, k, s, Sig, om, Gret, Gtv, Sles, Stv, sig)
    for m in range(n - k, n + 1):
        acc = q[m].copy()
        for j in range(1, bdf.shape[0]):
            for a in range(d):
                for b in range(d):
                    acc[a, b] -= (bdf[j] / h) * Gles[base + m - j, a, b]
        wm = _greg_row(k, s, Sig, om, m)
        mbase = _tri(m, 0)
        for l in range(m):
            _acc_ab(acc, -1j * h * wm[l], Sret[mbase + l], Gles[base + l], d)
        op = np.zeros((d, d), dtype=np.complex128)
        for a in range(d):
            for b in range(d):
                op[a, b] = 1j * eps[m + 1, a, b] + 1j * h * wm[m] * Sret[mbase + m, a, b]
            op[a, a] += bdf[0] / h
        Gles[base + m] = _solve_left_nb(op, acc)


# ------------------------------------------------------------- vie2 slices

@njit(**_OPTS, parallel=True)
def vie2_ret_row(n, h, k, s, Sig, om, Gret, Fret, Qret_row):
    d = Fret.shape[1]
    base = _tri(n, 0)
    for a in range(d):
        for b in range(d):
            Gret[base + n, a, b] = Qret_row[n, a, b]
    for m in prange(n):
        nm = n - m
        acc = Qret_row[m].copy()
        gv = np.empty((d, d), dtype=np.complex128)
        op = np.empty((d, d), dtype=np.complex128)
        if nm > k:
            for j in range(m, n):
                _acc_ab(acc, -h * greg_w(k, s, Sig, om, nm, j - m),
                        Fret[base + j], Gret[_tri(j, m)], d)
            wdiag = greg_w(k, s, Sig, om, nm, nm)
        else:
            for j in range(1, k + 1):
                if n - j >= m:
                    srcv = Gret[_tri(n - j, m)]
                    for a in range(d):
                        for b in range(d):
                            gv[a, b] = srcv[a, b]
                else:
                    srcv = Gret[_tri(m, n - j)]
                    for a in range(d):
                        for b in range(d):
                            gv[a, b] = -np.conj(srcv[b, a])
                _acc_ab(acc, -h * s[nm, j], Fret[base + n - j], gv, d)
            wdiag = s[nm, 0]
        for a in range(d):
            for b in range(d):
                op[a, b] = h * wdiag * Fret[base + n, a, b]
            op[a, a] += 1.0
        Gret[base + m] = _solve_left_nb(op, acc)


@njit(**_OPTS)
def vie2_tv_row(n, h, htau, k, s, Sig, om, R, Gtv, Gmat, Fret, Ftv, Qtv_row, sig):
    d = Fret.shape[1]
    ntau = Gmat.shape[0] - 1
    if d == 1:
        base = _tri(n, 0)
        q1 = -_tv_source_scalar(htau, k, s, Sig, om, R, Ftv[n, :, 0, 0].copy(),
                                Gmat[:, 0, 0].copy(), sig)
        for m in range(ntau + 1):
            q1[m] += Qtv_row[m, 0, 0]
        for l in range(n):
            wl = -h * _greg_w_scalar(k, s, Sig, om, n, l) * Fret[base + l, 0, 0]
            for m in range(ntau + 1):
                q1[m] += wl * Gtv[l, m, 0, 0]
        inv = 1.0 / (1.0 + h * _greg_w_scalar(k, s, Sig, om, n, n) * Fret[base + n, 0, 0])
        for m in range(ntau + 1):
            Gtv[n, m, 0, 0] = inv * q1[m]
        return
    ident = np.eye(d).astype(np.complex128)
    src = tv_source(n, htau, k, s, Sig, om, R, Ftv[n], Gmat, ident, sig)
    q = np.empty_like(src)
    for m in range(ntau + 1):
        for a in range(d):
            for b in range(d):
                q[m, a, b] = Qtv_row[m, a, b] - src[m, a, b]
    w = _greg_row(k, s, Sig, om, n)
    base = _tri(n, 0)
    for l in range(n):
        wl = -h * w[l]
        Fl = Fret[base + l]
        for m in range(ntau + 1):
            _acc_ab(q[m], wl, Fl, Gtv[l, m], d)
    op = np.zeros((d, d), dtype=np.complex128)
    for a in range(d):
        for b in range(d):
            op[a, b] = h * w[n] * Fret[base + n, a, b]
        op[a, a] += 1.0
    rhs = np.empty((d, (ntau + 1) * d), dtype=np.complex128)
    for m in range(ntau + 1):
        for a in range(d):
            for b in range(d):
                rhs[a, m * d + b] = q[m, a, b]
    sol = _gauss_solve(op, rhs)
    for m in range(ntau + 1):
        for a in range(d):
            for b in range(d):
                Gtv[n, m, a, b] = sol[a, m * d + b]


@njit(**_OPTS)
def _vie2_les_sources(n, h, htau, k, s, Sig, om, Gret, Gtv, Fles, Fcc_les, Ftv,
                      Qles_col, sig):
    d = Gtv.shape[2]
    ntau = Gtv.shape[1] - 1
    if d == 1:
        nbase = _tri(n, 0)
        q1 = np.empty(n + 1, dtype=np.complex128)
        Gvt1 = np.empty(ntau + 1, dtype=np.complex128)
        for j in range(ntau + 1):
            Gvt1[j] = -sig * np.conj(Gtv[n, ntau - j, 0, 0])
        wt = _greg_row(k, s, Sig, om, ntau)
        for m in range(n + 1):
            acc = 0.0 + 0.0j
            for j in range(ntau + 1):
                acc += wt[j] * Ftv[m, j, 0, 0] * Gvt1[j]
            q1[m] = Qles_col[m, 0, 0] + 1j * htau * acc
        GA1 = np.empty(n + 1, dtype=np.complex128)
        for j in range(n + 1):
            GA1[j] = np.conj(Gret[nbase + j, 0, 0]) * _greg_w_scalar(k, s, Sig, om, n, j)
        for m in range(n + 1):
            acc = 0.0 + 0.0j
            for j in range(n + 1):
                if m <= j:
                    fv = Fles[_tri(j, m), 0, 0]
                else:
                    fv = -np.conj(Fcc_les[_tri(m, j), 0, 0])
                acc += fv * GA1[j]
            q1[m] -= h * acc
        return q1.reshape(n + 1, 1, 1).copy()
    q = Qles_col.copy()
    Gvt = np.empty((ntau + 1, d, d), dtype=np.complex128)
    for j in range(ntau + 1):
        src = Gtv[n, ntau - j]
        for a in range(d):
            for b in range(d):
                Gvt[j, a, b] = -sig * np.conj(src[b, a])
    wt = _greg_row(k, s, Sig, om, ntau)
    for m in range(n + 1):
        for j in range(ntau + 1):
            _acc_ab(q[m], 1j * htau * wt[j], Ftv[m, j], Gvt[j], d)
    GA = np.empty((n + 1, d, d), dtype=np.complex128)
    for j in range(n + 1):
        src = Gret[_tri(n, j)]
        for a in range(d):
            for b in range(d):
                GA[j, a, b] = np.conj(src[b, a])
    w2 = _greg_row(k, s, Sig, om, n)
    FL = np.empty((d, d), dtype=np.complex128)
    for m in range(n + 1):
        for j in range(n + 1):
            _les_val_to(FL, Fles, Fcc_les, m, j, d)
            _acc_ab(q[m], -h * w2[j], FL, GA[j], d)
    return q


@njit(**_OPTS)
def vie2_les_col(n, h, htau, k, s, Sig, om, R, Gret, Gles, Gtv,
                 Fret, Fles, Fcc_les, Ftv, Qles_col, sig):
    d = Fret.shape[1]
    q = _vie2_les_sources(n, h, htau, k, s, Sig, om, Gret, Gtv, Fles, Fcc_les,
                          Ftv, Qles_col, sig)
    y = np.zeros((n + 1, d, d), dtype=np.complex128)
    for a in range(d):
        for b in range(d):
            y[0, a, b] = -np.conj(Gtv[n, 0, b, a])
    big = np.zeros((k * d, k * d), dtype=np.complex128)
    rhs = np.zeros((k * d, d), dtype=np.complex128)
    for m in range(1, k + 1):
        kern0 = _ret_tilde_nb(Fret, Fret, m, 0, d)
        wm0 = h * greg_w(k, s, Sig, om, m, 0)
        for a in range(d):
            for b in range(d):
                acc = q[m, a, b]
                for c in range(d):
                    acc -= wm0 * kern0[a, c] * y[0, c, b]
                rhs[(m - 1) * d + a, b] = acc
        for l in range(1, k + 1):
            kern = _ret_tilde_nb(Fret, Fret, m, l, d)
            wml = h * greg_w(k, s, Sig, om, m, l)
            for a in range(d):
                for b in range(d):
                    val = wml * kern[a, b]
                    if a == b and l == m:
                        val += 1.0
                    big[(m - 1) * d + a, (l - 1) * d + b] = val
    sol = _gauss_solve(big, rhs)
    for l in range(1, k + 1):
        for a in range(d):
            for b in range(d):
                y[l, a, b] = sol[(l - 1) * d + a, b]
    op = np.empty((d, d), dtype=np.complex128)
    for m in range(k + 1, n + 1):
        w = _greg_row(k, s, Sig, om, m)
        mbase = _tri(m, 0)
        acc = q[m]
        for l in range(m):
            _acc_ab(acc, -h * w[l], Fret[mbase + l], y[l], d)
        for a in range(d):
            for b in range(d):
                op[a, b] = h * w[m] * Fret[mbase + m, a, b]
            op[a, a] += 1.0
        y[m] = _solve_left_nb(op, acc)
    base = _tri(n, 0)
    for m in range(n + 1):
        for a in range(d):
            for b in range(d):
                Gles[base + m, a, b] = y[m, a, b]


@njit(**_OPTS, parallel=True)
def vie2_les_col_para(n, h, htau, k, s, Sig, om, R, Gret, Gles, Gtv,
                      Fret, Fles, Fcc_les, Ftv, Qles_col, sig):
    d = Fret.shape[1]
    if n <= 2 * k + 1:
        vie2_les_col(n, h, htau, k, s, Sig, om, R, Gret, Gles, Gtv,
                     Fret, Fles, Fcc_les, Ftv, Qles_col, sig)
        return
    ntau = Gtv.shape[1] - 1
    base = _tri(n, 0)
    w = _greg_row(k, s, Sig, om, n)
    wt = _greg_row(k, s, Sig, om, ntau)
    FA = np.empty((n + 1, d, d), dtype=np.complex128)
    for l in range(n + 1):
        src = Fret[_tri(n, l)]
        for a in range(d):
            for b in range(d):
                FA[l, a, b] = np.conj(src[b, a])
    Fcc_vt = np.empty((ntau + 1, d, d), dtype=np.complex128)
    for j in range(ntau + 1):
        src = Ftv[n, ntau - j]
        for a in range(d):
            for b in range(d):
                Fcc_vt[j, a, b] = -sig * np.conj(src[b, a])
    for m in prange(n):
        qm = Qles_col[m].copy()
        GR = np.empty((d, d), dtype=np.complex128)
        gl = np.empty((d, d), dtype=np.complex128)
        op = np.empty((d, d), dtype=np.complex128)
        for j in range(ntau + 1):
            _acc_ab(qm, 1j * htau * wt[j], Gtv[m, j], Fcc_vt[j], d)
        jm = m if m > k else k
        w1 = _greg_row(k, s, Sig, om, m)
        for j in range(jm + 1):
            _ret_tilde_to(GR, Gret, Gret, m, j, d)
            _acc_ab(qm, -h * w1[j], GR, Fcc_les[base + j], d)
        acc = qm
        for l in range(n):
            _les_val_to(gl, Gles, Gles, m, l, d)
            _acc_ab(acc, -h * w[l], gl, FA[l], d)
        for a in range(d):
            for b in range(d):
                op[a, b] = h * w[n] * FA[n, a, b]
            op[a, a] += 1.0
        Gles[base + m] = _solve_right_nb(op, acc)
    # diagonal point from the freshly computed off-diagonals
    qm = Qles_col[n].copy()
    for j in range(ntau + 1):
        _acc_ab(qm, 1j * htau * wt[j], Gtv[n, j], Fcc_vt[j], d)
    w1 = _greg_row(k, s, Sig, om, n)
    GRd = np.empty((d, d), dtype=np.complex128)
    gld = np.empty((d, d), dtype=np.complex128)
    for j in range(n + 1):
        _ret_tilde_to(GRd, Gret, Gret, n, j, d)
        _acc_ab(qm, -h * w1[j], GRd, Fcc_les[base + j], d)
    acc = qm
    for l in range(n):
        _les_val_to(gld, Gles, Gles, n, l, d)
        _acc_ab(acc, -h * w[l], gld, FA[l], d)
    op = np.zeros((d, d), dtype=np.complex128)
    for a in range(d):
        for b in range(d):
            op[a, b] = h * w[n] * FA[n, a, b]
        op[a, a] += 1.0
    Gles[base + n] = _solve_right_nb(op, acc)
