"""Pure-numpy implementations of the hot contour kernels.

Reference lane: per-output loops with vectorized inner contractions.  The
numba lane (_kernels_nb) mirrors these signatures; `backend` picks one.

All functions operate on the raw storage arrays of HermMatrix
(ret/les triangles, tv matrix, mat vector) plus the weight tables of the
requested order.  `eps` arrays already include the chemical-potential
shift and the single-time-function index offset (slot 0 = value at 0^-).
Off-triangle values follow the hermitian-conjugate reconstruction rules;
conjugate storages are passed explicitly wherever the function itself is
not hermitian-symmetric.
"""

from __future__ import annotations

import numpy as np


def _tri(n, j):
    return n * (n + 1) // 2 + j


def greg_w(k, s, Sig, om, n, j):
    """Gregory weight w_{n,j} (0 <= j <= max(n,k))."""
    if n <= k:
        return s[n, j] if j <= k else 0.0
    if n <= 2 * k + 1:
        return Sig[n - k - 1, j] if j <= k else om[n - j]
    if j <= k:
        return om[j]
    if j >= n - k:
        return om[n - j]
    return 1.0


def greg_row(k, s, Sig, om, n):
    if n <= k:
        return s[n].copy()
    row = np.ones(n + 1)
    if n <= 2 * k + 1:
        row[: k + 1] = Sig[n - k - 1]
        for j in range(k + 1, n + 1):
            row[j] = om[n - j]
    else:
        row[: k + 1] = om
        row[n - k:] = om[::-1]
    return row


def _ret_tilde(ret, cc_ret, n, j):
    """Smooth continuation of the retarded component at (n, j)."""
    if j <= n:
        return ret[_tri(n, j)]
    return -cc_ret[_tri(j, n)].conj().T


def _les_val(les, cc_les, i, j):
    """C^<(i, j) for arbitrary index order (storage holds first <= second)."""
    if i <= j:
        return les[_tri(j, i)]
    return -cc_les[_tri(i, j)].conj().T


def _solve_left(A, B):
    """Solve A X = B."""
    return np.linalg.solve(A, B)


def _solve_right(A, B):
    """Solve X A = B."""
    return np.linalg.solve(A.T, B.T).T


# --------------------------------------------------------------- matsubara

def conv_mat(Amat, Bmat, fm1, sig_a, htau, k, s, Sig, om, R):
    """C^M(m) = int_0^beta A^M(m h_tau - t') f(0^-) B^M(t') dt'.

    Split at t' = m h_tau; A^M at negative arguments uses the xi-periodic
    extension.  Short segments use boundary-convolution weights.
    """
    ntau = Amat.shape[0] - 1
    d = Amat.shape[1]
    AF = Amat @ fm1
    AFr = AF[::-1]  # AFr[j] = A^M(beta - j h) f
    out = np.zeros((ntau + 1, d, d), dtype=complex)
    for m in range(ntau + 1):
        if m <= k:
            out[m] += np.einsum("jl,jab,lbc->ac", R[m], AF[: k + 1], Bmat[: k + 1])
        else:
            w = greg_row(k, s, Sig, om, m)
            out[m] += np.einsum("l,lab,lbc->ac", w, AF[m::-1], Bmat[: m + 1])
        mm = ntau - m
        if mm <= k:
            out[m] += sig_a * np.einsum("jl,jab,lbc->ac", R[mm], AFr[: k + 1], Bmat[::-1][: k + 1])
        else:
            w = greg_row(k, s, Sig, om, mm)
            out[m] += sig_a * np.einsum("l,lab,lbc->ac", w, AFr[: mm + 1], Bmat[m:])
    return htau * out


# ------------------------------------------------- convolution, real time

def conv_ret_row(n, h, k, s, Sig, om, I3, Aret, Acc_ret, Bret, Bcc_ret, fvals):
    """C^R(n, m) = int_{mh}^{nh} A^R(n,t) f(t) B^R(t,m) dt for m = 0..n."""
    d = fvals.shape[1]
    out = np.zeros((n + 1, d, d), dtype=complex)
    if n <= k:
        AF = np.stack([_ret_tilde(Aret, Acc_ret, n, j) @ fvals[j + 1] for j in range(k + 1)])
        for m in range(n + 1):
            B = np.stack([_ret_tilde(Bret, Bcc_ret, j, m) for j in range(k + 1)])
            out[m] = np.einsum("j,jab,jbc->ac", I3[m, n], AF, B)
        return h * out
    arow = Aret[_tri(n, 0): _tri(n, n) + 1]
    AF = arow @ fvals[1: n + 2]
    for m in range(n + 1):
        nm = n - m
        if nm > k:
            w = greg_row(k, s, Sig, om, nm)
            B = np.stack([Bret[_tri(j, m)] for j in range(m, n + 1)])
            out[m] = np.einsum("j,jab,jbc->ac", w, AF[m:], B)
        else:
            B = np.stack([_ret_tilde(Bret, Bcc_ret, n - j, m) for j in range(k + 1)])
            out[m] = np.einsum("j,jab,jbc->ac", s[nm], AF[n: n - k - 1: -1], B)
    return h * out


def tv_source(n, htau, k, s, Sig, om, R, Atv_n, Bmat, fm1, sig_b):
    """Matsubara contributions to C^rceil(n, m) for all m:

    C2(m) = int_0^{m h} A^rceil(n, t') f B^M(t' - m h) dt'   (periodic ext.)
    C3(m) = int_{m h}^beta A^rceil(n, t') f B^M(t' - m h) dt'
    """
    ntau = Bmat.shape[0] - 1
    d = Bmat.shape[1]
    AF = Atv_n @ fm1
    AFr = AF[::-1]
    BMr = Bmat[::-1]
    out = np.zeros((ntau + 1, d, d), dtype=complex)
    for m in range(ntau + 1):
        if m <= k:
            out[m] += sig_b * np.einsum("jl,lab,jbc->ac", R[m], AF[: k + 1], BMr[: k + 1])
        else:
            w = greg_row(k, s, Sig, om, m)
            out[m] += sig_b * np.einsum("l,lab,lbc->ac", w, AF[m::-1], BMr[: m + 1])
        mm = ntau - m
        if mm <= k:
            out[m] += np.einsum("jl,lab,jbc->ac", R[mm], AFr[: k + 1], Bmat[: k + 1])
        else:
            w = greg_row(k, s, Sig, om, mm)
            out[m] += np.einsum("l,lab,lbc->ac", w, AF[m:], Bmat[: mm + 1])
    return htau * out


def conv_tv_row(n, h, htau, k, s, Sig, om, I3, R,
                Aret, Acc_ret, Atv, Btv, Bmat, fvals, fm1, sig_b):
    """C^rceil(n, m) for m = 0..ntau (time integral plus tv_source)."""
    out = tv_source(n, htau, k, s, Sig, om, R, Atv[n], Bmat, fm1, sig_b)
    if n > k:
        w = greg_row(k, s, Sig, om, n)
        arow = Aret[_tri(n, 0): _tri(n, n) + 1]
        AF = arow @ fvals[1: n + 2]
        out += h * np.einsum("j,jab,jmbc->mac", w, AF, Btv[: n + 1])
    else:
        AF = np.stack([_ret_tilde(Aret, Acc_ret, n, j) @ fvals[j + 1] for j in range(k + 1)])
        out += h * np.einsum("j,jab,jmbc->mac", s[n], AF, Btv[: k + 1])
    return out


def conv_les_col(n, h, htau, k, s, Sig, om, I3, R,
                 Aret, Acc_ret, Ales, Acc_les, Atv,
                 Bret, Bcc_ret, Bles, Bcc_les, Bcc_tv,
                 fvals, fm1, sig_b, mmax=None):
    """C^<(m, n) for m = 0..mmax:

    C1(m) = int_0^{m h} A^R(m, j) f_j B^<(j, n)
    C2(m) = int_0^{n h} A^<(m, j) f_j B^A(j, n)
    C3(m) = -i int_0^beta A^rceil(m, tau) f(0^-) B^lceil(tau, n)
    """
    ntau = Bcc_tv.shape[1] - 1
    d = fvals.shape[1]
    if mmax is None:
        mmax = n
    out = np.zeros((mmax + 1, d, d), dtype=complex)

    # C3
    Bvt = np.stack([-sig_b * Bcc_tv[n, ntau - j].conj().T for j in range(ntau + 1)])
    wt = greg_row(k, s, Sig, om, ntau)
    AF3 = Atv[: mmax + 1] @ fm1
    out += -1j * htau * np.einsum("j,mjab,jbc->mac", wt, AF3, Bvt)

    # C2
    if n > k:
        w2 = greg_row(k, s, Sig, om, n)
        BA = np.stack([Bcc_ret[_tri(n, j)].conj().T for j in range(n + 1)])
        for m in range(mmax + 1):
            AL = np.stack([_les_val(Ales, Acc_les, m, j) @ fvals[j + 1] for j in range(n + 1)])
            out[m] += h * np.einsum("j,jab,jbc->ac", w2, AL, BA)
    else:
        BA = np.stack([(Bcc_ret[_tri(n, j)].conj().T if j <= n else -Bret[_tri(j, n)])
                       for j in range(k + 1)])
        for m in range(mmax + 1):
            AL = np.stack([_les_val(Ales, Acc_les, m, j) @ fvals[j + 1] for j in range(k + 1)])
            out[m] += h * np.einsum("j,jab,jbc->ac", s[n], AL, BA)

    # C1
    for m in range(mmax + 1):
        if m > k:
            w1 = greg_row(k, s, Sig, om, m)
            arow = Aret[_tri(m, 0): _tri(m, m) + 1]
            AF = arow @ fvals[1: m + 2]
            BL = Bles[_tri(n, 0): _tri(n, m) + 1]
            out[m] += h * np.einsum("j,jab,jbc->ac", w1, AF, BL)
        else:
            AF = np.stack([_ret_tilde(Aret, Acc_ret, m, j) @ fvals[j + 1] for j in range(k + 1)])
            BL = np.stack([(Bles[_tri(n, j)] if j <= n else -Bcc_les[_tri(j, n)].conj().T)
                           for j in range(k + 1)])
            out[m] += h * np.einsum("j,jab,jbc->ac", s[m], AF, BL)
    return out


# ------------------------------------------------------------ dyson slices

def dyson_ret_row(n, h, k, s, Sig, om, D, bdf, Gret, Sret, eps, lmax=None):
    """Retarded row G^R(n, 0..n) from the conjugate equation swept backward.

    y_l = G^R(n, (n-l)h); p_l = i eps((n-l)h); kernel k(l, m) = i S^R(n-l, n-m).
    Start block l = 1..k is one (kd x kd) solve, then single steps.  With
    lmax set, the sweep stops after l = lmax (used for the boundary band).
    """
    d = eps.shape[1]
    ident = np.eye(d)
    if lmax is None:
        lmax = n
    y = np.zeros((lmax + 1, d, d), dtype=complex)
    y[0] = -1j * ident

    def kern(l, m):
        return 1j * _ret_tilde(Sret, Sret, n - l, n - m)

    big = np.zeros((k * d, k * d), dtype=complex)
    rhs = np.zeros((k * d, d), dtype=complex)
    for m in range(1, k + 1):
        M0 = (D[m, 0] / h) * ident + h * greg_w(k, s, Sig, om, m, 0) * kern(0, m)
        rhs[(m - 1) * d: m * d] = -(y[0] @ M0).T
        for l in range(1, k + 1):
            M = (D[m, l] / h) * ident + h * greg_w(k, s, Sig, om, m, l) * kern(l, m)
            if l == m:
                M = M + 1j * eps[n - m + 1]
            big[(m - 1) * d: m * d, (l - 1) * d: l * d] = M.T
    sol = np.linalg.solve(big, rhs)
    for l in range(1, min(k, lmax) + 1):
        y[l] = sol[(l - 1) * d: l * d].T

    for l in range(k + 1, lmax + 1):
        w = greg_row(k, s, Sig, om, l)
        acc = np.zeros((d, d), dtype=complex)
        for j in range(1, bdf.shape[0]):
            acc -= (bdf[j] / h) * y[l - j]
        for j in range(l):
            acc -= h * w[j] * (y[j] @ kern(j, l))
        op = (bdf[0] / h) * ident + 1j * eps[n - l + 1] + h * w[l] * kern(l, l)
        y[l] = _solve_right(op, acc)

    base = _tri(n, 0)
    for l in range(lmax + 1):
        Gret[base + n - l] = y[l]


def dyson_ret_row_para(n, h, k, s, Sig, om, D, bdf, Gret, Sret, eps):
    """Variant B retarded row: boundary band m >= n-k from the serial sweep,
    then one independent single-step solve per column m < n-k."""
    d = eps.shape[1]
    ident = np.eye(d)
    if n <= 2 * k + 1:
        dyson_ret_row(n, h, k, s, Sig, om, D, bdf, Gret, Sret, eps)
        return
    dyson_ret_row(n, h, k, s, Sig, om, D, bdf, Gret, Sret, eps, lmax=k)
    srow = Sret[_tri(n, 0): _tri(n, n) + 1]
    base = _tri(n, 0)
    for m in range(n - k):
        nm = n - m
        w = greg_row(k, s, Sig, om, nm)
        acc = np.zeros((d, d), dtype=complex)
        for j in range(1, bdf.shape[0]):
            acc -= (bdf[j] / h) * Gret[_tri(n - j, m)]
        for l in range(nm):
            acc -= 1j * h * w[l] * (srow[m + l] @ Gret[_tri(m + l, m)])
        op = (bdf[0] / h) * ident + 1j * eps[n + 1] + 1j * h * w[nm] * srow[n]
        Gret[base + m] = _solve_left(op, acc)


def dyson_tv_row(n, h, htau, k, s, Sig, om, R, bdf, Gtv, Gmat, Sret, Stv, eps, sig):
    """Left-mixing row G^rceil(n, 0..ntau): one VIDE step per tau column."""
    d = eps.shape[1]
    ident = np.eye(d)
    q = -1j * tv_source(n, htau, k, s, Sig, om, R, Stv[n], Gmat, ident, sig)
    w = greg_row(k, s, Sig, om, n)
    acc = q
    for j in range(1, bdf.shape[0]):
        acc -= (bdf[j] / h) * Gtv[n - j]
    srow = Sret[_tri(n, 0): _tri(n, n) + 1]
    acc -= 1j * h * np.einsum("l,lab,lmbc->mac", w[:n], srow[:n], Gtv[:n])
    op = (bdf[0] / h) * ident + 1j * eps[n + 1] + 1j * h * w[n] * srow[n]
    Gtv[n] = np.einsum("ab,mbc->mac", np.linalg.inv(op), acc)


def _dyson_les_sources(n, mmax, h, htau, k, s, Sig, om, Gret, Gtv, Sles, Stv, sig):
    """q(m) = -i C2[S,1,G](m,n) - i C3[S,1,G](m,n), m = 0..mmax (n > k)."""
    d = Gtv.shape[2]
    ntau = Gtv.shape[1] - 1
    out = np.zeros((mmax + 1, d, d), dtype=complex)
    Gvt = np.stack([-sig * Gtv[n, ntau - j].conj().T for j in range(ntau + 1)])
    wt = greg_row(k, s, Sig, om, ntau)
    out += -1j * htau * np.einsum("j,mjab,jbc->mac", wt, Stv[: mmax + 1], Gvt)
    GA = np.stack([Gret[_tri(n, j)].conj().T for j in range(n + 1)])
    w2 = greg_row(k, s, Sig, om, n)
    for m in range(mmax + 1):
        SL = np.stack([_les_val(Sles, Sles, m, j) for j in range(n + 1)])
        out[m] += h * np.einsum("j,jab,jbc->ac", w2, SL, GA)
    return -1j * out


def dyson_les_col(n, h, htau, k, s, Sig, om, R, D, bdf,
                  Gret, Gles, Gtv, Sret, Sles, Stv, eps, sig):
    """Lesser column G^<(0..n, n): VIDE start block plus forward stepping (n > k)."""
    d = eps.shape[1]
    ident = np.eye(d)
    q = _dyson_les_sources(n, n, h, htau, k, s, Sig, om, Gret, Gtv, Sles, Stv, sig)
    y = np.zeros((n + 1, d, d), dtype=complex)
    y[0] = -Gtv[n, 0].conj().T

    def kern(m, l):
        return 1j * _ret_tilde(Sret, Sret, m, l)

    big = np.zeros((k * d, k * d), dtype=complex)
    rhs = np.zeros((k * d, d), dtype=complex)
    for m in range(1, k + 1):
        M0 = (D[m, 0] / h) * ident + h * greg_w(k, s, Sig, om, m, 0) * kern(m, 0)
        rhs[(m - 1) * d: m * d] = q[m] - M0 @ y[0]
        for l in range(1, k + 1):
            M = (D[m, l] / h) * ident + h * greg_w(k, s, Sig, om, m, l) * kern(m, l)
            if l == m:
                M = M + 1j * eps[m + 1]
            big[(m - 1) * d: m * d, (l - 1) * d: l * d] = M
    sol = np.linalg.solve(big, rhs)
    for l in range(1, k + 1):
        y[l] = sol[(l - 1) * d: l * d]

    for m in range(k + 1, n + 1):
        acc = q[m].copy()
        for j in range(1, bdf.shape[0]):
            acc -= (bdf[j] / h) * y[m - j]
        w = greg_row(k, s, Sig, om, m)
        srow = Sret[_tri(m, 0): _tri(m, m) + 1]
        acc -= 1j * h * np.einsum("l,lab,lbc->ac", w[:m], srow[:m], y[:m])
        op = (bdf[0] / h) * ident + 1j * eps[m + 1] + 1j * h * w[m] * srow[m]
        y[m] = _solve_left(op, acc)

    base = _tri(n, 0)
    Gles[base: base + n + 1] = y


def dyson_les_col_para(n, h, htau, k, s, Sig, om, R, D, bdf,
                       Gret, Gles, Gtv, Sret, Sles, Stv, eps, sig):
    """Variant B lesser column: independent conjugate-equation solves per row
    m < n-k, boundary band m >= n-k from the serial stepping."""
    d = eps.shape[1]
    ident = np.eye(d)
    if n <= 2 * k + 1:
        dyson_les_col(n, h, htau, k, s, Sig, om, R, D, bdf,
                      Gret, Gles, Gtv, Sret, Sles, Stv, eps, sig)
        return
    ntau = Gtv.shape[1] - 1
    base = _tri(n, 0)
    w = greg_row(k, s, Sig, om, n)
    wt = greg_row(k, s, Sig, om, ntau)
    Svt = np.stack([-sig * Stv[n, ntau - j].conj().T for j in range(ntau + 1)])
    SA = np.stack([Sret[_tri(n, l)].conj().T for l in range(n + 1)])
    SLcol = Sles[_tri(n, 0): _tri(n, n) + 1]
    for m in range(n - k):
        # q(m) = i C1[G,1,S](m,n) + i C3[G,1,S](m,n)
        qm = htau * np.einsum("j,jab,jbc->ac", wt, Gtv[m], Svt)  # i * (-i) = 1
        if m > k:
            w1 = greg_row(k, s, Sig, om, m)
            grow = Gret[_tri(m, 0): _tri(m, m) + 1]
            qm += 1j * h * np.einsum("j,jab,jbc->ac", w1, grow, SLcol[: m + 1])
        else:
            GR = np.stack([_ret_tilde(Gret, Gret, m, j) for j in range(k + 1)])
            qm += 1j * h * np.einsum("j,jab,jbc->ac", s[m], GR, SLcol[: k + 1])
        acc = qm
        for j in range(1, bdf.shape[0]):
            acc -= (bdf[j] / h) * _les_val(Gles, Gles, m, n - j)
        yh = np.stack([_les_val(Gles, Gles, m, l) for l in range(n)])
        acc -= -1j * h * np.einsum("l,lab,lbc->ac", w[:n], yh, SA[:n])
        op = (bdf[0] / h) * ident - 1j * eps[n + 1] - 1j * h * w[n] * SA[n]
        Gles[base + m] = _solve_right(op, acc)
    # boundary band via the serial (direct) stepping
    q = _dyson_les_sources(n, n, h, htau, k, s, Sig, om, Gret, Gtv, Sles, Stv, sig)
    for m in range(n - k, n + 1):
        acc = q[m].copy()
        for j in range(1, bdf.shape[0]):
            acc -= (bdf[j] / h) * Gles[base + m - j]
        wm = greg_row(k, s, Sig, om, m)
        srow = Sret[_tri(m, 0): _tri(m, m) + 1]
        acc -= 1j * h * np.einsum("l,lab,lbc->ac", wm[:m], srow[:m], Gles[base: base + m])
        op = (bdf[0] / h) * ident + 1j * eps[m + 1] + 1j * h * wm[m] * srow[m]
        Gles[base + m] = _solve_left(op, acc)


# ------------------------------------------------------------- vie2 slices

def vie2_ret_row(n, h, k, s, Sig, om, Gret, Fret, Qret_row):
    """Retarded row of (1+F)*G = Q at slice n; columns are independent."""
    d = Fret.shape[1]
    ident = np.eye(d)
    base = _tri(n, 0)
    Gret[base + n] = Qret_row[n]
    frow = Fret[_tri(n, 0): _tri(n, n) + 1]
    for m in range(n - 1, -1, -1):
        nm = n - m
        acc = Qret_row[m].astype(complex).copy()
        if nm > k:
            w = greg_row(k, s, Sig, om, nm)
            for j in range(m, n):
                acc -= h * w[j - m] * (frow[j] @ Gret[_tri(j, m)])
            op = ident + h * w[nm] * frow[n]
        else:
            w = s[nm]
            for j in range(1, k + 1):
                gv = Gret[_tri(n - j, m)] if n - j >= m else -Gret[_tri(m, n - j)].conj().T
                acc -= h * w[j] * (frow[n - j] @ gv)
            op = ident + h * w[0] * frow[n]
        Gret[base + m] = _solve_left(op, acc)


def vie2_tv_row(n, h, htau, k, s, Sig, om, R, Gtv, Gmat, Fret, Ftv, Qtv_row, sig):
    """Left-mixing row of (1+F)*G = Q at slice n: one VIE step per column."""
    d = Fret.shape[1]
    ident = np.eye(d)
    q = Qtv_row - tv_source(n, htau, k, s, Sig, om, R, Ftv[n], Gmat, ident, sig)
    w = greg_row(k, s, Sig, om, n)
    frow = Fret[_tri(n, 0): _tri(n, n) + 1]
    acc = q - h * np.einsum("l,lab,lmbc->mac", w[:n], frow[:n], Gtv[:n])
    op = ident + h * w[n] * frow[n]
    Gtv[n] = np.einsum("ab,mbc->mac", np.linalg.inv(op), acc)


def _vie2_les_sources(n, h, htau, k, s, Sig, om, Gret, Gtv, Fles, Fcc_les, Ftv,
                      Qles_col, sig):
    """q(m) = Q^<(m,n) - C2[F,1,G](m,n) - C3[F,1,G](m,n) for m = 0..n (n > k)."""
    ntau = Gtv.shape[1] - 1
    Gvt = np.stack([-sig * Gtv[n, ntau - j].conj().T for j in range(ntau + 1)])
    wt = greg_row(k, s, Sig, om, ntau)
    q = Qles_col.astype(complex).copy()
    q -= -1j * htau * np.einsum("j,mjab,jbc->mac", wt, Ftv[: n + 1], Gvt)
    GA = np.stack([Gret[_tri(n, j)].conj().T for j in range(n + 1)])
    w2 = greg_row(k, s, Sig, om, n)
    for m in range(n + 1):
        FL = np.stack([_les_val(Fles, Fcc_les, m, j) for j in range(n + 1)])
        q[m] -= h * np.einsum("j,jab,jbc->ac", w2, FL, GA)
    return q


def vie2_les_col(n, h, htau, k, s, Sig, om, R, Gret, Gles, Gtv,
                 Fret, Fles, Fcc_les, Ftv, Qles_col, sig):
    """Lesser column of (1+F)*G = Q at slice n: VIE start block + stepping."""
    d = Fret.shape[1]
    ident = np.eye(d)
    q = _vie2_les_sources(n, h, htau, k, s, Sig, om, Gret, Gtv, Fles, Fcc_les,
                          Ftv, Qles_col, sig)
    y = np.zeros((n + 1, d, d), dtype=complex)
    y[0] = -Gtv[n, 0].conj().T

    def kern(m, l):
        return _ret_tilde(Fret, Fret, m, l)

    big = np.zeros((k * d, k * d), dtype=complex)
    rhs = np.zeros((k * d, d), dtype=complex)
    for m in range(1, k + 1):
        rhs[(m - 1) * d: m * d] = q[m] - h * greg_w(k, s, Sig, om, m, 0) * (kern(m, 0) @ y[0])
        for l in range(1, k + 1):
            M = h * greg_w(k, s, Sig, om, m, l) * kern(m, l)
            if l == m:
                M = M + ident
            big[(m - 1) * d: m * d, (l - 1) * d: l * d] = M
    sol = np.linalg.solve(big, rhs)
    for l in range(1, k + 1):
        y[l] = sol[(l - 1) * d: l * d]

    for m in range(k + 1, n + 1):
        w = greg_row(k, s, Sig, om, m)
        frow = Fret[_tri(m, 0): _tri(m, m) + 1]
        acc = q[m] - h * np.einsum("l,lab,lbc->ac", w[:m], frow[:m], y[:m])
        op = ident + h * w[m] * frow[m]
        y[m] = _solve_left(op, acc)
    base = _tri(n, 0)
    Gles[base: base + n + 1] = y


def vie2_les_col_para(n, h, htau, k, s, Sig, om, R, Gret, Gles, Gtv,
                      Fret, Fles, Fcc_les, Ftv, Qles_col, sig):
    """Variant B lesser column: independent conjugate-VIE solves per row with
    kernel [F^+]^A; the diagonal point closes from the fresh off-diagonals."""
    d = Fret.shape[1]
    ident = np.eye(d)
    if n <= 2 * k + 1:
        vie2_les_col(n, h, htau, k, s, Sig, om, R, Gret, Gles, Gtv,
                     Fret, Fles, Fcc_les, Ftv, Qles_col, sig)
        return
    ntau = Gtv.shape[1] - 1
    base = _tri(n, 0)
    w = greg_row(k, s, Sig, om, n)
    wt = greg_row(k, s, Sig, om, ntau)
    FA = np.stack([Fret[_tri(n, l)].conj().T for l in range(n + 1)])  # [F+]^A(l, n)
    Fcc_vt = np.stack([-sig * Ftv[n, ntau - j].conj().T for j in range(ntau + 1)])
    Fcc_lcol = np.stack([Fcc_les[_tri(n, j)] for j in range(n + 1)])  # [F+]^<(j, n)
    for m in range(n + 1):
        qm = Qles_col[m].astype(complex).copy()
        qm -= -1j * htau * np.einsum("j,jab,jbc->ac", wt, Gtv[m], Fcc_vt)
        if m > k:
            w1 = greg_row(k, s, Sig, om, m)
            grow = Gret[_tri(m, 0): _tri(m, m) + 1]
            qm -= h * np.einsum("j,jab,jbc->ac", w1, grow, Fcc_lcol[: m + 1])
        else:
            GR = np.stack([_ret_tilde(Gret, Gret, m, j) for j in range(k + 1)])
            qm -= h * np.einsum("j,jab,jbc->ac", s[m], GR, Fcc_lcol[: k + 1])
        yh = np.stack([_les_val(Gles, Gles, m, l) for l in range(n)])
        acc = qm - h * np.einsum("l,lab,lbc->ac", w[:n], yh, FA[:n])
        op = ident + h * w[n] * FA[n]
        Gles[base + m] = _solve_right(op, acc)


# ----------------------------------------------------------------- bubbles

def bubble1_slice(n, sig_b, Aret, Ales, Atv, Amat, Bret, Bles, Btv, Bmat,
                  Cret, Cles, Ctv, Cmat):
    """C_{ij}(t,t') = i A_{ij}(t,t') B_{ji}(t',t) on slice n (n = -1: Matsubara).

    The Matsubara rule carries an overall minus (C^M = -A^M(tau) B^M(-tau)),
    which is what the component definitions and the KMS corner require.
    """
    if n == -1:
        Cmat[:] = -Amat * (sig_b * Bmat[::-1].transpose(0, 2, 1))
        return
    lo = _tri(n, 0)
    sl = slice(lo, lo + n + 1)
    # C^R(n,j) = i A^R(n,j) B^<(j,n)|_T + i A^<(n,j) B^A(j,n)|_T  (elementwise)
    Cret[sl] = 1j * (Aret[sl] * Bles[sl].transpose(0, 2, 1)
                     - Ales[sl].transpose(0, 2, 1).conj() * Bret[sl].conj())
    # C^<(j,n) = i A^<(j,n) B^>(n,j)|_T ; B^> = ~B^R + B^<
    Cles[sl] = 1j * Ales[sl] * (Bret[sl].transpose(0, 2, 1) - Bles[sl].conj())
    # C^rceil(n,m) = i A^rceil(n,m) B^lceil(m,n)|_T
    Ctv[n] = -1j * sig_b * Atv[n] * Btv[n, ::-1].conj()


def bubble2_slice(n, sig_b, Aret, Ales, Atv, Amat, Bret, Bles, Btv, Bmat,
                  Cret, Cles, Ctv, Cmat):
    """C_{ij}(t,t') = i A_{ij}(t,t') B_{ij}(t,t') on slice n (n = -1: Matsubara).

    Matsubara rule: C^M = -A^M B^M (see bubble1_slice).
    """
    if n == -1:
        Cmat[:] = -Amat * Bmat
        return
    lo = _tri(n, 0)
    sl = slice(lo, lo + n + 1)
    AlesNJ = -Ales[sl].conj().transpose(0, 2, 1)  # A^<(n,j)
    BlesNJ = -Bles[sl].conj().transpose(0, 2, 1)
    Cret[sl] = 1j * (Aret[sl] * Bret[sl] + AlesNJ * Bret[sl] + Aret[sl] * BlesNJ)
    Cles[sl] = 1j * Ales[sl] * Bles[sl]
    Ctv[n] = 1j * Atv[n] * Btv[n]
