"""Order-k coefficient tables for interpolation, differentiation, quadrature.

All solvers in this package run on equidistant meshes and draw their
coefficients from a single :class:`WeightTableSet` built here:

* ``P``     -- polynomial interpolation through k+1 equidistant samples,
* ``D``     -- derivative of the interpolant at the grid points,
* ``I``     -- integral of the interpolant between two grid points,
* ``a``     -- backward-differentiation (BDF) coefficients,
* ``s``, ``Sig``, ``omega`` -- starting / intermediate / asymptotic rows of
  the Gregory quadrature rule,
* ``R``     -- boundary-convolution weights for short convolution integrals.

Tables are computed once per order with exact rational arithmetic and then
rounded to float64.  They are immutable and safe to share between threads.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import numpy as np

MIN_ORDER = 1
MAX_ORDER = 5

__all__ = [
    "WeightTableSet",
    "build_weights",
    "gregory_weight",
    "gregory_row",
    "gregory_integrate",
    "boundary_convolute",
    "differentiate",
    "integrate_poly",
    "interpolate",
]


def _check_order(k: int) -> None:
    if not isinstance(k, (int, np.integer)) or not (MIN_ORDER <= k <= MAX_ORDER):
        raise ValueError(f"order k must be an integer in [{MIN_ORDER}, {MAX_ORDER}], got {k!r}")


def _rational_inverse(mat):
    """Invert a small matrix of Fractions by Gauss-Jordan elimination."""
    n = len(mat)
    aug = [row[:] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(mat)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        inv_p = 1 / aug[col][col]
        aug[col] = [x * inv_p for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


@lru_cache(maxsize=None)
def _gregory_eps(kmax: int):
    """Difference-correction coefficients of the Gregory rule, exact.

    eps[r] multiplies the r-th forward difference of the first samples
    (and, mirrored, the backward difference of the last ones).  They are
    minus the coefficients of t^(r+1) in the power series of t/ln(1+t).
    """
    n = kmax + 2
    a = [Fraction((-1) ** m, m + 1) for m in range(n)]
    g = [Fraction(0)] * n
    g[0] = Fraction(1)
    for m in range(1, n):
        g[m] = -sum(a[i] * g[m - i] for i in range(1, m + 1))
    return tuple(-g[r + 1] for r in range(1, kmax + 1))


class WeightTableSet:
    """Immutable bundle of all order-k tables.

    Index conventions follow the construction: ``P[a, l]`` is the
    coefficient of x^a contributed by sample l, ``D[m, l]`` the derivative
    at grid point m, ``I[m, n, l]`` the integral from m to n, ``a[j]`` the
    BDF weight of y_{n-j}, and ``R[m, r, s]`` the boundary-convolution
    weight of F_r G_s for endpoint m.
    """

    __slots__ = ("k", "P", "D", "I", "a", "s", "Sig", "omega", "R")

    def __init__(self, k: int):
        _check_order(k)
        kp = k + 1

        M = [[Fraction(j) ** a for a in range(kp)] for j in range(kp)]
        P = _rational_inverse(M)  # P[a][l]

        D = [[sum(P[a][l] * a * m ** (a - 1) for a in range(1, kp)) for l in range(kp)]
             for m in range(kp)]
        I3 = [[[sum(P[a][l] * Fraction(n ** (a + 1) - m ** (a + 1), a + 1) for a in range(kp))
                for l in range(kp)] for n in range(kp)] for m in range(kp)]
        bdf = [-D[0][j] for j in range(kp)]

        # Boundary convolution: int_0^m (m-x)^a x^b dx = m^(a+b+1) a! b! / (a+b+1)!
        R = np.zeros((kp, kp, kp))
        for m in range(kp):
            for r in range(kp):
                for s in range(kp):
                    acc = Fraction(0)
                    for a in range(kp):
                        for b in range(kp):
                            beta_ab = Fraction(factorial(a) * factorial(b), factorial(a + b + 1))
                            acc += P[a][r] * P[b][s] * m ** (a + b + 1) * beta_ab
                    R[m, r, s] = float(acc)

        # Gregory rule: starting rows are the polynomial-integration weights,
        # rows n > k carry a Riemann sum with difference corrections at both
        # boundaries (overlapping additively for the intermediate rows).
        eps = _gregory_eps(k)
        omega = [Fraction(1, 2) + sum(eps[r - 1] * (-1) ** r * comb(r, 0) for r in range(1, kp))]
        for j in range(1, kp):
            omega.append(Fraction(1)
                         + sum(eps[r - 1] * (-1) ** (r - j) * comb(r, j) for r in range(j, kp)))

        Sig = np.zeros((kp, kp))
        for i in range(kp):
            n = k + 1 + i
            for j in range(kp):
                wj = omega[j] - Fraction(1)  # left correction relative to 1
                if n - j <= k:  # right correction overlaps
                    wj += omega[n - j] - Fraction(1)
                Sig[i, j] = float(1 + wj)

        self.k = int(k)
        self.P = np.array([[float(x) for x in row] for row in P])
        self.D = np.array([[float(x) for x in row] for row in D])
        self.I = np.array([[[float(x) for x in row] for row in blk] for blk in I3])
        self.a = np.array([float(x) for x in bdf])
        self.s = self.I[0].copy()  # s[n, j] = I[0, n, j]
        self.Sig = Sig
        self.omega = np.array([float(x) for x in omega])
        self.R = R
        for arr in (self.P, self.D, self.I, self.a, self.s, self.Sig, self.omega, self.R):
            arr.setflags(write=False)

    def __repr__(self):  # pragma: no cover
        return f"WeightTableSet(k={self.k})"


@lru_cache(maxsize=None)
def build_weights(k: int) -> WeightTableSet:
    """Return the (cached, immutable) weight tables for order k in 1..5."""
    _check_order(k)
    return WeightTableSet(int(k))


@lru_cache(maxsize=None)
def bdf_weights(p: int) -> np.ndarray:
    """Backward-differentiation coefficients a^(p), p in 1..6.

    The time steppers pair the order-k Gregory quadrature with the
    order-(k+1) backward differentiation, which is what makes the solvers'
    differential part one order better than the k-point formula (the last
    zero-stable member p = 6 serves k = 5).
    """
    if not isinstance(p, (int, np.integer)) or not 1 <= p <= 6:
        raise ValueError(f"BDF order must be in 1..6, got {p!r}")
    M = [[Fraction(j) ** a for a in range(p + 1)] for j in range(p + 1)]
    P = _rational_inverse(M)
    out = np.array([-float(P[1][j]) for j in range(p + 1)])
    out.setflags(write=False)
    return out


def gregory_weight(W: WeightTableSet, n: int, j: int) -> float:
    """Single Gregory weight w_{n,j}; valid for 0 <= j <= max(n, k)."""
    k = W.k
    if n <= k:
        return W.s[n, j] if j <= k else 0.0
    if n <= 2 * k + 1:
        if j <= k:
            return W.Sig[n - k - 1, j]
        return W.omega[n - j]
    if j <= k:
        return W.omega[j]
    if j >= n - k:
        return W.omega[n - j]
    return 1.0


def gregory_row(W: WeightTableSet, n: int) -> np.ndarray:
    """Gregory weights w_{n, 0..m(n,k)} as a vector (m = n for n > k, else k)."""
    k = W.k
    if n <= k:
        return W.s[n].copy()
    row = np.ones(n + 1)
    if n <= 2 * k + 1:
        row[: k + 1] = W.Sig[n - k - 1]
        for j in range(k + 1, n + 1):
            row[j] = W.omega[n - j]
    else:
        row[: k + 1] = W.omega
        row[n - k:] = W.omega[::-1]
    return row


def _trapezoid_row(n: int) -> np.ndarray:
    row = np.ones(n + 1)
    if n >= 1:
        row[0] = row[-1] = 0.5
    else:
        row[0] = 0.0
    return row


def gregory_integrate(k: int, h: float, y, n: int):
    """h * sum_j w_{n,j} y_j, the k-th order quadrature of int_0^{nh} y dt.

    Accepts k = 0 (plain trapezoid) in addition to 1..5; samples must be
    provided up to index max(n, k).
    """
    if n < 0:
        raise ValueError(f"endpoint index n must be >= 0, got {n}")
    y = np.asarray(y)
    if k == 0:
        row = _trapezoid_row(n)
    else:
        _check_order(k)
        row = gregory_row(build_weights(k), n)
    if y.shape[0] < row.shape[0]:
        raise ValueError(f"need at least {row.shape[0]} samples, got {y.shape[0]}")
    return h * np.tensordot(row, y[: row.shape[0]], axes=(0, 0))


def boundary_convolute(k: int, h: float, F, G, m: int):
    """h * sum_{r,s} F_r G_s R_{m;r,s} for the endpoint m <= k.

    Approximates int_0^{mh} F(mh - t') G(t') dt' from the k+1 leading
    samples of both factors; for m > k the Gregory rule applies instead.
    """
    W = build_weights(k)
    if not 0 <= m <= k:
        raise ValueError(f"boundary convolution needs 0 <= m <= k, got m={m}")
    F = np.asarray(F)[: k + 1]
    G = np.asarray(G)[: k + 1]
    if F.shape[0] < k + 1 or G.shape[0] < k + 1:
        raise ValueError(f"need k+1={k + 1} samples of F and G")
    if F.ndim == 1:
        return h * np.einsum("rs,r,s->", W.R[m], F, G)
    return h * np.einsum("rs,rab,sbc->ac", W.R[m], F, G)


def differentiate(k: int, h: float, y, m: int):
    """Derivative of the degree-k interpolant at grid point m: h^-1 sum_l D_{m,l} y_l."""
    W = build_weights(k)
    if not 0 <= m <= k:
        raise ValueError(f"grid point m must be in 0..{k}, got {m}")
    y = np.asarray(y)
    if y.shape[0] < k + 1:
        raise ValueError(f"need k+1={k + 1} samples, got {y.shape[0]}")
    return np.tensordot(W.D[m], y[: k + 1], axes=(0, 0)) / h


def integrate_poly(k: int, h: float, y, m: int, n: int):
    """Integral of the degree-k interpolant from mh to nh: h sum_l I_{m,n,l} y_l."""
    W = build_weights(k)
    if not (0 <= m <= k and 0 <= n <= k):
        raise ValueError(f"integration bounds must lie in 0..{k}, got ({m}, {n})")
    y = np.asarray(y)
    if y.shape[0] < k + 1:
        raise ValueError(f"need k+1={k + 1} samples, got {y.shape[0]}")
    return h * np.tensordot(W.I[m, n], y[: k + 1], axes=(0, 0))


def interpolate(k: int, y, x: float):
    """Value of the degree-k interpolant at the fractional grid coordinate x."""
    W = build_weights(k)
    y = np.asarray(y)
    if y.shape[0] < k + 1:
        raise ValueError(f"need k+1={k + 1} samples, got {y.shape[0]}")
    xpow = x ** np.arange(k + 1)
    return np.tensordot(xpow @ W.P, y[: k + 1], axes=(0, 0))


def extrapolation_coeffs(k: int) -> np.ndarray:
    """Coefficients C_l with y_{n+1} = sum_l C_l y_{n-l} (degree-k extrapolation)."""
    W = build_weights(k)
    xpow = float(k + 1) ** np.arange(k + 1)
    c = xpow @ W.P  # weight of sample at position l=0..k (y_{n-k+l})
    return c[::-1].copy()  # reorder to multiply y_{n-l}
