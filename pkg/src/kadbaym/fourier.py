"""Matsubara-frequency transforms with exact leading-tail handling.

Functions on the closed tau grid [0, beta] generally jump at the branch
point; the jump J = C(0+) - sig*C(beta-) produces a 1/(i w) tail in the
frequency representation.  Both transform directions split that tail off
analytically and treat the smooth remainder numerically: the forward
transform integrates the piecewise-cubic interpolant of the samples
exactly (cubically corrected discrete transform), the backward transform
is a truncated, oversampled frequency sum evaluated by FFT folding.
"""

from __future__ import annotations

import numpy as np

from .contour import BOSON, FERMION

__all__ = [
    "matsubara_frequencies",
    "component_jump",
    "matsubara_dft",
    "matsubara_idft",
]

DEFAULT_OVERSAMPLING = 10


def _mindex(sig: int, nw: int) -> np.ndarray:
    # fermions use m = -nw..nw-1 so the odd frequencies come in +- pairs;
    # an unpaired top frequency would break hermiticity of truncated sums
    if sig == FERMION:
        return np.arange(-nw, nw)
    return np.arange(-nw, nw + 1)


def matsubara_frequencies(sig: int, beta: float, nw: int) -> np.ndarray:
    """Frequency grid: odd multiples of pi/beta for fermions (2 nw values,
    symmetric under negation), even ones for bosons (2 nw + 1 values)."""
    m = _mindex(sig, nw)
    if sig == FERMION:
        return (2 * m + 1) * np.pi / beta
    return 2 * m * np.pi / beta


def component_jump(cmat: np.ndarray, sig: int) -> np.ndarray:
    """Branch-point discontinuity J = C(0+) - sig*C(beta-) from the samples."""
    return cmat[0] - sig * cmat[-1]


def _sawtooth(sig: int, tau: np.ndarray, beta: float) -> np.ndarray:
    # s(tau) with smooth = C + s*J continuous under the xi-extension:
    # fermions subtract J/2, bosons add J*(tau/beta - 1/2)
    if sig == FERMION:
        return np.full_like(tau, -0.5)
    return tau / beta - 0.5


# cubic Lagrange coefficient matrices: rows = power of u, cols = sample in window
def _lagrange_coeffs(nodes):
    out = np.zeros((4, 4))
    for s, xs in enumerate(nodes):
        poly = np.polynomial.Polynomial([1.0])
        for r, xr in enumerate(nodes):
            if r != s:
                poly *= np.polynomial.Polynomial([-xr, 1.0]) / (xs - xr)
        out[: poly.coef.size, s] = poly.coef
    return out


_L_FIRST = _lagrange_coeffs([0.0, 1.0, 2.0, 3.0])
_L_INT = _lagrange_coeffs([-1.0, 0.0, 1.0, 2.0])
_L_LAST = _lagrange_coeffs([-2.0, -1.0, 0.0, 1.0])


def _panel_moments(theta: np.ndarray) -> np.ndarray:
    """mu_q(theta) = int_0^1 u^q e^{i theta u} du for q = 0..3, vectorized.

    Upward recursion where stable, power series near theta = 0.
    """
    theta = np.asarray(theta, dtype=float)
    mu = np.zeros((4,) + theta.shape, dtype=complex)
    big = np.abs(theta) > 0.5
    if np.any(big):
        th = theta[big]
        eith = np.exp(1j * th)
        m0 = (eith - 1.0) / (1j * th)
        mu[0][big] = m0
        prev = m0
        for q in range(1, 4):
            prev = (eith - q * prev) / (1j * th)
            mu[q][big] = prev
    small = ~big
    if np.any(small):
        th = theta[small]
        term = np.ones_like(th, dtype=complex)  # (i theta)^n / n!
        acc = np.zeros((4,) + th.shape, dtype=complex)
        for n in range(22):
            for q in range(4):
                acc[q] += term / (q + n + 1)
            term = term * (1j * th) / (n + 1)
        for q in range(4):
            mu[q][small] = acc[q]
    return mu


def _cubic_panel_coeffs(samples: np.ndarray) -> np.ndarray:
    """Per-panel cubic coefficients c[p, q] from N+1 samples (N >= 3 panels...).

    samples: (N+1, d, d); returns (N, 4, d, d).
    """
    N = samples.shape[0] - 1
    if N < 3:
        raise ValueError("cubically corrected transform needs at least 4 tau points")
    out = np.empty((N, 4) + samples.shape[1:], dtype=complex)
    windows = np.lib.stride_tricks.sliding_window_view(samples, 4, axis=0)
    # windows[i] = samples[i:i+4]; window axis is last
    interior = np.einsum("qs,pabs->pqab", _L_INT, windows)
    out[1: N - 1] = interior[: N - 2]
    out[0] = np.einsum("qs,sab->qab", _L_FIRST, samples[0:4])
    out[N - 1] = np.einsum("qs,sab->qab", _L_LAST, samples[N - 3: N + 1])
    return out


def _folded_spectrum(coeffs: np.ndarray, sig: int, nw: int) -> np.ndarray:
    """S_q(w_m) = sum_p e^{i w_m p h} c[p, q] on the frequency grid via FFT."""
    N = coeffs.shape[0]
    z = coeffs
    if sig == FERMION:
        z = z * np.exp(1j * np.pi * np.arange(N) / N)[:, None, None, None]
    spec = N * np.fft.ifft(z, axis=0)  # index r: sum_p z_p e^{2 pi i r p / N}
    return spec[_mindex(sig, nw) % N]


def matsubara_dft(cmat: np.ndarray, beta: float, sig: int, nw: int,
                  jump: np.ndarray | None = None) -> np.ndarray:
    """C(i w_m) for m = -nw..nw from samples on the closed tau grid.

    The jump J (default: measured from the samples) is transformed exactly;
    the smooth remainder is integrated through its piecewise-cubic
    interpolant.
    """
    cmat = np.asarray(cmat, dtype=complex)
    ntau = cmat.shape[0] - 1
    d = cmat.shape[1]
    h = beta / ntau
    if jump is None:
        jump = component_jump(cmat, sig)
    tau = np.linspace(0.0, beta, ntau + 1)
    smooth = cmat + _sawtooth(sig, tau, beta)[:, None, None] * jump

    coeffs = _cubic_panel_coeffs(smooth)
    w = matsubara_frequencies(sig, beta, nw)
    theta = w * h
    mu = _panel_moments(theta)  # (4, Nw)
    S = _folded_spectrum(coeffs, sig, nw)  # (Nw, 4, d, d)
    out = h * np.einsum("qm,mqab->mab", mu, S)

    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.where(w[:, None, None] != 0, -1.0 / (1j * w)[:, None, None], 0.0)
    out += tail * jump
    return out


def matsubara_idft(chat: np.ndarray, beta: float, sig: int, ntau: int,
                   jump: np.ndarray) -> np.ndarray:
    """Samples C(tau_j), j = 0..ntau, from coefficients on m = -nw..nw.

    chat must carry the physical tail; the known jump part is resummed
    analytically and only the smooth remainder is Fourier-summed.
    """
    chat = np.asarray(chat, dtype=complex)
    nw = chat.shape[0] // 2 if sig == FERMION else (chat.shape[0] - 1) // 2
    w = matsubara_frequencies(sig, beta, nw)
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.where(w[:, None, None] != 0, -1.0 / (1j * w)[:, None, None], 0.0)
    smooth_hat = chat - tail * jump

    m = _mindex(sig, nw)
    bins = np.zeros((ntau,) + chat.shape[1:], dtype=complex)
    np.add.at(bins, m % ntau, smooth_hat)
    vals = np.fft.fft(bins, axis=0)  # sum_r bins_r e^{-2 pi i j r / N}
    if sig == FERMION:
        vals = vals * np.exp(-1j * np.pi * np.arange(ntau) / ntau)[:, None, None]
    vals /= beta

    out = np.empty((ntau + 1,) + chat.shape[1:], dtype=complex)
    out[:ntau] = vals
    out[ntau] = sig * vals[0]
    tau = np.linspace(0.0, beta, ntau + 1)
    out -= _sawtooth(sig, tau, beta)[:, None, None] * jump
    return out
