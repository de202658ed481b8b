"""Generic k-th order solvers for Volterra equations on an equidistant mesh.

Integro-differential form (VIDE):

    dy/dt + p(t) y(t) + int_0^t k(t,s) y(s) ds = q(t),   y(0) given,

and the integral equation of the second kind (VIE):

    y(t) + int_0^t k(t,s) y(s) ds = q(t),                y(0) = q(0),

plus the conjugate forms with the kernel acting from the right
(y(s) k(s,t)).  Start-up solves the first k points as one dense linear
system; time stepping combines backward differentiation with Gregory
quadrature.  All data is matrix-valued (d x d, d >= 1); the kernel must be
supplied on the full square 0..n (callers provide smoothly continued
values above the diagonal).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .weights import WeightTableSet, bdf_weights, build_weights
from ._kernels_np import greg_row, greg_w

__all__ = [
    "VolterraProblem",
    "StartupError",
    "vide_start", "vide_step", "vide_start_conj", "vide_step_conj",
    "vie_start", "vie_step", "vie_start_conj", "vie_step_conj",
    "solve_vide", "solve_vie",
]

KernelLike = Union[np.ndarray, Callable[[int, int], np.ndarray]]


class StartupError(RuntimeError):
    """The dense start-up system was (near-)singular."""


@dataclass
class VolterraProblem:
    """Problem data for a VIDE/VIE on t_j = j h.

    kernel, p, q may be arrays (indexed [i, j] resp. [i]) or callables
    returning d x d matrices; p is ignored by the VIE solvers and y0 by
    the VIE form (y0 = q0 there).
    """

    kernel: KernelLike
    q: KernelLike
    h: float
    k: int
    d: int = 1
    p: KernelLike | None = None
    y0: np.ndarray | None = None

    def kern(self, i: int, j: int) -> np.ndarray:
        if callable(self.kernel):
            return np.atleast_2d(np.asarray(self.kernel(i, j), dtype=complex))
        return self.kernel[i, j]

    def pval(self, i: int) -> np.ndarray:
        if self.p is None:
            return np.zeros((self.d, self.d), dtype=complex)
        if callable(self.p):
            return np.atleast_2d(np.asarray(self.p(i), dtype=complex))
        return self.p[i]

    def qval(self, i: int) -> np.ndarray:
        if self.q is None:
            return np.zeros((self.d, self.d), dtype=complex)
        if callable(self.q):
            return np.atleast_2d(np.asarray(self.q(i), dtype=complex))
        return self.q[i]

    def initial(self) -> np.ndarray:
        if self.y0 is None:
            raise ValueError("VIDE problem needs an initial value y0")
        return np.atleast_2d(np.asarray(self.y0, dtype=complex))


def _tab(k) -> WeightTableSet:
    return build_weights(k)


def _solve_dense(big, rhs, k, d):
    try:
        sol = np.linalg.solve(big, rhs)
    except np.linalg.LinAlgError as exc:
        raise StartupError(f"singular start-up system: {exc}") from exc
    if not np.all(np.isfinite(sol)):
        raise StartupError("start-up system produced non-finite values")
    return sol


def vide_start(problem: VolterraProblem) -> np.ndarray:
    """Solve the (k d) x (k d) start-up system; returns y[0..k]."""
    k, d, h = problem.k, problem.d, problem.h
    W = _tab(k)
    ident = np.eye(d)
    y = np.zeros((k + 1, d, d), dtype=complex)
    y[0] = problem.initial()
    big = np.zeros((k * d, k * d), dtype=complex)
    rhs = np.zeros((k * d, d), dtype=complex)
    for n in range(1, k + 1):
        M0 = (W.D[n, 0] / h) * ident + h * W.s[n, 0] * problem.kern(n, 0)
        rhs[(n - 1) * d: n * d] = problem.qval(n) - M0 @ y[0]
        for l in range(1, k + 1):
            M = (W.D[n, l] / h) * ident + h * W.s[n, l] * problem.kern(n, l)
            if l == n:
                M = M + problem.pval(n)
            big[(n - 1) * d: n * d, (l - 1) * d: l * d] = M
    sol = _solve_dense(big, rhs, k, d)
    for l in range(1, k + 1):
        y[l] = sol[(l - 1) * d: l * d]
    return y


def vide_step(problem: VolterraProblem, n: int, y: np.ndarray) -> np.ndarray:
    """One step of the VIDE: y_n from y[0..n-1] (n > k)."""
    k, d, h = problem.k, problem.d, problem.h
    if n <= k:
        raise ValueError("stepping requires n > k")
    W = _tab(k)
    bdf = bdf_weights(k + 1)
    ident = np.eye(d)
    w = greg_row(k, W.s, W.Sig, W.omega, n)
    acc = problem.qval(n).astype(complex).copy()
    for j in range(1, bdf.shape[0]):
        acc -= (bdf[j] / h) * y[n - j]
    for l in range(n):
        acc -= h * w[l] * (problem.kern(n, l) @ y[l])
    op = (bdf[0] / h) * ident + problem.pval(n) + h * w[n] * problem.kern(n, n)
    return np.linalg.solve(op, acc)


def vide_start_conj(problem: VolterraProblem) -> np.ndarray:
    """Start-up of the conjugate VIDE (kernel multiplies y from the right)."""
    k, d, h = problem.k, problem.d, problem.h
    W = _tab(k)
    ident = np.eye(d)
    y = np.zeros((k + 1, d, d), dtype=complex)
    y[0] = problem.initial()
    big = np.zeros((k * d, k * d), dtype=complex)
    rhs = np.zeros((k * d, d), dtype=complex)
    for n in range(1, k + 1):
        M0 = (W.D[n, 0] / h) * ident + h * W.s[n, 0] * problem.kern(0, n)
        rhs[(n - 1) * d: n * d] = (problem.qval(n) - y[0] @ M0).T
        for l in range(1, k + 1):
            M = (W.D[n, l] / h) * ident + h * W.s[n, l] * problem.kern(l, n)
            if l == n:
                M = M + problem.pval(n)
            big[(n - 1) * d: n * d, (l - 1) * d: l * d] = M.T
    sol = _solve_dense(big, rhs, k, d)
    for l in range(1, k + 1):
        y[l] = sol[(l - 1) * d: l * d].T
    return y


def vide_step_conj(problem: VolterraProblem, n: int, y: np.ndarray) -> np.ndarray:
    k, d, h = problem.k, problem.d, problem.h
    if n <= k:
        raise ValueError("stepping requires n > k")
    W = _tab(k)
    bdf = bdf_weights(k + 1)
    ident = np.eye(d)
    w = greg_row(k, W.s, W.Sig, W.omega, n)
    acc = problem.qval(n).astype(complex).copy()
    for j in range(1, bdf.shape[0]):
        acc -= (bdf[j] / h) * y[n - j]
    for l in range(n):
        acc -= h * w[l] * (y[l] @ problem.kern(l, n))
    op = (bdf[0] / h) * ident + problem.pval(n) + h * w[n] * problem.kern(n, n)
    return np.linalg.solve(op.T, acc.T).T


def vie_start(problem: VolterraProblem) -> np.ndarray:
    """Start-up of the VIE of the second kind; y_0 = q_0."""
    k, d, h = problem.k, problem.d, problem.h
    W = _tab(k)
    ident = np.eye(d)
    y = np.zeros((k + 1, d, d), dtype=complex)
    y[0] = problem.qval(0)
    big = np.zeros((k * d, k * d), dtype=complex)
    rhs = np.zeros((k * d, d), dtype=complex)
    for n in range(1, k + 1):
        M0 = h * W.s[n, 0] * problem.kern(n, 0)
        rhs[(n - 1) * d: n * d] = problem.qval(n) - M0 @ y[0]
        for l in range(1, k + 1):
            M = h * W.s[n, l] * problem.kern(n, l)
            if l == n:
                M = M + ident
            big[(n - 1) * d: n * d, (l - 1) * d: l * d] = M
    sol = _solve_dense(big, rhs, k, d)
    for l in range(1, k + 1):
        y[l] = sol[(l - 1) * d: l * d]
    return y


def vie_step(problem: VolterraProblem, n: int, y: np.ndarray) -> np.ndarray:
    k, d, h = problem.k, problem.d, problem.h
    if n <= k:
        raise ValueError("stepping requires n > k")
    W = _tab(k)
    ident = np.eye(d)
    w = greg_row(k, W.s, W.Sig, W.omega, n)
    acc = problem.qval(n).astype(complex).copy()
    for l in range(n):
        acc -= h * w[l] * (problem.kern(n, l) @ y[l])
    op = ident + h * w[n] * problem.kern(n, n)
    return np.linalg.solve(op, acc)


def vie_start_conj(problem: VolterraProblem) -> np.ndarray:
    k, d, h = problem.k, problem.d, problem.h
    W = _tab(k)
    ident = np.eye(d)
    y = np.zeros((k + 1, d, d), dtype=complex)
    y[0] = problem.qval(0)
    big = np.zeros((k * d, k * d), dtype=complex)
    rhs = np.zeros((k * d, d), dtype=complex)
    for n in range(1, k + 1):
        M0 = h * W.s[n, 0] * problem.kern(0, n)
        rhs[(n - 1) * d: n * d] = (problem.qval(n) - y[0] @ M0).T
        for l in range(1, k + 1):
            M = h * W.s[n, l] * problem.kern(l, n)
            if l == n:
                M = M + ident
            big[(n - 1) * d: n * d, (l - 1) * d: l * d] = M.T
    sol = _solve_dense(big, rhs, k, d)
    for l in range(1, k + 1):
        y[l] = sol[(l - 1) * d: l * d].T
    return y


def vie_step_conj(problem: VolterraProblem, n: int, y: np.ndarray) -> np.ndarray:
    k, d, h = problem.k, problem.d, problem.h
    if n <= k:
        raise ValueError("stepping requires n > k")
    W = _tab(k)
    ident = np.eye(d)
    w = greg_row(k, W.s, W.Sig, W.omega, n)
    acc = problem.qval(n).astype(complex).copy()
    for l in range(n):
        acc -= h * w[l] * (y[l] @ problem.kern(l, n))
    op = ident + h * w[n] * problem.kern(n, n)
    return np.linalg.solve(op.T, acc.T).T


def solve_vide(problem: VolterraProblem, N: int, conj: bool = False) -> np.ndarray:
    """y[0..N] of the VIDE (start-up then stepping)."""
    start = vide_start_conj if conj else vide_start
    step = vide_step_conj if conj else vide_step
    y = np.zeros((N + 1, problem.d, problem.d), dtype=complex)
    ystart = start(problem)
    y[: problem.k + 1] = ystart[: N + 1]
    for n in range(problem.k + 1, N + 1):
        y[n] = step(problem, n, y)
    return y


def solve_vie(problem: VolterraProblem, N: int, conj: bool = False) -> np.ndarray:
    """y[0..N] of the VIE of the second kind."""
    start = vie_start_conj if conj else vie_start
    step = vie_step_conj if conj else vie_step
    y = np.zeros((N + 1, problem.d, problem.d), dtype=complex)
    ystart = start(problem)
    y[: problem.k + 1] = ystart[: N + 1]
    for n in range(problem.k + 1, N + 1):
        y[n] = step(problem, n, y)
    return y
