"""Bubble products and weak-coupling self-energies for lattice models.

The two contour products

    bubble1: C_{c1,c2}(t,t') = i A_{a1,a2}(t,t') B_{b2,b1}(t',t)
    bubble2: C_{c1,c2}(t,t') = i A_{a1,a2}(t,t') B_{b1,b2}(t,t')

act slice-wise; with all index pairs equal they build the polarization,
the second-order (2B), GW and T-matrix self-energies of the Hubbard chain
demo.  Inputs are hermitian-symmetric; P, chi, W, Phi, T carriers are
bosonic, self-energies fermionic.
"""

from __future__ import annotations

import numpy as np

from . import backend
from .contour import BOSON, FERMION, ContourScalarFn, HermMatrix, tri_index
from .vie2 import vie2_mat, vie2_start, vie2_timestep

__all__ = ["bubble1", "bubble2", "polarization", "sigma_2b", "chi_from_P",
           "sigma_gw", "sigma_tmatrix", "ham_mf"]


def _slice_arrays(C: HermMatrix):
    return C.ret, C.les, C.tv, C.mat


def bubble1(n: int, C: HermMatrix, A: HermMatrix, B: HermMatrix,
            c: tuple | None = None, a: tuple | None = None, b: tuple | None = None) -> None:
    """Write slice n of C_{c}(t,t') = i A_{a}(t,t') B_{(b2,b1)}(t',t).

    Without index tuples the product is taken elementwise over all (i, j)
    pairs with c = a = b = (i, j).
    """
    if c is None:
        backend.bubble1_slice(n, B.sig, *_slice_arrays(A), *_slice_arrays(B),
                              *_slice_arrays(C))
        return
    (c1, c2), (a1, a2), (b1, b2) = c, a, b
    ntau = C.ntau
    if n == -1:
        C.mat[:, c1, c2] = -A.mat[:, a1, a2] * (B.sig * B.mat[::-1, b2, b1])
        return
    lo, hi = tri_index(n, 0), tri_index(n, n) + 1
    aR = A.ret[lo:hi, a1, a2]
    aL = A.les[lo:hi, a1, a2]          # A^<(j, n)
    aLnj = -A.les[lo:hi, a2, a1].conj()  # A^<(n, j)
    bRT = B.ret[lo:hi, b2, b1]
    bLT = B.les[lo:hi, b2, b1]          # B^<(j, n) element (b2, b1)
    bA = B.ret[lo:hi, b1, b2].conj()    # B^A(j, n) element (b2, b1)
    bGtr = B.ret[lo:hi, b2, b1] - B.les[lo:hi, b1, b2].conj()  # B^>(n, j)
    C.ret[lo:hi, c1, c2] = 1j * (aR * bLT + aLnj * bA)
    C.les[lo:hi, c1, c2] = 1j * aL * bGtr
    C.tv[n, :, c1, c2] = -1j * B.sig * A.tv[n, :, a1, a2] * B.tv[n, ::-1, b1, b2].conj()


def bubble2(n: int, C: HermMatrix, A: HermMatrix, B: HermMatrix,
            c: tuple | None = None, a: tuple | None = None, b: tuple | None = None) -> None:
    """Write slice n of C_{c}(t,t') = i A_{a}(t,t') B_{b}(t,t')."""
    if c is None:
        backend.bubble2_slice(n, B.sig, *_slice_arrays(A), *_slice_arrays(B),
                              *_slice_arrays(C))
        return
    (c1, c2), (a1, a2), (b1, b2) = c, a, b
    if n == -1:
        C.mat[:, c1, c2] = -A.mat[:, a1, a2] * B.mat[:, b1, b2]
        return
    lo, hi = tri_index(n, 0), tri_index(n, n) + 1
    aR = A.ret[lo:hi, a1, a2]
    bR = B.ret[lo:hi, b1, b2]
    aLnj = -A.les[lo:hi, a2, a1].conj()  # A^<(n, j)
    bLnj = -B.les[lo:hi, b2, b1].conj()
    C.ret[lo:hi, c1, c2] = 1j * (aR * bR + aLnj * bR + aR * bLnj)
    C.les[lo:hi, c1, c2] = 1j * A.les[lo:hi, a1, a2] * B.les[lo:hi, b1, b2]
    C.tv[n, :, c1, c2] = 1j * A.tv[n, :, a1, a2] * B.tv[n, :, b1, b2]


def polarization(n: int, G: HermMatrix, P: HermMatrix) -> None:
    """P_{ij}(t,t') = -i G_{ij}(t,t') G_{ji}(t',t) on slice n (bosonic P)."""
    bubble1(n, P, G, G)
    P.smul(n, -1.0)


def sigma_2b(n: int, G: HermMatrix, U: ContourScalarFn, Sigma: HermMatrix) -> None:
    """Second-order self-energy slice: Sigma_{ij} = i U(t) U(t') G_{ij} P_{ij}."""
    P = HermMatrix(G.nt, G.ntau, G.d, BOSON)
    polarization(n, G, P)
    P.left_multiply(n, _expand(U, G.d))
    P.right_multiply(n, _expand(U, G.d))
    bubble2(n, Sigma, G, P)


def _expand(U: ContourScalarFn, d: int) -> ContourScalarFn:
    """Scalar interaction as a d x d multiple of the identity."""
    if U.d == d:
        return U
    if U.d != 1:
        raise ValueError("interaction must be scalar or match the orbital dimension")
    out = ContourScalarFn(U.nt, d)
    out.values[:] = U.values[:, 0, 0][:, None, None] * np.eye(d)
    return out


def chi_from_P(n: int, chi: HermMatrix, P: HermMatrix, U: ContourScalarFn,
               PxU: HermMatrix, UxP: HermMatrix, beta: float, h: float, k: int,
               matsubara_method: str = "fixpoint") -> None:
    """Advance the RPA susceptibility chi = P + P*U*chi by one causal phase.

    n = -1 solves the Matsubara equation, n = k the start block (slices
    0..k must be present in P), n > k one time step.  PxU/UxP are work
    containers holding the kernel K = -P U(t') and its conjugate.
    """
    for m in ([-1] if n == -1 else range(k + 1) if n == k else [n]):
        PxU.set_timestep(m, P)
        UxP.set_timestep(m, P)
        PxU.right_multiply(m, _expand(U, P.d))
        UxP.left_multiply(m, _expand(U, P.d))
        PxU.smul(m, -1.0)
        UxP.smul(m, -1.0)
    if n == -1:
        vie2_mat(chi, PxU, UxP, P, beta, k, method=matsubara_method)
    elif n == k:
        vie2_start(chi, PxU, UxP, P, beta, h, k)
    elif n > k:
        vie2_timestep(n, chi, PxU, UxP, P, beta, h, k)
    else:
        raise ValueError("chi start phase is driven at n = k with slices 0..k present")


def sigma_gw(n: int, G: HermMatrix, chi: HermMatrix, U: ContourScalarFn,
             Sigma: HermMatrix) -> None:
    """GW self-energy slice from the solved susceptibility:
    Sigma_{ij} = i G_{ij} dW_{ij}, dW = U(t) chi U(t')."""
    dW = HermMatrix(chi.nt, chi.ntau, chi.d, BOSON)
    dW.set_timestep(n, chi)
    dW.left_multiply(n, _expand(U, chi.d))
    dW.right_multiply(n, _expand(U, chi.d))
    bubble2(n, Sigma, G, dW)


def phi_pp(n: int, G: HermMatrix, Phi: HermMatrix) -> None:
    """Particle-particle bubble Phi_{ij} = -i G_{ij}(t,t') G_{ij}(t,t')."""
    bubble2(n, Phi, G, G)
    Phi.smul(n, -1.0)


def sigma_tmatrix(n: int, G: HermMatrix, T: HermMatrix, U: ContourScalarFn,
                  Sigma: HermMatrix) -> None:
    """T-matrix self-energy slice from the solved ladder T:
    Sigma_{ij} = i U(t) T_{ij}(t,t') U(t') G_{ji}(t',t)."""
    UTU = HermMatrix(T.nt, T.ntau, T.d, BOSON)
    UTU.set_timestep(n, T)
    UTU.left_multiply(n, _expand(U, T.d))
    UTU.right_multiply(n, _expand(U, T.d))
    bubble1(n, Sigma, UTU, G)


def ham_mf(n: int, G: HermMatrix, U: ContourScalarFn, eps0: ContourScalarFn,
           nbar: float, eps_mf: ContourScalarFn) -> None:
    """Mean-field Hamiltonian eps^MF_ij = eps0_ij + delta_ij U (n_i - nbar)."""
    rho = G.density_matrix(n)
    occ = np.real(np.diag(rho))
    u = complex(U[n][0, 0]).real if U.d == 1 else float(np.real(U[n][0, 0]))
    eps_mf[n] = eps0[n] + u * np.diag(occ - nbar)
