"""Storage and elementwise algebra for functions on the Kadanoff-Baym contour.

A two-time function C(t, t') with hermitian symmetry is kept as the minimal
set of Keldysh components on the discretized contour:

* ``mat[m]``        C^M(m h_tau),                m = 0..ntau
* ``ret[n(n+1)/2+j]``  C^R(n h, j h),            0 <= j <= n <= nt
* ``les[n(n+1)/2+j]``  C^<(j h, n h),            0 <= j <= n <= nt
* ``tv[n, m]``      C^rceil(n h, m h_tau)

Values outside the stored triangles (advanced and right-mixing components,
the upper retarded triangle, ...) are reconstructed through the hermitian
conjugate C-dagger; for a hermitian-symmetric function pass the object
itself as its own conjugate.
"""

from __future__ import annotations

import numpy as np

from .weights import build_weights, extrapolation_coeffs

FERMION = -1
BOSON = +1

__all__ = [
    "FERMION",
    "BOSON",
    "tri_index",
    "ContourScalarFn",
    "TimeSlice",
    "HermMatrix",
    "distance_norm2",
    "distance_norm2_component",
    "extrapolate_timestep",
    "init_from_matsubara",
]


def tri_index(n: int, j: int) -> int:
    """Flat index of entry (n, j), j <= n, in the triangular storage."""
    return n * (n + 1) // 2 + j


def _as_matrix(val, d):
    arr = np.asarray(val, dtype=complex)
    if arr.shape == () and d == 1:
        arr = arr.reshape(1, 1)
    if arr.shape != (d, d):
        raise ValueError(f"expected a {d}x{d} matrix, got shape {arr.shape}")
    return arr


class ContourScalarFn:
    """Single-time contour function f_n, n = -1..nt, matrix valued.

    Index -1 holds f(0^-), the value on the imaginary branch.
    """

    def __init__(self, nt: int, d: int = 1):
        if nt < -1:
            raise ValueError("nt must be >= -1")
        self.nt = int(nt)
        self.d = int(d)
        self.values = np.zeros((nt + 2, d, d), dtype=complex)

    @classmethod
    def constant(cls, nt: int, mat) -> "ContourScalarFn":
        mat = np.atleast_2d(np.asarray(mat, dtype=complex))
        f = cls(nt, mat.shape[0])
        f.values[:] = mat
        return f

    @classmethod
    def from_array(cls, values) -> "ContourScalarFn":
        values = np.asarray(values, dtype=complex)
        if values.ndim == 1:
            values = values[:, None, None]
        f = cls(values.shape[0] - 2, values.shape[1])
        f.values[:] = values
        return f

    def _pos(self, n: int) -> int:
        if not -1 <= n <= self.nt:
            raise IndexError(f"timestep {n} outside -1..{self.nt}")
        return n + 1

    def __getitem__(self, n: int) -> np.ndarray:
        return self.values[self._pos(n)]

    def __setitem__(self, n: int, val) -> None:
        self.values[self._pos(n)] = _as_matrix(val, self.d)

    def set_constant(self, mat) -> None:
        self.values[:] = _as_matrix(mat, self.d)

    def copy(self) -> "ContourScalarFn":
        return ContourScalarFn.from_array(self.values)


_COMPONENT_ALIASES = {
    "M": "mat", "mat": "mat",
    "R": "ret", "ret": "ret",
    "<": "les", "les": "les", "L": "les",
    "tv": "tv", "left": "tv", "⌉": "tv",
    "vt": "vt", "right": "vt", "⌈": "vt",
    "A": "adv", "adv": "adv",
}


class TimeSlice:
    """One contour time slice T[C]_n (n = -1 holds the Matsubara component)."""

    def __init__(self, tstp: int, ntau: int, d: int = 1, sig: int = FERMION):
        if tstp < -1:
            raise ValueError("tstp must be >= -1")
        self.tstp = int(tstp)
        self.ntau = int(ntau)
        self.d = int(d)
        self.sig = int(sig)
        if tstp == -1:
            self.mat = np.zeros((ntau + 1, d, d), dtype=complex)
            self.ret = self.les = self.tv = None
        else:
            self.mat = None
            self.ret = np.zeros((tstp + 1, d, d), dtype=complex)
            self.les = np.zeros((tstp + 1, d, d), dtype=complex)
            self.tv = np.zeros((ntau + 1, d, d), dtype=complex)

    def _arrays(self):
        if self.tstp == -1:
            return (self.mat,)
        return (self.ret, self.les, self.tv)

    def copy(self) -> "TimeSlice":
        out = TimeSlice(self.tstp, self.ntau, self.d, self.sig)
        for dst, src in zip(out._arrays(), self._arrays()):
            dst[:] = src
        return out

    def _check_compatible(self, other: "TimeSlice"):
        if (self.tstp, self.ntau, self.d, self.sig) != (other.tstp, other.ntau, other.d, other.sig):
            raise ValueError("time slices are not compatible (tstp/ntau/d/sig differ)")

    def incr(self, other: "TimeSlice", alpha=1.0) -> None:
        self._check_compatible(other)
        for dst, src in zip(self._arrays(), other._arrays()):
            dst += alpha * src

    def smul(self, alpha) -> None:
        for arr in self._arrays():
            arr *= alpha

    def left_multiply(self, f: ContourScalarFn) -> None:
        _left_multiply_arrays(self, f)

    def right_multiply(self, f: ContourScalarFn) -> None:
        _right_multiply_arrays(self, f)


def _left_multiply_arrays(sl, f: ContourScalarFn) -> None:
    if f.d != sl.d:
        raise ValueError("dimension mismatch between slice and function")
    n = sl.tstp
    if n == -1:
        sl.mat[:] = f[-1] @ sl.mat
        return
    sl.ret[:] = f[n] @ sl.ret
    sl.tv[:] = f[n] @ sl.tv
    for j in range(n + 1):  # first argument of C^< (j h, n h) is j
        sl.les[j] = f[j] @ sl.les[j]


def _right_multiply_arrays(sl, f: ContourScalarFn) -> None:
    if f.d != sl.d:
        raise ValueError("dimension mismatch between slice and function")
    n = sl.tstp
    if n == -1:
        sl.mat[:] = sl.mat @ f[-1]
        return
    for j in range(n + 1):
        sl.ret[j] = sl.ret[j] @ f[j]
    sl.tv[:] = sl.tv @ f[-1]
    sl.les[:] = sl.les @ f[n]


class HermMatrix:
    """Two-time contour function in minimal Keldysh-component storage."""

    def __init__(self, nt: int, ntau: int, d: int = 1, sig: int = FERMION):
        if nt < -1:
            raise ValueError("nt must be >= -1 (-1 means Matsubara only)")
        if ntau < 1:
            raise ValueError("ntau must be >= 1")
        if sig not in (FERMION, BOSON):
            raise ValueError("sig must be -1 (fermion) or +1 (boson)")
        self.nt = int(nt)
        self.ntau = int(ntau)
        self.d = int(d)
        self.sig = int(sig)
        ntri = (nt + 1) * (nt + 2) // 2 if nt >= 0 else 0
        self.mat = np.zeros((ntau + 1, d, d), dtype=complex)
        self.ret = np.zeros((ntri, d, d), dtype=complex)
        self.les = np.zeros((ntri, d, d), dtype=complex)
        self.tv = np.zeros((max(nt + 1, 0), ntau + 1, d, d), dtype=complex)

    # ------------------------------------------------------------- access

    def _check_pair(self, n, j):
        if not (0 <= j <= n <= self.nt):
            raise IndexError(f"(n, j) = ({n}, {j}) outside the stored triangle (nt={self.nt})")

    def get_mat(self, m):
        return self.mat[m]

    def get_ret(self, n, j):
        self._check_pair(n, j)
        return self.ret[tri_index(n, j)]

    def get_les(self, j, n):
        self._check_pair(n, j)
        return self.les[tri_index(n, j)]

    def get_tv(self, n, m):
        return self.tv[n, m]

    def set_mat(self, m, val):
        self.mat[m] = _as_matrix(val, self.d)

    def set_ret(self, n, j, val):
        self._check_pair(n, j)
        self.ret[tri_index(n, j)] = _as_matrix(val, self.d)

    def set_les(self, j, n, val):
        self._check_pair(n, j)
        self.les[tri_index(n, j)] = _as_matrix(val, self.d)

    def set_tv(self, n, m, val):
        self.tv[n, m] = _as_matrix(val, self.d)

    def ret_row(self, n):
        """Contiguous view of C^R(n, 0..n)."""
        return self.ret[tri_index(n, 0): tri_index(n, n) + 1]

    def les_col(self, n):
        """Contiguous view of C^<(0..n, n)."""
        return self.les[tri_index(n, 0): tri_index(n, n) + 1]

    # -------------------------------------------------- component access

    def get_component(self, which, i, j, conj: "HermMatrix | None" = None):
        """Keldysh component at logical indices, reconstructing off-triangle
        values from the hermitian conjugate `conj` (pass the object itself
        for a hermitian-symmetric function).

        'R' outside the stored triangle returns the smooth continuation
        used by the solvers (the modified retarded component).
        """
        which = _COMPONENT_ALIASES.get(which)
        if which is None:
            raise ValueError("unknown component")
        if which == "mat":
            if not 0 <= i <= self.ntau:
                raise IndexError("Matsubara index outside 0..ntau")
            return self.mat[i].copy()
        if which == "tv":
            if not (0 <= i <= self.nt and 0 <= j <= self.ntau):
                raise IndexError("left-mixing indices out of range")
            return self.tv[i, j].copy()
        if which == "vt":
            # C^|(tau_i, t_j) = -sig * [conj^|>(t_j, beta - tau_i)]^dagger
            if not (0 <= i <= self.ntau and 0 <= j <= self.nt):
                raise IndexError("right-mixing indices out of range")
            cc = self._need_conj(conj)
            return -self.sig * cc.tv[j, self.ntau - i].conj().T
        if which == "ret":
            if not (0 <= i <= self.nt and 0 <= j <= self.nt):
                raise IndexError("retarded indices out of range")
            if j <= i:
                return self.ret[tri_index(i, j)].copy()
            cc = self._need_conj(conj)
            return -cc.ret[tri_index(j, i)].conj().T
        if which == "adv":
            # logical domain i <= j; C^A(t_i, t_j) = [conj^R(t_j, t_i)]^dagger
            if not (0 <= i <= j <= self.nt):
                raise IndexError("advanced component defined for first index <= second")
            cc = self._need_conj(conj)
            return cc.ret[tri_index(j, i)].conj().T
        # lesser: stored for i <= j
        if not (0 <= i <= self.nt and 0 <= j <= self.nt):
            raise IndexError("lesser indices out of range")
        if i <= j:
            return self.les[tri_index(j, i)].copy()
        cc = self._need_conj(conj)
        return -cc.les[tri_index(i, j)].conj().T

    def _need_conj(self, conj):
        if conj is None:
            raise ValueError(
                "reconstruction needs the hermitian conjugate; pass conj=<HermMatrix> "
                "(the function itself if it is hermitian-symmetric)")
        if (conj.nt, conj.ntau, conj.d, conj.sig) != (self.nt, self.ntau, self.d, self.sig):
            raise ValueError("conjugate function has incompatible dimensions")
        return conj

    # ------------------------------------------------------------- slices

    def get_timestep(self, n: int) -> TimeSlice:
        sl = TimeSlice(n, self.ntau, self.d, self.sig)
        if n == -1:
            sl.mat[:] = self.mat
        else:
            sl.ret[:] = self.ret_row(n)
            sl.les[:] = self.les_col(n)
            sl.tv[:] = self.tv[n]
        return sl

    def _source_arrays(self, n, src):
        if isinstance(src, HermMatrix):
            if (src.ntau, src.d) != (self.ntau, self.d) or src.sig != self.sig:
                raise ValueError("incompatible source function")
            if n == -1:
                return (src.mat,)
            return (src.ret_row(n), src.les_col(n), src.tv[n])
        if isinstance(src, TimeSlice):
            if (src.ntau, src.d, src.sig) != (self.ntau, self.d, self.sig) or src.tstp != n:
                raise ValueError("incompatible source slice")
            return src._arrays()
        raise TypeError("source must be a HermMatrix or TimeSlice")

    def _target_arrays(self, n):
        if n == -1:
            return (self.mat,)
        return (self.ret_row(n), self.les_col(n), self.tv[n])

    def set_timestep(self, n: int, src) -> None:
        for dst, s in zip(self._target_arrays(n), self._source_arrays(n, src)):
            dst[:] = s

    def incr_timestep(self, n: int, src, alpha=1.0) -> None:
        for dst, s in zip(self._target_arrays(n), self._source_arrays(n, src)):
            dst += alpha * s

    def smul(self, n: int, alpha) -> None:
        for arr in self._target_arrays(n):
            arr *= alpha

    def left_multiply(self, n: int, f: ContourScalarFn) -> None:
        _left_multiply_arrays(_SliceView(self, n), f)

    def right_multiply(self, n: int, f: ContourScalarFn) -> None:
        _right_multiply_arrays(_SliceView(self, n), f)

    # --------------------------------------------------------- observables

    def density_matrix(self, n: int) -> np.ndarray:
        """Single-particle density matrix: i*sig*C^<(t,t), or -C^M(beta) at n=-1."""
        if n == -1:
            return -self.mat[self.ntau].copy()
        return 1j * self.sig * self.les[tri_index(n, n)].copy()

    def copy(self) -> "HermMatrix":
        out = HermMatrix(self.nt, self.ntau, self.d, self.sig)
        out.mat[:] = self.mat
        out.ret[:] = self.ret
        out.les[:] = self.les
        out.tv[:] = self.tv
        return out

    def __repr__(self):  # pragma: no cover
        stat = "fermion" if self.sig == FERMION else "boson"
        return f"HermMatrix(nt={self.nt}, ntau={self.ntau}, d={self.d}, {stat})"


class _SliceView:
    """In-place view of one HermMatrix slice with the TimeSlice field layout."""

    def __init__(self, C: HermMatrix, n: int):
        self.tstp = n
        self.ntau = C.ntau
        self.d = C.d
        self.sig = C.sig
        if n == -1:
            self.mat = C.mat
            self.ret = self.les = self.tv = None
        else:
            self.mat = None
            self.ret = C.ret_row(n)
            self.les = C.les_col(n)
            self.tv = C.tv[n]


# ------------------------------------------------------------------ utils

def init_from_matsubara(C: HermMatrix) -> None:
    """Impose the KMS corner values: C^|>(0, tau) = i*sig*C^M(beta - tau),
    C^<(0, 0) = C^|>(0, 0+)."""
    if C.nt < 0:
        return
    C.tv[0] = 1j * C.sig * C.mat[::-1]
    C.les[tri_index(0, 0)] = C.tv[0, 0]


def distance_norm2_component(which: str, A: HermMatrix, B: HermMatrix, n: int) -> float:
    """Sum of absolute entrywise deviations of one component at time step n."""
    which = _COMPONENT_ALIASES.get(which, which)
    if which == "mat":
        return float(np.abs(A.mat - B.mat).sum())
    if which == "ret":
        return float(np.abs(A.ret_row(n) - B.ret_row(n)).sum())
    if which == "les":
        return float(np.abs(A.les_col(n) - B.les_col(n)).sum())
    if which == "tv":
        return float(np.abs(A.tv[n] - B.tv[n]).sum())
    raise ValueError(f"unknown component {which!r}")


def distance_norm2(A: HermMatrix, B: HermMatrix, n: int) -> float:
    """Distance of two contour functions at time step n (Matsubara for n=-1).

    Despite the historical name this is the sum of absolute entrywise
    deviations of the stored components, implemented as defined.
    """
    if n == -1:
        return distance_norm2_component("mat", A, B, n)
    return (distance_norm2_component("tv", A, B, n)
            + distance_norm2_component("ret", A, B, n)
            + distance_norm2_component("les", A, B, n))


def extrapolate_timestep(C: HermMatrix, n: int, k: int) -> None:
    """Predict slice n+1 of a hermitian-symmetric C by degree-k extrapolation.

    tv columns extrapolate along fixed tau; the retarded component along its
    first k+1 columns and then along diagonals; the lesser component along
    its first k+1 rows and then along anti-diagonals (including the new
    diagonal point).  Requires slices 0..n with n >= k and n+1 <= nt.
    """
    build_weights(k)
    if n < k:
        raise ValueError(f"extrapolation needs n >= k (got n={n}, k={k})")
    if n + 1 > C.nt:
        raise ValueError("no room for slice n+1")
    c = extrapolation_coeffs(k)  # y_{n+1} = sum_l c[l] y_{n-l}

    # left-mixing: along t at fixed tau
    C.tv[n + 1] = np.einsum("l,lmab->mab", c, C.tv[n - k: n + 1][::-1])

    ntri = tri_index(n + 1, 0)
    # retarded: columns j = 0..k via the smooth continuation, then diagonals
    for j in range(min(k, n + 1) + 1):
        acc = np.zeros((C.d, C.d), complex)
        for l in range(k + 1):
            row = n - l
            if row >= j:
                acc += c[l] * C.ret[tri_index(row, j)]
            else:
                acc += c[l] * (-C.ret[tri_index(j, row)].conj().T)
        C.ret[ntri + j] = acc
    for j in range(n - k + 1):  # diagonals: G^R(t, t - j h), remaining columns
        col = n + 1 - j
        acc = np.zeros((C.d, C.d), complex)
        for l in range(k + 1):
            acc += c[l] * C.ret[tri_index(n - l, n - l - j)]
        C.ret[ntri + col] = acc

    # lesser: rows j = 0..k, then anti-diagonals including the diagonal point
    for j in range(min(k, n + 1) + 1):
        acc = np.zeros((C.d, C.d), complex)
        for l in range(k + 1):
            col = n - l
            if col >= j:
                acc += c[l] * C.les[tri_index(col, j)]
            else:
                acc += c[l] * (-C.les[tri_index(j, col)].conj().T)
        C.les[ntri + j] = acc
    for jj in range(k + 1, n + 2):  # target rows k+1..n+1
        acc = np.zeros((C.d, C.d), complex)
        for l in range(k + 1):
            t = n - l
            first = jj - (n + 1) + t
            acc += c[l] * C.les[tri_index(t, first)]
        C.les[ntri + jj] = acc


def extrapolate_function(f: ContourScalarFn, n: int, k: int) -> np.ndarray:
    """Degree-k extrapolation of a single-time contour function to step n+1."""
    c = extrapolation_coeffs(k)
    if n < k:
        raise ValueError("need n >= k samples")
    return np.einsum("l,lab->ab", c, f.values[n + 1 - k: n + 2][::-1])
