"""Exact rational linear algebra on numpy object arrays of gmpy2.mpq.

All routines here are exact: no floating point enters. Matrices are 2-d
numpy arrays with dtype=object holding gmpy2.mpq (or int) entries; vectors
are 1-d arrays. Basis-of-subspace data is kept in reduced row echelon form
(rows normalized to leading 1) so every derived object is canonical.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from gmpy2 import mpq

from .errors import DimensionError

QQ = mpq


def qq(x) -> mpq:
    """Coerce ints, Fractions, mpq and 'p/q' strings to mpq."""
    if isinstance(x, mpq):
        return x
    if isinstance(x, (int, np.integer)):
        return mpq(int(x))
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, str):
        return mpq(x)
    raise TypeError(f"cannot coerce {type(x).__name__} to rational")


def qq_str(x) -> str:
    """Render a rational as 'p/q' (denominator always explicit)."""
    x = qq(x)
    return f"{x.numerator}/{x.denominator}"


def qarray(rows) -> np.ndarray:
    """Build an object-dtype array of mpq from nested lists."""
    arr = np.array(rows, dtype=object)
    flat = arr.reshape(-1)
    for k in range(flat.shape[0]):
        flat[k] = qq(flat[k])
    return arr


def qzeros(shape) -> np.ndarray:
    arr = np.empty(shape, dtype=object)
    arr[...] = mpq(0)
    return arr


def qeye(n: int) -> np.ndarray:
    arr = qzeros((n, n))
    for i in range(n):
        arr[i, i] = mpq(1)
    return arr


def is_zero(mat) -> bool:
    return all(x == 0 for x in np.asarray(mat, dtype=object).reshape(-1))


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(a, b)


def kron3(a, b, c) -> np.ndarray:
    return np.kron(np.kron(a, b), c)


def mat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[-1] != b.shape[0]:
        raise DimensionError(f"matmul shapes {a.shape} x {b.shape}")
    if 0 in a.shape or 0 in b.shape:
        out_shape = ()
        if a.ndim == 2:
            out_shape += (a.shape[0],)
        if b.ndim == 2:
            out_shape += (b.shape[1],)
        return qzeros(out_shape)
    return a @ b


def mat_pow(a: np.ndarray, k: int) -> np.ndarray:
    out = qeye(a.shape[0])
    for _ in range(k):
        out = mat_mul(out, a)
    return out


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return mat_mul(a, b) - mat_mul(b, a)


def _normalize_row(row: np.ndarray, lead: int) -> np.ndarray:
    piv = row[lead]
    if piv != 1:
        row = row / piv
    return row


class RowReducer:
    """Incremental echelon basis of a growing span.

    Rows are stored normalized (leading entry 1) keyed by pivot column;
    ``add`` reduces a vector against the current rows and inserts the
    remainder if it is nonzero. ``rref_rows`` back-eliminates to the unique
    reduced echelon basis, sorted by pivot.
    """

    def __init__(self, ncols: int):
        self.ncols = ncols
        self.rows: dict[int, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.rows)

    def reduce(self, vec: np.ndarray) -> np.ndarray:
        v = np.array(vec, dtype=object, copy=True)
        for j in range(self.ncols):
            if v[j] != 0 and j in self.rows:
                v = v - v[j] * self.rows[j]
        return v

    def add(self, vec: np.ndarray) -> int | None:
        v = self.reduce(vec)
        for j in range(self.ncols):
            if v[j] != 0:
                self.rows[j] = _normalize_row(v, j)
                return j
        return None

    def contains(self, vec: np.ndarray) -> bool:
        return all(x == 0 for x in self.reduce(vec))

    def rref_rows(self) -> np.ndarray:
        pivots = sorted(self.rows)
        rows = [np.array(self.rows[p], dtype=object, copy=True) for p in pivots]
        for i in range(len(pivots) - 1, -1, -1):
            for k in range(i):
                c = rows[k][pivots[i]]
                if c != 0:
                    rows[k] = rows[k] - c * rows[i]
        if not rows:
            return qzeros((0, self.ncols))
        return np.array(rows, dtype=object)


def rref(mat: np.ndarray) -> tuple[np.ndarray, tuple[int, ...]]:
    """Reduced row echelon form; returns (nonzero rows, pivot columns)."""
    mat = np.asarray(mat, dtype=object)
    if mat.ndim == 1:
        mat = mat.reshape(1, -1)
    red = RowReducer(mat.shape[1])
    for row in mat:
        red.add(row)
    rows = red.rref_rows()
    return rows, tuple(sorted(red.rows))


def rank(mat: np.ndarray) -> int:
    return rref(mat)[0].shape[0]


def nullspace(mat: np.ndarray) -> np.ndarray:
    """Canonical basis (rows) of the right kernel of ``mat``.

    One row per free column f, with entry 1 at f and the pivot entries
    filled from the RREF; rows are ordered by f ascending.
    """
    mat = np.asarray(mat, dtype=object)
    if mat.ndim == 1:
        mat = mat.reshape(1, -1)
    n = mat.shape[1]
    rows, pivots = rref(mat)
    free = [j for j in range(n) if j not in pivots]
    basis = qzeros((len(free), n))
    for k, f in enumerate(free):
        basis[k, f] = mpq(1)
        for r, p in enumerate(pivots):
            basis[k, p] = -rows[r, f]
    return basis


def solve_exact(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a x = b exactly; raises if singular or inconsistent."""
    a = np.asarray(a, dtype=object)
    b = np.asarray(b, dtype=object)
    unknowns = a.shape[1]
    rhs = b.reshape(a.shape[0], -1)
    aug = np.concatenate([a, rhs], axis=1)
    rows, pivots = rref(aug)
    if any(p >= unknowns for p in pivots):
        raise DimensionError("inconsistent linear system")
    if len(pivots) < unknowns:
        raise DimensionError("singular linear system")
    x = qzeros((unknowns, rhs.shape[1]))
    for r, p in enumerate(pivots):
        x[p, :] = rows[r, unknowns:]
    return x.reshape(-1) if b.ndim == 1 else x


def inverse(a: np.ndarray) -> np.ndarray:
    return solve_exact(a, qeye(a.shape[0]))


class SpanBasis:
    """Canonical RREF basis of a subspace with complement/projection data.

    The complement is spanned by the standard basis vectors at the non-pivot
    coordinates; ``projection`` maps ambient coordinates onto complement
    coordinates along the subspace, and ``section`` includes the complement
    back (projection @ section = identity).
    """

    def __init__(self, rows: np.ndarray, pivots: tuple[int, ...], ncols: int):
        self.rows = rows
        self.pivots = pivots
        self.ncols = ncols
        self.free = tuple(j for j in range(ncols) if j not in pivots)

    @classmethod
    def from_vectors(cls, vectors, ncols: int) -> "SpanBasis":
        vecs = np.asarray(vectors, dtype=object)
        if vecs.size == 0:
            return cls(qzeros((0, ncols)), (), ncols)
        rows, pivots = rref(vecs)
        return cls(rows, pivots, ncols)

    @property
    def dim(self) -> int:
        return self.rows.shape[0]

    def coordinates(self, vec: np.ndarray) -> np.ndarray:
        """Coefficients of a vector of the subspace in the RREF basis."""
        coeffs = np.array([vec[p] for p in self.pivots], dtype=object)
        if not is_zero(vec - mat_mul(coeffs, self.rows)):
            raise DimensionError("vector not in subspace")
        return coeffs

    def contains(self, vec: np.ndarray) -> bool:
        resid = np.array(vec, dtype=object, copy=True)
        for r, p in enumerate(self.pivots):
            if resid[p] != 0:
                resid = resid - resid[p] * self.rows[r]
        return is_zero(resid)

    def projection(self) -> np.ndarray:
        """(ncols-dim) x ncols matrix: ambient -> complement coordinates."""
        proj = qzeros((len(self.free), self.ncols))
        for k, f in enumerate(self.free):
            proj[k, f] = mpq(1)
            for r, p in enumerate(self.pivots):
                proj[k, p] = -self.rows[r, f]
        return proj

    def section(self) -> np.ndarray:
        """ncols x (ncols-dim) inclusion of the complement basis vectors."""
        sec = qzeros((self.ncols, len(self.free)))
        for k, f in enumerate(self.free):
            sec[f, k] = mpq(1)
        return sec
