"""Nonnegative sparse matrices consumed and produced by the pipeline.

All three containers wrap a :class:`scipy.sparse.csr_matrix` with float64
weights. They validate their invariants once, at construction, and are not
meant to be mutated afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InputError


def _tidy(M) -> sp.csr_matrix:
    M = sp.csr_matrix(M, dtype=np.float64, copy=True)
    M.sum_duplicates()
    M.eliminate_zeros()
    M.sort_indices()
    return M


def _from_triplets(entries, shape) -> sp.csr_matrix:
    entries = list(entries)
    if entries:
        rows, cols, vals = (np.asarray(v) for v in zip(*entries))
    else:
        rows = cols = np.zeros(0, dtype=np.intp)
        vals = np.zeros(0)
    coo = sp.coo_matrix(
        (vals.astype(np.float64), (rows.astype(np.intp), cols.astype(np.intp))),
        shape=shape,
    )
    return _tidy(coo)


@dataclass(frozen=True)
class SparseSymMatrix:
    """Symmetric nonnegative affinity with an empty diagonal.

    Parameters
    ----------
    csr : scipy.sparse.csr_matrix
        Square, symmetric, nonnegative, no stored zeros, no diagonal.
    """

    csr: sp.csr_matrix

    def __post_init__(self):
        M = self.csr
        if M.shape[0] != M.shape[1]:
            raise InputError(f"matrix is not square: {M.shape}")
        if M.nnz and (M.data < 0).any():
            raise InputError("negative weight in affinity matrix")
        if M.nnz and not np.isfinite(M.data).all():
            raise InputError("non-finite weight in affinity matrix")
        if M.diagonal().any():
            raise InputError("diagonal entries are not allowed")
        if (M != M.T).nnz:
            raise InputError("matrix is not symmetric")

    @classmethod
    def from_entries(cls, n: int, entries) -> "SparseSymMatrix":
        """Build from ``(i, j, w)`` triplets that already contain both halves."""
        return cls(_from_triplets(entries, (n, n)))

    @classmethod
    def from_dense(cls, A) -> "SparseSymMatrix":
        return cls(_tidy(np.asarray(A, dtype=np.float64)))

    @property
    def n(self) -> int:
        return self.csr.shape[0]

    @property
    def nnz(self) -> int:
        return self.csr.nnz

    def entries(self):
        """Iterate stored ``(i, j, w)`` triplets in row order."""
        coo = self.csr.tocoo()
        return zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist())

    def row(self, i: int):
        """Column indices and weights stored in row ``i``."""
        lo, hi = self.csr.indptr[i], self.csr.indptr[i + 1]
        return self.csr.indices[lo:hi], self.csr.data[lo:hi]

    def toarray(self) -> np.ndarray:
        return self.csr.toarray()


@dataclass(frozen=True)
class RectNonnegMatrix:
    """Rectangular nonnegative matrix ``B`` with no empty row.

    Rows index the items being embedded; columns are anything they
    co-occur with (terms, papers, neighbours).
    """

    csr: sp.csr_matrix

    def __post_init__(self):
        M = self.csr
        if M.nnz and (M.data < 0).any():
            raise InputError("negative weight in neighbourhood matrix")
        if M.nnz and not np.isfinite(M.data).all():
            raise InputError("non-finite weight in neighbourhood matrix")
        empty = np.flatnonzero(np.diff(M.indptr) == 0)
        if empty.size:
            raise InputError(f"row {int(empty[0])} has no positive entry")

    @classmethod
    def from_entries(cls, n: int, m: int, entries) -> "RectNonnegMatrix":
        return cls(_from_triplets(entries, (n, m)))

    @classmethod
    def from_dense(cls, B) -> "RectNonnegMatrix":
        return cls(_tidy(np.asarray(B, dtype=np.float64)))

    @property
    def n(self) -> int:
        return self.csr.shape[0]

    @property
    def m(self) -> int:
        return self.csr.shape[1]

    def entries(self):
        coo = self.csr.tocoo()
        return zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist())

    def toarray(self) -> np.ndarray:
        return self.csr.toarray()


@dataclass(frozen=True)
class StochasticAffinity:
    """Normalized affinity together with its doubly stochastic certificate.

    ``matrix`` is what the embedding engine consumes (no self pairs).
    ``diagonal`` holds any self-similarity mass the construction produced
    and that was dropped from ``matrix``; the certificate (``max_row_dev``,
    ``max_col_dev``) is measured on ``matrix + diag(diagonal)``.
    """

    matrix: SparseSymMatrix
    max_row_dev: float
    max_col_dev: float
    tol: float
    diagonal: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.diagonal is None:
            object.__setattr__(self, "diagonal", np.zeros(self.matrix.n))
        if max(self.max_row_dev, self.max_col_dev) > self.tol:
            raise InputError(
                f"deviation {max(self.max_row_dev, self.max_col_dev):.3g} exceeds tolerance {self.tol:.3g}"
            )

    @property
    def n(self) -> int:
        return self.matrix.n

    def full(self) -> sp.csr_matrix:
        """The certified matrix, diagonal included."""
        return (self.matrix.csr + sp.diags(self.diagonal)).tocsr()

    @property
    def row_deficit(self) -> np.ndarray:
        """Per-row mass lost by dropping self pairs."""
        return self.diagonal


def _csr(M) -> sp.csr_matrix:
    if isinstance(M, (SparseSymMatrix, RectNonnegMatrix)):
        return M.csr
    if isinstance(M, StochasticAffinity):
        return M.matrix.csr
    if sp.issparse(M):
        return sp.csr_matrix(M)
    return sp.csr_matrix(np.asarray(M, dtype=np.float64))


def _sorted_csr(M) -> sp.csr_matrix:
    C = _csr(M)
    if not C.has_sorted_indices:
        C = C.sorted_indices()
    return C


def row_sums(M) -> np.ndarray:
    """Sum of stored entries in every row (empty rows give 0).

    Rows and columns are both accumulated in ascending index order, so a
    symmetric matrix has bitwise identical row and column sums.
    """
    C = _sorted_csr(M)
    rows = np.repeat(np.arange(C.shape[0]), np.diff(C.indptr))
    return np.bincount(rows, weights=C.data, minlength=C.shape[0]).astype(np.float64)


def col_sums(M) -> np.ndarray:
    C = _sorted_csr(M)
    return np.bincount(C.indices, weights=C.data, minlength=C.shape[1]).astype(np.float64)


def symmetrize(M) -> SparseSymMatrix:
    """Return ``(M + M.T) / 2`` with the diagonal removed."""
    C = _csr(M)
    if C.shape[0] != C.shape[1]:
        raise InputError(f"cannot symmetrize a non-square matrix {C.shape}")
    S = ((C + C.T) * 0.5).tocsr()
    S = S - sp.diags(S.diagonal())
    return SparseSymMatrix(_tidy(S))
