"""Doubly stochastic normalization of affinity matrices.

Two routes are provided:

* :func:`sinkhorn_knopp` alternately rescales the rows and columns of a
  symmetric affinity until every row and column sums to one. Zeros stay
  zeros, so sparse inputs stay sparse.
* :func:`random_walk_ds` builds a doubly stochastic matrix in closed form
  from a rectangular neighbourhood matrix ``B``: with ``A`` the
  row-normalized ``B``, ``P = A diag(1 / colsum(A)) A^T`` is the two-step
  random-walk probability between rows.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InputError, NormalizationError
from .matrix_core import (
    RectNonnegMatrix,
    SparseSymMatrix,
    StochasticAffinity,
    _csr,
    col_sums,
    row_sums,
    symmetrize,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SinkhornConfig:
    tol: float = 1e-8
    max_iters: int = 1000

    def __post_init__(self):
        if not self.tol > 0:
            raise InputError(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise InputError(f"max_iters must be >= 1, got {self.max_iters}")


@dataclass(frozen=True)
class NormalizationReport:
    method: str
    iterations: int
    max_row_dev: float
    max_col_dev: float
    converged: bool
    tol: float
    max_row_deficit: float = 0.0

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "iterations": self.iterations,
            "max_row_dev": self.max_row_dev,
            "max_col_dev": self.max_col_dev,
            "converged": self.converged,
            "tol": self.tol,
            "max_row_deficit": self.max_row_deficit,
        }


def check_doubly_stochastic(M, tol: float):
    """Largest absolute deviation of row and column sums from one.

    Returns
    -------
    max_row_dev, max_col_dev : float
    ok : bool
        ``True`` iff both deviations are ``<= tol``.
    """
    r = row_sums(M)
    c = col_sums(M)
    row_dev = float(np.max(np.abs(r - 1.0))) if r.size else 0.0
    col_dev = float(np.max(np.abs(c - 1.0))) if c.size else 0.0
    return row_dev, col_dev, bool(row_dev <= tol and col_dev <= tol)


def sinkhorn_knopp(S: SparseSymMatrix, cfg: SinkhornConfig | None = None, row_first: bool = True):
    """Scale ``S`` to a symmetric doubly stochastic matrix.

    Each sweep divides every entry by its row sum and then by its column
    sum (or the reverse when ``row_first`` is False). Convergence is
    checked after every full sweep on the max absolute deviation of row
    and column sums from one. The converged iterate is symmetrized as
    ``(P + P.T) / 2`` and re-certified.

    Parameters
    ----------
    S : SparseSymMatrix
        Unnormalized affinity. Every row needs a positive sum.
    cfg : SinkhornConfig, optional
        Tolerance and iteration cap (defaults 1e-8 and 1000).
    row_first : bool
        Order of the two normalizations inside a sweep.

    Returns
    -------
    affinity : StochasticAffinity
    report : NormalizationReport

    Raises
    ------
    NormalizationError
        On an empty row or column, or when ``cfg.max_iters`` sweeps do not
        reach ``cfg.tol`` (the matrix may lack total support). The partial
        report is attached to the exception.
    """
    cfg = cfg or SinkhornConfig()
    P = _csr(S).copy()
    if P.shape[0] != P.shape[1]:
        raise InputError(f"Sinkhorn-Knopp needs a square matrix, got {P.shape}")
    n = P.shape[0]
    r0 = row_sums(P)
    c0 = col_sums(P)
    if n == 0:
        raise NormalizationError("empty matrix")
    if (r0 <= 0).any():
        raise NormalizationError(f"row {int(np.flatnonzero(r0 <= 0)[0])} has zero sum")
    if (c0 <= 0).any():
        raise NormalizationError(f"column {int(np.flatnonzero(c0 <= 0)[0])} has zero sum")

    # Entry k of P.data lives in row rows[k] and column P.indices[k].
    rows = np.repeat(np.arange(n), np.diff(P.indptr))
    cols = P.indices
    data = P.data

    def normalize_rows():
        data[:] /= np.bincount(rows, weights=data, minlength=n)[rows]

    def normalize_cols():
        data[:] /= np.bincount(cols, weights=data, minlength=n)[cols]

    first, second = (normalize_rows, normalize_cols) if row_first else (normalize_cols, normalize_rows)
    row_dev = col_dev = np.inf
    it = 0
    while it < cfg.max_iters:
        it += 1
        first()
        second()
        row_dev = float(np.max(np.abs(np.bincount(rows, weights=data, minlength=n) - 1.0)))
        col_dev = float(np.max(np.abs(np.bincount(cols, weights=data, minlength=n) - 1.0)))
        if row_dev <= cfg.tol and col_dev <= cfg.tol:
            break

    converged = row_dev <= cfg.tol and col_dev <= cfg.tol
    if converged:
        P = symmetrize(P)
        row_dev, col_dev, converged = check_doubly_stochastic(P, cfg.tol)
    report = NormalizationReport("sinkhorn", it, row_dev, col_dev, converged, cfg.tol)
    logger.debug("sinkhorn: %d sweeps, row dev %.3g, col dev %.3g", it, row_dev, col_dev)
    if not converged:
        raise NormalizationError(
            f"Sinkhorn-Knopp did not converge in {it} iterations "
            f"(row dev {row_dev:.3g}, col dev {col_dev:.3g})",
            report=report,
        )
    return StochasticAffinity(P, row_dev, col_dev, cfg.tol), report


def random_walk_ds(B: RectNonnegMatrix, tol: float = 1e-10):
    """Closed-form doubly stochastic matrix from a neighbourhood matrix.

    ``A = B / rowsum(B)``, then ``P_ij = sum_k A_ik A_jk / sum_v A_vk``.
    Columns of ``B`` with zero sum are skipped. Only the upper triangle of
    the product is kept and mirrored, so ``P`` is exactly symmetric.

    The diagonal of ``P`` (return probability of the walk) is included when
    certifying the row and column sums, then moved to
    ``StochasticAffinity.diagonal`` so that the embedded matrix has no self
    pairs.

    Returns
    -------
    affinity : StochasticAffinity
    report : NormalizationReport
    """
    if not isinstance(B, RectNonnegMatrix):
        B = RectNonnegMatrix(_csr(B))
    Bc = B.csr
    A = sp.diags(1.0 / row_sums(Bc)) @ Bc
    a = col_sums(A)
    used = a > 0
    scale = np.zeros_like(a)
    scale[used] = 1.0 / a[used]
    P = (A @ sp.diags(scale) @ A.T).tocsr()

    upper = sp.triu(P, k=1).tocsr()
    diag = P.diagonal().copy()
    off = (upper + upper.T).tocsr()
    off.eliminate_zeros()
    off.sort_indices()

    full = off + sp.diags(diag)
    row_dev, col_dev, ok = check_doubly_stochastic(full, tol)
    report = NormalizationReport(
        "random_walk", 1, row_dev, col_dev, ok, tol, max_row_deficit=float(diag.max(initial=0.0))
    )
    if not ok:
        raise NormalizationError(
            f"two-step random walk matrix is not doubly stochastic within {tol:g} "
            f"(row dev {row_dev:.3g}, col dev {col_dev:.3g})",
            report=report,
        )
    return StochasticAffinity(SparseSymMatrix(off), row_dev, col_dev, tol, diagonal=diag), report
