"""Per-row distance-sum bounds, sphericity and row-uniformity measures.

The bound functions evaluate, for one point ``y_i``, the AM-GM (Gaussian
kernel) and AM-HM (Cauchy kernel) inequalities that tie the kernel row sum
``c = sum_j q_ij`` to ``sum_j ||y_i - y_j||^2``. Unlike the optimizer,
these sums include the ``j = i`` term (``q_ii = 1``, distance 0), which is
what makes the largest kernel value equal to one.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .sne_engine import KernelKind, _coords, compute_q

SLACK = 1e-9


@dataclass(frozen=True)
class RowBoundResult:
    i: int
    c: float
    sum_sq: float
    L: float
    U: float
    holds: bool
    holds_lower: bool
    holds_upper: bool
    # Only meaningful for the Gaussian bound.
    a: float = math.nan
    b: float = math.nan
    b_statement: float = math.nan
    U_statement: float = math.nan

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SphericityReport:
    centroid_norm: float
    mean_radius: float
    radius_cv: float
    max_norm_discrepancy: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Prop3Result:
    rowsum_spread: float
    norm_spread: float
    centroid_norm: float
    premise: bool
    verdict: bool


def _row_sqdist(Y, i):
    return np.sum((Y - Y[i]) ** 2, axis=1)


def _finish(i, c, sum_sq, L, U, **extra):
    lo = L <= sum_sq + SLACK
    hi = (not math.isfinite(U)) or sum_sq <= U + SLACK
    return RowBoundResult(i, c, sum_sq, L, U, lo and hi, lo, hi, **extra)


def _log_bound(n, c, b):
    gap = c - n * b
    return n * math.log(n / gap) if gap > 0 else math.inf


def prop1_bounds(Y, i: int) -> RowBoundResult:
    """Bounds on ``sum_j ||y_i - y_j||^2`` from the Gaussian row sum.

    ``L = n ln(n / c)`` follows from GM <= AM. The upper bound uses the
    Tung bound on AM - GM for values in ``[m, 1]``:
    ``b = a m + (1 - a) - m^a`` with ``m = min_j exp(-d_ij^2)`` and
    ``a = ln[ln(1/m) / (1 - m)] / ln(1/m)``, giving
    ``U = n ln(n / (c - n b))`` when ``c > n b`` and ``inf`` otherwise.

    ``b_statement`` / ``U_statement`` use the alternative form
    ``a + (1 - a) m - m^a`` and are reported for comparison only.
    """
    Y = _coords(Y)
    n = Y.shape[0]
    d2 = _row_sqdist(Y, i)
    c = float(np.exp(-d2).sum())
    sum_sq = float(d2.sum())
    L = n * math.log(n / c)
    T = float(d2.max())  # ln(1/m), kept in log form so m may underflow
    if T == 0.0:
        return _finish(i, c, sum_sq, 0.0, 0.0, a=0.5, b=0.0, b_statement=0.0, U_statement=0.0)
    m = math.exp(-T)
    one_minus_m = -math.expm1(-T)
    a = math.log(T / one_minus_m) / T
    m_a = math.exp(-a * T)
    b = a * m + (1 - a) - m_a
    b_stmt = a + (1 - a) * m - m_a
    return _finish(
        i, c, sum_sq, L, _log_bound(n, c, b),
        a=a, b=b, b_statement=b_stmt, U_statement=_log_bound(n, c, b_stmt),
    )


def prop2_bounds(Y, i: int) -> RowBoundResult:
    """Bounds on ``sum_j ||y_i - y_j||^2`` from the Cauchy row sum.

    HM <= AM gives ``L = n^2 / c - n``; Meyer's bound
    ``AM - HM <= (sqrt(b) - 1)^2`` with ``b = 1 + max_j d_ij^2`` gives
    ``U = L + n (sqrt(b) - 1)^2``.
    """
    Y = _coords(Y)
    n = Y.shape[0]
    d2 = _row_sqdist(Y, i)
    c = float((1.0 / (1.0 + d2)).sum())
    sum_sq = float(d2.sum())
    L = n * n / c - n
    b = 1.0 + float(d2.max())
    U = L + n * (math.sqrt(b) - 1.0) ** 2
    return _finish(i, c, sum_sq, L, U, b=b)


def all_row_bounds(Y, kernel):
    fn = prop1_bounds if KernelKind(kernel) is KernelKind.GAUSSIAN else prop2_bounds
    Y = _coords(Y)
    return [fn(Y, i) for i in range(Y.shape[0])]


def prop3_identity_residual(Y) -> float:
    """Spread of ``sum_j ||y_i - y_j||^2 - n ||y_i||^2`` over ``i`` after centering.

    Algebraically this quantity equals ``sum_j ||y_j||^2`` for every ``i``,
    so the spread is pure roundoff.
    """
    Y = _coords(Y)
    Y = Y - Y.mean(axis=0)
    n = Y.shape[0]
    sq = np.sum(Y * Y, axis=1)
    rowsum = np.array([_row_sqdist(Y, i).sum() for i in range(n)])
    v = rowsum - n * sq
    return float(v.max() - v.min())


def prop3_check(Y, tol: float) -> Prop3Result:
    """Check that equal distance row sums force equal norms.

    Spreads are max absolute deviations from the mean, computed on the
    centered configuration. If both the row-sum spread and the original
    centroid norm are within ``tol``, the norm spread must be within
    ``2 tol (1 + 1/n)``; otherwise the verdict is vacuously true.
    """
    Y = _coords(Y)
    n = Y.shape[0]
    centroid = float(np.linalg.norm(Y.mean(axis=0)))
    Yc = Y - Y.mean(axis=0)
    rowsum = np.array([_row_sqdist(Yc, i).sum() for i in range(n)])
    sq = np.sum(Yc * Yc, axis=1)
    rs = float(np.abs(rowsum - rowsum.mean()).max())
    ns = float(np.abs(sq - sq.mean()).max())
    premise = rs <= tol and centroid <= tol
    verdict = (not premise) or ns <= tol * (1 + 1 / n) * 2
    return Prop3Result(rs, ns, centroid, premise, verdict)


def sphericity(Y) -> SphericityReport:
    Y = _coords(Y)
    mu = Y.mean(axis=0)
    r = np.linalg.norm(Y - mu, axis=1)
    mean = float(r.mean())
    cv = float(r.std() / mean) if mean > 0 else 0.0
    return SphericityReport(float(np.linalg.norm(mu)), mean, cv, float(r.max() - r.min()))


def q_row_uniformity(Y, kernel=KernelKind.CAUCHY) -> float:
    """Coefficient of variation of ``sum_{j != i} q_ij`` across rows."""
    q, _, _ = compute_q(Y, kernel)
    s = q.sum(axis=1)
    mean = s.mean()
    return float(s.std() / mean) if mean > 0 else 0.0


def proposition_summary(Y) -> dict:
    """Pass counts of both bound families over every row of ``Y``."""
    out = {}
    for name, kernel in (("prop1", KernelKind.GAUSSIAN), ("prop2", KernelKind.CAUCHY)):
        rows = all_row_bounds(Y, kernel)
        out[name] = {
            "rows": len(rows),
            "lower_holds": sum(r.holds_lower for r in rows),
            "upper_holds": sum(r.holds_upper for r in rows),
            "upper_finite": sum(math.isfinite(r.U) for r in rows),
        }
    out["prop3_identity_residual"] = prop3_identity_residual(Y)
    return out
