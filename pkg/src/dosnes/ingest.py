"""Reading graphs and point clouds, building neighbourhood matrices, and
writing embeddings back out (CSV, JSON, SVG snapshots).
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import warnings
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InputError
from .matrix_core import RectNonnegMatrix, SparseSymMatrix
from .sne_engine import Embedding, _coords

logger = logging.getLogger(__name__)

FAR_OPACITY = 0.25


@dataclass(frozen=True)
class VectorDataset:
    coords: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.coords, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] < 2:
            raise InputError(f"need at least 2 points in a 2-D array, got shape {X.shape}")
        bad = np.flatnonzero(~np.isfinite(X).all(axis=1))
        if bad.size:
            raise InputError(f"row {int(bad[0])} has a non-finite coordinate")
        object.__setattr__(self, "coords", X)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def D(self) -> int:
        return self.coords.shape[1]


@dataclass(frozen=True)
class AffinityConfig:
    """Neighbourhood construction.

    ``mode`` is ``"perplexity"`` (Gaussian weights calibrated per row) or
    ``"binary"`` (weight 1 on each of the ``k`` nearest neighbours).
    ``k=None`` means ``ceil(3 * perplexity)``, capped at ``n - 1``.
    """

    perplexity: float = 30.0
    k: int | None = None
    mode: str = "perplexity"

    def resolve_k(self, n: int) -> int:
        if self.mode not in ("perplexity", "binary"):
            raise InputError(f"unknown affinity mode {self.mode!r}")
        if not self.perplexity > 0:
            raise InputError("perplexity must be positive")
        k = self.k if self.k is not None else min(n - 1, math.ceil(3 * self.perplexity))
        if not 1 <= k <= n - 1:
            raise InputError(f"k must lie in [1, {n - 1}], got {k}")
        if self.mode == "perplexity" and self.perplexity >= n:
            raise InputError(f"perplexity {self.perplexity} must be below n = {n}")
        return k


def _lines(source):
    if isinstance(source, str):
        source = io.StringIO(source)
    for lineno, line in enumerate(source, start=1):
        s = line.strip()
        if s and not s.startswith("#"):
            yield lineno, s


def _parse_triplet(lineno, s):
    parts = s.split()
    if len(parts) != 3:
        raise InputError(f"line {lineno}: expected 'i j w', got {s!r}")
    try:
        i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
    except ValueError:
        raise InputError(f"line {lineno}: cannot parse {s!r}") from None
    if i < 0 or j < 0:
        raise InputError(f"line {lineno}: negative index")
    if not (math.isfinite(w) and w > 0):
        raise InputError(f"line {lineno}: weight must be positive and finite, got {parts[2]}")
    return i, j, w


def load_edge_list(source, n: int | None = None) -> SparseSymMatrix:
    """Parse an undirected weighted edge list.

    Each line is ``i j w`` (0-based ids, ``w > 0``); ``#`` starts a comment
    line. An edge may be listed in one or both directions, but repeated
    listings must carry the same weight. Self-loops are dropped with a
    warning.
    """
    weights = {}
    max_id = -1
    for lineno, s in _lines(source):
        i, j, w = _parse_triplet(lineno, s)
        max_id = max(max_id, i, j)
        if i == j:
            warnings.warn(f"line {lineno}: self-loop on node {i} dropped", stacklevel=2)
            continue
        key = (min(i, j), max(i, j))
        if key in weights and weights[key] != w:
            raise InputError(
                f"line {lineno}: edge {key[0]}-{key[1]} has conflicting weights {weights[key]} and {w}"
            )
        weights[key] = w
    if n is None:
        n = max_id + 1
    elif max_id >= n:
        raise InputError(f"node id {max_id} out of range for n = {n}")
    entries = [(i, j, w) for (i, j), w in weights.items()]
    entries += [(j, i, w) for (i, j), w in weights.items()]
    return SparseSymMatrix.from_entries(n, entries)


def load_bipartite(source, n: int | None = None, m: int | None = None) -> RectNonnegMatrix:
    """Parse ``row col w`` triplets into an ``n x m`` matrix.

    Repeated ``(row, col)`` pairs are summed. Every row in ``range(n)``
    must receive at least one entry.
    """
    entries = []
    max_r = max_c = -1
    for lineno, s in _lines(source):
        r, c, w = _parse_triplet(lineno, s)
        entries.append((r, c, w))
        max_r, max_c = max(max_r, r), max(max_c, c)
    n = max_r + 1 if n is None else n
    m = max_c + 1 if m is None else m
    if max_r >= n or max_c >= m:
        raise InputError(f"index out of range for declared shape ({n}, {m})")
    if n == 0:
        raise InputError("no entries")
    return RectNonnegMatrix.from_entries(n, m, entries)


def load_vectors(source) -> VectorDataset:
    """Dense CSV, one point per line."""
    if isinstance(source, str):
        source = io.StringIO(source)
    rows = []
    for lineno, line in enumerate(source, start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        try:
            rows.append([float(v) for v in s.split(",")])
        except ValueError:
            raise InputError(f"line {lineno}: cannot parse {s!r}") from None
        if len(rows[-1]) != len(rows[0]):
            raise InputError(f"line {lineno}: expected {len(rows[0])} columns, got {len(rows[-1])}")
    return VectorDataset(np.array(rows))


def knn_indices(X, k: int):
    """Indices and squared distances of the ``k`` nearest neighbours of each row.

    The point itself is excluded; ties go to the smaller index.
    """
    D2 = cdist(X, X, "sqeuclidean")
    np.fill_diagonal(D2, np.inf)
    idx = np.argsort(D2, axis=1, kind="stable")[:, :k]
    return idx, np.take_along_axis(D2, idx, axis=1)


def _entropy_bits(d2, beta):
    w = np.exp(-beta * (d2 - d2.min()))
    p = w / w.sum()
    nz = p > 0
    return float(-np.sum(p[nz] * np.log2(p[nz]))), w


def calibrate_row(d2, perplexity, tol=1e-5, max_iter=64, lo=1e-12, hi=1e12, row=None):
    """Find ``beta`` such that the row's entropy equals ``log2(perplexity)``.

    Bisection on ``log(beta)`` over ``[lo, hi]``; entropy decreases in beta.
    Returns ``(beta, weights)`` with weights proportional to
    ``exp(-beta * d2)``.
    """
    target = math.log2(perplexity)
    a, b = math.log(lo), math.log(hi)
    for _ in range(max_iter):
        beta = math.exp(0.5 * (a + b))
        H, w = _entropy_bits(d2, beta)
        if abs(H - target) <= tol:
            return beta, w
        if H > target:
            a = math.log(beta)
        else:
            b = math.log(beta)
    raise InputError(f"row {row}: perplexity calibration did not converge (entropy {H:.6g}, target {target:.6g})")


def build_affinity(data: VectorDataset, cfg: AffinityConfig | None = None) -> RectNonnegMatrix:
    """Sparse ``n x n`` neighbourhood matrix over the ``k`` nearest neighbours."""
    cfg = cfg or AffinityConfig()
    if not isinstance(data, VectorDataset):
        data = VectorDataset(data)
    n = data.n
    k = cfg.resolve_k(n)
    idx, d2 = knn_indices(data.coords, k)
    rows = np.repeat(np.arange(n), k)
    if cfg.mode == "binary":
        vals = np.ones(n * k)
    else:
        vals = np.empty((n, k))
        for i in range(n):
            _, vals[i] = calibrate_row(d2[i], cfg.perplexity, row=i)
        vals = vals.ravel()
    # exp(-beta (d2 - min d2)) keeps the nearest weight at 1, so no row is empty.
    return RectNonnegMatrix.from_entries(n, n, zip(rows, idx.ravel(), vals))


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def export_embedding(Y, sink, labels=None, fmt: str = "csv") -> None:
    """Write coordinates as CSV (``id,label,x,y[,z]``) or a JSON list of records."""
    Y = _coords(Y)
    n, d = Y.shape
    axes = "xyz"[:d] if d <= 3 else [f"x{k}" for k in range(d)]
    labels = [""] * n if labels is None else [("" if s is None else str(s)) for s in labels]
    if fmt == "csv":
        w = csv.writer(sink, lineterminator="\n")
        w.writerow(["id", "label", *axes])
        for i in range(n):
            w.writerow([i, labels[i], *(_fmt(v) for v in Y[i])])
    elif fmt == "json":
        records = [
            {"id": i, "label": labels[i], **{a: float(v) for a, v in zip(axes, Y[i])}} for i in range(n)
        ]
        json.dump(records, sink, indent=1)
        sink.write("\n")
    else:
        raise InputError(f"unknown export format {fmt!r}")


def read_embedding(source, fmt: str = "csv"):
    """Inverse of :func:`export_embedding`; returns ``(coords, labels)``."""
    if isinstance(source, str):
        source = io.StringIO(source)
    if fmt == "csv":
        r = csv.reader(source)
        header = next(r)
        axes = header[2:]
        rows = list(r)
        Y = np.array([[float(v) for v in row[2:]] for row in rows]).reshape(len(rows), len(axes))
        return Y, [row[1] for row in rows]
    if fmt == "json":
        records = json.load(source)
        if not records:
            return np.zeros((0, 0)), []
        axes = [k for k in records[0] if k not in ("id", "label")]
        Y = np.array([[rec[a] for a in axes] for rec in records])
        return Y, [rec["label"] for rec in records]
    raise InputError(f"unknown export format {fmt!r}")


def view_basis(viewpoint):
    """Unit view direction plus two screen axes completing a right-handed frame."""
    v = np.asarray(viewpoint, dtype=np.float64)
    norm = np.linalg.norm(v)
    if v.shape != (3,) or not norm > 0:
        raise InputError(f"viewpoint must be a nonzero 3-vector, got {viewpoint!r}")
    v = v / norm
    up = np.array([0.0, 0.0, 1.0]) if abs(v[2]) < 0.9 else np.array([0.0, 1.0, 0.0])
    right = np.cross(up, v)
    right /= np.linalg.norm(right)
    return v, right, np.cross(v, right)


def render_snapshot(Y, viewpoint, sink, labels=None, size: int = 600, marker_radius: float = 3.0) -> None:
    """Write an SVG showing the orthographic view of a 3-D embedding.

    Points are projected onto the plane perpendicular to ``viewpoint``;
    points behind the centroid plane (facing away from the viewer) are
    drawn first, at opacity 0.25. A ``silhouette`` circle marks the
    projected outline of the smallest centered ball containing all points.
    """
    Y = _coords(Y)
    if Y.ndim != 2 or Y.shape[1] != 3:
        raise InputError("snapshots need a 3-D embedding")
    v, right, up = view_basis(viewpoint)
    C = Y - Y.mean(axis=0) if len(Y) > 1 else Y
    radius = float(np.linalg.norm(C, axis=1).max(initial=0.0)) or 1.0
    half = size / 2
    scale = (half - 2 * marker_radius) / radius
    sx = half + scale * (C @ right)
    sy = half - scale * (C @ up)
    depth = C @ v

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<circle class="silhouette" cx="{_fmt(half)}" cy="{_fmt(half)}" r="{_fmt(scale * radius)}" '
        'fill="none" stroke="#bbbbbb"/>',
    ]
    for i in np.argsort(depth, kind="stable"):
        far = depth[i] < 0
        opacity = FAR_OPACITY if far else 1.0
        title = f"<title>{escape(str(labels[i]))}</title>" if labels is not None else ""
        out.append(
            f'<circle class="marker{" far" if far else ""}" data-id="{i}" cx="{_fmt(sx[i])}" '
            f'cy="{_fmt(sy[i])}" r="{_fmt(marker_radius)}" fill="#1f77b4" '
            f'fill-opacity="{opacity}">{title}</circle>'
        )
    out.append("</svg>")
    sink.write("\n".join(out) + "\n")
