"""Synthetic experiments: uniform-matrix sphericity, Gaussian clusters on
the sphere, and Q row-sum uniformity on scale-free graphs.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .diagnostics import q_row_uniformity, sphericity
from .errors import InputError
from .ingest import AffinityConfig, VectorDataset, build_affinity, render_snapshot
from .matrix_core import RectNonnegMatrix, SparseSymMatrix
from .normalize import random_walk_ds, sinkhorn_knopp
from .sne_engine import KernelKind, OptimizerConfig, run


def uniform_similarity(n: int, seed: int) -> SparseSymMatrix:
    """Symmetric matrix of i.i.d. U(0, 1) entries with a zero diagonal."""
    rng = np.random.default_rng(seed)
    U = np.triu(rng.random((n, n)), k=1)
    return SparseSymMatrix.from_dense(U + U.T)


def _snapshot(Y) -> str:
    if Y.shape[1] == 2:
        Y = np.column_stack([Y, np.zeros(len(Y))])
    buf = io.StringIO()
    render_snapshot(Y, (0.0, 0.0, 1.0), buf)
    return buf.getvalue()


@dataclass
class Figure1Report:
    n: int
    seed: int
    dim: int
    raw_cv: float
    ds_cv: float
    raw_kl: float
    ds_kl: float
    sinkhorn_iterations: int
    raw_snapshot: str = field(repr=False, default="")
    ds_snapshot: str = field(repr=False, default="")

    def to_dict(self, snapshots: bool = False) -> dict:
        d = {
            "n": self.n,
            "seed": self.seed,
            "dim": self.dim,
            "raw_radius_cv": self.raw_cv,
            "ds_radius_cv": self.ds_cv,
            "raw_final_kl": self.raw_kl,
            "ds_final_kl": self.ds_kl,
            "sinkhorn_iterations": self.sinkhorn_iterations,
            "ds_more_spherical": self.ds_cv < self.raw_cv,
        }
        if snapshots:
            d["raw_snapshot"] = self.raw_snapshot
            d["ds_snapshot"] = self.ds_snapshot
        return d


def run_figure1_experiment(n: int = 500, seed: int = 0, sink=None, dim: int = 2, max_iters: int = 1000):
    """Embed a uniform random similarity matrix with and without Sinkhorn.

    Both runs use flat t-SNE (Cauchy kernel, no sphere constraint) from the
    same initialization; the first only normalizes the matrix to unit
    total, the second makes it doubly stochastic first. Sphericity is the
    coefficient of variation of the centered radii.
    """
    if n < 50:
        raise InputError(f"uniform-matrix experiment needs n >= 50, got {n}")
    S = uniform_similarity(n, seed)
    cfg = OptimizerConfig(dim=dim, sphere_mode=False, seed=seed, max_iters=max_iters)
    Y_raw, t_raw = run(S, KernelKind.CAUCHY, cfg)
    P, norm_report = sinkhorn_knopp(S)
    Y_ds, t_ds = run(P, KernelKind.CAUCHY, cfg)
    report = Figure1Report(
        n=n,
        seed=seed,
        dim=dim,
        raw_cv=sphericity(Y_raw).radius_cv,
        ds_cv=sphericity(Y_ds).radius_cv,
        raw_kl=t_raw.kl[-1] if t_raw.kl else t_raw.initial_kl,
        ds_kl=t_ds.kl[-1] if t_ds.kl else t_ds.initial_kl,
        sinkhorn_iterations=norm_report.iterations,
        raw_snapshot=_snapshot(Y_raw.coords),
        ds_snapshot=_snapshot(Y_ds.coords),
    )
    if sink is not None:
        json.dump(report.to_dict(), sink, indent=1)
        sink.write("\n")
    return report


def gaussian_clusters(seed: int, n_per: int = 50, n_clusters: int = 3, dim: int = 10, separation: float = 10.0):
    """Isotropic unit-variance clusters whose centres are ``separation`` apart."""
    rng = np.random.default_rng(seed)
    centres = np.zeros((n_clusters, dim))
    centres[np.arange(n_clusters), np.arange(n_clusters)] = separation / np.sqrt(2)
    X = np.vstack([c + rng.standard_normal((n_per, dim)) for c in centres])
    return X, np.repeat(np.arange(n_clusters), n_per)


def geodesic_distances(Y) -> np.ndarray:
    """Great-circle distances on the sphere of mean radius."""
    Y = np.asarray(Y)
    r = np.linalg.norm(Y, axis=1)
    U = Y / r[:, None]
    return np.arccos(np.clip(U @ U.T, -1.0, 1.0)) * r.mean()


def cluster_benchmark(seed: int, perplexity: float = 15.0, max_iters: int = 1000) -> dict:
    """Full DOSNES pipeline on three Gaussian clusters in 10-D."""
    X, labels = gaussian_clusters(seed)
    B = build_affinity(VectorDataset(X), AffinityConfig(perplexity=perplexity))
    P, _ = random_walk_ds(B)
    Y, trace = run(P, KernelKind.CAUCHY, OptimizerConfig(seed=seed, max_iters=max_iters))
    G = geodesic_distances(Y.coords)
    same = labels[:, None] == labels[None, :]
    np.fill_diagonal(same, False)
    diff = labels[:, None] != labels[None, :]
    return {
        "seed": seed,
        "initial_kl": trace.initial_kl,
        "final_kl": trace.kl[-1],
        "intra_geodesic": float(G[same].mean()),
        "inter_geodesic": float(G[diff].mean()),
        "radius_cv": sphericity(Y).radius_cv,
    }


def crowding_experiment(seed: int, n: int = 300, m: int = 5, dim: int = 2, max_iters: int = 1000) -> dict:
    """Row-sum uniformity of Q on a Barabasi-Albert graph.

    The adjacency matrix is embedded twice with flat t-SNE: once
    normalized to unit total only, once made doubly stochastic by the
    two-step random walk on ``A + I``. Sinkhorn-Knopp is not used here
    because preferential-attachment graphs often lack total support, and
    then the scaling iteration only converges sublinearly.
    """
    G = nx.barabasi_albert_graph(n, m, seed=seed)
    S = SparseSymMatrix.from_dense(nx.to_numpy_array(G))
    cfg = OptimizerConfig(dim=dim, sphere_mode=False, seed=seed, max_iters=max_iters)
    Y_raw, _ = run(S, KernelKind.CAUCHY, cfg)
    B = RectNonnegMatrix.from_dense(nx.to_numpy_array(G) + np.eye(n))
    P, _ = random_walk_ds(B)
    Y_ds, _ = run(P, KernelKind.CAUCHY, cfg)
    degrees = np.asarray([d for _, d in G.degree()], dtype=float)
    return {
        "seed": seed,
        "degree_cv": float(degrees.std() / degrees.mean()),
        "raw_q_row_cv": q_row_uniformity(Y_raw, KernelKind.CAUCHY),
        "ds_q_row_cv": q_row_uniformity(Y_ds, KernelKind.CAUCHY),
    }
