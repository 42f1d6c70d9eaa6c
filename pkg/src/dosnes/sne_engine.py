"""Exact symmetric SNE / t-SNE with an optional sphere constraint.

The objective is ``KL(P || Q)`` where ``P`` is the matrix-wise normalized
input affinity and ``Q_ij = q_ij / sum_ab q_ab`` with either a Gaussian
(``exp(-d^2)``) or a Cauchy (``1 / (1 + d^2)``) kernel. With the sphere
constraint on, every momentum step is followed by a projection onto
centered, equal-radius configurations in 3D.

Everything is dense and O(n^2) per iteration.
"""

from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist

from .errors import DivergenceError, InputError
from .matrix_core import SparseSymMatrix, StochasticAffinity

logger = logging.getLogger(__name__)

DENSE_WARN_N = 20_000
_ZERO_NORM = 1e-12
_PERTURB_NORM = 1e-8
_CENTER_RTOL = 1e-13


class KernelKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    CAUCHY = "cauchy"


@dataclass(frozen=True)
class Embedding:
    coords: np.ndarray

    def __post_init__(self):
        Y = np.asarray(self.coords, dtype=np.float64)
        if Y.ndim != 2:
            raise InputError(f"embedding must be 2-D, got shape {Y.shape}")
        if not np.isfinite(Y).all():
            raise InputError("embedding has non-finite coordinates")
        object.__setattr__(self, "coords", Y)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def d(self) -> int:
        return self.coords.shape[1]


@dataclass(frozen=True)
class OptimizerConfig:
    dim: int = 3
    learning_rate: float = 200.0
    momentum_initial: float = 0.5
    momentum_final: float = 0.8
    momentum_switch_iter: int = 250
    exaggeration_factor: float = 4.0
    exaggeration_iters: int = 100
    max_iters: int = 1000
    seed: int = 0
    sphere_mode: bool = True
    rel_obj_tol: float = 1e-7
    window: int = 50

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InputError("learning_rate must be positive")
        for name in ("momentum_initial", "momentum_final"):
            if not 0 <= getattr(self, name) < 1:
                raise InputError(f"{name} must lie in [0, 1)")
        if self.exaggeration_factor < 1:
            raise InputError("exaggeration_factor must be >= 1")
        if self.max_iters < 0 or self.exaggeration_iters < 0 or self.rel_obj_tol < 0:
            raise InputError("iteration counts and tolerances must be nonnegative")
        if self.sphere_mode and self.dim != 3:
            raise InputError("sphere mode requires dim = 3")
        if self.dim < 1:
            raise InputError("dim must be positive")


@dataclass
class RunTrace:
    initial_kl: float
    kl: list = field(default_factory=list)
    iterations: int = 0
    radius: float | None = None
    centroid_norm: float = 0.0
    stopped_early: bool = False

    def summary(self) -> dict:
        return {
            "iterations": self.iterations,
            "initial_kl": self.initial_kl,
            "final_kl": self.kl[-1] if self.kl else self.initial_kl,
            "radius": self.radius,
            "centroid_norm": self.centroid_norm,
            "stopped_early": self.stopped_early,
        }


def _coords(Y) -> np.ndarray:
    if isinstance(Y, Embedding):
        return Y.coords
    return np.asarray(Y, dtype=np.float64)


def joint_probabilities(P) -> np.ndarray:
    """Dense ``P / sum(P)`` with a zero diagonal.

    A doubly stochastic matrix sums to ``n``, so this is a division by
    ``n`` for certified inputs.
    """
    if isinstance(P, StochasticAffinity):
        P = P.matrix
    if isinstance(P, SparseSymMatrix):
        P = P.csr
    if sp.issparse(P):
        P = P.toarray()
    P = np.array(P, dtype=np.float64)
    np.fill_diagonal(P, 0.0)
    total = P.sum()
    if not total > 0:
        raise InputError("affinity matrix has no positive off-diagonal entry")
    return P / total


def compute_q(Y, kernel=KernelKind.CAUCHY):
    """Pairwise output similarities.

    Returns
    -------
    q : ndarray (n, n)
        Unnormalized kernel values with a zero diagonal.
    Q : ndarray (n, n)
        ``q / Z``.
    Z : float
        ``sum_ab q_ab`` over ``a != b``.
    """
    Y = _coords(Y)
    kernel = KernelKind(kernel)
    D2 = cdist(Y, Y, "sqeuclidean")
    if kernel is KernelKind.GAUSSIAN:
        q = np.exp(-D2)
    else:
        q = 1.0 / (1.0 + D2)
    np.fill_diagonal(q, 0.0)
    Z = q.sum()
    return q, q / Z, Z


def _kl(P, Q) -> float:
    mask = P > 0
    Qm = Q[mask]
    if (Qm <= 0).any():
        return np.inf
    return float(np.sum(P[mask] * np.log(P[mask] / Qm)))


def kl_objective(P, Y, kernel=KernelKind.CAUCHY) -> float:
    """``sum_{P_ij > 0} P_ij log(P_ij / Q_ij)`` with ``P`` normalized matrix-wise."""
    P = joint_probabilities(P)
    _, Q, _ = compute_q(Y, kernel)
    return _kl(P, Q)


def _gradient(P, Y, q, Q, kernel) -> np.ndarray:
    W = P - Q
    if kernel is KernelKind.CAUCHY:
        W = W * q
    return 4.0 * (W.sum(axis=1)[:, None] * Y - W @ Y)


def gradient(P, Y, kernel=KernelKind.CAUCHY) -> np.ndarray:
    """Gradient of :func:`kl_objective` with respect to the coordinates.

    Row ``i`` is ``4 sum_j (P_ij - Q_ij) (y_i - y_j)``, times ``q_ij`` for
    the Cauchy kernel.
    """
    kernel = KernelKind(kernel)
    P = joint_probabilities(P)
    Y = _coords(Y)
    q, Q, _ = compute_q(Y, kernel)
    return _gradient(P, Y, q, Q, kernel)


def _project_once(Y, rng):
    Y = Y - Y.mean(axis=0)
    norms = np.linalg.norm(Y, axis=1)
    small = norms < _ZERO_NORM
    if small.any():
        # Any direction is optimal for a point at the centre; pick one.
        rng = rng if rng is not None else np.random.default_rng(0)
        v = rng.standard_normal((int(small.sum()), Y.shape[1]))
        v *= _PERTURB_NORM / np.linalg.norm(v, axis=1, keepdims=True)
        Y[small] += v
        norms = np.linalg.norm(Y, axis=1)
    radius = norms.mean()
    return Y * (radius / norms)[:, None], radius


def project_to_sphere(Y, rng=None, max_passes: int = 100) -> Embedding:
    """Project onto centered configurations with equal point norms.

    One pass subtracts the centroid and then rescales every point to the
    mean radius of the centered points. Rescaling moves the centroid off
    the origin again unless the directions balance out, so passes repeat
    until the centroid is below ``1e-13`` times the radius or
    ``max_passes`` is reached. ``max_passes=1`` is the single
    center-then-rescale step.

    Points within 1e-12 of the centroid get a random nudge of norm 1e-8
    drawn from ``rng`` before rescaling.
    """
    Y = _coords(Y)
    if Y.shape[0] < 2:
        raise InputError("projection needs at least two points")
    Z, radius = _project_once(Y, rng)
    for _ in range(max_passes - 1):
        if np.linalg.norm(Z.mean(axis=0)) <= _CENTER_RTOL * radius:
            break
        Z, radius = _project_once(Z, rng)
    return Embedding(Z)


def initialize(n: int, d: int = 3, seed: int = 0, sphere_mode: bool = True) -> Embedding:
    """Gaussian initialization with standard deviation 1e-4."""
    rng = np.random.default_rng(seed)
    Y = 1e-4 * rng.standard_normal((n, d))
    if sphere_mode:
        return project_to_sphere(Y, rng=rng)
    return Embedding(Y)


def run(P, kernel=KernelKind.CAUCHY, cfg: OptimizerConfig | None = None, Y0=None):
    """Minimize ``KL(P || Q)`` by gradient descent with momentum.

    Parameters
    ----------
    P : StochasticAffinity, SparseSymMatrix, sparse or dense array
        Input affinity; normalized to sum one before use.
    kernel : KernelKind or str
    cfg : OptimizerConfig
    Y0 : array, optional
        Starting coordinates. Drawn by :func:`initialize` when omitted.

    Returns
    -------
    Embedding, RunTrace

    Raises
    ------
    DivergenceError
        If the objective becomes non-finite.
    """
    cfg = cfg or OptimizerConfig()
    kernel = KernelKind(kernel)
    P = joint_probabilities(P)
    n = P.shape[0]
    if n < 2:
        raise InputError("need at least two points")
    if n > DENSE_WARN_N:
        warnings.warn(f"dense O(n^2) optimization with n = {n}", RuntimeWarning, stacklevel=2)

    rng = np.random.default_rng(cfg.seed)
    if Y0 is None:
        Y = initialize(n, cfg.dim, cfg.seed, cfg.sphere_mode).coords.copy()
    else:
        Y = _coords(Y0).copy()
        if Y.shape != (n, cfg.dim):
            raise InputError(f"initial coordinates have shape {Y.shape}, expected {(n, cfg.dim)}")

    q, Q, _ = compute_q(Y, kernel)
    trace = RunTrace(initial_kl=_kl(P, Q))
    velocity = np.zeros_like(Y)
    P_exag = P * cfg.exaggeration_factor

    for it in range(cfg.max_iters):
        P_used = P_exag if it < cfg.exaggeration_iters else P
        momentum = cfg.momentum_initial if it < cfg.momentum_switch_iter else cfg.momentum_final
        grad = _gradient(P_used, Y, q, Q, kernel)
        velocity = momentum * velocity - cfg.learning_rate * grad
        Y = Y + velocity
        if not np.isfinite(Y).all():
            raise DivergenceError(f"non-finite coordinates at iteration {it}", iteration=it)
        if cfg.sphere_mode:
            Y = project_to_sphere(Y, rng=rng).coords

        q, Q, _ = compute_q(Y, kernel)
        kl = _kl(P, Q)
        if not np.isfinite(kl):
            raise DivergenceError(f"non-finite objective at iteration {it}", iteration=it)
        trace.kl.append(kl)
        trace.iterations = it + 1

        w = cfg.window
        if it >= cfg.exaggeration_iters + w and cfg.rel_obj_tol > 0:
            prev = trace.kl[-1 - w]
            if abs(prev - kl) <= cfg.rel_obj_tol * abs(prev):
                trace.stopped_early = True
                break

    trace.centroid_norm = float(np.linalg.norm(Y.mean(axis=0)))
    if cfg.sphere_mode:
        trace.radius = float(np.linalg.norm(Y, axis=1).mean())
    logger.info("optimization finished after %d iterations", trace.iterations)
    return Embedding(Y), trace
