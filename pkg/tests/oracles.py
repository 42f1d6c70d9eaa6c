"""Reference computations kept independent of the package code paths."""

from collections import deque

import numpy as np


def kl_longdouble(P, Y, kernel):
    """Direct double-sum KL(P || Q) in extended precision."""
    Y = np.asarray(Y, dtype=np.longdouble)
    P = np.asarray(P, dtype=np.longdouble)
    n = len(Y)
    D = ((Y[:, None, :] - Y[None, :, :]) ** 2).sum(-1)
    q = np.exp(-D) if kernel == "gaussian" else 1 / (1 + D)
    q[np.arange(n), np.arange(n)] = 0
    Q = q / q.sum()
    mask = P > 0
    return (P[mask] * np.log(P[mask] / Q[mask])).sum()


def kl_double_sum(P, Y, kernel):
    n = len(Y)
    q = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                d2 = sum((Y[i][k] - Y[j][k]) ** 2 for k in range(len(Y[i])))
                q[i, j] = np.exp(-d2) if kernel == "gaussian" else 1 / (1 + d2)
    Q = q / q.sum()
    return sum(P[i, j] * np.log(P[i, j] / Q[i, j]) for i in range(n) for j in range(n) if P[i, j] > 0)


def central_difference(f, Y, h=1e-6):
    G = np.zeros_like(Y, dtype=float)
    for idx in np.ndindex(*Y.shape):
        Yp = Y.copy()
        Ym = Y.copy()
        Yp[idx] += h
        Ym[idx] -= h
        G[idx] = float((f(Yp) - f(Ym)) / (2 * h))
    return G


def random_walk_loops(B):
    """Two-step random walk matrix by explicit loops over the formula."""
    B = np.asarray(B, dtype=float)
    n, m = B.shape
    A = np.zeros_like(B)
    for i in range(n):
        s = sum(B[i, u] for u in range(m))
        for k in range(m):
            A[i, k] = B[i, k] / s
    colsum = [sum(A[v, k] for v in range(n)) for k in range(m)]
    P = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            P[i, j] = sum(A[i, k] * A[j, k] / colsum[k] for k in range(m) if colsum[k] > 0)
    return P


def sinkhorn_long_run(S, max_iters=100_000, max_period=16):
    """Dense alternating row/column scaling, state after ``max_iters`` sweeps.

    Once the floating-point iterate repeats with a short period, the
    remaining sweeps are determined, so the state at ``max_iters`` is
    read off the cycle without running them.
    """
    P = np.array(S, dtype=float)
    recent = deque([P], maxlen=max_period + 1)
    for sweep in range(1, max_iters + 1):
        P = P / P.sum(axis=1, keepdims=True)
        P = P / P.sum(axis=0, keepdims=True)
        for period in range(1, len(recent) + 1):
            if np.array_equal(P, recent[-period]):
                cycle = list(recent)[-period:]
                return cycle[(max_iters - sweep) % period]
        recent.append(P)
    return P


def sqdist_rowsum(Y, i):
    return float(sum(np.dot(Y[i] - Y[j], Y[i] - Y[j]) for j in range(len(Y))))
