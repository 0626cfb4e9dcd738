"""Lloyd's k-means with uniform or k-means++ seeding."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np


class KMeansResult(NamedTuple):
    centers: np.ndarray
    labels: np.ndarray
    inertia: float


def _sq_dists(X, C):
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def plusplus_seeds(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    idx = [int(rng.integers(n))]
    d2 = ((X - X[idx[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            j = int(rng.choice(n, p=d2 / total))
        else:
            j = int(rng.integers(n))
        idx.append(j)
        d2 = np.minimum(d2, ((X - X[j]) ** 2).sum(axis=1))
    return X[idx].copy()


def random_seeds(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    return X[rng.choice(X.shape[0], size=k, replace=False)].copy()


def lloyd(X: np.ndarray, centers: np.ndarray, max_iters: int = 300):
    """Lloyd iterations from ``centers``.

    Returns ``(centers, labels, inertia, inertia_trace)``; ``inertia_trace[0]``
    is the inertia of the starting assignment. An empty cluster is re-seeded
    at the point farthest from its current center.
    """
    C = np.array(centers, dtype=float, copy=True)
    k = C.shape[0]
    D = _sq_dists(X, C)
    labels = D.argmin(axis=1)
    trace = [float(D[np.arange(len(X)), labels].sum())]
    for _ in range(max_iters):
        for j in range(k):
            members = labels == j
            if members.any():
                C[j] = X[members].mean(axis=0)
            else:
                own = D[np.arange(len(X)), labels]
                far = int(np.argmax(own))
                C[j] = X[far]
                labels[far] = j
        D = _sq_dists(X, C)
        new = D.argmin(axis=1)
        trace.append(float(D[np.arange(len(X)), new].sum()))
        if np.array_equal(new, labels):
            break
        labels = new
    return C, labels, trace[-1], trace


def kmeans(data, k: int, init: str = "plusplus", max_iters: int = 300, seed=None,
           rng: np.random.Generator | None = None, n_init: int = 1) -> KMeansResult:
    """Lloyd's algorithm; with ``n_init > 1`` the lowest-inertia of that many
    independently seeded runs is returned."""
    X = np.asarray(data, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if k < 1 or X.shape[0] < k:
        raise ValueError(f"need 1 <= k <= N, got k={k}, N={X.shape[0]}")
    if n_init < 1:
        raise ValueError("n_init must be >= 1")
    if init in ("plusplus", "++", "PlusPlus"):
        seeder = plusplus_seeds
    elif init in ("random", "RandomPoints"):
        seeder = random_seeds
    else:
        raise ValueError(f"unknown k-means init {init!r}")
    if rng is None:
        rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        C, labels, inertia, _ = lloyd(X, seeder(X, k, rng), max_iters)
        if best is None or inertia < best.inertia:
            best = KMeansResult(C, labels.astype(np.int64), inertia)
    return best
