"""Initialisers: k-means Gaussians for BEEM, random HMMs, and Smyth's
sequence-similarity clustering for mixtures of HMMs."""
from __future__ import annotations

import logging
from typing import List, Sequence

import numpy as np

from beem.baselines.kmeans import kmeans
from beem.models.gaussian import COV_FLOOR, GaussianComponent, gaussian_mle_fit
from beem.models.hmm import HmmComponent, as_sequence, baum_welch_fit, pack

log = logging.getLogger(__name__)


def beem_init_B(data, k: int, seed=None, rng=None, jitter: float = COV_FLOOR,
                n_init: int = 10) -> List[GaussianComponent]:
    """Gaussians centred on k-means centers with per-cluster MLE covariances.

    k-means keeps the best of ``n_init`` k-means++ runs.
    """
    X = np.asarray(data, dtype=float)
    if rng is None:
        rng = np.random.default_rng(seed)
    res = kmeans(X, k, init="plusplus", rng=rng, n_init=n_init)
    comps = []
    for j in range(k):
        members = X[res.labels == j]
        g = gaussian_mle_fit(members, jitter)
        comps.append(GaussianComponent(res.centers[j], g.covariance, jitter=jitter))
    return comps


def random_hmms(seqs: Sequence, k: int, n_states: int, rng: np.random.Generator, **kw) -> List[HmmComponent]:
    """Init A for sequence mixtures: independent random HMMs."""
    pooled = np.vstack([as_sequence(s) for s in seqs])
    return [HmmComponent.random(n_states, pooled, rng, **kw) for _ in range(k)]


def similarity_matrix(seqs: Sequence, models: Sequence[HmmComponent]) -> np.ndarray:
    """``L[i, j] = log p(seq_j | models[i])``."""
    packed = pack(seqs)
    from beem.baselines.mhmm import _loglik_matrix

    return _loglik_matrix(packed, models).T


def smyth_init(seqs: Sequence, k: int, n_states: int, seed=None, rng=None,
               bw_iters: int = 10, group_bw_iters: int = 100, **kw) -> List[HmmComponent]:
    """One HMM per sequence, cluster the symmetrised cross log-likelihood
    matrix with k-means, then fit one HMM per group.

    Sequences shorter than 2 steps get no per-sequence model (a warning is
    logged) but are still clustered by their likelihoods under the others.
    """
    seqs = [as_sequence(s) for s in seqs]
    n = len(seqs)
    if n < k:
        raise ValueError(f"need at least k={k} sequences, got {n}")
    if rng is None:
        rng = np.random.default_rng(seed)
    valid = [i for i, s in enumerate(seqs) if s.shape[0] >= 2]
    if len(valid) < n:
        log.warning("smyth_init: %d sequence(s) shorter than 2 steps excluded from per-sequence fitting",
                    n - len(valid))
    if not valid:
        raise ValueError("no sequence long enough for per-sequence fitting")

    per_seq = []
    for i in valid:
        start = HmmComponent.random(n_states, seqs[i], rng, **kw)
        per_seq.append(baum_welch_fit([seqs[i]], start, bw_iters))
    L = similarity_matrix(seqs, per_seq)  # (len(valid), n)
    block = L[:, valid]
    L[:, valid] = 0.5 * (block + block.T)
    features = L.T  # one row per sequence

    labels = kmeans(features, k, init="plusplus", rng=rng).labels
    pooled = np.vstack(seqs)
    models = []
    for j in range(k):
        group = [seqs[i] for i in np.flatnonzero(labels == j)]
        start = HmmComponent.random(n_states, np.vstack(group) if group else pooled, rng, **kw)
        models.append(baum_welch_fit(group, start, group_bw_iters) if group else start)
    return models
