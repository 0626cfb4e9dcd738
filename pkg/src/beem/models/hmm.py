"""Hidden Markov model with diagonal-Gaussian emissions.

Forward and forward-backward passes run in the log domain through
:mod:`beem.kernels`; a batch of sequences is concatenated into one
``(T_total, d)`` array with boundary offsets so the compiled loop sees a
single contiguous buffer.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import List, Sequence

import numpy as np
from scipy import linalg

from beem import kernels
from beem.core import BaseModel

VAR_FLOOR = 1e-6
LOG_2PI = np.log(2.0 * np.pi)


def as_sequence(seq) -> np.ndarray:
    a = np.asarray(seq, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] < 1:
        raise ValueError("a sequence must be a non-empty (L,) or (L, d) array")
    return a


def pack(seqs: Sequence) -> tuple:
    """Concatenate sequences; returns (X, starts) with ``len(starts) == n + 1``."""
    arrs = [as_sequence(s) for s in seqs]
    if not arrs:
        raise ValueError("no sequences given")
    lengths = np.array([a.shape[0] for a in arrs], dtype=np.int64)
    starts = np.zeros(len(arrs) + 1, dtype=np.int64)
    np.cumsum(lengths, out=starts[1:])
    return np.ascontiguousarray(np.vstack(arrs)), starts


def _log(a):
    with np.errstate(divide="ignore"):
        return np.log(a)


@dataclass(eq=False)
class HmmComponent(BaseModel):
    initial_dist: np.ndarray
    transition: np.ndarray
    emission_means: np.ndarray
    emission_vars: np.ndarray
    var_floor: float = VAR_FLOOR
    # Baum-Welch budget of one M-step; warm-started, so it runs close to a
    # fixed point (narrow emissions converge slowly from random starts)
    bw_iters: int = 100
    bw_tol: float = 1e-4
    fitted: bool = True

    def __post_init__(self):
        self.initial_dist = np.asarray(self.initial_dist, dtype=float)
        self.transition = np.atleast_2d(np.asarray(self.transition, dtype=float))
        self.emission_means = np.asarray(self.emission_means, dtype=float)
        if self.emission_means.ndim == 1:
            self.emission_means = self.emission_means[:, None]
        self.emission_vars = np.asarray(self.emission_vars, dtype=float)
        if self.emission_vars.ndim == 1:
            self.emission_vars = self.emission_vars[:, None]
        S = self.initial_dist.shape[0]
        if self.transition.shape != (S, S):
            raise ValueError(f"transition must be {S}x{S}")
        if self.emission_means.shape[0] != S or self.emission_vars.shape != self.emission_means.shape:
            raise ValueError("emission parameters must be (S, d) and matching")
        self.emission_vars = np.maximum(self.emission_vars, self.var_floor)

    @property
    def n_states(self) -> int:
        return self.initial_dist.shape[0]

    @property
    def dim(self) -> int:
        return self.emission_means.shape[1]

    @classmethod
    def random(cls, n_states: int, observations: np.ndarray, rng: np.random.Generator, **kw):
        """Random start: Dirichlet(1) rows, state means drawn from the observations,
        variances set to the pooled per-dimension variance."""
        obs = as_sequence(observations)
        pi = rng.dirichlet(np.ones(n_states))
        A = rng.dirichlet(np.ones(n_states), size=n_states)
        means = obs[rng.choice(obs.shape[0], size=n_states, replace=obs.shape[0] < n_states)]
        var = np.maximum(obs.var(axis=0), kw.get("var_floor", VAR_FLOOR))
        return cls(pi, A, means, np.tile(var, (n_states, 1)), **kw)

    def emission_logprob(self, X: np.ndarray) -> np.ndarray:
        """(T, S) matrix of per-step state log densities."""
        if X.shape[1] != self.dim:
            raise ValueError(f"observation dim {X.shape[1]} does not match emission dim {self.dim}")
        var = self.emission_vars
        diff = X[:, None, :] - self.emission_means[None, :, :]
        return -0.5 * ((diff * diff) / var[None] + np.log(var)[None] + LOG_2PI).sum(axis=2)

    def _log_params(self):
        return _log(self.initial_dist), np.ascontiguousarray(_log(self.transition))

    def log_likelihood(self, x) -> float:
        return float(self.log_likelihood_batch([x])[0])

    def log_likelihood_batch(self, data) -> np.ndarray:
        X, starts = pack(data)
        log_pi, log_A = self._log_params()
        return kernels.hmm_forward(log_pi, log_A, np.ascontiguousarray(self.emission_logprob(X)), starts)

    def fit(self, subset) -> "HmmComponent":
        return baum_welch_fit(subset, self, self.bw_iters, self.bw_tol)

    def param_vector(self) -> np.ndarray:
        return np.concatenate([self.initial_dist, self.transition.ravel(),
                               self.emission_means.ravel(), self.emission_vars.ravel()])


def hmm_forward_loglik(seq, hmm: HmmComponent) -> float:
    return hmm.log_likelihood(seq)


def hmm_estep(seqs_or_packed, hmm: HmmComponent, weights=None):
    """Expected sufficient statistics for a batch.

    Returns ``(loglik, gamma, xi_sum, init_sum, X, starts)``.
    """
    if isinstance(seqs_or_packed, tuple):
        X, starts = seqs_or_packed
    else:
        X, starts = pack(seqs_or_packed)
    n = len(starts) - 1
    w = np.ones(n) if weights is None else np.ascontiguousarray(weights, dtype=float)
    log_pi, log_A = hmm._log_params()
    log_b = np.ascontiguousarray(hmm.emission_logprob(X))
    ll, gamma, xi, init = kernels.hmm_estep(log_pi, log_A, log_b, starts, w)
    return ll, gamma, xi, init, X, starts


def hmm_mstep(hmm: HmmComponent, gamma, xi, init, X, starts, weights=None) -> HmmComponent:
    """Re-estimate from (weighted) expected counts; unvisited states keep their parameters."""
    n = len(starts) - 1
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    wt = np.repeat(w, np.diff(starts))
    gw = gamma * wt[:, None]

    pi = hmm.initial_dist.copy()
    if init.sum() > 0:
        pi = init / init.sum()

    A = hmm.transition.copy()
    rows = xi.sum(axis=1)
    ok = rows > 0
    A[ok] = xi[ok] / rows[ok, None]

    occ = gw.sum(axis=0)
    means = hmm.emission_means.copy()
    var = hmm.emission_vars.copy()
    vis = occ > 1e-300
    if np.any(vis):
        means[vis] = (gw[:, vis].T @ X) / occ[vis, None]
        diff = X[:, None, :] - means[None, vis, :]
        var[vis] = np.einsum("ts,tsd->sd", gw[:, vis], diff * diff) / occ[vis, None]
    var = np.maximum(var, hmm.var_floor)
    return replace(hmm, initial_dist=pi, transition=A, emission_means=means, emission_vars=var)


def baum_welch_fit(seqs, init: HmmComponent, max_iters: int = 10, tol: float = 1e-4,
                   weights=None, return_trace: bool = False):
    """Multi-sequence Baum-Welch from ``init``.

    Counts are pooled over all sequences (optionally weighted per sequence)
    before each M-step. Stops when the total log-likelihood improves by less
    than ``tol`` or after ``max_iters`` M-steps. With ``return_trace`` also
    returns the total log-likelihood before each M-step plus that of the
    returned model.
    """
    seqs = list(seqs)
    if not seqs:
        raise ValueError("baum_welch_fit needs at least one sequence")
    packed = pack(seqs)
    hmm = init
    trace: List[float] = []
    w = None if weights is None else np.asarray(weights, dtype=float)
    ll, gamma, xi, ini, X, starts = hmm_estep(packed, hmm, w)
    total = float(ll @ (np.ones_like(ll) if w is None else w))
    trace.append(total)
    for _ in range(max_iters):
        candidate = hmm_mstep(hmm, gamma, xi, ini, X, starts, w)
        ll, gamma, xi, ini, X, starts = hmm_estep(packed, candidate, w)
        new_total = float(ll @ (np.ones_like(ll) if w is None else w))
        trace.append(new_total)
        hmm = candidate
        if new_total - total < tol:
            break
        total = new_total
    return (hmm, trace) if return_trace else hmm


def mhmm_block_transition(hmms: Sequence[HmmComponent]) -> np.ndarray:
    """Block-diagonal transition matrix of a mixture of HMMs."""
    if not hmms:
        raise ValueError("need at least one HMM")
    return linalg.block_diag(*[h.transition for h in hmms])


def mhmm_as_block_hmm(hmms: Sequence[HmmComponent], weights=None) -> HmmComponent:
    """Single HMM equivalent to the mixture; initial mass is ``weights[k] * pi_k``."""
    K = len(hmms)
    w = np.full(K, 1.0 / K) if weights is None else np.asarray(weights, dtype=float)
    pi = np.concatenate([wk * h.initial_dist for wk, h in zip(w, hmms)])
    return HmmComponent(
        pi,
        mhmm_block_transition(hmms),
        np.vstack([h.emission_means for h in hmms]),
        np.vstack([h.emission_vars for h in hmms]),
        var_floor=min(h.var_floor for h in hmms),
    )


def random_hmm_factory(n_states: int, observations, **kw):
    """Model factory for :func:`beem.core.beem_fit` on sequence data."""
    pooled = np.vstack([as_sequence(s) for s in observations])

    def make(rng):
        return HmmComponent.random(n_states, pooled, rng, **kw)
    return make
