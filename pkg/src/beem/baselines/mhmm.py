"""Soft EM for a mixture of HMMs.

Equivalent to Baum-Welch on the block-diagonal HMM: sequence-level
responsibilities weight each component's expected counts.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from beem import kernels
from beem.core import FitReport
from beem.models.hmm import HmmComponent, hmm_estep, hmm_mstep, pack


def _loglik_matrix(packed, models) -> np.ndarray:
    X, starts = packed
    cols = []
    for m in models:
        log_pi, log_A = m._log_params()
        cols.append(kernels.hmm_forward(log_pi, log_A, np.ascontiguousarray(m.emission_logprob(X)), starts))
    return np.column_stack(cols)


def _posterior(ll: np.ndarray, weights: np.ndarray):
    with np.errstate(divide="ignore"):
        z = ll + np.log(weights)
    m = z.max(axis=1, keepdims=True)
    lse = m + np.log(np.exp(z - m).sum(axis=1, keepdims=True))
    return np.exp(z - lse), float(lse.sum()), z


def em_fit_mhmm(seqs: Sequence, k: int, init_models: Sequence[HmmComponent],
                max_iters: int = 500, tol: float = 1e-3,
                init_weights: Optional[np.ndarray] = None) -> FitReport:
    """EM from ``init_models``; the observed-data log-likelihood is non-decreasing.

    Stops when the mean per-sequence log-likelihood improves by less than ``tol``.
    """
    seqs = list(seqs)
    if len(seqs) < k:
        raise ValueError(f"need at least k={k} sequences")
    if len(init_models) != k:
        raise ValueError(f"expected {k} initial models, got {len(init_models)}")
    packed = pack(seqs)
    models = list(init_models)
    weights = np.full(k, 1.0 / k) if init_weights is None else np.asarray(init_weights, dtype=float)
    report = FitReport(labels=np.zeros(len(seqs), dtype=np.int64))

    R, total_prev, z = _posterior(_loglik_matrix(packed, models), weights)
    for _ in range(max_iters):
        new_models = []
        for j, m in enumerate(models):
            _, gamma, xi, ini, X, starts = hmm_estep(packed, m, R[:, j])
            new_models.append(hmm_mstep(m, gamma, xi, ini, X, starts, R[:, j]))
        models = new_models
        weights = R.mean(axis=0)
        R, total, z = _posterior(_loglik_matrix(packed, models), weights)
        report.loglik_trace.append(total)
        hard = R.argmax(axis=1)
        report.size_trace.append(np.bincount(hard, minlength=k))
        report.label_trace.append(hard)
        report.temp_trace.append(1.0)
        report.em_steps += 1
        if total - total_prev < tol * len(seqs):
            report.converged = True
            break
        total_prev = total
    report.labels = R.argmax(axis=1).astype(np.int64)
    report.weights = weights
    report.responsibilities = R
    report.score = float(z.max(axis=1).sum())
    report.models = models
    return report
