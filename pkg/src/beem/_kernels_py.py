"""Pure numpy versions of the routines in ``_kernels.pyx``.

Same signatures and the same results (to rounding); used when the compiled
extension is unavailable or ``BEEM_PURE_PYTHON=1`` is set.
"""
import numpy as np


def _lse(v, axis=None):
    m = np.max(v, axis=axis, keepdims=True)
    finite = np.isfinite(m)
    m_safe = np.where(finite, m, 0.0)
    with np.errstate(under="ignore"):
        s = np.sum(np.exp(v - m_safe), axis=axis, keepdims=True)
    with np.errstate(divide="ignore"):
        out = np.where(finite, m_safe + np.log(s), -np.inf)
    if axis is None:
        return float(out.reshape(()))
    return np.squeeze(out, axis=axis)


def _forward_one(log_pi, log_A, log_b):
    L, S = log_b.shape
    alpha = np.empty((L, S))
    alpha[0] = log_pi + log_b[0]
    for t in range(1, L):
        alpha[t] = _lse(alpha[t - 1][:, None] + log_A, axis=0) + log_b[t]
    return alpha


def _backward_one(log_A, log_b):
    L, S = log_b.shape
    beta = np.zeros((L, S))
    for t in range(L - 2, -1, -1):
        beta[t] = _lse(log_A + (log_b[t + 1] + beta[t + 1])[None, :], axis=1)
    return beta


def hmm_forward(log_pi, log_A, log_b, starts):
    n = len(starts) - 1
    out = np.empty(n)
    for s in range(n):
        t0, t1 = starts[s], starts[s + 1]
        alpha = _forward_one(log_pi, log_A, log_b[t0:t1])
        out[s] = _lse(alpha[-1])
    return out


def hmm_estep(log_pi, log_A, log_b, starts, weights):
    n = len(starts) - 1
    T, S = log_b.shape
    loglik = np.empty(n)
    gamma = np.zeros((T, S))
    xi = np.zeros((S, S))
    init = np.zeros(S)
    for s in range(n):
        t0, t1 = starts[s], starts[s + 1]
        lb = log_b[t0:t1]
        alpha = _forward_one(log_pi, log_A, lb)
        beta = _backward_one(log_A, lb)
        ll = _lse(alpha[-1])
        loglik[s] = ll
        if ll == -np.inf:
            continue
        g = np.exp(alpha + beta - ll)
        gamma[t0:t1] = g
        init += weights[s] * g[0]
        if weights[s] == 0.0 or t1 - t0 < 2:
            continue
        with np.errstate(invalid="ignore"):
            log_xi = (alpha[:-1, :, None] + log_A[None, :, :]
                      + (lb[1:] + beta[1:])[:, None, :] - ll)
        log_xi = np.where(np.isfinite(alpha[:-1])[:, :, None], log_xi, -np.inf)
        xi += weights[s] * np.exp(log_xi).sum(axis=0)
    return loglik, gamma, xi, init


def sample_rows(probs, u):
    cum = np.cumsum(probs, axis=1)
    idx = (cum <= u[:, None]).sum(axis=1)
    K = probs.shape[1]
    over = idx >= K
    if np.any(over):
        pos = probs[over] > 0.0
        last = K - 1 - np.argmax(pos[:, ::-1], axis=1)
        last = np.where(pos.any(axis=1), last, -1)
        idx[over] = last
    return idx.astype(np.int64)
