# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: log-domain HMM recursions and categorical row sampling.

Sequences are passed concatenated: ``log_b`` holds per-step state log-densities
for every sequence stacked along axis 0, and ``starts`` holds the ``n + 1``
boundaries so sequence ``s`` occupies rows ``starts[s]:starts[s + 1]``.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, INFINITY

cnp.import_array()


cdef inline double _lse_vec(double* v, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double m = -INFINITY
    cdef double acc = 0.0
    for i in range(n):
        if v[i] > m:
            m = v[i]
    if m == -INFINITY:
        return -INFINITY
    for i in range(n):
        acc += exp(v[i] - m)
    return m + log(acc)


cdef void _forward_one(const double[::1] log_pi, const double[:, ::1] log_A,
                       const double[:, ::1] log_b, Py_ssize_t t0, Py_ssize_t t1,
                       double[:, ::1] alpha, double* tmp) noexcept nogil:
    cdef Py_ssize_t S = log_pi.shape[0]
    cdef Py_ssize_t t, i, j
    for j in range(S):
        alpha[t0, j] = log_pi[j] + log_b[t0, j]
    for t in range(t0 + 1, t1):
        for j in range(S):
            for i in range(S):
                tmp[i] = alpha[t - 1, i] + log_A[i, j]
            alpha[t, j] = _lse_vec(tmp, S) + log_b[t, j]


def hmm_forward(const double[::1] log_pi, const double[:, ::1] log_A,
                const double[:, ::1] log_b, const cnp.int64_t[::1] starts):
    """Per-sequence log-likelihood by the log-domain forward recursion."""
    cdef Py_ssize_t n = starts.shape[0] - 1
    cdef Py_ssize_t S = log_pi.shape[0]
    cdef Py_ssize_t s, t, i, j, t0, t1
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    prev_arr = np.empty(S, dtype=np.float64)
    cur_arr = np.empty(S, dtype=np.float64)
    tmp_arr = np.empty(S, dtype=np.float64)
    cdef double[::1] prev = prev_arr
    cdef double[::1] cur = cur_arr
    cdef double[::1] tmp = tmp_arr
    with nogil:
        for s in range(n):
            t0 = starts[s]
            t1 = starts[s + 1]
            for j in range(S):
                prev[j] = log_pi[j] + log_b[t0, j]
            for t in range(t0 + 1, t1):
                for j in range(S):
                    for i in range(S):
                        tmp[i] = prev[i] + log_A[i, j]
                    cur[j] = _lse_vec(&tmp[0], S) + log_b[t, j]
                for j in range(S):
                    prev[j] = cur[j]
            out[s] = _lse_vec(&prev[0], S)
    return out_arr


def hmm_estep(const double[::1] log_pi, const double[:, ::1] log_A,
              const double[:, ::1] log_b, const cnp.int64_t[::1] starts,
              const double[::1] weights):
    """Forward-backward over a batch; returns (loglik, gamma, xi_sum, init_sum).

    ``gamma`` is the unweighted per-step state posterior. ``xi_sum`` and
    ``init_sum`` are expected transition / initial-state counts, each sequence
    scaled by ``weights[s]``. Zero-probability sequences contribute nothing.
    """
    cdef Py_ssize_t n = starts.shape[0] - 1
    cdef Py_ssize_t S = log_pi.shape[0]
    cdef Py_ssize_t T = log_b.shape[0]
    cdef Py_ssize_t s, t, i, j, t0, t1
    cdef double ll, w

    loglik_arr = np.empty(n, dtype=np.float64)
    alpha_arr = np.empty((T, S), dtype=np.float64)
    beta_arr = np.empty((T, S), dtype=np.float64)
    gamma_arr = np.zeros((T, S), dtype=np.float64)
    xi_arr = np.zeros((S, S), dtype=np.float64)
    init_arr = np.zeros(S, dtype=np.float64)
    tmp_arr = np.empty(S, dtype=np.float64)
    cdef double[::1] loglik = loglik_arr
    cdef double[:, ::1] alpha = alpha_arr
    cdef double[:, ::1] beta = beta_arr
    cdef double[:, ::1] gamma = gamma_arr
    cdef double[:, ::1] xi = xi_arr
    cdef double[::1] init = init_arr
    cdef double[::1] tmp = tmp_arr

    with nogil:
        for s in range(n):
            t0 = starts[s]
            t1 = starts[s + 1]
            w = weights[s]
            _forward_one(log_pi, log_A, log_b, t0, t1, alpha, &tmp[0])
            for j in range(S):
                tmp[j] = alpha[t1 - 1, j]
            ll = _lse_vec(&tmp[0], S)
            loglik[s] = ll
            for i in range(S):
                beta[t1 - 1, i] = 0.0
            t = t1 - 2
            while t >= t0:
                for i in range(S):
                    for j in range(S):
                        tmp[j] = log_A[i, j] + log_b[t + 1, j] + beta[t + 1, j]
                    beta[t, i] = _lse_vec(&tmp[0], S)
                t -= 1
            if ll == -INFINITY:
                continue
            for t in range(t0, t1):
                for j in range(S):
                    gamma[t, j] = exp(alpha[t, j] + beta[t, j] - ll)
            for j in range(S):
                init[j] += w * gamma[t0, j]
            if w == 0.0:
                continue
            for t in range(t0, t1 - 1):
                for i in range(S):
                    if alpha[t, i] == -INFINITY:
                        continue
                    for j in range(S):
                        xi[i, j] += w * exp(alpha[t, i] + log_A[i, j] + log_b[t + 1, j]
                                            + beta[t + 1, j] - ll)
    return loglik_arr, gamma_arr, xi_arr, init_arr


def sample_rows(const double[:, ::1] probs, const double[::1] u):
    """Inverse-CDF draw per row: first j with u < cumsum(probs[row])[j]."""
    cdef Py_ssize_t N = probs.shape[0]
    cdef Py_ssize_t K = probs.shape[1]
    cdef Py_ssize_t n, j, last
    cdef double acc
    out_arr = np.empty(N, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    with nogil:
        for n in range(N):
            acc = 0.0
            last = -1
            out[n] = -1
            for j in range(K):
                if probs[n, j] > 0.0:
                    last = j
                acc = acc + probs[n, j]
                if u[n] < acc:
                    out[n] = j
                    break
            if out[n] < 0:
                out[n] = last
    return out_arr
