"""Soft EM for Gaussian mixtures, EM with restarts, and deterministic-annealing EM."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from beem.core import FitReport
from beem.models.gaussian import COV_FLOOR, LOG_2PI

KMEANS_RESTARTS = 10


class InitMode(str, enum.Enum):
    RANDOM = "A"               # random soft assignment, then an M-step
    RANDOM_POINTS = "A_points"  # means are k observations, covariance diag(data variance)
    KMEANS = "B"               # k-means centers and cluster covariances
    PROVIDED = "provided"


@dataclass
class EmConfig:
    """``tol`` bounds the improvement of the *mean per-observation* log-likelihood."""

    max_iters: int = 500
    tol: float = 1e-3
    init: InitMode = InitMode.RANDOM
    seed: object = 0
    jitter: float = COV_FLOOR

    def __post_init__(self):
        self.init = InitMode(self.init)
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass
class DaemConfig:
    beta_schedule: Sequence[float] = (0.1, 0.2, 0.4, 0.6, 0.8, 1.0)
    inner_iters: int = 15
    max_iters: int = 500
    tol: float = 1e-3
    jitter: float = COV_FLOOR
    # means get N(0, (perturbation * data std)^2) noise at every beta increase;
    # without it the components stay merged at the high-temperature fixed point
    perturbation: float = 0.01

    def __post_init__(self):
        if self.perturbation < 0:
            raise ValueError("perturbation must be nonnegative")
        b = np.asarray(self.beta_schedule, dtype=float)
        if b.size == 0 or b[-1] != 1.0:
            raise ValueError("beta schedule must end at 1.0")
        if np.any(b <= 0) or np.any(np.diff(b) <= 0):
            raise ValueError("beta schedule must be strictly increasing in (0, 1]")
        if self.inner_iters < 1:
            raise ValueError("inner_iters must be >= 1")
        self.beta_schedule = tuple(float(x) for x in b)


@dataclass
class GmmParams:
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def copy(self) -> "GmmParams":
        return GmmParams(self.weights.copy(), self.means.copy(), self.covariances.copy())

    def flat(self) -> np.ndarray:
        return np.concatenate([self.weights, self.means.ravel(), self.covariances.ravel()])


def gmm_log_densities(X: np.ndarray, means: np.ndarray, covs: np.ndarray) -> np.ndarray:
    """N x K matrix of component log densities."""
    n, d = X.shape
    out = np.empty((n, means.shape[0]))
    for j in range(means.shape[0]):
        try:
            L = linalg.cholesky(covs[j], lower=True)
        except linalg.LinAlgError:
            L = linalg.cholesky(covs[j] + COV_FLOOR * np.eye(d), lower=True)
        z = linalg.solve_triangular(L, (X - means[j]).T, lower=True)
        out[:, j] = -0.5 * (d * LOG_2PI + (z * z).sum(axis=0)) - np.log(np.diag(L)).sum()
    return out


def _log_norm_rows(z):
    m = z.max(axis=1, keepdims=True)
    lse = m + np.log(np.exp(z - m).sum(axis=1, keepdims=True))
    return z - lse, lse[:, 0]


def _mstep(X, R, jitter) -> GmmParams:
    n, d = X.shape
    nk = R.sum(axis=0)
    k = R.shape[1]
    safe = np.maximum(nk, 1e-300)
    means = (R.T @ X) / safe[:, None]
    covs = np.empty((k, d, d))
    for j in range(k):
        diff = X - means[j]
        c = (R[:, j, None] * diff).T @ diff / safe[j]
        covs[j] = 0.5 * (c + c.T) + jitter * np.eye(d)
    return GmmParams(nk / n, means, covs)


def complete_data_score(X, params: GmmParams) -> float:
    """Sum over observations of max_k log(pi_k p(x | k)), the restart selection key."""
    with np.errstate(divide="ignore"):
        z = gmm_log_densities(X, params.means, params.covariances) + np.log(params.weights)
    return float(z.max(axis=1).sum())


def init_random(X: np.ndarray, k: int, rng: np.random.Generator, jitter: float = COV_FLOOR) -> GmmParams:
    """Init A: uniform random responsibilities, normalised per row, then an M-step."""
    R = rng.random((X.shape[0], k))
    R /= R.sum(axis=1, keepdims=True)
    return _mstep(X, R, jitter)


def init_random_points(X: np.ndarray, k: int, rng: np.random.Generator, jitter: float = COV_FLOOR) -> GmmParams:
    """Means are k distinct observations; covariance is diag(data variance)."""
    n, d = X.shape
    means = X[rng.choice(n, size=k, replace=False)].copy()
    cov = np.diag(np.maximum(X.var(axis=0), jitter))
    return GmmParams(np.full(k, 1.0 / k), means, np.tile(cov, (k, 1, 1)))


def init_kmeans(X: np.ndarray, k: int, rng: np.random.Generator, jitter: float = COV_FLOOR) -> GmmParams:
    """Init B: k-means centers (best of 10 k-means++ runs), per-cluster
    covariances and proportions."""
    from beem.baselines.kmeans import kmeans

    res = kmeans(X, k, init="plusplus", rng=rng, n_init=KMEANS_RESTARTS)
    R = np.zeros((X.shape[0], k))
    R[np.arange(X.shape[0]), res.labels] = 1.0
    params = _mstep(X, R, jitter)
    params.means = res.centers.copy()
    return params


def _initial(X, k, config: EmConfig, rng, init_params):
    if config.init is InitMode.PROVIDED or init_params is not None:
        if init_params is None:
            raise ValueError("init='provided' requires init_params")
        return init_params.copy()
    if config.init is InitMode.KMEANS:
        return init_kmeans(X, k, rng, config.jitter)
    if config.init is InitMode.RANDOM_POINTS:
        return init_random_points(X, k, rng, config.jitter)
    return init_random(X, k, rng, config.jitter)


def _check(X, k):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise ValueError("cannot fit a mixture to empty data")
    if k < 1 or X.shape[0] < k:
        raise ValueError(f"need 1 <= k <= N, got k={k}, N={X.shape[0]}")
    return X


def _em_loop(X, params: GmmParams, max_iters, tol, jitter, report: FitReport,
             beta: float = 1.0, fixed_iters: bool = False, history=None):
    """Run (tempered) EM from ``params``; appends to ``report`` and returns final params and R."""
    def estep(p):
        with np.errstate(divide="ignore"):
            z = gmm_log_densities(X, p.means, p.covariances) + np.log(p.weights)
        _, lse = _log_norm_rows(z)
        R_log, _ = _log_norm_rows(beta * z)
        return np.exp(R_log), float(lse.sum())

    R, ll_prev = estep(params)
    k = params.weights.shape[0]
    tol = tol * X.shape[0]
    for _ in range(max_iters):
        params = _mstep(X, R, jitter)
        if history is not None:
            history.append(params.copy())
        R, ll = estep(params)
        report.loglik_trace.append(ll)
        hard = R.argmax(axis=1)
        report.size_trace.append(np.bincount(hard, minlength=k))
        report.label_trace.append(hard)
        report.temp_trace.append(beta)
        report.em_steps += 1
        if not fixed_iters and ll - ll_prev < tol:
            report.converged = True
            break
        ll_prev = ll
    return params, R


def _finish(X, params, R, report: FitReport) -> FitReport:
    report.labels = R.argmax(axis=1).astype(np.int64)
    report.weights = params.weights.copy()
    report.responsibilities = R
    report.score = complete_data_score(X, params)
    report.models = [params]
    return report


def em_fit_gmm(data, k: int, config: EmConfig, init_params: Optional[GmmParams] = None,
               history: Optional[list] = None) -> FitReport:
    """Standard soft EM with learned mixing weights.

    ``loglik_trace`` holds the observed-data log-likelihood after each M-step;
    it is non-decreasing. Stops once the mean per-observation log-likelihood
    improves by less than ``config.tol``. Labels are the final argmax
    responsibilities.
    """
    X = _check(data, k)
    rng = np.random.default_rng(config.seed)
    params = _initial(X, k, config, rng, init_params)
    report = FitReport(labels=np.zeros(X.shape[0], dtype=np.int64))
    params, R = _em_loop(X, params, config.max_iters, config.tol, config.jitter, report,
                         history=history)
    return _finish(X, params, R, report)


def restart_seed(seed, i: int):
    """Seed for restart ``i``; restart 0 reuses ``seed`` itself."""
    if i == 0:
        return seed
    base = list(seed) if isinstance(seed, (tuple, list)) else [seed]
    return tuple(base + [i])


def em_restarts(data, k: int, restarts: int, config: EmConfig) -> FitReport:
    """Best of ``restarts`` independent EM runs by complete-data log-likelihood.

    ``em_steps`` of the returned report is the total across all restarts.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    best, total = None, 0
    for i in range(restarts):
        cfg = EmConfig(config.max_iters, config.tol, config.init, restart_seed(config.seed, i), config.jitter)
        rep = em_fit_gmm(data, k, cfg)
        total += rep.em_steps
        if best is None or rep.score > best.score:
            best = rep
    best.em_steps = total
    return best


def daem_fit_gmm(data, k: int, config: DaemConfig, seed=0, init_params: Optional[GmmParams] = None,
                 history: Optional[list] = None) -> FitReport:
    """Deterministic-annealing EM: responsibilities proportional to (pi_k p(x|k))**beta.

    Each beta below 1 runs ``inner_iters`` iterations; the closing beta = 1
    phase is ordinary EM run to ``tol``. Init A unless ``init_params`` given.
    Means are jittered when beta steps up, so a one-element schedule is
    plain EM.
    """
    X = _check(data, k)
    rng = np.random.default_rng(seed)
    params = init_params.copy() if init_params is not None else init_random(X, k, rng, config.jitter)
    report = FitReport(labels=np.zeros(X.shape[0], dtype=np.int64))
    scale = config.perturbation * X.std(axis=0)
    R = None
    for i, beta in enumerate(config.beta_schedule):
        if i > 0 and config.perturbation > 0:
            params = params.copy()
            params.means = params.means + scale * rng.standard_normal(params.means.shape)
        if beta < 1.0:
            params, R = _em_loop(X, params, config.inner_iters, config.tol, config.jitter, report,
                                 beta=beta, fixed_iters=True, history=history)
        else:
            params, R = _em_loop(X, params, config.max_iters, config.tol, config.jitter, report,
                                 history=history)
    return _finish(X, params, R, report)


def tempered_responsibilities(data, params: GmmParams, beta: float) -> np.ndarray:
    X = _check(data, 1)
    with np.errstate(divide="ignore"):
        z = gmm_log_densities(X, params.means, params.covariances) + np.log(params.weights)
    R_log, _ = _log_norm_rows(beta * z)
    return np.exp(R_log)
