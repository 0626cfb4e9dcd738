"""Full-covariance multivariate Gaussian component."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from beem.core import BaseModel

LOG_2PI = np.log(2.0 * np.pi)
COV_FLOOR = 1e-6


def _cholesky(cov: np.ndarray, jitter: float) -> np.ndarray:
    try:
        return linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError:
        pass
    try:
        return linalg.cholesky(cov + max(jitter, COV_FLOOR) * np.eye(len(cov)), lower=True)
    except linalg.LinAlgError as exc:
        raise ValueError("covariance is not positive definite even after jitter") from exc


@dataclass(eq=False)
class GaussianComponent(BaseModel):
    mean: np.ndarray
    covariance: np.ndarray
    jitter: float = COV_FLOOR
    fitted: bool = True

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        self.covariance = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        d = self.mean.shape[0]
        if self.covariance.shape != (d, d):
            raise ValueError(f"covariance shape {self.covariance.shape} does not match mean dim {d}")
        self._chol = None

    @classmethod
    def prototype(cls, dim: int, jitter: float = COV_FLOOR) -> "GaussianComponent":
        """Unfitted placeholder; only ``fit`` may be called on it."""
        return cls(np.zeros(dim), np.eye(dim), jitter=jitter, fitted=False)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def chol(self) -> np.ndarray:
        if self._chol is None:
            self._chol = _cholesky(self.covariance, self.jitter)
        return self._chol

    def log_likelihood(self, x) -> float:
        return float(self.log_likelihood_batch(np.atleast_2d(np.asarray(x, dtype=float)))[0])

    def log_likelihood_batch(self, data) -> np.ndarray:
        X = np.asarray(data, dtype=float)
        if X.ndim == 1:
            X = X[:, None] if self.dim == 1 else X[None, :]
        if X.shape[1] != self.dim:
            raise ValueError(f"observation dim {X.shape[1]} does not match component dim {self.dim}")
        L = self.chol
        z = linalg.solve_triangular(L, (X - self.mean).T, lower=True)
        half_logdet = np.log(np.diag(L)).sum()
        return -0.5 * (self.dim * LOG_2PI + (z * z).sum(axis=0)) - half_logdet

    def fit(self, subset) -> "GaussianComponent":
        return gaussian_mle_fit(subset, self.jitter)

    def param_vector(self) -> np.ndarray:
        return np.concatenate([self.mean, self.covariance.ravel()])


def gaussian_logpdf(x, comp: GaussianComponent) -> float:
    return comp.log_likelihood(x)


def gaussian_mle_fit(points, jitter: float = COV_FLOOR) -> GaussianComponent:
    """Sample mean and biased sample covariance plus ``jitter * I``."""
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise ValueError("cannot fit a Gaussian to zero points")
    mean = X.mean(axis=0)
    diff = X - mean
    cov = diff.T @ diff / X.shape[0]
    cov = 0.5 * (cov + cov.T) + jitter * np.eye(X.shape[1])
    return GaussianComponent(mean, cov, jitter=jitter)


def gaussian_factory(dim: int, jitter: float = COV_FLOOR):
    """Model factory for :func:`beem.core.beem_fit`."""
    def make(rng=None):
        return GaussianComponent.prototype(dim, jitter)
    return make
