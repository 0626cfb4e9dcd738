"""Gaussian-process regressor used as a mixture component for data association.

An observation is one row ``(x_1, ..., x_p, y)``: inputs first, target last.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import linalg

from beem.core import BaseModel

LOG_2PI = np.log(2.0 * np.pi)


class KernelFamily(str, enum.Enum):
    RBF = "rbf"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class KernelSpec:
    family: KernelFamily = KernelFamily.RBF
    output_variance: float = 1.0
    lengthscale: float = 1.0
    period: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))
        for name in ("output_variance", "lengthscale", "period"):
            if not getattr(self, name) > 0:
                raise ValueError(f"kernel {name} must be positive")

    @property
    def log_params(self) -> np.ndarray:
        p = [self.output_variance, self.lengthscale]
        if self.family is KernelFamily.PERIODIC:
            p.append(self.period)
        return np.log(p)

    def with_log_params(self, theta) -> "KernelSpec":
        v = np.exp(theta)
        kw = dict(output_variance=float(v[0]), lengthscale=float(v[1]))
        if self.family is KernelFamily.PERIODIC:
            kw["period"] = float(v[2])
        return replace(self, **kw)


def _as_inputs(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        a = a[None]
    if a.ndim == 1:
        a = a[:, None]
    return a


def kernel_matrix(spec: KernelSpec, X1, X2) -> np.ndarray:
    A, B = _as_inputs(X1), _as_inputs(X2)
    sq = ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=2)
    if spec.family is KernelFamily.RBF:
        return spec.output_variance * np.exp(-0.5 * sq / spec.lengthscale ** 2)
    r = np.sqrt(sq)
    s = np.sin(np.pi * r / spec.period)
    return spec.output_variance * np.exp(-2.0 * s * s / spec.lengthscale ** 2)


def kernel_eval(spec: KernelSpec, x, x2) -> float:
    return float(kernel_matrix(spec, np.atleast_1d(x)[None, :], np.atleast_1d(x2)[None, :])[0, 0])


@dataclass(eq=False)
class GpComponent(BaseModel):
    kernel: KernelSpec
    noise_variance: float = 0.01
    training_inputs: Optional[np.ndarray] = None
    training_targets: Optional[np.ndarray] = None
    budget: int = 10
    learn_noise: bool = False
    leave_one_out: bool = False
    fitted: bool = True

    def __post_init__(self):
        if not self.noise_variance > 0:
            raise ValueError("noise_variance must be positive")
        if self.training_inputs is None:
            self.training_inputs = np.zeros((0, 1))
            self.training_targets = np.zeros(0)
        self.training_inputs = _as_inputs(self.training_inputs)
        self.training_targets = np.asarray(self.training_targets, dtype=float).ravel()
        if self.training_inputs.shape[0] != self.training_targets.shape[0]:
            raise ValueError("inputs and targets differ in length")
        self._factor = None

    @property
    def n(self) -> int:
        return self.training_targets.shape[0]

    def _cho(self):
        """(lower Cholesky factor of K + noise*I, alpha = (K + noise*I)^-1 y)."""
        if self._factor is None:
            Kxx = kernel_matrix(self.kernel, self.training_inputs, self.training_inputs)
            Kxx[np.diag_indices_from(Kxx)] += self.noise_variance
            try:
                L = linalg.cholesky(Kxx, lower=True)
            except linalg.LinAlgError:
                jitter = 1e-8 * max(1.0, float(np.mean(np.diag(Kxx))))
                Kxx[np.diag_indices_from(Kxx)] += jitter
                try:
                    L = linalg.cholesky(Kxx, lower=True)
                except linalg.LinAlgError as exc:
                    raise ValueError("GP Gram matrix is not positive definite") from exc
            alpha = linalg.cho_solve((L, True), self.training_targets)
            self._factor = (L, alpha)
        return self._factor

    def log_marginal_likelihood(self) -> float:
        if self.n == 0:
            raise ValueError("marginal likelihood needs at least one training point")
        L, alpha = self._cho()
        y = self.training_targets
        return float(-0.5 * y @ alpha - np.log(np.diag(L)).sum() - 0.5 * self.n * LOG_2PI)

    def predict(self, x) -> tuple:
        """Posterior predictive mean and variance of a noisy target at ``x``."""
        Xs = _as_inputs(x)
        prior = np.full(Xs.shape[0], self.kernel.output_variance)
        if self.n == 0:
            return np.zeros(Xs.shape[0]), prior + self.noise_variance
        L, alpha = self._cho()
        Ks = kernel_matrix(self.kernel, self.training_inputs, Xs)
        mean = Ks.T @ alpha
        v = linalg.solve_triangular(L, Ks, lower=True)
        var = prior - (v * v).sum(axis=0)
        return mean, np.maximum(var, 0.0) + self.noise_variance

    def log_predictive(self, x, y) -> np.ndarray:
        mean, var = self.predict(x)
        r = np.asarray(y, dtype=float).ravel() - mean
        return -0.5 * (LOG_2PI + np.log(var) + r * r / var)

    def loo_log_predictive(self) -> np.ndarray:
        """Leave-one-out predictive log density of every training target."""
        L, alpha = self._cho()
        Linv = linalg.solve_triangular(L, np.eye(self.n), lower=True)
        kinv_diag = (Linv * Linv).sum(axis=0)
        var = 1.0 / kinv_diag
        r = alpha / kinv_diag
        return -0.5 * (LOG_2PI + np.log(var) + r * r / var)

    def log_likelihood(self, x) -> float:
        return float(self.log_likelihood_batch(np.asarray(x, dtype=float)[None, :])[0])

    def log_likelihood_batch(self, data) -> np.ndarray:
        D = np.asarray(data, dtype=float)
        out = self.log_predictive(D[:, :-1], D[:, -1])
        if self.leave_one_out and self.n > 1:
            own = {r.tobytes(): i for i, r in enumerate(self._rows())}
            hits = [(j, own[r.tobytes()]) for j, r in enumerate(np.ascontiguousarray(D)) if r.tobytes() in own]
            if hits:
                j, i = map(np.array, zip(*hits))
                out[j] = self.loo_log_predictive()[i]
        return out

    def _rows(self) -> np.ndarray:
        return np.ascontiguousarray(np.column_stack([self.training_inputs, self.training_targets]))

    def fit(self, subset) -> "GpComponent":
        D = np.asarray(subset, dtype=float)
        if D.shape[0] < 2:
            return replace(self, training_inputs=D[:, :-1], training_targets=D[:, -1])
        comp = gp_fit_hyperparams(D[:, :-1], D[:, -1], self.kernel.family, self.noise_variance,
                                  self.budget, init_kernel=self.kernel, learn_noise=self.learn_noise)
        return replace(comp, leave_one_out=self.leave_one_out)

    def param_vector(self) -> np.ndarray:
        return np.r_[self.kernel.log_params, np.log(self.noise_variance)]


def gp_log_marginal_likelihood(comp: GpComponent) -> float:
    return comp.log_marginal_likelihood()


def gp_log_predictive(comp: GpComponent, x, y) -> float:
    return float(comp.log_predictive(np.atleast_1d(x)[None, :], [y])[0])


def default_kernel(family, inputs, targets) -> KernelSpec:
    """Data-scaled starting hyperparameters."""
    X = _as_inputs(inputs)
    span = float(np.max(np.ptp(X, axis=0))) if X.shape[0] > 1 else 1.0
    span = span if span > 0 else 1.0
    var = float(np.var(targets)) if len(targets) > 1 else 1.0
    return KernelSpec(family, output_variance=var if var > 0 else 1.0,
                      lengthscale=span if KernelFamily(family) is KernelFamily.RBF else 1.0,
                      period=span)


def gp_fit_hyperparams(inputs, targets, family=KernelFamily.RBF, noise_variance: float = 0.01,
                       budget: int = 10, init_kernel: Optional[KernelSpec] = None,
                       step: float = np.log(2.0), learn_noise: bool = False) -> GpComponent:
    """Maximise the log marginal likelihood over kernel log-hyperparameters.

    Derivative-free coordinate search: each sweep tries a multiplicative step
    up and down on every coordinate, keeps any improvement (and grows that
    step), otherwise halves it. ``budget`` is the number of sweeps. The noise
    variance is held at ``noise_variance`` unless ``learn_noise``, in which
    case it is one more coordinate starting there.
    """
    X = _as_inputs(inputs)
    y = np.asarray(targets, dtype=float).ravel()
    if y.shape[0] < 2:
        raise ValueError("hyperparameter fitting needs at least two points")
    kern = init_kernel if init_kernel is not None else default_kernel(family, X, y)
    if kern.family is not KernelFamily(family):
        kern = default_kernel(family, X, y)

    nk = kern.log_params.shape[0]

    def objective(theta):
        try:
            noise = float(np.exp(theta[nk])) if learn_noise else noise_variance
            comp = GpComponent(kern.with_log_params(theta[:nk]), noise, X, y, budget, learn_noise)
            val = comp.log_marginal_likelihood()
        except (ValueError, FloatingPointError):
            return -np.inf, None
        return (val, comp) if np.isfinite(val) else (-np.inf, None)

    theta = np.r_[kern.log_params, np.log(noise_variance)] if learn_noise else kern.log_params
    best, comp = objective(theta)
    if comp is None:
        raise ValueError("GP marginal likelihood is not finite at the initial hyperparameters")
    steps = np.full(theta.shape, step)
    for _ in range(budget):
        for i in range(theta.shape[0]):
            for sign in (1.0, -1.0):
                cand = theta.copy()
                cand[i] += sign * steps[i]
                # keep hyperparameters in a numerically sane box
                if abs(cand[i]) > 20:
                    continue
                val, c = objective(cand)
                if val > best:
                    best, comp, theta = val, c, cand
                    steps[i] *= 2.0
                    break
            else:
                steps[i] *= 0.5
    return comp


def gp_factory(family=KernelFamily.RBF, noise_variance: float = 0.01, budget: int = 10,
               learn_noise: bool = True, leave_one_out: bool = True,
               output_variance: Optional[float] = None):
    """Model factory for :func:`beem.core.beem_fit` on ``(x, y)`` rows.

    By default the noise variance is a fitted hyperparameter starting at
    ``noise_variance`` and a component scores its own training rows by their
    leave-one-out predictive density. With fixed noise and leave-in scores
    both components fall into a white-noise fit (lengthscale -> 0) that
    reproduces its own points exactly, and assignments never move.
    ``output_variance`` overrides the data-scaled starting signal variance.
    """
    def make(rng=None):
        return _GpPrototype(family, noise_variance, budget, learn_noise, leave_one_out, output_variance)
    return make


class _GpPrototype(BaseModel):
    fitted = False

    def __init__(self, family, noise_variance, budget, learn_noise=False, leave_one_out=False,
                 output_variance=None):
        self.family, self.noise_variance, self.budget = family, noise_variance, budget
        self.learn_noise, self.leave_one_out = learn_noise, leave_one_out
        self.output_variance = output_variance

    def _start(self, D):
        kern = default_kernel(self.family, D[:, :-1], D[:, -1])
        if self.output_variance is not None:
            kern = replace(kern, output_variance=float(self.output_variance))
        return kern

    def log_likelihood(self, x):
        raise ValueError("GP prototype has not been fitted")

    def fit(self, subset):
        D = np.asarray(subset, dtype=float)
        kern = self._start(D)
        if D.shape[0] < 2:
            return GpComponent(kern, self.noise_variance, D[:, :-1], D[:, -1], self.budget,
                               self.learn_noise, self.leave_one_out)
        comp = gp_fit_hyperparams(D[:, :-1], D[:, -1], self.family, self.noise_variance, self.budget,
                                  init_kernel=kern, learn_noise=self.learn_noise)
        return replace(comp, leave_one_out=self.leave_one_out)
