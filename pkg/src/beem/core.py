"""Boltzmann-exploration EM engine.

The engine only talks to base models through :class:`BaseModel`:
``log_likelihood_batch`` fills one column of the value matrix and ``fit``
returns a new model conditioned on an assigned subset. Gaussians, HMMs and
GPs all plug in the same way.
"""
from __future__ import annotations

import abc
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from beem import kernels


class WeightMode(str, enum.Enum):
    """Mixing weights used inside the tempered responsibility."""

    UNIFORM = "I"   # fixed 1/K, cancels out of the softmax
    LEARNED = "II"  # |S_k| / N after every M-step


class BaseModel(abc.ABC):
    """Contract every mixture component satisfies.

    Implementations are treated as immutable: ``fit`` returns a new instance.
    """

    fitted: bool = True

    @abc.abstractmethod
    def log_likelihood(self, x) -> float:
        """Natural log density of a single observation."""

    def log_likelihood_batch(self, data) -> np.ndarray:
        return np.array([self.log_likelihood(x) for x in data], dtype=float)

    @abc.abstractmethod
    def fit(self, subset) -> "BaseModel":
        """Return a copy conditioned on ``subset`` (non-empty)."""

    def param_vector(self) -> np.ndarray:
        """Flat parameter vector; used only by the epsilon stopping rule."""
        raise NotImplementedError


@dataclass
class BeemConfig:
    tau0: float = 1.5
    alpha: float = 0.97
    patience: int = 10
    max_iters: int = 500
    epsilon: Optional[float] = None
    weight_mode: WeightMode = WeightMode.UNIFORM
    seed: int = 0

    def __post_init__(self):
        self.weight_mode = WeightMode(self.weight_mode)
        if not self.tau0 > 0:
            raise ValueError(f"tau0 must be positive, got {self.tau0}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")


@dataclass
class AssignmentState:
    """Hard assignment of N observations to K subsets (labels are 0-based)."""

    labels: np.ndarray
    subsets: List[np.ndarray]
    temperature: float = 1.0
    iteration: int = 0

    @classmethod
    def from_labels(cls, labels, k, temperature=1.0, iteration=0):
        labels = np.asarray(labels, dtype=np.int64)
        subsets = [np.flatnonzero(labels == j) for j in range(k)]
        return cls(labels, subsets, temperature, iteration)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(s) for s in self.subsets], dtype=np.int64)


@dataclass
class FitReport:
    labels: np.ndarray
    loglik_trace: List[float] = field(default_factory=list)
    size_trace: List[np.ndarray] = field(default_factory=list)
    temp_trace: List[float] = field(default_factory=list)
    em_steps: int = 0
    converged: bool = False
    weights: Optional[np.ndarray] = None
    # extras: per-iteration sampled labels, best score, fitted components,
    # final responsibilities at unit temperature
    label_trace: List[np.ndarray] = field(default_factory=list)
    score: float = -math.inf
    models: list = field(default_factory=list)
    responsibilities: Optional[np.ndarray] = None

    @property
    def k(self) -> int:
        if self.size_trace:
            return len(self.size_trace[0])
        return int(self.labels.max()) + 1


def cool(tau0: float, t: int, alpha: float) -> float:
    """Temperature at iteration ``t`` (1-based): ``tau0 * alpha**(t - 1)``."""
    if t < 1:
        raise ValueError(f"iteration index must be >= 1, got {t}")
    return tau0 * alpha ** (t - 1)


def responsibilities(loglik: np.ndarray, log_weights=None, tau: float = 1.0) -> np.ndarray:
    """Row-wise tempered softmax of an N x K log-density matrix."""
    if not tau > 0:
        raise ValueError(f"temperature must be positive, got {tau}")
    z = np.array(loglik, dtype=float, copy=True)
    if log_weights is not None:
        z = z + np.asarray(log_weights, dtype=float)
    m = z.max(axis=1, keepdims=True)
    if not np.all(np.isfinite(m)):
        bad = int(np.flatnonzero(~np.isfinite(m[:, 0]))[0])
        if m[bad, 0] == -np.inf:
            raise ValueError(f"degenerate responsibility row {bad}: all entries are -inf")
        raise ValueError(f"responsibility row {bad} contains +inf or nan")
    with np.errstate(under="ignore"):
        e = np.exp((z - m) / tau)
    return e / e.sum(axis=1, keepdims=True)


def modified_responsibility(loglik_row, log_weights=None, tau: float = 1.0) -> np.ndarray:
    """Tempered softmax of one K-vector of component log densities."""
    row = np.asarray(loglik_row, dtype=float)
    return responsibilities(row[None, :], log_weights, tau)[0]


def _check_probs(probs: np.ndarray, atol: float = 1e-9):
    if probs.ndim != 2:
        raise ValueError("expected a 2-d array of probability rows")
    if np.any(probs < 0) or not np.all(np.isfinite(probs)):
        raise ValueError("probabilities must be finite and nonnegative")
    sums = probs.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > atol):
        raise ValueError(f"probability rows must sum to 1 (worst {sums[np.argmax(np.abs(sums - 1))]!r})")


def sample_assignments(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw one category per row of ``probs``; consumes N uniforms from ``rng``."""
    probs = np.ascontiguousarray(probs, dtype=float)
    _check_probs(probs)
    u = rng.random(probs.shape[0])
    return kernels.sample_rows(probs, u)


def sample_assignment(probs, rng: np.random.Generator) -> int:
    return int(sample_assignments(np.asarray(probs, dtype=float)[None, :], rng)[0])


def random_partition(n: int, k: int, rng: np.random.Generator) -> List[np.ndarray]:
    """Shuffle then deal round-robin, so every subset is non-empty."""
    if k < 1:
        raise ValueError("k must be positive")
    if n < k:
        raise ValueError(f"cannot split {n} observations into {k} non-empty subsets")
    perm = rng.permutation(n)
    return [np.sort(perm[j::k]) for j in range(k)]


def take(data, idx):
    """Subset observations; works for arrays and for lists of sequences."""
    if isinstance(data, np.ndarray):
        return data[idx]
    return [data[i] for i in idx]


def value_matrix(data, models: Sequence[BaseModel]) -> np.ndarray:
    cols = []
    for j, m in enumerate(models):
        if not getattr(m, "fitted", True):
            raise ValueError(f"component {j} has not been fitted")
        cols.append(np.asarray(m.log_likelihood_batch(data), dtype=float))
    return np.column_stack(cols)


def complete_data_loglik(data, models: Sequence[BaseModel], labels=None) -> float:
    """Sum over observations of the best component log density.

    ``labels`` is accepted for bookkeeping only; the value does not depend on it.
    """
    return float(value_matrix(data, models).max(axis=1).sum())


def _param_change(old: Sequence[BaseModel], new: Sequence[BaseModel]) -> float:
    return max(float(np.max(np.abs(a.param_vector() - b.param_vector()))) for a, b in zip(old, new))


def beem_fit(
    data,
    k: int,
    model_factory: Callable[[np.random.Generator], BaseModel],
    config: BeemConfig,
    rng: Optional[np.random.Generator] = None,
    init_models: Optional[Sequence[BaseModel]] = None,
) -> FitReport:
    """Fit a K-component mixture by Boltzmann-exploration EM.

    Without ``init_models`` the data is split into K random non-empty subsets
    and ``model_factory(rng)`` prototypes are fitted on them. Each iteration
    then evaluates the value matrix, samples a hard assignment per observation
    from the tempered responsibilities, refits each component on its subset
    (empty subsets keep their parameters) and cools the temperature.

    Iteration stops once the complete-data log-likelihood has failed to
    improve for ``config.patience`` iterations, when the optional epsilon rule
    fires, or at ``config.max_iters``. The reported labels are the greedy
    assignment under the best-scoring parameters; supplied ``init_models``
    count as a candidate.
    """
    n = len(data)
    if n == 0:
        raise ValueError("cannot fit a mixture to empty data")
    if k < 1 or n < k:
        raise ValueError(f"need 1 <= k <= N, got k={k}, N={n}")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    learned = config.weight_mode is WeightMode.LEARNED

    if init_models is None:
        subsets = random_partition(n, k, rng)
        protos = [model_factory(rng) for _ in range(k)]
        models = [p.fit(take(data, s)) for p, s in zip(protos, subsets)]
        counts = np.array([len(s) for s in subsets], dtype=float)
    else:
        if len(init_models) != k:
            raise ValueError(f"expected {k} initial models, got {len(init_models)}")
        models = list(init_models)
        counts = np.bincount(value_matrix(data, models).argmax(axis=1), minlength=k).astype(float)
    weights = counts / n if learned else np.full(k, 1.0 / k)

    V = value_matrix(data, models)
    report = FitReport(labels=np.zeros(n, dtype=np.int64))
    # the starting parameters compete for "best" too: a good initialisation
    # (e.g. k-means) survives if exploration never beats it
    best_score = float(V.max(axis=1).sum()) if init_models is not None else -math.inf
    best = (list(models), weights.copy(), V)
    stale = 0

    for t in range(1, config.max_iters + 1):
        tau = cool(config.tau0, t, config.alpha)
        with np.errstate(divide="ignore"):
            log_w = np.log(weights) if learned else None
        R = responsibilities(V, log_w, tau)
        labels = kernels.sample_rows(R, rng.random(n))
        state = AssignmentState.from_labels(labels, k, tau, t)

        previous = models
        models = [
            m.fit(take(data, idx)) if len(idx) else m
            for m, idx in zip(models, state.subsets)
        ]
        sizes = state.sizes
        if learned:
            weights = sizes / n

        V = value_matrix(data, models)
        score = float(V.max(axis=1).sum())
        report.loglik_trace.append(score)
        report.size_trace.append(sizes)
        report.temp_trace.append(tau)
        report.label_trace.append(labels)
        report.em_steps = t

        if score > best_score:
            best_score = score
            best = (list(models), weights.copy(), V)
            stale = 0
        else:
            stale += 1
        if stale >= config.patience:
            report.converged = True
            break
        if config.epsilon is not None and _param_change(previous, models) <= config.epsilon:
            report.converged = True
            break

    best_models, best_weights, best_V = best
    with np.errstate(divide="ignore"):
        final = best_V + (np.log(best_weights) if learned else 0.0)
    report.labels = final.argmax(axis=1).astype(np.int64)
    report.responsibilities = responsibilities(final, None, 1.0)
    report.score = best_score
    report.models = best_models
    report.weights = best_weights if learned else None
    return report
