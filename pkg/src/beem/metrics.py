"""External clustering metrics computed from a class x cluster contingency table.

Conventions for degenerate inputs:

* ``ari`` returns 1.0 when both labelings are a single block (0/0 form).
* ``nmi`` returns 1.0 when both sides have zero entropy and 0.0 when only one does.
* ``homogeneity`` returns 1.0 when the true classes have zero entropy.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class Contingency:
    table: np.ndarray      # C x K, rows = true classes, columns = predicted clusters
    classes: np.ndarray
    clusters: np.ndarray

    @property
    def n(self) -> int:
        return int(self.table.sum())

    @property
    def row_sums(self) -> np.ndarray:
        return self.table.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.table.sum(axis=0)


def contingency(true_labels, pred_labels) -> Contingency:
    t = np.asarray(true_labels).ravel()
    p = np.asarray(pred_labels).ravel()
    if t.shape != p.shape:
        raise ValueError(f"label vectors differ in length: {t.shape[0]} vs {p.shape[0]}")
    if t.size == 0:
        raise ValueError("need at least one label")
    classes, ti = np.unique(t, return_inverse=True)
    clusters, pi = np.unique(p, return_inverse=True)
    table = np.zeros((classes.size, clusters.size), dtype=np.int64)
    np.add.at(table, (ti, pi), 1)
    return Contingency(table, classes, clusters)


def _cont(a, b=None) -> Contingency:
    return a if isinstance(a, Contingency) else contingency(a, b)


def purity_acc(cont, pred=None) -> float:
    """Matched fraction under the best one-to-one class/cluster assignment."""
    c = _cont(cont, pred)
    rows, cols = linear_sum_assignment(c.table, maximize=True)
    return float(c.table[rows, cols].sum() / c.n)


def _comb2(x):
    x = np.asarray(x, dtype=float)
    return x * (x - 1.0) / 2.0


def ari(cont, pred=None) -> float:
    c = _cont(cont, pred)
    if c.n < 2:
        raise ValueError("ARI needs at least two observations")
    index = _comb2(c.table).sum()
    a = _comb2(c.row_sums).sum()
    b = _comb2(c.col_sums).sum()
    expected = a * b / _comb2(c.n)
    max_index = 0.5 * (a + b)
    if max_index == expected:
        return 1.0
    return float((index - expected) / (max_index - expected))


def _entropy(counts) -> float:
    counts = np.asarray(counts, dtype=float)
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def mutual_information(cont, pred=None) -> float:
    c = _cont(cont, pred)
    n = c.n
    nz = c.table > 0
    nij = c.table[nz].astype(float)
    outer = np.outer(c.row_sums, c.col_sums)[nz].astype(float)
    return float(max((nij / n * np.log(nij * n / outer)).sum(), 0.0))


def nmi(cont, pred=None) -> float:
    """Mutual information normalised by the geometric mean of the two entropies."""
    c = _cont(cont, pred)
    h_true, h_pred = _entropy(c.row_sums), _entropy(c.col_sums)
    if h_true == 0.0 and h_pred == 0.0:
        return 1.0
    if h_true == 0.0 or h_pred == 0.0:
        return 0.0
    return float(min(mutual_information(c) / np.sqrt(h_true * h_pred), 1.0))


def homogeneity(cont, pred=None) -> float:
    """1 - H(class | cluster) / H(class)."""
    c = _cont(cont, pred)
    h_c = _entropy(c.row_sums)
    if h_c == 0.0:
        return 1.0
    n = c.n
    nz = c.table > 0
    nij = c.table[nz].astype(float)
    nk = np.broadcast_to(c.col_sums[None, :], c.table.shape)[nz].astype(float)
    h_c_given_k = float(-(nij / n * np.log(nij / nk)).sum())
    return float(min(max(1.0 - h_c_given_k / h_c, 0.0), 1.0))


def all_label_metrics(true_labels, pred_labels) -> dict:
    c = contingency(true_labels, pred_labels)
    return {"ACC": purity_acc(c), "Homo": homogeneity(c), "NMI": nmi(c), "ARI": ari(c)}


def roc_auroc(scores, true_binary):
    """ROC points (fpr, tpr) from a threshold sweep and the trapezoidal AUROC.

    Tied scores move together, which scores each tied (pos, neg) pair as 1/2.
    """
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(true_binary).ravel().astype(bool)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both positive and negative labels")
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    tp = np.cumsum(y)
    fp = np.cumsum(~y)
    # last index of each run of equal scores
    cut = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    tpr = np.r_[0.0, tp[cut] / n_pos]
    fpr = np.r_[0.0, fp[cut] / n_neg]
    return np.column_stack([fpr, tpr]), float(_trapezoid(tpr, fpr))
