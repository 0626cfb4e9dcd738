"""Seeded synthetic benchmarks and loaders for labelled vector / sequence data.

Every generator is a pure function of its arguments and ``seed``.
"""
from __future__ import annotations

import csv
import enum
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np


@dataclass
class LabeledVectors:
    points: np.ndarray
    labels: np.ndarray
    generator_spec: Dict = field(default_factory=dict)

    def __post_init__(self):
        if self.points.shape[0] != self.labels.shape[0]:
            raise ValueError("points and labels differ in length")

    def __len__(self):
        return self.points.shape[0]

    @property
    def n_classes(self) -> int:
        return int(np.unique(self.labels).size)


@dataclass
class LabeledSequences:
    sequences: List[np.ndarray]
    labels: np.ndarray
    generator_spec: Dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.sequences) != self.labels.shape[0]:
            raise ValueError("sequences and labels differ in length")

    def __len__(self):
        return len(self.sequences)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([s.shape[0] for s in self.sequences], dtype=np.int64)

    @property
    def n_classes(self) -> int:
        return int(np.unique(self.labels).size)


SQUARE_UNBALANCED = (100, 50, 50, 10)
SQUARE_BALANCED = (50, 50, 50, 50)


def square_corners(side: float) -> np.ndarray:
    """Corners clockwise from the top-left."""
    h = side / 2.0
    return np.array([[-h, h], [h, h], [h, -h], [-h, -h]])


def gen_square(counts=SQUARE_UNBALANCED, side: float = 10.0, var: float = 0.3, seed=0) -> LabeledVectors:
    counts = [int(c) for c in counts]
    if len(counts) != 4 or min(counts) < 1:
        raise ValueError("counts must be four positive integers")
    rng = np.random.default_rng(seed)
    corners = square_corners(side)
    pts = [corners[i] + np.sqrt(var) * rng.standard_normal((c, 2)) for i, c in enumerate(counts)]
    labels = np.repeat(np.arange(4), counts)
    spec = {"name": "square", "counts": counts, "side": side, "var": var, "seed": _jsonable(seed)}
    return LabeledVectors(np.vstack(pts), labels, spec)


def rainbow_means(radius: float = 9.0, k: int = 8) -> np.ndarray:
    """k means on the upper half circle, angles evenly spanning [0, pi]."""
    w = np.linspace(0.0, np.pi, k) if k > 1 else np.zeros(1)
    z = radius * np.exp(1j * w)
    return np.column_stack([z.real, z.imag])


def gen_rainbow(n: int = 1000, radius: float = 9.0, k: int = 8, seed=0) -> LabeledVectors:
    if n < k:
        raise ValueError("need n >= k")
    rng = np.random.default_rng(seed)
    means = rainbow_means(radius, k)
    labels = rng.integers(k, size=n)
    pts = means[labels] + rng.standard_normal((n, 2))
    spec = {"name": "rainbow", "n": n, "radius": radius, "k": k, "seed": _jsonable(seed)}
    return LabeledVectors(pts, labels.astype(np.int64), spec)


def sample_hmm(pi, A, means, std, length: int, rng) -> np.ndarray:
    S = len(pi)
    states = np.empty(length, dtype=np.int64)
    states[0] = rng.choice(S, p=pi)
    for t in range(1, length):
        states[t] = rng.choice(S, p=A[states[t - 1]])
    means = np.asarray(means, dtype=float)
    if means.ndim == 1:
        means = means[:, None]
    return means[states] + std * rng.standard_normal((length, means.shape[1]))


def gen_random_hmms(k: int = 3, n_states: int = 4, state_means=(-2.0, -1.0, 0.0, 1.0),
                    state_std: float = 0.1, seqs_per_cluster: int = 20, len_lo: int = 20,
                    len_hi: int = 50, seed=0) -> LabeledSequences:
    """k random HMMs (Dirichlet(1) initial and transition rows) sharing fixed
    scalar Gaussian emissions; lengths uniform on [len_lo, len_hi]."""
    if len_lo > len_hi or len_lo < 1:
        raise ValueError("need 1 <= len_lo <= len_hi")
    if len(state_means) != n_states:
        raise ValueError("one state mean per hidden state")
    rng = np.random.default_rng(seed)
    seqs, labels, params = [], [], []
    for c in range(k):
        pi = rng.dirichlet(np.ones(n_states))
        A = rng.dirichlet(np.ones(n_states), size=n_states)
        params.append({"initial": pi.tolist(), "transition": A.tolist()})
        for _ in range(seqs_per_cluster):
            L = int(rng.integers(len_lo, len_hi + 1))
            seqs.append(sample_hmm(pi, A, state_means, state_std, L, rng))
            labels.append(c)
    spec = {"name": "random_hmm", "k": k, "n_states": n_states, "state_means": list(state_means),
            "state_std": state_std, "seqs_per_cluster": seqs_per_cluster,
            "len_lo": len_lo, "len_hi": len_hi, "seed": _jsonable(seed), "hmms": params}
    return LabeledSequences(seqs, np.asarray(labels, dtype=np.int64), spec)


class SinusoidVariant(str, enum.Enum):
    SIMPLE = "simple"
    COMPLEX = "complex"


def gen_sinusoid_association(variant=SinusoidVariant.SIMPLE, seed=0, noise: bool = True,
                             subsample: bool = True) -> LabeledVectors:
    """Two overlapping 1-d curves; rows are ``(x, y)``, labels give the source.

    ``simple``: sin(2 pi x) and sin(2 pi x + pi/2) on [0, 1], 125 uniform
    inputs each, noise variance 0.01 (reconstructed setting).
    ``complex``: +sin and -sin over one cycle on a 100-point grid, noise
    variances 0.3 and 0.2, randomly thinned to 75 and 60 points, then inputs
    scaled to [0, 1] and targets standardised.
    ``noise=False, subsample=False`` gives the clean curves for checking.
    """
    variant = SinusoidVariant(variant)
    rng = np.random.default_rng(seed)
    if variant is SinusoidVariant.SIMPLE:
        n_each = 125
        xs, ys, labels = [], [], []
        for c, phase in enumerate((0.0, np.pi / 2)):
            x = np.sort(rng.uniform(0.0, 1.0, n_each))
            y = np.sin(2 * np.pi * x + phase)
            if noise:
                y = y + np.sqrt(0.01) * rng.standard_normal(n_each)
            xs.append(x)
            ys.append(y)
            labels.append(np.full(n_each, c))
        spec = {"name": "sinusoid", "variant": "simple", "seed": _jsonable(seed),
                "note": "reconstruction: two crossing sinusoids, 125 points each, noise var 0.01"}
        pts = np.column_stack([np.concatenate(xs), np.concatenate(ys)])
        return LabeledVectors(pts, np.concatenate(labels).astype(np.int64), spec)

    grid = np.linspace(0.0, 2 * np.pi, 100)
    keep_n = (75, 60)
    noise_var = (0.3, 0.2)
    xs, ys, labels = [], [], []
    for c, sign in enumerate((1.0, -1.0)):
        x, y = grid.copy(), sign * np.sin(grid)
        if noise:
            y = y + np.sqrt(noise_var[c]) * rng.standard_normal(y.shape)
        if subsample:
            idx = np.sort(rng.choice(grid.size, size=keep_n[c], replace=False))
            x, y = x[idx], y[idx]
        xs.append(x)
        ys.append(y)
        labels.append(np.full(x.size, c))
    x, y = np.concatenate(xs), np.concatenate(ys)
    if noise or subsample:
        x = (x - grid[0]) / (grid[-1] - grid[0])
        y = (y - y.mean()) / y.std()
    spec = {"name": "sinusoid", "variant": "complex", "seed": _jsonable(seed),
            "noise_var": list(noise_var), "kept": list(keep_n) if subsample else None}
    return LabeledVectors(np.column_stack([x, y]), np.concatenate(labels).astype(np.int64), spec)


def load_labeled_csv(path, label_column: Union[str, int] = -1) -> LabeledVectors:
    """Numeric CSV with a header row; the label column may be non-numeric.

    ``label_column`` is a header name or a (possibly negative) column index.
    Labels are mapped to 0..C-1 in order of first appearance.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
            if label_column not in header:
                raise ValueError(f"{path}: no label column {label_column!r} in header {header}")
            li = header.index(label_column)
        else:
            li = int(label_column)
            if not -len(header) <= li < len(header):
                raise ValueError(f"{path}: label column index {li} out of range")
            li %= len(header)
        rows, raw_labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(v) for i, v in enumerate(row) if i != li])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric feature ({exc})") from None
            raw_labels.append(row[li].strip())
    if not rows:
        raise ValueError(f"{path}: no data rows")
    names = list(dict.fromkeys(raw_labels))
    labels = np.array([names.index(v) for v in raw_labels], dtype=np.int64)
    spec = {"name": "csv", "path": str(path), "label_column": header[li], "label_names": names}
    return LabeledVectors(np.asarray(rows, dtype=float), labels, spec)


_TAG = re.compile(r"^([A-Za-z]+)")


def load_sequence_corpus(path, classes: Optional[Iterable[str]] = None) -> LabeledSequences:
    """One whitespace-separated numeric file per sequence; class tag is the
    leading letters of the filename (``A_001.txt`` -> ``A``).

    ``classes`` selects and orders the classes; labels follow that order.
    """
    root = Path(path)
    if not root.is_dir():
        raise ValueError(f"{root}: not a directory")
    files = sorted(p for p in root.iterdir() if p.is_file() and not p.name.startswith("."))
    by_tag: Dict[str, List[Path]] = {}
    for f in files:
        m = _TAG.match(f.stem)
        if m:
            by_tag.setdefault(m.group(1), []).append(f)
    if classes is None:
        wanted = sorted(by_tag)
    else:
        wanted = list(classes)
        if not wanted:
            raise ValueError("empty class filter")
        missing = [c for c in wanted if c not in by_tag]
        if missing:
            raise ValueError(f"classes {missing} not found; available tags: {sorted(by_tag)}")
    seqs, labels = [], []
    for ci, tag in enumerate(wanted):
        for f in by_tag[tag]:
            a = np.loadtxt(f, dtype=float, ndmin=2)
            seqs.append(a)
            labels.append(ci)
    spec = {"name": "sequence_corpus", "path": str(root), "classes": wanted,
            "counts": {t: len(by_tag[t]) for t in wanted}}
    return LabeledSequences(seqs, np.asarray(labels, dtype=np.int64), spec)


def _jsonable(seed):
    if isinstance(seed, (list, tuple)):
        return [int(s) for s in seed]
    return int(seed) if seed is not None else None


def class_range(spec: str) -> List[str]:
    """``'A-E'`` -> ``['A', 'B', 'C', 'D', 'E']``; ``'A,C'`` -> ``['A', 'C']``."""
    spec = spec.strip()
    if re.fullmatch(r"[A-Za-z]-[A-Za-z]", spec):
        a, b = spec[0], spec[2]
        return [chr(c) for c in range(ord(a), ord(b) + 1)]
    return [s.strip() for s in spec.split(",") if s.strip()]
