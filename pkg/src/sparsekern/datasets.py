"""Synthetic signal generators, CSV ingestion, splits, and k-means.

Every generator is a pure function of its parameters and seed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .models import DiscreteModel


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Observations X (N x p), labels y (N,), and the domain box (p x 2)."""

    X: np.ndarray
    y: np.ndarray
    box: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        box = np.asarray(self.box, dtype=float)
        if box.ndim == 1:
            box = box.reshape(1, 2)
        if X.shape[0] < 1:
            raise DomainError("need at least one sample")
        if X.shape[0] != y.shape[0]:
            raise DomainError("X and y disagree on the number of samples")
        if box.shape != (X.shape[1], 2):
            raise DomainError("box must be (p, 2) for p-dimensional samples")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise DomainError("samples and labels must be finite")
        if np.any(X < box[:, 0] - 1e-9) or np.any(X > box[:, 1] + 1e-9):
            raise DomainError("some sample lies outside the domain box")
        for name, arr in (("X", X), ("y", y), ("box", box)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "SampleSet":
        idx = np.asarray(idx)
        return SampleSet(self.X[idx], self.y[idx], self.box)

    def to_dict(self) -> dict:
        return {"X": self.X.tolist(), "y": self.y.tolist(), "box": self.box.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "SampleSet":
        return cls(
            np.asarray(d["X"], dtype=float),
            np.asarray(d["y"], dtype=float),
            np.asarray(d["box"], dtype=float),
        )


def gen_mixed_gauss(
    m: int,
    w0: float,
    n: int,
    noise_sd: float,
    seed: int,
    box=((0.0, 3.0),),
):
    """Random superposition of m Gaussian bumps, sampled uniformly on the box.

    Amplitudes and bump centers are U(1, 2) per axis; additive Gaussian noise
    has the given standard deviation.  Returns the samples together with the
    noiseless ground-truth model.
    """
    if m < 1 or n < 1:
        raise ConfigError("m and n must be >= 1")
    if not w0 > 0:
        raise ConfigError("w0 must be positive")
    box = np.asarray(box, dtype=float)
    p = box.shape[0]
    rng = np.random.default_rng(seed)
    amps = rng.uniform(1.0, 2.0, size=m)
    centers = rng.uniform(1.0, 2.0, size=(m, p))
    truth = DiscreteModel(amps, centers, np.full(m, float(w0)))
    X = rng.uniform(box[:, 0], box[:, 1], size=(n, p))
    y = truth.predict_batch(X)
    if noise_sd > 0:
        y = y + rng.normal(0.0, noise_sd, size=n)
    return SampleSet(X, y, box), truth


def gen_sin_squared(n: int, noise_sd: float, seed: int, grid: bool = True) -> SampleSet:
    """Varying-smoothness signal y = sin(0.5 pi x^2) on [-5, 5].

    ``grid=True`` places x on the inclusive uniform grid used for training;
    ``grid=False`` draws x uniformly at random (test sets).
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    rng = np.random.default_rng(seed)
    if grid:
        x = np.linspace(-5.0, 5.0, n)
    else:
        x = rng.uniform(-5.0, 5.0, size=n)
    y = np.sin(0.5 * np.pi * x**2)
    if noise_sd > 0:
        y = y + rng.normal(0.0, noise_sd, size=n)
    return SampleSet(x.reshape(-1, 1), y, np.array([[-5.0, 5.0]]))


def gen_remark1(n: int, seed: int, exclusion: float = 0.05) -> SampleSet:
    """Noiseless single-bump data y = exp(-(x - 2.5)^2 / 2) on [0, 5].

    Sample locations avoid the bump's peak: every x_i is at least
    ``exclusion`` away from 2.5.
    """
    if n < 2:
        raise ConfigError("n must be >= 2")
    rng = np.random.default_rng(seed)
    xs = []
    while len(xs) < n:
        draw = rng.uniform(0.0, 5.0, size=n)
        xs.extend(draw[np.abs(draw - 2.5) >= exclusion].tolist())
    x = np.asarray(xs[:n])
    y = np.exp(-((x - 2.5) ** 2) / 2.0)
    return SampleSet(x.reshape(-1, 1), y, np.array([[0.0, 5.0]]))


def kmeans(points, k: int, seed: int, max_iter: int = 100) -> np.ndarray:
    """Lloyd's algorithm; empty clusters are reseeded to the farthest point."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    m = points.shape[0]
    if not 1 <= k <= m:
        raise ConfigError(f"k must be in [1, {m}], got {k}")
    rng = np.random.default_rng(seed)
    centers = points[rng.choice(m, size=k, replace=False)].copy()
    labels = np.zeros(m, dtype=int)
    for _ in range(max_iter):
        d2 = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(d2, axis=1)
        moved = False
        for j in range(k):
            mask = new_labels == j
            if not np.any(mask):
                far = int(np.argmax(np.min(d2, axis=1)))
                centers[j] = points[far]
                new_labels[far] = j
                moved = True
                continue
            c = points[mask].mean(axis=0)
            if not np.allclose(c, centers[j]):
                moved = True
            centers[j] = c
        if not moved and np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return centers


def kmeans_objective(points, centers) -> float:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    d2 = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    return float(np.sum(np.min(d2, axis=1)))


def save_csv(samples: SampleSet, path, label_column: str = "y") -> None:
    """Write samples as ``x1,...,xp,y`` (or a custom label column name)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i + 1}" for i in range(samples.dim)] + [label_column])
        for xi, yi in zip(samples.X, samples.y):
            writer.writerow([repr(float(v)) for v in xi] + [repr(float(yi))])


def load_csv(path, box=None) -> SampleSet:
    """Read a ``x1,...,xp,y`` (or ``...,label``) CSV into a SampleSet.

    The domain box defaults to the per-axis data range, padded slightly so
    boundary samples stay interior.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty file") from None
        ncol = len(header)
        if ncol < 2:
            raise ConfigError(f"{path}: need at least one feature and a label column")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != ncol:
                raise ConfigError(f"{path}: line {lineno}: expected {ncol} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ConfigError(f"{path}: line {lineno}: {exc}") from None
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)
    X, y = data[:, :-1], data[:, -1]
    if box is None:
        lo = X.min(axis=0)
        hi = X.max(axis=0)
        pad = np.maximum(0.05 * (hi - lo), 1e-6)
        box = np.stack([lo - pad, hi + pad], axis=1)
    return SampleSet(X, y, np.asarray(box, dtype=float))


def split_fraction(samples: SampleSet, train_fraction: float, seed: int, stratified: bool = False):
    """Shuffle-split into (train, test) with the given train fraction."""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError("train_fraction must be in (0, 1)")
    folds = _fold_indices(samples, 2, seed, stratified, fractions=(train_fraction,))
    return samples.subset(folds[0]), samples.subset(folds[1])


def split_kfold(samples: SampleSet, k: int, seed: int, stratified: bool = False):
    """k disjoint (train, test) partitions; stratified keeps label balance."""
    if k < 2:
        raise ConfigError("fold count must be >= 2")
    if k > samples.n:
        raise ConfigError("more folds than samples")
    folds = _fold_indices(samples, k, seed, stratified)
    out = []
    for i in range(k):
        test = folds[i]
        train = np.concatenate([folds[j] for j in range(k) if j != i])
        out.append((samples.subset(np.sort(train)), samples.subset(np.sort(test))))
    return out


def _fold_indices(samples, k, seed, stratified, fractions=None):
    rng = np.random.default_rng(seed)
    n = samples.n
    if stratified:
        groups = [np.flatnonzero(samples.y == lab) for lab in np.unique(samples.y)]
    else:
        groups = [np.arange(n)]
    if fractions is not None:
        # two bins with the requested proportion, per group
        bins = [[] for _ in range(2)]
        for g in groups:
            g = g[rng.permutation(len(g))]
            cut = int(round(fractions[0] * len(g)))
            bins[0].extend(g[:cut].tolist())
            bins[1].extend(g[cut:].tolist())
        return [np.asarray(sorted(b), dtype=int) for b in bins]
    bins = [[] for _ in range(k)]
    for g in groups:
        g = g[rng.permutation(len(g))]
        for pos, idx in enumerate(g):
            bins[pos % k].append(int(idx))
    return [np.asarray(sorted(b), dtype=int) for b in bins]
