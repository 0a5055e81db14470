"""PCA + k-means baseline over resampled segment coordinates.

Each segment is resampled to F equally spaced arc-length positions,
flattened to a 3F-vector, and standardized per column; clustering runs on a
PCA projection of that matrix. Used to compare against graph communities
via the adjusted Rand index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import Dataset
from .errors import (
    DimTooLargeError,
    KTooLargeError,
    NotDecomposedError,
    UniverseMismatchError,
)


@dataclass
class FeatureMatrix:
    X: np.ndarray  # (segments, 3F) standardized
    mean: np.ndarray
    std: np.ndarray  # zero for constant columns (left unscaled)


def resample_polyline(points: np.ndarray, count: int) -> np.ndarray:
    """``count`` points at equal arc-length spacing, endpoints included."""
    seg_len = np.linalg.norm(np.diff(points, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    targets = np.linspace(0.0, cum[-1], count)
    idx = np.clip(np.searchsorted(cum, targets, side="right") - 1, 0, len(seg_len) - 1)
    t = (targets - cum[idx]) / np.maximum(seg_len[idx], 1e-300)
    return points[idx] + t[:, None] * (points[idx + 1] - points[idx])


def featurize(ds: Dataset, resample_count: int = 8) -> FeatureMatrix:
    if not ds.segments:
        raise NotDecomposedError("decompose the dataset before featurizing")
    rows = np.stack(
        [resample_polyline(s.points, resample_count).ravel() for s in ds.segments]
    )
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    scale = np.where(std > 0, std, 1.0)
    X = (rows - mean) / scale
    return FeatureMatrix(X=X, mean=mean, std=std)


def pca(fm: FeatureMatrix, dim: int):
    """(projected, components, explained_variance) of the standardized matrix.

    Components are orthonormal rows with a deterministic sign convention
    (largest-magnitude entry positive).
    """
    X = fm.X
    n, d = X.shape
    if dim > min(n, d):
        raise DimTooLargeError(f"dim {dim} > min(rows, cols) = {min(n, d)}")
    cov = (X.T @ X) / n
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:dim]
    components = evecs[:, order].T  # (dim, d)
    flip = np.sign(components[np.arange(dim), np.abs(components).argmax(axis=1)])
    components *= flip[:, None]
    explained = np.maximum(evals[order], 0.0)
    return X @ components.T, components, explained


def kmeans(
    X: np.ndarray,
    k: int,
    rng_seed: int = 0,
    max_iter: int = 300,
    init: str = "k-means++",
):
    """Lloyd iterations from a k-means++ (or plain random) seeded start.

    Returns (assignment, inertia, inertia_history); inertia never increases
    between iterations. Empty clusters grab the point farthest from its
    centroid, which keeps k clusters alive.
    """
    n = X.shape[0]
    if k > n:
        raise KTooLargeError(f"k {k} > {n} rows")
    rng = np.random.default_rng(rng_seed)
    if init == "k-means++":
        centers = _kmeanspp(X, k, rng)
    elif init == "random":
        centers = X[rng.choice(n, size=k, replace=False)].copy()
    else:
        raise ValueError(f"unknown init {init!r}")

    assign = np.zeros(n, dtype=np.int64)
    history: list[float] = []
    for _ in range(max_iter):
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = d2.argmin(axis=1)
        inertia = float(d2[np.arange(n), new_assign].sum())
        history.append(inertia)
        for c in range(k):
            sel = new_assign == c
            if sel.any():
                centers[c] = X[sel].mean(axis=0)
            else:
                worst = int(d2[np.arange(n), new_assign].argmax())
                centers[c] = X[worst]
                new_assign[worst] = c
        if (new_assign == assign).all() and len(history) > 1:
            assign = new_assign
            break
        assign = new_assign
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    inertia = float(d2[np.arange(n), assign].sum())
    history.append(inertia)
    return assign, inertia, history


def _kmeanspp(X: np.ndarray, k: int, rng) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[int(rng.integers(n))]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            # All remaining points coincide with a center; any choice works.
            centers[c] = X[int(rng.integers(n))]
            continue
        centers[c] = X[int(rng.choice(n, p=d2 / total))]
        d2 = np.minimum(d2, ((X - centers[c]) ** 2).sum(axis=1))
    return centers


def contingency_table(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    na, nb = int(a.max()) + 1, int(b.max()) + 1
    table = np.zeros((na, nb), dtype=np.int64)
    np.add.at(table, (a, b), 1)
    return table


def adjusted_rand_index(a, b) -> tuple[float, np.ndarray]:
    """Chance-corrected partition agreement plus the contingency table.

    Both inputs must label the same ids (equal length, aligned order).
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise UniverseMismatchError("assignments cover different universes")
    n = len(a)
    table = contingency_table(a, b)

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_ij = comb2(table).sum()
    sum_a = comb2(table.sum(axis=1)).sum()
    sum_b = comb2(table.sum(axis=0)).sum()
    expected = sum_a * sum_b / comb2(n) if n >= 2 else 0.0
    denom = 0.5 * (sum_a + sum_b) - expected
    if denom == 0:
        return 1.0, table
    return float((sum_ij - expected) / denom), table
