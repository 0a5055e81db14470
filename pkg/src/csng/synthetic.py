"""Synthetic streamline datasets standing in for simulation data.

Desk-scale analogues used by the test suite, the benchmark harness, and the
docs: planted parallel bundles with known cluster labels, a swirling
annulus, and a two-bundles-plus-vortex scene for hierarchy-editing flows.
"""

from __future__ import annotations

import numpy as np

from .curves import Dataset, dataset_from_lines, decompose


def random_segments_dataset(
    n_lines: int = 200,
    vertices_per_line: int = 21,
    L: int = 2,
    rng_seed: int = 0,
    box: float = 10.0,
    step: float = 0.35,
) -> Dataset:
    """Random smooth-ish walks in a box, decomposed; good KNN/RBN fodder."""
    rng = np.random.default_rng(rng_seed)
    raw = []
    for _ in range(n_lines):
        p = rng.random(3) * box
        d = _unit(rng.normal(size=3), rng)
        verts = [p]
        for _ in range(vertices_per_line - 1):
            d = _unit(d + 0.4 * rng.normal(size=3), rng)
            p = p + step * d
            verts.append(p)
        raw.append((np.array(verts), None))
    return decompose(dataset_from_lines(raw), L)


def _unit(v: np.ndarray, rng) -> np.ndarray:
    n = np.linalg.norm(v)
    while n < 1e-12:
        v = rng.normal(size=3)
        n = np.linalg.norm(v)
    return v / n


def planted_bundles(
    n_bundles: int = 3,
    lines_per_bundle: int = 6,
    vertices_per_line: int = 9,
    L: int = 2,
    rng_seed: int = 0,
    bundle_radius: float = 0.35,
    spacing: float = 12.0,
    step: float = 0.25,
) -> tuple[Dataset, np.ndarray]:
    """Well-separated parallel bundles; returns (dataset, segment labels).

    Bundle centers sit ``spacing`` apart, far beyond the bundle radius and
    the bundle length, so neighbor graphs stay disconnected across bundles
    (and each bundle's own graph is dense enough to hold together as one
    community at resolution 1). Ground-truth segment labels come back
    alongside the dataset.
    """
    rng = np.random.default_rng(rng_seed)
    dirs = [
        np.array([1.0, 0.0, 0.0]),
        np.array([0.0, 1.0, 0.0]),
        np.array([0.6, 0.8, 0.0]),
        np.array([0.0, 0.6, 0.8]),
    ]
    raw = []
    line_bundle = []
    for b in range(n_bundles):
        origin = np.array([spacing * b, 0.5 * spacing * (b % 2), 0.0])
        axis = dirs[b % len(dirs)]
        for _ in range(lines_per_bundle):
            offset = rng.normal(size=3) * bundle_radius
            start = origin + offset
            verts = [start + axis * step * i for i in range(vertices_per_line)]
            raw.append((np.array(verts), None))
            line_bundle.append(b)
    ds = decompose(dataset_from_lines(raw), L)
    labels = np.array([line_bundle[s.line_id] for s in ds.segments], dtype=np.int64)
    return ds, labels


def swirl_dataset(
    n_lines: int = 48,
    steps: int = 40,
    L: int = 2,
    rng_seed: int = 0,
    r_lo: float = 1.0,
    r_hi: float = 3.0,
    step: float = 0.08,
) -> Dataset:
    """Concentric swirling arcs (a flow-behind-obstacle lookalike).

    One connected annulus of overlapping arcs whose community count rises
    smoothly with the detection resolution.
    """
    rng = np.random.default_rng(rng_seed)
    raw = []
    for _ in range(n_lines):
        r = r_lo + (r_hi - r_lo) * rng.random()
        ang0 = rng.random() * 2 * np.pi
        z = 0.4 * rng.normal()
        verts = []
        for i in range(steps):
            a = ang0 + i * step / r
            verts.append(np.array([r * np.cos(a), r * np.sin(a), z]))
        raw.append((np.array(verts), None))
    return decompose(dataset_from_lines(raw), L)


def two_bundles_with_vortex(
    L: int = 2, rng_seed: int = 0
) -> tuple[Dataset, dict[str, np.ndarray]]:
    """Two straight bundles plus a vortex ring hugging the first bundle.

    Returns (dataset, masks) where masks flag the segments of each part;
    used by hierarchy-editing tests that mimic a select/split/merge session.
    """
    rng = np.random.default_rng(rng_seed)
    raw = []
    part_of_line = []

    def add_bundle(origin, axis, count, tag):
        for _ in range(count):
            start = np.asarray(origin) + rng.normal(size=3) * 0.3
            verts = [start + np.asarray(axis) * 0.25 * i for i in range(17)]
            raw.append((np.array(verts), None))
            part_of_line.append(tag)

    add_bundle([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 8, "bundle_a")
    add_bundle([0.0, 14.0, 0.0], [1.0, 0.0, 0.0], 8, "bundle_b")
    # Vortex ring close to bundle_a's far end.
    for _ in range(6):
        r = 1.0 + 0.15 * rng.normal()
        z = 0.2 * rng.normal()
        ang0 = rng.random() * 2 * np.pi
        verts = [
            np.array([5.0 + r * np.cos(ang0 + 0.18 * i), 2.2 + r * np.sin(ang0 + 0.18 * i), z])
            for i in range(24)
        ]
        raw.append((np.array(verts), None))
        part_of_line.append("vortex")
    ds = decompose(dataset_from_lines(raw), L)
    tags = np.array([part_of_line[s.line_id] for s in ds.segments])
    masks = {t: tags == t for t in ("bundle_a", "bundle_b", "vortex")}
    return ds, masks
