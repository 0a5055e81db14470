"""Exact segment-to-segment distance metrics.

Three variants over short polyline pieces:

- ``shortest``: min over all pairs of constituent line segments of the exact
  line-segment / line-segment distance;
- ``longest``: symmetric discrete Hausdorff, the max over either piece's stored
  vertices of the exact point-to-polyline distance to the other piece;
- ``average``: mean over the union of both pieces' vertices of the exact
  point-to-polyline distance to the other piece.

All kernels evaluate one query piece against a batch of candidate pieces.
Candidates live in a padded structure-of-arrays; padding repeats the last
vertex, which creates zero-length edges and duplicate points that can never
change a min or max, so only ``average`` needs the true vertex counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import Dataset

METRICS = ("shortest", "longest", "average")


@dataclass
class SegmentSoA:
    """Padded per-segment point arrays plus AABBs, shared by all queries."""

    pts: np.ndarray  # (N, P, 3), padded by repeating the final vertex
    counts: np.ndarray  # (N,) true vertex counts
    aabb_min: np.ndarray  # (N, 3)
    aabb_max: np.ndarray  # (N, 3)
    centers: np.ndarray  # (N, 3) AABB centers

    @property
    def n(self) -> int:
        return self.pts.shape[0]

    @classmethod
    def from_dataset(cls, ds: Dataset) -> "SegmentSoA":
        return cls.from_point_lists([s.points for s in ds.segments])

    @classmethod
    def from_point_lists(cls, point_lists) -> "SegmentSoA":
        counts = np.array([len(p) for p in point_lists], dtype=np.int64)
        P = int(counts.max())
        pts = np.empty((len(point_lists), P, 3), dtype=np.float64)
        for i, p in enumerate(point_lists):
            pts[i, : counts[i]] = p
            pts[i, counts[i] :] = p[-1]
        aabb_min = pts.min(axis=1)
        aabb_max = pts.max(axis=1)
        return cls(pts, counts, aabb_min, aabb_max, 0.5 * (aabb_min + aabb_max))


def _point_to_polyline(q: np.ndarray, cand: np.ndarray) -> np.ndarray:
    """Distances from each of q (m,3) points to each candidate polyline.

    ``cand`` is (c, P, 3); returns (c, m). Zero-length padded edges reduce to
    point distances and never undercut the true minimum. Distances clamped
    to an edge end are computed from the stored endpoint itself, so two
    candidates sharing a junction vertex tie bitwise there.
    """
    a = cand[:, :-1, :]  # (c, E, 3)
    b = cand[:, 1:, :]
    e = b - a  # edge vectors
    ee = (e * e).sum(axis=2)  # (c, E)
    # t = clamp(((q - a) . e) / |e|^2, 0, 1) for every (cand, edge, point)
    d = q[None, None, :, :] - a[:, :, None, :]  # (c, E, m, 3)
    t = (d * e[:, :, None, :]).sum(axis=3)
    t /= np.maximum(ee[:, :, None], 1e-300)
    np.clip(t, 0.0, 1.0, out=t)
    proj = a[:, :, None, :] + t[:, :, :, None] * e[:, :, None, :]
    diff = q[None, None, :, :] - proj
    dist = np.sqrt((diff * diff).sum(axis=3))
    diff_b = q[None, None, :, :] - b[:, :, None, :]
    dist_b = np.sqrt((diff_b * diff_b).sum(axis=3))
    return np.where(t >= 1.0, dist_b, dist).min(axis=1)  # (c, m)


def hausdorff_to_many(qpts: np.ndarray, cand_pts: np.ndarray) -> np.ndarray:
    """Symmetric discrete Hausdorff from one piece to (c,) candidates."""
    fwd = _point_to_polyline(qpts, cand_pts).max(axis=1)  # (c,)
    # Reverse direction: each candidate's points against the query polyline.
    bwd = _point_to_polyline_from_many(cand_pts, qpts).max(axis=1)
    return np.maximum(fwd, bwd)


def _point_to_polyline_from_many(src_pts: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Distances from each candidate's own points to a single polyline.

    ``src_pts`` is (c, P, 3), ``poly`` is (n, 3); returns (c, P).
    """
    a = poly[:-1]  # (E, 3)
    b = poly[1:]
    e = b - a
    ee = (e * e).sum(axis=1)  # (E,)
    d = src_pts[:, :, None, :] - a[None, None, :, :]  # (c, P, E, 3)
    t = (d * e[None, None, :, :]).sum(axis=3) / np.maximum(ee[None, None, :], 1e-300)
    np.clip(t, 0.0, 1.0, out=t)
    proj = a[None, None, :, :] + t[:, :, :, None] * e[None, None, :, :]
    diff = src_pts[:, :, None, :] - proj
    dist = np.sqrt((diff * diff).sum(axis=3))
    diff_b = src_pts[:, :, None, :] - b[None, None, :, :]
    dist_b = np.sqrt((diff_b * diff_b).sum(axis=3))
    return np.where(t >= 1.0, dist_b, dist).min(axis=2)  # (c, P)


def average_to_many(
    qpts: np.ndarray, cand_pts: np.ndarray, cand_counts: np.ndarray
) -> np.ndarray:
    """Mean point-to-other-piece distance over the union of both vertex sets."""
    nq = qpts.shape[0]
    fwd = _point_to_polyline(qpts, cand_pts).sum(axis=1)  # (c,) sums over query pts
    bwd_all = _point_to_polyline_from_many(cand_pts, qpts)  # (c, P)
    P = cand_pts.shape[1]
    mask = np.arange(P)[None, :] < cand_counts[:, None]
    bwd = (bwd_all * mask).sum(axis=1)
    return (fwd + bwd) / (nq + cand_counts)


def _point_to_segments(
    p: np.ndarray, a: np.ndarray, b: np.ndarray, e: np.ndarray, ee: np.ndarray
):
    """Distance from points p (..., 3) to segments with endpoints (a, b).

    End-clamped hits are measured from the endpoint coordinates themselves
    so junction-sharing segments tie bitwise.
    """
    d = p - a
    t = (d * e).sum(axis=-1) / np.maximum(ee, 1e-300)
    t = np.clip(t, 0.0, 1.0)
    diff = d - t[..., None] * e
    dist = np.sqrt((diff * diff).sum(axis=-1))
    diff_b = p - b
    dist_b = np.sqrt((diff_b * diff_b).sum(axis=-1))
    return np.where(t >= 1.0, dist_b, dist)


def shortest_to_many(qpts: np.ndarray, cand_pts: np.ndarray) -> np.ndarray:
    """Min line-segment/line-segment distance between query and candidates.

    Exact: the convex quadratic's minimum over the unit square is either the
    interior critical point (when it lands inside) or on the boundary, and
    the boundary cases are exactly the four endpoint-to-segment distances.
    """
    qa = qpts[:-1]  # (Eq, 3)
    qe = qpts[1:] - qa
    ca = cand_pts[:, :-1, :]  # (c, Ec, 3)
    ce = cand_pts[:, 1:, :] - ca

    u = qe[None, :, None, :]  # (1, Eq, 1, 3)
    v = ce[:, None, :, :]  # (c, 1, Ec, 3)
    w0 = qa[None, :, None, :] - ca[:, None, :, :]  # (c, Eq, Ec, 3)
    aa = (u * u).sum(axis=3)
    bb = (u * v).sum(axis=3)
    cc = (v * v).sum(axis=3)
    dd = (u * w0).sum(axis=3)
    ee_ = (v * w0).sum(axis=3)
    den = aa * cc - bb * bb
    s = (bb * ee_ - cc * dd) / np.maximum(den, 1e-300)
    t = (aa * ee_ - bb * dd) / np.maximum(den, 1e-300)
    interior_ok = (den > 1e-300) & (s >= 0) & (s <= 1) & (t >= 0) & (t <= 1)
    # Grouped so swapping the roles of the two segments negates dp exactly,
    # keeping the metric bitwise symmetric.
    dp = w0 + (s[..., None] * u - t[..., None] * v)
    interior = np.where(interior_ok, np.sqrt((dp * dp).sum(axis=3)), np.inf)

    cb = cand_pts[:, 1:, :]
    qb = qpts[1:]
    cee = (ce * ce).sum(axis=2)  # (c, Ec)
    qee = (qe * qe).sum(axis=1)  # (Eq,)
    # Query endpoints vs candidate edges: (c, Eq+1, Ec)
    e1 = _point_to_segments(
        qpts[None, :, None, :],
        ca[:, None, :, :],
        cb[:, None, :, :],
        ce[:, None, :, :],
        cee[:, None, :],
    )
    # Candidate endpoints vs query edges: (c, P, Eq)
    e2 = _point_to_segments(
        cand_pts[:, :, None, :],
        qa[None, None, :, :],
        qb[None, None, :, :],
        qe[None, None, :, :],
        qee[None, None, :],
    )
    best = np.minimum(interior.min(axis=(1, 2)), e1.min(axis=(1, 2)))
    return np.minimum(best, e2.min(axis=(1, 2)))


def distances_to_many(
    soa: SegmentSoA, query_id: int, cand_ids: np.ndarray, metric: str
) -> np.ndarray:
    """Metric distances from one segment to an id array of candidates."""
    qpts = soa.pts[query_id, : soa.counts[query_id]]
    cand = soa.pts[cand_ids]
    if metric == "longest":
        return hausdorff_to_many(qpts, cand)
    if metric == "shortest":
        return shortest_to_many(qpts, cand)
    if metric == "average":
        return average_to_many(qpts, cand, soa.counts[cand_ids])
    raise ValueError(f"unknown metric {metric!r}")


def segment_distance(a_points: np.ndarray, b_points: np.ndarray, metric: str) -> float:
    """Distance between two segments given as (n, 3) point arrays."""
    a_points = np.asarray(a_points, dtype=np.float64)
    b_points = np.asarray(b_points, dtype=np.float64)
    cand = b_points[None, :, :]
    if metric == "longest":
        return float(hausdorff_to_many(a_points, cand)[0])
    if metric == "shortest":
        return float(shortest_to_many(a_points, cand)[0])
    if metric == "average":
        counts = np.array([b_points.shape[0]])
        return float(average_to_many(a_points, cand, counts)[0])
    raise ValueError(f"unknown metric {metric!r}")


def point_to_aabb_max(qpts: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    """max over query points of their distance to the box [lo, hi].

    Valid lower bound for the longest metric: the true distance dominates
    every query point's distance to the candidate, which lies in the box.
    """
    gap = np.maximum(np.maximum(lo - qpts, qpts - hi), 0.0)
    return float(np.sqrt((gap * gap).sum(axis=1)).max())


def aabb_to_aabb(lo_a, hi_a, lo_b, hi_b) -> float:
    """Distance between two boxes; lower bound for shortest and average."""
    gap = np.maximum(np.maximum(lo_a - hi_b, lo_b - hi_a), 0.0)
    return float(np.sqrt((gap * gap).sum()))
