"""Build, weight, and serialize the curve segment neighborhood graph.

Nodes are curve segments; a KNN build yields a directed graph (fixed
out-degree), an RBN build an undirected one (symmetric adjacency). Each edge
carries the metric distance, the chord-direction angle difference, and a
weight in (0, 1] combining both.
"""

from __future__ import annotations

import csv
import math
import multiprocessing
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .curves import Dataset
from .errors import MalformedFileError, NotDecomposedError
from .index import SegmentKdTree, build_index, knn, rbn
from .metrics import SegmentSoA

GRAPH_MAGIC = b"CSNG-GR1"
ANGLE_FLOOR = 0.01  # keeps anti-parallel neighbors weakly connected


@dataclass
class Csng:
    """Weighted neighbor graph over curve segments.

    Edges carry distance and chord-angle difference; per-node curvature and
    speed live in the node arrays, so storing their per-edge differences as
    extra attributes is a straightforward extension if a weighting scheme
    needs them.
    """

    node_count: int
    # Parallel edge arrays sorted by (src, dst).
    edge_src: np.ndarray
    edge_dst: np.ndarray
    edge_dist: np.ndarray
    edge_angle: np.ndarray
    edge_weight: np.ndarray
    directed: bool
    node_arc_length: np.ndarray | None = None
    node_curvature: np.ndarray | None = None
    node_mean_speed: np.ndarray | None = None
    build_params: dict = field(default_factory=dict)

    @property
    def edge_count(self) -> int:
        return len(self.edge_src)

    def out_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_src, minlength=self.node_count)

    def neighbor_lists(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.node_count)]
        for s, d in zip(self.edge_src.tolist(), self.edge_dst.tolist()):
            out[s].append(d)
        return out


def edge_weight(distance, angle_diff, d_scale: float):
    """exp(-distance/d_scale) times the angle term (1+cos)/2 floored at 0.01."""
    if d_scale <= 0:
        raise ValueError("d_scale must be > 0")
    angle_term = np.maximum((1.0 + np.cos(angle_diff)) / 2.0, ANGLE_FLOOR)
    return np.exp(-np.asarray(distance, dtype=np.float64) / d_scale) * angle_term


_WORKER: dict = {}


def _query_worker_init(tree, metric, method, k, radius):
    _WORKER.update(tree=tree, metric=metric, method=method, k=k, radius=radius)


def _query_worker(ids):
    tree, metric = _WORKER["tree"], _WORKER["metric"]
    if _WORKER["method"] == "knn":
        return [knn(tree, q, _WORKER["k"], metric) for q in ids]
    return [rbn(tree, q, _WORKER["radius"], metric) for q in ids]


def _run_queries(tree: SegmentKdTree, method: str, k: int, radius: float, metric: str, threads: int):
    ids = list(range(tree.n))
    if threads <= 1 or tree.n < 64:
        if method == "knn":
            return [knn(tree, q, k, metric) for q in ids]
        return [rbn(tree, q, radius, metric) for q in ids]
    chunks = [ids[i::threads] for i in range(threads)]
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(
        threads, initializer=_query_worker_init, initargs=(tree, metric, method, k, radius)
    ) as pool:
        parts = pool.map(_query_worker, chunks)
    results: list = [None] * tree.n
    for chunk, part in zip(chunks, parts):
        for q, res in zip(chunk, part):
            results[q] = res
    return results


def build_csng(
    ds: Dataset,
    method: str = "knn",
    k: int = 60,
    radius: float | None = None,
    radius_frac: float | None = None,
    metric: str = "longest",
    bucket: int = 16,
    d_scale: float | None = None,
    threads: int = 1,
) -> Csng:
    """Run a neighbor search per segment and assemble the weighted graph.

    ``radius_frac`` resolves the RBN radius as a fraction of the dataset's
    bounding-box diagonal; ``d_scale`` defaults to the mean raw neighbor
    distance so the weight decay adapts to the data scale.
    """
    if not ds.segments:
        raise NotDecomposedError("decompose the dataset before building a graph")
    if method not in ("knn", "rbn"):
        raise ValueError(f"unknown method {method!r}")
    if method == "rbn":
        if radius is None:
            if radius_frac is None:
                raise ValueError("rbn needs radius or radius_frac")
            radius = radius_frac * ds.bounds_diagonal
        if radius <= 0:
            raise ValueError("radius must be > 0")
    elif k < 1:
        raise ValueError("k must be >= 1")

    soa = SegmentSoA.from_dataset(ds)
    tree = build_index(soa, bucket)
    results = _run_queries(tree, method, k, radius or 0.0, metric, threads)

    if method == "knn":
        src, dst, dist = [], [], []
        for q, res in enumerate(results):
            for sid, d in res:
                src.append(q)
                dst.append(sid)
                dist.append(d)
    else:
        # Canonicalize on the lower-id direction so both stored directions
        # carry bit-identical attributes.
        pair_dist: dict[tuple[int, int], float] = {}
        for q, res in enumerate(results):
            for sid, d in res:
                key = (q, sid) if q < sid else (sid, q)
                if key not in pair_dist or key[0] == q:
                    pair_dist[key] = d
        src, dst, dist = [], [], []
        for (u, v), d in pair_dist.items():
            src.extend((u, v))
            dst.extend((v, u))
            dist.extend((d, d))

    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    dist = np.asarray(dist, dtype=np.float64)
    order = np.lexsort((dst, src))
    src, dst, dist = src[order], dst[order], dist[order]

    chord = np.stack([s.chord_dir for s in ds.segments])
    cosang = np.clip((chord[src] * chord[dst]).sum(axis=1), -1.0, 1.0)
    angle = np.arccos(cosang)

    if d_scale is None:
        mean_dist = float(dist.mean()) if len(dist) else 0.0
        d_scale = mean_dist if mean_dist > 0 else 1.0
    weight = edge_weight(dist, angle, d_scale)

    mean_speed = np.array(
        [s.mean_speed if s.mean_speed is not None else np.nan for s in ds.segments]
    )
    return Csng(
        node_count=len(ds.segments),
        edge_src=src,
        edge_dst=dst,
        edge_dist=dist,
        edge_angle=angle,
        edge_weight=weight,
        directed=(method == "knn"),
        node_arc_length=np.array([s.arc_length for s in ds.segments]),
        node_curvature=np.array([s.total_curvature for s in ds.segments]),
        node_mean_speed=mean_speed,
        build_params={
            "method": method,
            "k": k if method == "knn" else None,
            "radius": radius if method == "rbn" else None,
            "metric": metric,
            "L": ds.L,
            "d_scale": d_scale,
        },
    )


def symmetrized_view(g: Csng) -> Csng:
    """Undirected view: weight(u,v) = w(u->v) + w(v->u); no-op if undirected.

    Distance and angle come from either direction (equal by metric symmetry).
    """
    if not g.directed:
        return g
    pair: dict[tuple[int, int], list[float]] = {}
    for s, d, di, an, w in zip(
        g.edge_src.tolist(),
        g.edge_dst.tolist(),
        g.edge_dist.tolist(),
        g.edge_angle.tolist(),
        g.edge_weight.tolist(),
    ):
        key = (s, d) if s < d else (d, s)
        if key in pair:
            pair[key][2] += w
        else:
            pair[key] = [di, an, w]
    src, dst, dist, angle, weight = [], [], [], [], []
    for (u, v), (di, an, w) in pair.items():
        src.extend((u, v))
        dst.extend((v, u))
        dist.extend((di, di))
        angle.extend((an, an))
        weight.extend((w, w))
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    order = np.lexsort((dst, src))
    return Csng(
        node_count=g.node_count,
        edge_src=src[order],
        edge_dst=dst[order],
        edge_dist=np.asarray(dist)[order],
        edge_angle=np.asarray(angle)[order],
        edge_weight=np.asarray(weight)[order],
        directed=False,
        node_arc_length=g.node_arc_length,
        node_curvature=g.node_curvature,
        node_mean_speed=g.node_mean_speed,
        build_params=dict(g.build_params, symmetrized=True),
    )


def undirected_edges(g: Csng):
    """Yield (u, v, weight) once per unordered pair of the symmetrized graph."""
    sym = symmetrized_view(g)
    keep = sym.edge_src < sym.edge_dst
    return zip(
        sym.edge_src[keep].tolist(),
        sym.edge_dst[keep].tolist(),
        sym.edge_weight[keep].tolist(),
    )


def export_graph(g: Csng, path: str | Path, format: str = "auto") -> None:
    """Write edges as CSV (src,dst,distance,angle,weight) or packed binary."""
    path = Path(path)
    if format == "auto":
        format = "csv" if path.suffix == ".csv" else "binary"
    if format == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["src", "dst", "distance", "angle", "weight"])
            for i in range(g.edge_count):
                w.writerow(
                    [
                        int(g.edge_src[i]),
                        int(g.edge_dst[i]),
                        repr(float(g.edge_dist[i])),
                        repr(float(g.edge_angle[i])),
                        repr(float(g.edge_weight[i])),
                    ]
                )
        return
    if format != "binary":
        raise ValueError(f"unknown format {format!r}")
    parts = [GRAPH_MAGIC, struct.pack("<IQ", g.node_count, g.edge_count)]
    rec = np.empty(
        g.edge_count,
        dtype=[("src", "<u4"), ("dst", "<u4"), ("dist", "<f4"), ("angle", "<f4"), ("w", "<f4")],
    )
    rec["src"] = g.edge_src
    rec["dst"] = g.edge_dst
    rec["dist"] = g.edge_dist
    rec["angle"] = g.edge_angle
    rec["w"] = g.edge_weight
    parts.append(rec.tobytes())
    path.write_bytes(b"".join(parts))


def import_graph(path: str | Path) -> Csng:
    """Read a graph written by export_graph; directedness is inferred from
    whether every edge's reverse is present with identical attributes."""
    path = Path(path)
    blob = path.read_bytes()
    if blob[:8] == GRAPH_MAGIC:
        node_count, edge_count = struct.unpack_from("<IQ", blob, 8)
        rec = np.frombuffer(
            blob,
            dtype=[("src", "<u4"), ("dst", "<u4"), ("dist", "<f4"), ("angle", "<f4"), ("w", "<f4")],
            count=edge_count,
            offset=20,
        )
        src = rec["src"].astype(np.int64)
        dst = rec["dst"].astype(np.int64)
        dist = rec["dist"].astype(np.float64)
        angle = rec["angle"].astype(np.float64)
        weight = rec["w"].astype(np.float64)
    else:
        try:
            with open(path, newline="") as fh:
                rows = list(csv.reader(fh))
        except UnicodeDecodeError as exc:
            raise MalformedFileError(f"{path}: neither binary graph nor CSV") from exc
        if not rows or rows[0] != ["src", "dst", "distance", "angle", "weight"]:
            raise MalformedFileError(f"{path}: bad CSV header")
        body = rows[1:]
        src = np.array([int(r[0]) for r in body], dtype=np.int64)
        dst = np.array([int(r[1]) for r in body], dtype=np.int64)
        dist = np.array([float(r[2]) for r in body])
        angle = np.array([float(r[3]) for r in body])
        weight = np.array([float(r[4]) for r in body])
        node_count = int(max(src.max(), dst.max())) + 1 if len(src) else 0

    pairs = set(zip(src.tolist(), dst.tolist()))
    directed = any((d, s) not in pairs for s, d in pairs)
    return Csng(
        node_count=int(node_count),
        edge_src=src,
        edge_dst=dst,
        edge_dist=dist,
        edge_angle=angle,
        edge_weight=weight,
        directed=directed,
        build_params={"imported": str(path)},
    )


def angle_between(u: np.ndarray, v: np.ndarray) -> float:
    """Angle in [0, pi] between two direction vectors."""
    c = float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))
    return math.acos(max(-1.0, min(1.0, c)))
