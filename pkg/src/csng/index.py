"""Segment-aware KD-tree answering exact KNN and radius queries.

The tree is built over segment AABB centers (median split on the widest
axis) but every node's box covers its member segments entirely, so box-based
lower bounds are sound for whole-segment metrics. Queries return exactly the
brute-force ranking; ties in distance break toward the smaller segment id.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInputError, InvalidIdError
from .metrics import (
    SegmentSoA,
    aabb_to_aabb,
    distances_to_many,
    point_to_aabb_max,
)

DEFAULT_BUCKET = 16


@dataclass
class _Node:
    lo: np.ndarray
    hi: np.ndarray
    left: int = -1
    right: int = -1
    leaf_ids: np.ndarray | None = None  # sorted segment ids, leaves only

    @property
    def is_leaf(self) -> bool:
        return self.leaf_ids is not None


@dataclass
class QueryStats:
    """Optional instrumentation filled in by knn/rbn."""

    nodes_visited: int = 0
    leaves_visited: int = 0
    pruned: list[tuple[int, float]] = field(default_factory=list)  # (node, LB)


@dataclass
class SegmentKdTree:
    soa: SegmentSoA
    nodes: list[_Node]
    bucket: int
    root: int = 0

    @property
    def n(self) -> int:
        return self.soa.n

    def depth(self) -> int:
        def rec(i):
            nd = self.nodes[i]
            if nd.is_leaf:
                return 0
            return 1 + max(rec(nd.left), rec(nd.right))

        return rec(self.root)

    def subtree_segment_ids(self, node: int) -> np.ndarray:
        nd = self.nodes[node]
        if nd.is_leaf:
            return nd.leaf_ids
        return np.concatenate(
            [self.subtree_segment_ids(nd.left), self.subtree_segment_ids(nd.right)]
        )


def build_index(soa: SegmentSoA, bucket: int = DEFAULT_BUCKET) -> SegmentKdTree:
    """Balanced KD-tree over ``soa``; leaves hold at most ``bucket`` segments."""
    if soa.n == 0:
        raise EmptyInputError("no segments to index")
    nodes: list[_Node] = []

    def rec(ids: np.ndarray) -> int:
        lo = soa.aabb_min[ids].min(axis=0)
        hi = soa.aabb_max[ids].max(axis=0)
        me = len(nodes)
        nodes.append(_Node(lo=lo, hi=hi))
        if len(ids) <= bucket:
            nodes[me].leaf_ids = np.sort(ids)
            return me
        centers = soa.centers[ids]
        axis = int(np.argmax(centers.max(axis=0) - centers.min(axis=0)))
        half = len(ids) // 2
        # Positional median keeps the split balanced even when every center
        # coincides (duplicate segments).
        order = np.argpartition(centers[:, axis], half, kind="introselect")
        nodes[me].left = rec(ids[order[:half]])
        nodes[me].right = rec(ids[order[half:]])
        return me

    rec(np.arange(soa.n, dtype=np.int64))
    return SegmentKdTree(soa=soa, nodes=nodes, bucket=bucket)


def _lower_bound(tree: SegmentKdTree, node: _Node, query_id: int, qpts, metric: str) -> float:
    if metric == "longest":
        return point_to_aabb_max(qpts, node.lo, node.hi)
    return aabb_to_aabb(
        tree.soa.aabb_min[query_id], tree.soa.aabb_max[query_id], node.lo, node.hi
    )


def _leaf_candidates(tree: SegmentKdTree, node: _Node, query_id: int, metric: str):
    ids = node.leaf_ids
    if query_id >= 0:
        ids = ids[ids != query_id]
    if len(ids) == 0:
        return ids, np.empty(0)
    return ids, distances_to_many(tree.soa, query_id, ids, metric)


def knn(
    tree: SegmentKdTree,
    query_id: int,
    k: int,
    metric: str = "longest",
    stats: QueryStats | None = None,
) -> list[tuple[int, float]]:
    """The min(k, N-1) nearest segments as (id, distance), distance ascending,
    ties broken toward the smaller id. Identical to the brute-force ranking."""
    if not (0 <= query_id < tree.n):
        raise InvalidIdError(f"segment id {query_id} out of range")
    if k < 1:
        raise ValueError("k must be >= 1")
    qpts = tree.soa.pts[query_id, : tree.soa.counts[query_id]]
    # Worst-kept element sits at heap[0] when keyed by (-d, -id).
    kept: list[tuple[float, float]] = []
    seq = 0
    frontier = [(0.0, seq, tree.root)]

    def kth():
        return (-kept[0][0], -kept[0][1]) if len(kept) == k else (np.inf, np.inf)

    while frontier:
        lb, _, ni = heapq.heappop(frontier)
        if len(kept) == k and lb > kth()[0]:
            if stats is not None:
                stats.pruned.append((ni, lb))
                stats.pruned.extend((rest_ni, rest_lb) for rest_lb, _, rest_ni in frontier)
            break
        node = tree.nodes[ni]
        if stats is not None:
            stats.nodes_visited += 1
        if node.is_leaf:
            if stats is not None:
                stats.leaves_visited += 1
            ids, dists = _leaf_candidates(tree, node, query_id, metric)
            for sid, d in zip(ids.tolist(), dists.tolist()):
                if len(kept) < k:
                    heapq.heappush(kept, (-d, -sid))
                elif (d, sid) < kth():
                    heapq.heapreplace(kept, (-d, -sid))
        else:
            for child in (node.left, node.right):
                clb = _lower_bound(tree, tree.nodes[child], query_id, qpts, metric)
                if len(kept) == k and clb > kth()[0]:
                    if stats is not None:
                        stats.pruned.append((child, clb))
                    continue
                seq += 1
                heapq.heappush(frontier, (clb, seq, child))
    out = sorted((-d, -sid) for d, sid in kept)
    return [(int(sid), float(d)) for d, sid in out]


def rbn(
    tree: SegmentKdTree,
    query_id: int,
    radius: float,
    metric: str = "longest",
    stats: QueryStats | None = None,
) -> list[tuple[int, float]]:
    """All segments with distance strictly below ``radius``, sorted like knn."""
    if not (0 <= query_id < tree.n):
        raise InvalidIdError(f"segment id {query_id} out of range")
    if radius <= 0:
        raise ValueError("radius must be > 0")
    qpts = tree.soa.pts[query_id, : tree.soa.counts[query_id]]
    out: list[tuple[float, int]] = []
    stack = [tree.root]
    while stack:
        ni = stack.pop()
        node = tree.nodes[ni]
        if stats is not None:
            stats.nodes_visited += 1
        if node.is_leaf:
            if stats is not None:
                stats.leaves_visited += 1
            ids, dists = _leaf_candidates(tree, node, query_id, metric)
            for sid, d in zip(ids.tolist(), dists.tolist()):
                if d < radius:
                    out.append((d, sid))
        else:
            for child in (node.left, node.right):
                clb = _lower_bound(tree, tree.nodes[child], query_id, qpts, metric)
                if clb < radius:
                    stack.append(child)
                elif stats is not None:
                    stats.pruned.append((child, clb))
    out.sort()
    return [(sid, float(d)) for d, sid in out]
