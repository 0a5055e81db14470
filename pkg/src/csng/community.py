"""Louvain community detection and the editable community hierarchy.

Modularity follows the resolution-parameterized form
``Q = (1/2m) sum_ij [A_ij - gamma k_i k_j / 2m] delta(c_i, c_j)``.
Directed neighborhood graphs are symmetrized by summing directional weights
before detection. Detected communities seed a tree that the split and merge
operations refine while keeping the leaves a partition of all segments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    NotALeafError,
    NotMergeableError,
    SingletonNodeError,
    UnknownIdError,
    ZeroWeightGraphError,
)
from .graph import Csng, symmetrized_view

MAX_SWEEPS = 1000  # safety valve; greedy sweeps settle in a handful of passes


class UndirectedWeightedGraph:
    """Symmetric weighted graph in adjacency-matrix semantics.

    ``adj[u][v]`` holds A_uv for u != v; ``self_w[u]`` holds the full
    diagonal entry A_uu (aggregation writes 2x the internal edge sum there).
    Degrees are k_u = A_uu + sum_v A_uv, and 2m = sum_u k_u.
    """

    def __init__(self, n: int):
        self.n = n
        self.adj: list[dict[int, float]] = [dict() for _ in range(n)]
        self.self_w = np.zeros(n)

    @classmethod
    def from_edges(cls, n: int, edges) -> "UndirectedWeightedGraph":
        g = cls(n)
        for u, v, w in edges:
            if u == v:
                raise ValueError("self-loops are not valid input edges")
            if w <= 0:
                raise ValueError("edge weights must be > 0")
            g.adj[u][v] = g.adj[u].get(v, 0.0) + w
            g.adj[v][u] = g.adj[v].get(u, 0.0) + w
        return g

    @classmethod
    def from_csng(cls, csng: Csng) -> "UndirectedWeightedGraph":
        sym = symmetrized_view(csng)
        g = cls(sym.node_count)
        for s, d, w in zip(
            sym.edge_src.tolist(), sym.edge_dst.tolist(), sym.edge_weight.tolist()
        ):
            g.adj[s][d] = w
        return g

    def degrees(self) -> np.ndarray:
        k = self.self_w.copy()
        for u in range(self.n):
            k[u] += sum(self.adj[u].values())
        return k

    def total_weight(self) -> float:
        """m, half the sum of all matrix entries."""
        return float(self.degrees().sum()) / 2.0


def modularity(g: UndirectedWeightedGraph, assignment, gamma: float = 1.0) -> float:
    """Resolution-scaled modularity of a node -> community assignment."""
    assignment = np.asarray(assignment)
    k = g.degrees()
    m2 = float(k.sum())
    if m2 <= 0:
        raise ZeroWeightGraphError("modularity undefined for zero total weight")
    n_comm = int(assignment.max()) + 1 if len(assignment) else 0
    internal = np.zeros(n_comm)
    for u in range(g.n):
        cu = assignment[u]
        internal[cu] += g.self_w[u]
        for v, w in g.adj[u].items():
            if assignment[v] == cu:
                internal[cu] += w
    ktot = np.bincount(assignment, weights=k, minlength=n_comm)
    return float(internal.sum() / m2 - gamma * (ktot**2).sum() / (m2 * m2))


def _local_move(g: UndirectedWeightedGraph, gamma: float, rng) -> tuple[np.ndarray, bool]:
    k = g.degrees()
    m2 = float(k.sum())
    m = m2 / 2.0
    comm = np.arange(g.n)
    ktot = k.copy()  # per-community degree sums
    improved_any = False
    for _ in range(MAX_SWEEPS):
        order = rng.permutation(g.n)
        moves = 0
        for i in order:
            ci = int(comm[i])
            ktot[ci] -= k[i]
            # Weight from i to each adjacent community.
            w_to: dict[int, float] = {ci: 0.0}
            for j, w in g.adj[i].items():
                cj = int(comm[j])
                w_to[cj] = w_to.get(cj, 0.0) + w
            best_c, best_gain = ci, w_to[ci] / m - gamma * k[i] * ktot[ci] / (2 * m * m)
            for c in sorted(w_to):
                if c == ci:
                    continue
                gain = w_to[c] / m - gamma * k[i] * ktot[c] / (2 * m * m)
                if gain > best_gain:
                    best_c, best_gain = c, gain
            ktot[best_c] += k[i]
            comm[i] = best_c
            if best_c != ci:
                moves += 1
        if moves == 0:
            break
        improved_any = True
    return comm, improved_any


def _relabel(assignment: np.ndarray) -> np.ndarray:
    """Dense labels in order of first appearance."""
    mapping: dict[int, int] = {}
    out = np.empty_like(assignment)
    for i, c in enumerate(assignment):
        out[i] = mapping.setdefault(int(c), len(mapping))
    return out


def _aggregate(g: UndirectedWeightedGraph, assignment: np.ndarray) -> UndirectedWeightedGraph:
    n_comm = int(assignment.max()) + 1
    agg = UndirectedWeightedGraph(n_comm)
    for u in range(g.n):
        cu = int(assignment[u])
        agg.self_w[cu] += g.self_w[u]
        for v, w in g.adj[u].items():
            cv = int(assignment[v])
            if cu == cv:
                agg.self_w[cu] += w  # both directed entries land here: 2x per pair
            else:
                agg.adj[cu][cv] = agg.adj[cu].get(cv, 0.0) + w
    return agg


def louvain(
    g: UndirectedWeightedGraph,
    gamma: float = 1.0,
    rng_seed: int = 0,
    restarts: int = 1,
) -> tuple[np.ndarray, list[np.ndarray], float]:
    """Two-phase Louvain. Returns (assignment, per-level assignments, Q).

    Each level's assignment is expressed on the original node set. Modularity
    never decreases from one level to the next. ``restarts`` > 1 runs the
    whole greedy procedure that many times with seeds derived from
    ``rng_seed`` and keeps the best-Q result; useful on small graphs where a
    single greedy pass can lodge in a local optimum.
    """
    if g.total_weight() <= 0:
        raise ZeroWeightGraphError("louvain needs positive total weight")
    if gamma <= 0:
        raise ValueError("resolution must be > 0")
    best: tuple[np.ndarray, list[np.ndarray], float] | None = None
    for r in range(max(restarts, 1)):
        rng = np.random.default_rng((rng_seed, r) if restarts > 1 else rng_seed)
        out = _louvain_once(g, gamma, rng)
        if best is None or out[2] > best[2]:
            best = out
    return best


def _louvain_once(g: UndirectedWeightedGraph, gamma: float, rng):
    levels: list[np.ndarray] = []
    flat = np.arange(g.n)  # original node -> current-level community
    current = g
    while True:
        local, improved = _local_move(current, gamma, rng)
        if not improved and levels:
            break  # aggregation reached a fixed point
        local = _relabel(local)
        flat = local[flat]
        levels.append(flat.copy())
        n_comm = int(local.max()) + 1
        if not improved or n_comm == current.n:
            break
        current = _aggregate(current, local)
    q_final = modularity(g, flat, gamma)
    return flat, levels, q_final


@dataclass
class CommunityNode:
    id: int
    parent: int | None
    label: int
    children: list[int] = field(default_factory=list)
    members: list[int] | None = None  # sorted segment ids, leaves only
    cardinality: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.members is not None


@dataclass
class SplitResult:
    status: str  # "split" | "no_split"
    new_children: list[int] = field(default_factory=list)


class CommunityTree:
    """Hierarchy of segment groups; leaves partition the segment universe."""

    def __init__(self, segment_count: int, resolution: float, seed: int):
        self.segment_count = segment_count
        self.resolution = resolution
        self.seed = seed
        self.generation = 0
        self._next_id = 1
        self._next_label = 0
        root = CommunityNode(id=0, parent=None, label=-1, cardinality=segment_count)
        self.nodes: dict[int, CommunityNode] = {0: root}
        self._leaf_of: dict[int, int] | None = None

    # -- structure ---------------------------------------------------------

    def node(self, node_id: int) -> CommunityNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownIdError(f"no community node {node_id}") from None

    def leaves(self) -> list[CommunityNode]:
        return [n for n in self.nodes.values() if n.is_leaf]

    def depth(self, node_id: int) -> int:
        d, cur = 0, self.node(node_id)
        while cur.parent is not None:
            d += 1
            cur = self.nodes[cur.parent]
        return d

    def is_ancestor(self, a: int, b: int) -> bool:
        """True if a is b or a proper ancestor of b."""
        cur: int | None = b
        while cur is not None:
            if cur == a:
                return True
            cur = self.nodes[cur].parent
        return False

    def leaf_of(self, segment_id: int) -> int:
        if not (0 <= segment_id < self.segment_count):
            raise UnknownIdError(f"no segment {segment_id}")
        if self._leaf_of is None:
            self._leaf_of = {
                s: n.id for n in self.leaves() for s in n.members  # type: ignore[union-attr]
            }
        return self._leaf_of[segment_id]

    def leaf_members_under(self, node_id: int) -> list[int]:
        nd = self.node(node_id)
        if nd.is_leaf:
            return list(nd.members)  # type: ignore[arg-type]
        out: list[int] = []
        for c in nd.children:
            out.extend(self.leaf_members_under(c))
        return out

    def _add_node(self, parent: int, members: list[int] | None, cardinality: int) -> CommunityNode:
        nd = CommunityNode(
            id=self._next_id,
            parent=parent,
            label=self._next_label,
            members=members,
            cardinality=cardinality,
        )
        self._next_id += 1
        self._next_label += 1
        self.nodes[nd.id] = nd
        self.nodes[parent].children.append(nd.id)
        return nd

    def _touch(self):
        self.generation += 1
        self._leaf_of = None

    def validate_partition(self):
        seen: set[int] = set()
        for leaf in self.leaves():
            assert leaf.members is not None
            for s in leaf.members:
                if s in seen:
                    raise AssertionError(f"segment {s} in two leaves")
                seen.add(s)
        if len(seen) != self.segment_count:
            raise AssertionError("leaves do not cover every segment")
        for nd in self.nodes.values():
            if not nd.is_leaf and nd.id != 0:
                child_total = sum(self.nodes[c].cardinality for c in nd.children)
                if child_total != nd.cardinality:
                    raise AssertionError(f"node {nd.id} cardinality mismatch")

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        tree = []
        for nid in sorted(self.nodes):
            nd = self.nodes[nid]
            entry = {
                "id": nd.id,
                "parent": nd.parent,
                "label": nd.label,
                "children": list(nd.children),
                "cardinality": nd.cardinality,
            }
            if nd.is_leaf:
                entry["segments"] = list(nd.members)  # type: ignore[arg-type]
            tree.append(entry)
        return {
            "tree": tree,
            "params": {"resolution": self.resolution, "seed": self.seed},
            "generation": self.generation,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "CommunityTree":
        seg_count = sum(len(e.get("segments", [])) for e in doc["tree"])
        t = cls(seg_count, doc["params"]["resolution"], doc["params"]["seed"])
        t.nodes = {}
        for e in doc["tree"]:
            t.nodes[e["id"]] = CommunityNode(
                id=e["id"],
                parent=e["parent"],
                label=e["label"],
                children=list(e["children"]),
                members=list(e["segments"]) if "segments" in e else None,
                cardinality=e["cardinality"],
            )
        t.generation = doc["generation"]
        t._next_id = max(t.nodes) + 1
        t._next_label = max((n.label for n in t.nodes.values()), default=-1) + 1
        return t

    def save(self, path: str | Path):
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path: str | Path) -> "CommunityTree":
        return cls.from_json(json.loads(Path(path).read_text()))


def _induced_partition(csng_graph, member_ids: list[int], gamma: float, seed: int):
    """Louvain on the symmetrized subgraph induced by member_ids.

    Members with no internal edges become singleton communities, which also
    covers the zero-weight case where modularity is undefined.
    """
    ug = UndirectedWeightedGraph.from_csng(csng_graph)
    if len(member_ids) == csng_graph.node_count:
        sub = ug  # member_ids is 0..n-1 in order; no copy needed
    else:
        index = {s: i for i, s in enumerate(member_ids)}
        sub = UndirectedWeightedGraph(len(member_ids))
        for s in member_ids:
            for t, w in ug.adj[s].items():
                if t in index:
                    sub.adj[index[s]][index[t]] = w
    if sub.total_weight() <= 0:
        return np.arange(len(member_ids))
    assignment, _, _ = louvain(sub, gamma, seed)
    return assignment


def detect(csng_graph: Csng, resolution: float = 1.0, rng_seed: int = 0) -> CommunityTree:
    """Detect communities on the (symmetrized) graph and seed a tree.

    The root gets one leaf child per community, labeled in descending
    cardinality order. Graphs without edges fall back to singletons.
    """
    n = csng_graph.node_count
    assignment = _induced_partition(csng_graph, list(range(n)), resolution, rng_seed)
    tree = CommunityTree(n, resolution, rng_seed)
    groups: dict[int, list[int]] = {}
    for seg, c in enumerate(assignment):
        groups.setdefault(int(c), []).append(seg)
    for members in sorted(groups.values(), key=lambda ms: (-len(ms), ms[0])):
        tree._add_node(0, sorted(members), len(members))
    tree._touch()
    tree.validate_partition()
    return tree


def split_node(
    tree: CommunityTree,
    csng_graph: Csng,
    node_id: int,
    resolution: float,
    rng_seed: int = 0,
) -> SplitResult:
    """Re-run detection inside one leaf; the leaf becomes internal.

    Finding a single sub-community leaves the tree untouched and reports
    ``no_split`` so interactive callers can surface it without erroring.
    """
    nd = tree.node(node_id)
    if not nd.is_leaf:
        raise NotALeafError(f"node {node_id} is internal")
    if nd.cardinality < 2:
        raise SingletonNodeError(f"node {node_id} has fewer than 2 members")
    members = list(nd.members)  # type: ignore[arg-type]
    assignment = _induced_partition(csng_graph, members, resolution, rng_seed)
    n_comm = int(assignment.max()) + 1
    if n_comm <= 1:
        return SplitResult(status="no_split")
    groups: dict[int, list[int]] = {}
    for local, c in enumerate(assignment):
        groups.setdefault(int(c), []).append(members[local])
    new_ids = []
    nd.members = None
    for ms in sorted(groups.values(), key=lambda ms: (-len(ms), ms[0])):
        child = tree._add_node(nd.id, sorted(ms), len(ms))
        new_ids.append(child.id)
    tree._touch()
    tree.validate_partition()
    return SplitResult(status="split", new_children=new_ids)


def merge_nodes(
    tree: CommunityTree, node_ids: list[int], allow_lca_merge: bool = False
) -> int:
    """Merge nodes into one new leaf; returns the new node id.

    Every pair of merged nodes must have parents on a common hierarchical
    path (one an ancestor of the other, or equal); the merged node hangs off
    the shallowest of those parents. With ``allow_lca_merge`` incomparable
    parents are permitted and the result hangs off their lowest common
    ancestor instead.
    """
    ids = list(dict.fromkeys(node_ids))
    if len(ids) < 2:
        raise ValueError("merge needs at least 2 distinct nodes")
    for nid in ids:
        tree.node(nid)
        if nid == 0:
            raise ValueError("cannot merge the root node")
    parents = [tree.node(nid).parent for nid in ids]
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            pa, pb = parents[i], parents[j]
            comparable = tree.is_ancestor(pa, pb) or tree.is_ancestor(pb, pa)
            if not comparable and not allow_lca_merge:
                raise NotMergeableError(pa, pb)

    if allow_lca_merge:
        target = parents[0]
        for p in parents[1:]:
            target = _lca(tree, target, p)
    else:
        target = min(parents, key=tree.depth)

    # All mutations happen after validation so a failed merge never leaves a
    # half-edited tree.
    members: set[int] = set()
    for nid in ids:
        members.update(tree.leaf_members_under(nid))
    removed = set()
    for nid in ids:
        if any(tree.is_ancestor(other, nid) for other in ids if other != nid):
            continue  # subtree already covered by an ancestor in the list
        removed.add(nid)
    for nid in removed:
        _remove_subtree(tree, nid)
    new = tree._add_node(target, sorted(members), len(members))
    _prune_empty(tree)
    _refresh_cardinalities(tree)
    tree._touch()
    tree.validate_partition()
    return new.id


def _lca(tree: CommunityTree, a: int, b: int) -> int:
    ancestors = set()
    cur: int | None = a
    while cur is not None:
        ancestors.add(cur)
        cur = tree.nodes[cur].parent
    cur = b
    while cur is not None:
        if cur in ancestors:
            return cur
        cur = tree.nodes[cur].parent
    return 0


def _remove_subtree(tree: CommunityTree, node_id: int):
    nd = tree.nodes[node_id]
    for c in list(nd.children):
        _remove_subtree(tree, c)
    if nd.parent is not None:
        tree.nodes[nd.parent].children.remove(node_id)
    del tree.nodes[node_id]


def _prune_empty(tree: CommunityTree):
    changed = True
    while changed:
        changed = False
        for nid in list(tree.nodes):
            nd = tree.nodes.get(nid)
            if nd is None or nid == 0:
                continue
            if not nd.is_leaf and not nd.children:
                _remove_subtree(tree, nid)
                changed = True


def _refresh_cardinalities(tree: CommunityTree):
    def rec(nid: int) -> int:
        nd = tree.nodes[nid]
        if nd.is_leaf:
            nd.cardinality = len(nd.members)  # type: ignore[arg-type]
        else:
            nd.cardinality = sum(rec(c) for c in nd.children)
        return nd.cardinality

    rec(0)


def community_of(tree: CommunityTree, segment_id: int) -> int:
    """Leaf node id holding the segment."""
    return tree.leaf_of(segment_id)
