"""Force-directed layout of the visible community graph.

Visible nodes are the community tree's current leaves; edges aggregate the
symmetrized neighborhood-graph weights crossing each pair of leaves. The
force model combines pairwise repulsion, weighted springs with radius-aware
rest lengths, and a centroid pull that keeps the children of an expanded
(non-root) community huddled together.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .community import CommunityTree
from .errors import InconsistentInputsError
from .graph import Csng, undirected_edges


@dataclass
class CompoundGraph:
    node_ids: list[int]  # community node ids, ascending
    cardinality: np.ndarray
    depth: np.ndarray
    parent: np.ndarray  # parent community id per visible node
    edges: list[tuple[int, int, float]]  # (index, index, weight), u < v

    @property
    def n(self) -> int:
        return len(self.node_ids)


@dataclass
class LayoutParams:
    dt: float = 0.02
    damping: float = 0.9
    k_repulse: float = 30.0
    k_spring: float = 1.0
    k_group: float = 0.3
    rest_gap: float = 10.0
    tol: float = 1e-2
    r0: float = 2.0
    r_min: float = 4.0
    r_max: float = 60.0
    arena_per_sqrt_n: float = 50.0
    arena_stiffness: float = 10.0
    eps_dist: float = 1e-3
    # Wide-spread aggregates (mixed radii, skewed weights) relax slowly;
    # 2000 steps stalls mid-creep on ~30-node graphs.
    max_iter: int = 20000

    def arena_radius(self, n: int) -> float:
        return self.arena_per_sqrt_n * np.sqrt(max(n, 1))


@dataclass
class LayoutState:
    positions: np.ndarray  # (n, 2)
    velocities: np.ndarray  # (n, 2)
    radii: np.ndarray  # (n,)
    iteration: int = 0
    converged: bool = False
    still_steps: int = 0
    max_weight: float = 1.0


def aggregate(tree: CommunityTree, g: Csng) -> CompoundGraph:
    """Sum symmetrized edge weights between every pair of visible leaves."""
    if tree.segment_count != g.node_count:
        raise InconsistentInputsError(
            f"tree covers {tree.segment_count} segments, graph has {g.node_count}"
        )
    leaves = sorted(tree.leaves(), key=lambda nd: nd.id)
    node_ids = [nd.id for nd in leaves]
    pos_of = {nid: i for i, nid in enumerate(node_ids)}
    seg_to = np.empty(g.node_count, dtype=np.int64)
    for nd in leaves:
        for s in nd.members:  # type: ignore[union-attr]
            seg_to[s] = pos_of[nd.id]
    acc: dict[tuple[int, int], float] = {}
    for u, v, w in undirected_edges(g):
        cu, cv = int(seg_to[u]), int(seg_to[v])
        if cu == cv:
            continue
        key = (cu, cv) if cu < cv else (cv, cu)
        acc[key] = acc.get(key, 0.0) + w
    edges = [(u, v, w) for (u, v), w in sorted(acc.items())]
    return CompoundGraph(
        node_ids=node_ids,
        cardinality=np.array([nd.cardinality for nd in leaves], dtype=np.float64),
        depth=np.array([tree.depth(nd.id) for nd in leaves], dtype=np.int64),
        parent=np.array([nd.parent for nd in leaves], dtype=np.int64),
        edges=edges,
    )


def _radii(cg: CompoundGraph, p: LayoutParams) -> np.ndarray:
    return np.clip(p.r0 * np.sqrt(cg.cardinality), p.r_min, p.r_max)


def init_state(cg: CompoundGraph, seed: int = 0, params: LayoutParams | None = None) -> LayoutState:
    """Seeded start: positions uniform in a disc of radius ~ sqrt(n)."""
    p = params or LayoutParams()
    rng = np.random.default_rng(seed)
    n = cg.n
    r_disc = 10.0 * np.sqrt(max(n, 1))
    ang = rng.random(n) * 2 * np.pi
    rad = r_disc * np.sqrt(rng.random(n))
    pos = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
    max_w = max((w for _, _, w in cg.edges), default=1.0)
    return LayoutState(
        positions=pos,
        velocities=np.zeros((n, 2)),
        radii=_radii(cg, p),
        max_weight=max_w if max_w > 0 else 1.0,
    )


def forces(cg: CompoundGraph, st: LayoutState, p: LayoutParams) -> np.ndarray:
    """Net 2D force per visible node for the current positions."""
    n = cg.n
    pos = st.positions
    F = np.zeros((n, 2))
    if n == 0:
        return F

    # Pairwise repulsion, radius-aware so big communities claim more room.
    if n > 1 and p.k_repulse > 0:
        delta = pos[:, None, :] - pos[None, :, :]  # (n, n, 2)
        dist = np.sqrt((delta * delta).sum(axis=2))
        np.fill_diagonal(dist, np.inf)
        rsum = st.radii[:, None] + st.radii[None, :]
        mag = p.k_repulse**2 * rsum / np.maximum(dist, p.eps_dist)
        # Coincident nodes split along a fixed direction so runs stay
        # deterministic.
        unit = delta / np.maximum(dist, 1e-12)[:, :, None]
        degenerate = dist < 1e-12
        if degenerate.any():
            iu, jv = np.nonzero(degenerate)
            ang = 0.61803398875 * (iu * n + jv)
            unit[iu, jv, 0] = np.cos(ang)
            unit[iu, jv, 1] = np.sin(ang)
        F += (mag[:, :, None] * unit).sum(axis=1)

    # Springs along aggregated edges, rest length clears both spheres.
    for u, v, w in cg.edges:
        delta = pos[v] - pos[u]
        dist = float(np.linalg.norm(delta))
        rest = st.radii[u] + st.radii[v] + p.rest_gap
        w_hat = w / st.max_weight
        if dist < 1e-12:
            continue  # repulsion already separates coincident nodes
        f = p.k_spring * w_hat * (dist - rest) * (delta / dist)
        F[u] += f
        F[v] -= f

    # Children of an expanded (non-root) community huddle near their
    # sibling centroid.
    if p.k_group > 0:
        for parent in np.unique(cg.parent):
            if parent == 0:
                continue
            sel = cg.parent == parent
            if sel.sum() < 2:
                continue
            centroid = pos[sel].mean(axis=0)
            F[sel] += p.k_group * (centroid - pos[sel])

    # Soft arena boundary: a stiff inward spring beyond the arena radius so
    # even edgeless graphs settle into a genuine force equilibrium.
    arena = p.arena_radius(n)
    norms = np.linalg.norm(pos, axis=1)
    outside = norms > arena
    if outside.any():
        pull = p.arena_stiffness * (arena - norms[outside]) / norms[outside]
        F[outside] += pull[:, None] * pos[outside]
    return F


def step(cg: CompoundGraph, st: LayoutState, params: LayoutParams | None = None) -> LayoutState:
    """One damped explicit-integration step; pure state -> state."""
    p = params or LayoutParams()
    F = forces(cg, st, p)
    vel = (st.velocities + F * p.dt) * p.damping
    pos = st.positions + vel * p.dt
    disp = np.linalg.norm(pos - st.positions, axis=1).max() if cg.n else 0.0
    still = st.still_steps + 1 if disp < p.tol else 0
    return LayoutState(
        positions=pos,
        velocities=vel,
        radii=st.radii,
        iteration=st.iteration + 1,
        converged=still >= 5,
        still_steps=still,
        max_weight=st.max_weight,
    )


def run_layout(
    cg: CompoundGraph,
    seed: int = 0,
    params: LayoutParams | None = None,
    state: LayoutState | None = None,
) -> LayoutState:
    """Step from a seeded start until converged or max_iter."""
    p = params or LayoutParams()
    st = state if state is not None else init_state(cg, seed, p)
    while not st.converged and st.iteration < p.max_iter:
        st = step(cg, st, p)
    return st


def layout_json(cg: CompoundGraph, st: LayoutState) -> dict:
    return {
        "nodes": [
            {
                "id": int(cg.node_ids[i]),
                "x": float(st.positions[i, 0]),
                "y": float(st.positions[i, 1]),
                "r": float(st.radii[i]),
                "cardinality": int(cg.cardinality[i]),
                "parent": int(cg.parent[i]),
            }
            for i in range(cg.n)
        ],
        "edges": [
            {"u": int(cg.node_ids[u]), "v": int(cg.node_ids[v]), "w": float(w)}
            for u, v, w in cg.edges
        ],
        "converged": bool(st.converged),
        "iteration": int(st.iteration),
    }
