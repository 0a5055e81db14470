"""Session-oriented HTTP/WebSocket API for the pipeline and steering loop.

One server process holds many independent sessions. Each session owns a
dataset plus the graph, community tree, and layout derived from it; every
mutation bumps a generation counter and is appended to an audit log that
replays deterministically. Mutations validate first and mutate after, so a
failed request never leaves partial state behind.
"""

from __future__ import annotations

import asyncio
import logging
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .baseline import adjusted_rand_index, featurize, kmeans, pca
from .community import CommunityTree, detect, merge_nodes, split_node
from .curves import Dataset, dataset_from_lines, decompose
from .errors import CsngError, NotMergeableError, UnknownIdError
from .graph import Csng, build_csng
from .layout import (
    CompoundGraph,
    LayoutParams,
    LayoutState,
    aggregate,
    init_state,
    layout_json,
    run_layout,
    step,
)
from .tracing import TraceConfig, VectorField, trace

log = logging.getLogger("csng.service")

LAYOUT_STEPS_PER_FRAME = 40
STREAM_MIN_INTERVAL = 1.0 / 30.0  # cap frames at 30 Hz


@dataclass
class Session:
    id: str
    max_segments: int
    dataset: Dataset | None = None
    graph: Csng | None = None
    tree: CommunityTree | None = None
    compound: CompoundGraph | None = None
    layout_state: LayoutState | None = None
    layout_seed: int = 0
    generation: int = 0
    audit_log: list[dict] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def require(self, attr: str):
        value = getattr(self, attr)
        if value is None:
            raise HTTPException(422, f"session has no {attr} yet")
        return value

    def record(self, op: str, params: dict):
        self.generation += 1
        self.audit_log.append({"op": op, "params": params, "generation": self.generation})

    def invalidate_layout(self):
        self.compound = None
        self.layout_state = None


class TraceBody(BaseModel):
    field: dict
    cfg: dict


class DatasetBody(BaseModel):
    lines: list[dict] | None = None
    trace: TraceBody | None = None


class DecomposeBody(BaseModel):
    L: int


class GraphBody(BaseModel):
    method: str = "knn"
    k: int = 60
    radius_frac: float | None = None
    radius: float | None = None
    metric: str = "longest"


class CommunitiesBody(BaseModel):
    resolution: float = 0.5
    seed: int = 0


class MergeBody(BaseModel):
    node_ids: list[int]
    allow_lca_merge: bool = False


class BaselineBody(BaseModel):
    dim: int = 5
    k: int = 12
    seed: int = 0
    resample: int = 8


def create_app(max_segments: int = 100_000, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="csng service")
    sessions: dict[str, Session] = {}

    def get_session(sid: str) -> Session:
        try:
            return sessions[sid]
        except KeyError:
            raise HTTPException(404, f"unknown session {sid}") from None

    def check_generation(request: Request, sess: Session):
        header = request.headers.get("If-Generation")
        if header is not None and int(header) != sess.generation:
            raise HTTPException(
                409, f"stale generation {header}, current is {sess.generation}"
            )

    @app.exception_handler(CsngError)
    async def csng_error_handler(_req, exc: CsngError):
        if isinstance(exc, NotMergeableError):
            status = 409
        elif isinstance(exc, UnknownIdError):
            status = 404
        else:
            status = 422
        body: dict[str, Any] = {"error": type(exc).__name__, "detail": str(exc)}
        if isinstance(exc, NotMergeableError):
            body["parents"] = [exc.parent_a, exc.parent_b]
        return JSONResponse(status_code=status, content=body)

    @app.post("/sessions")
    def create_session():
        sid = uuid.uuid4().hex[:12]
        sessions[sid] = Session(id=sid, max_segments=max_segments)
        return {"session": sid, "generation": 0}

    @app.get("/sessions/{sid}")
    def session_info(sid: str):
        sess = get_session(sid)
        return {
            "session": sess.id,
            "generation": sess.generation,
            "lines": len(sess.dataset.lines) if sess.dataset else 0,
            "segments": sess.dataset.segment_count if sess.dataset else 0,
            "has_graph": sess.graph is not None,
            "has_tree": sess.tree is not None,
        }

    @app.post("/sessions/{sid}/dataset")
    def set_dataset(sid: str, body: DatasetBody, request: Request):
        sess = get_session(sid)
        with sess.lock:
            check_generation(request, sess)
            if (body.lines is None) == (body.trace is None):
                raise HTTPException(422, "provide exactly one of lines or trace")
            if body.lines is not None:
                raw = [
                    (entry["vertices"], entry.get("speeds"))
                    for entry in body.lines
                ]
                ds = dataset_from_lines(raw)
            else:
                fld = _field_from_json(body.trace.field)
                cfg = TraceConfig(**body.trace.cfg)
                ds = trace(fld, cfg)
            if ds.line_segment_count() > sess.max_segments:
                raise HTTPException(413, "dataset exceeds the configured segment cap")
            sess.dataset = ds
            sess.graph = None
            sess.tree = None
            sess.invalidate_layout()
            sess.record(
                "dataset",
                body.model_dump(exclude_none=True),
            )
            return {
                "lines": len(ds.lines),
                "vertices": int(sum(ln.vertex_count for ln in ds.lines)),
                "generation": sess.generation,
            }

    @app.post("/sessions/{sid}/decompose")
    def decompose_endpoint(sid: str, body: DecomposeBody, request: Request):
        sess = get_session(sid)
        with sess.lock:
            check_generation(request, sess)
            ds = sess.require("dataset")
            if body.L < 1:
                raise HTTPException(422, "L must be >= 1")
            decompose(ds, body.L)
            if ds.segment_count > sess.max_segments:
                raise HTTPException(413, "decomposition exceeds the segment cap")
            sess.graph = None
            sess.tree = None
            sess.invalidate_layout()
            sess.record("decompose", {"L": body.L})
            return {"segments": ds.segment_count, "generation": sess.generation}

    @app.post("/sessions/{sid}/graph")
    def graph_endpoint(sid: str, body: GraphBody, request: Request):
        sess = get_session(sid)
        with sess.lock:
            check_generation(request, sess)
            ds = sess.require("dataset")
            if not ds.segments:
                raise HTTPException(422, "decompose before building the graph")
            t0 = time.perf_counter()
            try:
                g = build_csng(
                    ds,
                    method=body.method,
                    k=body.k,
                    radius=body.radius,
                    radius_frac=body.radius_frac,
                    metric=body.metric,
                )
            except ValueError as exc:
                raise HTTPException(422, str(exc)) from exc
            sess.graph = g
            sess.tree = None
            sess.invalidate_layout()
            sess.record("graph", body.model_dump(exclude_none=True))
            return {
                "nodes": g.node_count,
                "edges": g.edge_count,
                "build_ms": round(1000 * (time.perf_counter() - t0), 1),
                "generation": sess.generation,
            }

    @app.post("/sessions/{sid}/communities")
    def communities_endpoint(sid: str, body: CommunitiesBody, request: Request):
        sess = get_session(sid)
        with sess.lock:
            check_generation(request, sess)
            g = sess.require("graph")
            tree = detect(g, body.resolution, body.seed)
            sess.tree = tree
            sess.invalidate_layout()
            sess.record("communities", body.model_dump())
            return {"tree": tree.to_json(), "generation": sess.generation}

    @app.post("/sessions/{sid}/communities/{node_id}/split")
    def split_endpoint(sid: str, node_id: int, body: CommunitiesBody, request: Request):
        sess = get_session(sid)
        with sess.lock:
            check_generation(request, sess)
            g = sess.require("graph")
            tree = sess.require("tree")
            result = split_node(tree, g, node_id, body.resolution, body.seed)
            if result.status == "no_split":
                return {"status": "no_split", "generation": sess.generation}
            sess.invalidate_layout()
            sess.record("split", {"node": node_id, **body.model_dump()})
            return {
                "status": "split",
                "new_children": result.new_children,
                "tree": tree.to_json(),
                "generation": sess.generation,
            }

    @app.post("/sessions/{sid}/communities/merge")
    def merge_endpoint(sid: str, body: MergeBody, request: Request):
        sess = get_session(sid)
        with sess.lock:
            check_generation(request, sess)
            tree = sess.require("tree")
            try:
                new_id = merge_nodes(tree, body.node_ids, body.allow_lca_merge)
            except ValueError as exc:
                raise HTTPException(422, str(exc)) from exc
            sess.invalidate_layout()
            sess.record("merge", body.model_dump())
            return {
                "merged": new_id,
                "tree": tree.to_json(),
                "generation": sess.generation,
            }

    @app.get("/sessions/{sid}/segments")
    def segments_endpoint(sid: str, nodes: str | None = Query(default=None)):
        sess = get_session(sid)
        ds = sess.require("dataset")
        tree = sess.require("tree")
        if nodes:
            try:
                wanted = [int(x) for x in nodes.split(",") if x]
            except ValueError:
                raise HTTPException(422, "nodes must be comma-separated ids") from None
            for nid in wanted:
                tree.node(nid)
            seg_ids = sorted(
                s for nid in wanted for s in tree.leaf_members_under(nid)
            )
        else:
            seg_ids = list(range(ds.segment_count))
        return {
            "segments": [
                {
                    "id": s,
                    "node": tree.leaf_of(s),
                    "points": ds.segments[s].points.tolist(),
                }
                for s in seg_ids
            ],
            "generation": sess.generation,
        }

    def _ensure_layout(sess: Session) -> tuple[CompoundGraph, LayoutState]:
        g = sess.require("graph")
        tree = sess.require("tree")
        if sess.compound is None:
            sess.compound = aggregate(tree, g)
            sess.layout_state = run_layout(sess.compound, seed=sess.layout_seed)
        return sess.compound, sess.layout_state  # type: ignore[return-value]

    @app.get("/sessions/{sid}/layout")
    def layout_endpoint(sid: str):
        sess = get_session(sid)
        with sess.lock:
            cg, st = _ensure_layout(sess)
            doc = layout_json(cg, st)
            doc["generation"] = sess.generation
            return doc

    @app.websocket("/sessions/{sid}/layout/stream")
    async def layout_stream(ws: WebSocket, sid: str):
        await ws.accept()
        sess = sessions.get(sid)
        if sess is None:
            await ws.close(code=4404)
            return
        try:
            with sess.lock:
                g = sess.graph
                tree = sess.tree
                if g is None or tree is None:
                    await ws.close(code=4422)
                    return
                if sess.compound is None:
                    sess.compound = aggregate(tree, g)
                    sess.layout_state = init_state(sess.compound, seed=sess.layout_seed)
                cg = sess.compound
                st = sess.layout_state
            params = LayoutParams()
            last_sent = 0.0
            while True:
                if not st.converged and st.iteration < params.max_iter:
                    for _ in range(LAYOUT_STEPS_PER_FRAME):
                        if st.converged or st.iteration >= params.max_iter:
                            break
                        st = step(cg, st, params)
                    with sess.lock:
                        if sess.compound is cg:
                            sess.layout_state = st
                wait = STREAM_MIN_INTERVAL - (time.monotonic() - last_sent)
                if wait > 0:
                    await asyncio.sleep(wait)
                last_sent = time.monotonic()
                doc = layout_json(cg, st)
                doc["generation"] = sess.generation
                await ws.send_json(doc)
                if st.converged or st.iteration >= params.max_iter:
                    await ws.send_json({"converged": True, "iteration": st.iteration})
                    break
            await ws.close()
        except WebSocketDisconnect:
            pass

    @app.post("/sessions/{sid}/baseline")
    def baseline_endpoint(sid: str, body: BaselineBody):
        sess = get_session(sid)
        with sess.lock:
            ds = sess.require("dataset")
            if not ds.segments:
                raise HTTPException(422, "decompose before running the baseline")
            fm = featurize(ds, body.resample)
            projected, _, _ = pca(fm, body.dim)
            assign, inertia, _ = kmeans(projected, body.k, body.seed)
            out: dict[str, Any] = {
                "clusters": assign.tolist(),
                "inertia": inertia,
                "generation": sess.generation,
            }
            if sess.tree is not None:
                leaf_assign = [sess.tree.leaf_of(s) for s in range(ds.segment_count)]
                labels = {nid: i for i, nid in enumerate(sorted(set(leaf_assign)))}
                ari, _ = adjusted_rand_index(
                    [labels[x] for x in leaf_assign], assign
                )
                out["ari_vs_tree"] = ari
            return out

    @app.get("/sessions/{sid}/log")
    def log_endpoint(sid: str):
        sess = get_session(sid)
        return {"log": sess.audit_log, "generation": sess.generation}

    if static_dir:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def _field_from_json(doc: dict) -> VectorField:
    kind = doc.get("kind", "analytic")
    if kind == "grid":
        return VectorField(
            kind="grid",
            dims=tuple(doc["dims"]),
            bounds=(doc["bounds"]["min"], doc["bounds"]["max"]),
            values=np.asarray(doc["values"], dtype=float),
        )
    name = doc.get("name", kind)
    fld = VectorField(kind=name, params=dict(doc.get("params", {})))
    if "bounds" in doc:
        fld.bounds = (
            np.asarray(doc["bounds"]["min"], dtype=float),
            np.asarray(doc["bounds"]["max"], dtype=float),
        )
    return fld


def serve(host: str = "127.0.0.1", port: int = 8080, static_dir: str | None = None,
          max_segments: int = 100_000):
    """Run the API with uvicorn; CSNG_LOG sets the log level."""
    import uvicorn

    level = os.environ.get("CSNG_LOG", "info").lower()
    logging.basicConfig(level=level.upper())
    app = create_app(max_segments=max_segments, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level=level)
