"""Batch command line: trace, decompose, build, detect, edit, lay out,
benchmark, and serve.

Every subcommand is file-in/file-out with no hidden state, and every
stochastic one takes ``--seed``. Exit codes: 0 ok, 1 user error, 2 internal
error; errors print one machine-parsable line on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .baseline import adjusted_rand_index, featurize, kmeans, pca
from .community import CommunityTree, detect, louvain, merge_nodes, split_node
from .community import UndirectedWeightedGraph
from .curves import Dataset, dataset_from_lines, decompose, load_lines, save_lines
from .errors import CsngError
from .graph import build_csng, export_graph, import_graph
from .layout import aggregate, layout_json, run_layout
from .tracing import TraceConfig, VectorField, analytic_field, load_grid_field, trace


def _parse_field(spec: str) -> VectorField:
    """'circular', 'abc', 'uniform:1,0,0', 'abc:A=1.7,B=1.4,C=1' or a path."""
    if spec.endswith(".vf.json") or Path(spec).exists():
        return load_grid_field(spec)
    name, _, rest = spec.partition(":")
    params: dict = {}
    if rest:
        if "=" in rest:
            for kv in rest.split(","):
                key, _, val = kv.partition("=")
                params[key] = float(val)
        elif name == "uniform":
            params["v"] = tuple(float(x) for x in rest.split(","))
    return analytic_field(name, **params)


def _parse_seeding(spec: str, seed: int) -> dict:
    """'uniform:8x8x8' or 'random:216' or 'random:216:seed=7'."""
    parts = spec.split(":")
    if parts[0] in ("uniform", "uniform_grid"):
        gx, gy, gz = (int(x) for x in parts[1].split("x"))
        return {"seeding": "uniform_grid", "grid": (gx, gy, gz)}
    if parts[0] == "random":
        out = {"seeding": "random", "count": int(parts[1]), "rng_seed": seed}
        for extra in parts[2:]:
            key, _, val = extra.partition("=")
            if key == "seed":
                out["rng_seed"] = int(val)
        return out
    raise ValueError(f"bad seeding spec {spec!r}")


def _load_segments(path: str) -> Dataset:
    """A segments file is lines + L; decomposition re-derives the segments."""
    doc = json.loads(Path(path).read_text())
    raw = [
        (np.asarray(e["vertices"], dtype=float), e.get("speeds"))
        for e in doc["lines"]
    ]
    return decompose(dataset_from_lines(raw), int(doc["L"]))


def _save_segments(ds: Dataset, path: str) -> None:
    doc = {"L": ds.L, "lines": []}
    for ln in ds.lines:
        entry: dict = {"vertices": ln.vertices.tolist()}
        if ln.step_speeds is not None:
            entry["speeds"] = ln.step_speeds.tolist()
        doc["lines"].append(entry)
    Path(path).write_text(json.dumps(doc))


def cmd_trace(args) -> int:
    fld = _parse_field(args.field)
    cfg = TraceConfig(
        step_size=args.step,
        max_steps=args.steps,
        normalize_steps=not args.no_normalize,
        **_parse_seeding(args.seeding, args.seed),
    )
    ds = trace(fld, cfg)
    save_lines(ds, args.out)
    print(f"lines={len(ds.lines)} vertices={sum(l.vertex_count for l in ds.lines)}")
    return 0


def cmd_decompose(args) -> int:
    ds = load_lines(args.lines)
    decompose(ds, args.L)
    _save_segments(ds, args.out)
    print(f"segments={ds.segment_count}")
    return 0


def cmd_build(args) -> int:
    ds = _load_segments(args.segs)
    g = build_csng(
        ds,
        method=args.method,
        k=args.k,
        radius_frac=args.radius_frac,
        metric=args.metric,
        threads=args.threads,
    )
    export_graph(g, args.out)
    print(f"nodes={g.node_count} edges={g.edge_count}")
    return 0


def cmd_detect(args) -> int:
    g = import_graph(args.graph)
    tree = detect(g, args.resolution, args.seed)
    tree.save(args.out)
    print(f"communities={len(tree.leaves())}")
    return 0


def cmd_split(args) -> int:
    g = import_graph(args.graph)
    tree = CommunityTree.load(args.tree)
    result = split_node(tree, g, args.node, args.resolution, args.seed)
    tree.save(args.out)
    print(f"status={result.status} children={len(result.new_children)}")
    return 0


def cmd_merge(args) -> int:
    tree = CommunityTree.load(args.tree)
    node_ids = [int(x) for x in args.nodes.split(",")]
    new_id = merge_nodes(tree, node_ids, allow_lca_merge=args.allow_lca)
    tree.save(args.out)
    print(f"merged={new_id}")
    return 0


def cmd_layout(args) -> int:
    g = import_graph(args.graph)
    tree = CommunityTree.load(args.tree)
    cg = aggregate(tree, g)
    st = run_layout(cg, seed=args.seed)
    Path(args.out).write_text(json.dumps(layout_json(cg, st)))
    print(f"nodes={cg.n} iterations={st.iteration} converged={st.converged}")
    return 0


def cmd_pca_kmeans(args) -> int:
    ds = _load_segments(args.segs)
    fm = featurize(ds, args.resample)
    projected, _, _ = pca(fm, args.dim)
    assign, inertia, _ = kmeans(projected, args.k, args.seed)
    clusters: dict[int, list[int]] = {}
    for seg, c in enumerate(assign.tolist()):
        clusters.setdefault(c, []).append(seg)
    doc = {
        "tree": [
            {
                "id": 0,
                "parent": None,
                "label": -1,
                "children": list(range(1, len(clusters) + 1)),
                "cardinality": len(assign),
            }
        ],
        "params": {"resolution": float(args.dim), "seed": args.seed},
        "generation": 1,
    }
    ordered = sorted(clusters.values(), key=lambda ms: (-len(ms), ms[0]))
    for i, members in enumerate(ordered):
        doc["tree"].append(
            {
                "id": i + 1,
                "parent": 0,
                "label": i,
                "children": [],
                "cardinality": len(members),
                "segments": members,
            }
        )
    Path(args.out).write_text(json.dumps(doc))
    line = f"k={args.k} inertia={inertia:.6g}"
    if args.compare:
        tree = CommunityTree.load(args.compare)
        leaf_assign = [tree.leaf_of(s) for s in range(ds.segment_count)]
        labels = {nid: i for i, nid in enumerate(sorted(set(leaf_assign)))}
        ari, _ = adjusted_rand_index([labels[x] for x in leaf_assign], assign)
        line += f" ari={ari:.6f}"
    print(line)
    return 0


def cmd_bench(args) -> int:
    ds = _load_segments(args.segs)
    name = Path(args.segs).name.split(".")[0]

    def timed(fn):
        fn()  # warm-up excluded from the median
        times = []
        for _ in range(args.runs):
            t0 = time.perf_counter()
            out = fn()
            times.append(time.perf_counter() - t0)
        return out, sorted(times)[len(times) // 2]

    g_knn, knn_s = timed(
        lambda: build_csng(ds, method="knn", k=args.k, metric=args.metric,
                           threads=args.threads)
    )
    _, rbn_s = timed(
        lambda: build_csng(ds, method="rbn", radius_frac=args.radius_frac,
                           metric=args.metric, threads=args.threads)
    )
    _, louvain_s = timed(lambda: detect(g_knn, args.resolution, args.seed))
    print("dataset,lines,segments,knn_s,rbn_s,louvain_s")
    print(
        f"{name},{len(ds.lines)},{ds.segment_count},"
        f"{knn_s:.3f},{rbn_s:.3f},{louvain_s:.3f}"
    )
    return 0


def cmd_sweep(args) -> int:
    g = import_graph(args.graph)
    ug = UndirectedWeightedGraph.from_csng(g)
    rows = ["resolution,communities,modularity"]
    for res in (float(x) for x in args.resolutions.split(",")):
        assignment, _, q = louvain(ug, res, args.seed)
        rows.append(f"{res},{int(assignment.max()) + 1},{q:.6f}")
    text = "\n".join(rows)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    serve(
        host=args.host,
        port=args.port,
        static_dir=args.static,
        max_segments=args.max_segments,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="csng", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trace", help="trace streamlines from a vector field")
    p.add_argument("--field", required=True, help="analytic name or .vf.json path")
    p.add_argument("--seeding", default="uniform:4x4x4")
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--steps", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_trace)

    p = sub.add_parser("decompose", help="cut lines into curve segments")
    p.add_argument("--lines", required=True)
    p.add_argument("-L", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_decompose)

    p = sub.add_parser("build", help="build the neighborhood graph")
    p.add_argument("--segs", required=True)
    p.add_argument("--method", choices=["knn", "rbn"], default="knn")
    p.add_argument("--k", type=int, default=60)
    p.add_argument("--radius-frac", type=float, default=0.10)
    p.add_argument("--metric", choices=["shortest", "longest", "average"],
                   default="longest")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_build)

    p = sub.add_parser("detect", help="detect communities")
    p.add_argument("--graph", required=True)
    p.add_argument("--resolution", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_detect)

    p = sub.add_parser("split", help="split one community at a finer resolution")
    p.add_argument("--graph", required=True)
    p.add_argument("--tree", required=True)
    p.add_argument("--node", type=int, required=True)
    p.add_argument("--resolution", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_split)

    p = sub.add_parser("merge", help="merge community nodes")
    p.add_argument("--tree", required=True)
    p.add_argument("--nodes", required=True, help="comma-separated node ids")
    p.add_argument("--allow-lca", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_merge)

    p = sub.add_parser("layout", help="force-directed layout of the communities")
    p.add_argument("--graph", required=True)
    p.add_argument("--tree", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_layout)

    p = sub.add_parser("pca-kmeans", help="PCA + k-means baseline clustering")
    p.add_argument("--segs", required=True)
    p.add_argument("--dim", type=int, default=5)
    p.add_argument("-k", type=int, default=12)
    p.add_argument("--resample", type=int, default=8)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--compare", help="communities JSON to report ARI against")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_pca_kmeans)

    p = sub.add_parser("bench", help="time graph builds and detection")
    p.add_argument("--segs", required=True)
    p.add_argument("--k", type=int, default=60)
    p.add_argument("--radius-frac", type=float, default=0.10)
    p.add_argument("--metric", default="longest")
    p.add_argument("--resolution", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=3)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("sweep", help="community counts across resolutions")
    p.add_argument("--graph", required=True)
    p.add_argument("--resolutions", default="0.05,0.1,0.5,1.0")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("serve", help="run the HTTP/WebSocket service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--static", help="directory with the explorer UI bundle")
    p.add_argument("--max-segments", type=int, default=100_000)
    p.set_defaults(fn=cmd_serve)

    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (CsngError, ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort internal error
        print(f"internal: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
