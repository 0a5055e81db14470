"""Curve and segment data model: ingestion, decomposition, per-segment attributes.

A dataset is a list of 3D polylines. Decomposition chops every polyline into
curve segments of ``L`` consecutive line segments each (the last one takes the
remainder), which are the unit of all downstream neighbor searches.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyDatasetError,
    MalformedFileError,
    NonFiniteCoordinateError,
    NotLoadedError,
)

LINES_MAGIC = b"CSNG-LN1"

# Below this separation two consecutive vertices count as coincident and the
# line is rejected at load time (dedup would shift segment indices).
MIN_VERTEX_SEPARATION = 1e-9


@dataclass
class Polyline:
    """One 3D curve. ``step_speeds`` holds one scalar per vertex: the field
    magnitude before step normalization at that vertex (traced data), or
    whatever per-vertex scalar the source file carried."""

    id: int
    vertices: np.ndarray  # (n, 3) float64
    step_speeds: np.ndarray | None = None  # (n,) float64 or None

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ValueError("vertices must be an (n, 3) array")
        if self.step_speeds is not None:
            self.step_speeds = np.asarray(self.step_speeds, dtype=np.float64)

    @property
    def vertex_count(self) -> int:
        return self.vertices.shape[0]


@dataclass
class CurveSegment:
    """A contiguous piece of a polyline covering up to L line segments."""

    id: int
    line_id: int
    start_index: int
    point_count: int
    points: np.ndarray  # (point_count, 3), a view into the parent polyline
    chord_dir: np.ndarray  # unit 3-vector first -> last
    arc_length: float
    total_curvature: float  # radians, sum of turning angles
    mean_speed: float | None = None


@dataclass
class Dataset:
    lines: list[Polyline]
    segments: list[CurveSegment] = field(default_factory=list)
    L: int = 0
    bounds_diagonal: float = 0.0

    @property
    def segment_count(self) -> int:
        return len(self.segments)

    def line_segment_count(self) -> int:
        """Total number of elementary line segments (= segments at L=1)."""
        return sum(ln.vertex_count - 1 for ln in self.lines)


def _bounds_diagonal(lines: list[Polyline]) -> float:
    lo = np.full(3, np.inf)
    hi = np.full(3, -np.inf)
    for ln in lines:
        lo = np.minimum(lo, ln.vertices.min(axis=0))
        hi = np.maximum(hi, ln.vertices.max(axis=0))
    return float(np.linalg.norm(hi - lo))


def _validate_line(vertices: np.ndarray, speeds: np.ndarray | None, where: str) -> bool:
    """Return False for a too-short line; raise for corrupt geometry."""
    if not np.isfinite(vertices).all():
        raise NonFiniteCoordinateError(f"{where}: non-finite vertex coordinate")
    if speeds is not None and not np.isfinite(speeds).all():
        raise NonFiniteCoordinateError(f"{where}: non-finite speed")
    if vertices.shape[0] < 2:
        return False
    steps = np.linalg.norm(np.diff(vertices, axis=0), axis=1)
    if (steps <= MIN_VERTEX_SEPARATION).any():
        raise MalformedFileError(f"{where}: repeated consecutive vertices")
    if speeds is not None and speeds.shape[0] != vertices.shape[0]:
        raise MalformedFileError(f"{where}: speeds length != vertex count")
    return True


def dataset_from_lines(raw: list[tuple[np.ndarray, np.ndarray | None]]) -> Dataset:
    """Assemble a Dataset from (vertices, speeds) pairs, dropping short lines."""
    lines: list[Polyline] = []
    for i, (verts, speeds) in enumerate(raw):
        verts = np.asarray(verts, dtype=np.float64)
        speeds_arr = None if speeds is None else np.asarray(speeds, dtype=np.float64)
        if not _validate_line(verts, speeds_arr, f"line {i}"):
            continue
        lines.append(Polyline(id=len(lines), vertices=verts, step_speeds=speeds_arr))
    if not lines:
        raise EmptyDatasetError("no line has at least 2 vertices")
    return Dataset(lines=lines, bounds_diagonal=_bounds_diagonal(lines))


def load_lines(path: str | Path, format: str = "auto") -> Dataset:
    """Load a ``.lines.json`` or ``.lines.bin`` file into a Dataset.

    ``format`` is ``auto`` (sniff magic bytes), ``json`` or ``binary``.
    """
    path = Path(path)
    if not path.exists():
        raise MalformedFileError(f"{path}: no such file")
    blob = path.read_bytes()
    if format == "auto":
        format = "binary" if blob[:8] == LINES_MAGIC else "json"
    if format == "binary":
        return _load_lines_binary(blob, str(path))
    if format == "json":
        return _load_lines_json(blob, str(path))
    raise ValueError(f"unknown format {format!r}")


def _load_lines_json(blob: bytes, where: str) -> Dataset:
    try:
        doc = json.loads(blob)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedFileError(f"{where}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict) or "lines" not in doc or not isinstance(doc["lines"], list):
        raise MalformedFileError(f"{where}: expected an object with a 'lines' array")
    raw = []
    for i, entry in enumerate(doc["lines"]):
        if not isinstance(entry, dict) or "vertices" not in entry:
            raise MalformedFileError(f"{where}: line {i} is missing 'vertices'")
        try:
            verts = np.asarray(entry["vertices"], dtype=np.float64)
        except (ValueError, TypeError) as exc:
            raise MalformedFileError(f"{where}: line {i} vertices not numeric") from exc
        if verts.ndim != 2 or verts.shape[1] != 3:
            raise MalformedFileError(f"{where}: line {i} vertices must be [x,y,z] triples")
        speeds = None
        if "speeds" in entry and entry["speeds"] is not None:
            speeds = np.asarray(entry["speeds"], dtype=np.float64)
        raw.append((verts, speeds))
    return dataset_from_lines(raw)


def _load_lines_binary(blob: bytes, where: str) -> Dataset:
    if blob[:8] != LINES_MAGIC:
        raise MalformedFileError(f"{where}: bad magic bytes")
    off = 8
    try:
        (n_lines,) = struct.unpack_from("<I", blob, off)
        off += 4
        raw = []
        for _ in range(n_lines):
            (n_verts,) = struct.unpack_from("<I", blob, off)
            off += 4
            verts = np.frombuffer(blob, dtype="<f4", count=3 * n_verts, offset=off)
            verts = verts.reshape(n_verts, 3).astype(np.float64)
            off += 12 * n_verts
            (flag,) = struct.unpack_from("<B", blob, off)
            off += 1
            speeds = None
            if flag == 1:
                speeds = np.frombuffer(blob, dtype="<f4", count=n_verts, offset=off)
                speeds = speeds.astype(np.float64)
                off += 4 * n_verts
            elif flag != 0:
                raise MalformedFileError(f"{where}: bad speeds flag {flag}")
            raw.append((verts, speeds))
    except struct.error as exc:
        raise MalformedFileError(f"{where}: truncated file") from exc
    if off != len(blob):
        raise MalformedFileError(f"{where}: trailing bytes after last line")
    return dataset_from_lines(raw)


def save_lines(ds: Dataset, path: str | Path, format: str = "auto") -> None:
    """Write the dataset's lines in the JSON or binary lines format."""
    path = Path(path)
    if format == "auto":
        format = "binary" if path.suffix == ".bin" else "json"
    if format == "json":
        doc = {"lines": []}
        for ln in ds.lines:
            entry: dict = {"vertices": ln.vertices.tolist()}
            if ln.step_speeds is not None:
                entry["speeds"] = ln.step_speeds.tolist()
            doc["lines"].append(entry)
        path.write_text(json.dumps(doc))
        return
    if format != "binary":
        raise ValueError(f"unknown format {format!r}")
    parts = [LINES_MAGIC, struct.pack("<I", len(ds.lines))]
    for ln in ds.lines:
        parts.append(struct.pack("<I", ln.vertex_count))
        parts.append(ln.vertices.astype("<f4").tobytes())
        if ln.step_speeds is not None:
            parts.append(struct.pack("<B", 1))
            parts.append(ln.step_speeds.astype("<f4").tobytes())
        else:
            parts.append(struct.pack("<B", 0))
    path.write_bytes(b"".join(parts))


def _chord_dir(points: np.ndarray) -> np.ndarray:
    chord = points[-1] - points[0]
    norm = np.linalg.norm(chord)
    if norm < MIN_VERTEX_SEPARATION:
        # Closed piece: fall back to the first step direction, which is
        # guaranteed nonzero by the vertex-separation invariant.
        chord = points[1] - points[0]
        norm = np.linalg.norm(chord)
    return chord / norm


def segment_attributes(points: np.ndarray, speeds: np.ndarray | None = None):
    """(arc_length, total_curvature, mean_speed) of a segment's points.

    ``total_curvature`` is the sum of turning angles at interior vertices;
    a 2-point segment has zero curvature by construction.
    """
    diffs = np.diff(points, axis=0)
    step_len = np.linalg.norm(diffs, axis=1)
    arc_length = float(step_len.sum())
    if len(diffs) >= 2:
        a, b = diffs[:-1], diffs[1:]
        cosang = (a * b).sum(axis=1) / (step_len[:-1] * step_len[1:])
        total_curvature = float(np.arccos(np.clip(cosang, -1.0, 1.0)).sum())
    else:
        total_curvature = 0.0
    mean_speed = None
    if speeds is not None:
        # One speed per vertex = the step leaving it; the covered steps are
        # all but the segment's last vertex.
        mean_speed = float(np.mean(speeds[:-1]))
    return arc_length, total_curvature, mean_speed


def decompose(ds: Dataset, L: int) -> Dataset:
    """Populate ``ds.segments`` with pieces of L line segments each.

    A polyline with n vertices yields ceil((n-1)/L) segments; the last one
    absorbs the remainder so no geometry is lost. Segment ids are dense and
    ordered by (line_id, start_index). Returns ``ds`` for chaining.
    """
    if not ds.lines:
        raise NotLoadedError("dataset has no lines")
    if L < 1:
        raise ValueError("L must be >= 1")
    segments: list[CurveSegment] = []
    for ln in ds.lines:
        n_steps = ln.vertex_count - 1
        for start in range(0, n_steps, L):
            stop = min(start + L, n_steps)  # covered steps [start, stop)
            pts = ln.vertices[start : stop + 1]
            speeds = None
            if ln.step_speeds is not None:
                speeds = ln.step_speeds[start : stop + 1]
            arc, curv, speed = segment_attributes(pts, speeds)
            segments.append(
                CurveSegment(
                    id=len(segments),
                    line_id=ln.id,
                    start_index=start,
                    point_count=stop + 1 - start,
                    points=pts,
                    chord_dir=_chord_dir(pts),
                    arc_length=arc,
                    total_curvature=curv,
                    mean_speed=speed,
                )
            )
    ds.segments = segments
    ds.L = L
    return ds


def reconstruct_lines(ds: Dataset) -> list[np.ndarray]:
    """Rebuild each line's vertex array from its segments (junctions dropped).

    Used to check that decomposition loses nothing.
    """
    per_line: dict[int, list[CurveSegment]] = {}
    for seg in ds.segments:
        per_line.setdefault(seg.line_id, []).append(seg)
    out = []
    for ln in ds.lines:
        segs = sorted(per_line.get(ln.id, []), key=lambda s: s.start_index)
        parts = [segs[0].points] + [s.points[1:] for s in segs[1:]]
        out.append(np.vstack(parts))
    return out
