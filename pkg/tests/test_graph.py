import math

import numpy as np
import pytest

from csng.curves import dataset_from_lines, decompose
from csng.errors import MalformedFileError, NotDecomposedError
from csng.graph import (
    Csng,
    build_csng,
    edge_weight,
    export_graph,
    import_graph,
    symmetrized_view,
    undirected_edges,
)

from conftest import make_random_lines


def parallel_lines_dataset(offsets, L=1, n_vertices=2):
    raw = []
    for off in offsets:
        verts = np.array([[i, off, 0.0] for i in range(n_vertices)], float)
        raw.append((verts, None))
    return decompose(dataset_from_lines(raw), L)


class TestEdgeWeight:
    def test_zero_distance_zero_angle(self):
        assert edge_weight(0.0, 0.0, 1.0) == pytest.approx(1.0)

    def test_antiparallel_floor(self):
        assert edge_weight(0.0, math.pi, 1.0) == pytest.approx(0.01)

    def test_formula_point(self):
        # exp(-1) * 0.5, frozen from direct evaluation.
        assert edge_weight(1.0, math.pi / 2, 1.0) == pytest.approx(
            0.18393972058572117, abs=1e-12
        )

    def test_monotone_in_distance_and_angle(self):
        d = np.linspace(0, 5, 40)
        w = edge_weight(d, 0.3, 2.0)
        assert (np.diff(w) < 0).all()
        ang = np.linspace(0, 2.9, 40)
        w = edge_weight(1.0, ang, 2.0)
        assert (np.diff(w) < 0).all()

    def test_range(self):
        rng = np.random.default_rng(0)
        w = edge_weight(rng.random(100) * 10, rng.random(100) * math.pi, 0.7)
        assert ((w > 0) & (w <= 1)).all()

    def test_bad_scale(self):
        with pytest.raises(ValueError):
            edge_weight(1.0, 0.0, 0.0)


class TestBuildKnn:
    def test_requires_decomposition(self):
        ds = dataset_from_lines(make_random_lines(3, 5, seed=0))
        with pytest.raises(NotDecomposedError):
            build_csng(ds, method="knn", k=1)

    def test_out_degree_law(self, small_dataset):
        for k in (1, 3, 10):
            g = build_csng(small_dataset, method="knn", k=k, metric="longest")
            expect = min(k, g.node_count - 1)
            assert (g.out_degrees() == expect).all()
            assert g.directed

    def test_tie_goes_to_lower_id(self):
        # Three parallel segments, equally spaced: the middle one's nearest
        # is a tie between 0 and 2 -> picks 0.
        ds = parallel_lines_dataset([0.0, 1.0, 2.0])
        g = build_csng(ds, method="knn", k=1)
        nbrs = g.neighbor_lists()
        assert nbrs[1] == [0]
        assert (g.out_degrees() == 1).all()

    def test_no_self_loops_no_duplicates(self, small_dataset):
        g = build_csng(small_dataset, method="knn", k=5)
        assert (g.edge_src != g.edge_dst).all()
        pairs = set(zip(g.edge_src.tolist(), g.edge_dst.tolist()))
        assert len(pairs) == g.edge_count

    def test_edge_count_accounting(self, small_dataset):
        g = build_csng(small_dataset, method="knn", k=7)
        assert g.edge_count == g.node_count * 7

    def test_angle_range_and_weight_positive(self, small_dataset):
        g = build_csng(small_dataset, method="knn", k=4)
        assert ((g.edge_angle >= 0) & (g.edge_angle <= math.pi)).all()
        assert ((g.edge_weight > 0) & (g.edge_weight <= 1)).all()

    def test_d_scale_default_is_mean_distance(self, small_dataset):
        g = build_csng(small_dataset, method="knn", k=4)
        assert g.build_params["d_scale"] == pytest.approx(float(g.edge_dist.mean()))


class TestBuildRbn:
    def test_symmetric_with_equal_attributes(self, small_dataset):
        g = build_csng(small_dataset, method="rbn", radius_frac=0.08)
        assert not g.directed
        fwd = {}
        for i in range(g.edge_count):
            fwd[(int(g.edge_src[i]), int(g.edge_dst[i]))] = (
                float(g.edge_dist[i]),
                float(g.edge_angle[i]),
                float(g.edge_weight[i]),
            )
        for (u, v), attrs in fwd.items():
            assert fwd[(v, u)] == attrs

    def test_radius_fraction_resolution(self, small_dataset):
        frac = 0.07
        g = build_csng(small_dataset, method="rbn", radius_frac=frac)
        assert g.build_params["radius"] == pytest.approx(
            frac * small_dataset.bounds_diagonal
        )
        assert (g.edge_dist < g.build_params["radius"]).all()

    def test_needs_radius(self, small_dataset):
        with pytest.raises(ValueError):
            build_csng(small_dataset, method="rbn")


class TestSymmetrize:
    def graph_with(self, edges, n=4, directed=True):
        src = np.array([e[0] for e in edges], dtype=np.int64)
        dst = np.array([e[1] for e in edges], dtype=np.int64)
        w = np.array([e[2] for e in edges], dtype=np.float64)
        return Csng(
            node_count=n,
            edge_src=src,
            edge_dst=dst,
            edge_dist=np.ones_like(w),
            edge_angle=np.zeros_like(w),
            edge_weight=w,
            directed=directed,
        )

    def test_sum_rule_both_directions(self):
        g = self.graph_with([(0, 1, 0.3), (1, 0, 0.5)])
        sym = symmetrized_view(g)
        weights = {
            (int(s), int(d)): float(w)
            for s, d, w in zip(sym.edge_src, sym.edge_dst, sym.edge_weight)
        }
        assert weights[(0, 1)] == pytest.approx(0.8)
        assert weights[(1, 0)] == pytest.approx(0.8)

    def test_one_direction_passthrough(self):
        g = self.graph_with([(0, 1, 0.3)])
        sym = symmetrized_view(g)
        assert float(sym.edge_weight[0]) == pytest.approx(0.3)
        assert sym.edge_count == 2

    def test_noop_on_undirected(self, small_dataset):
        g = build_csng(small_dataset, method="rbn", radius_frac=0.08)
        assert symmetrized_view(g) is g

    def test_undirected_edges_once_per_pair(self, small_dataset):
        g = build_csng(small_dataset, method="knn", k=3)
        pairs = [(u, v) for u, v, _ in undirected_edges(g)]
        assert all(u < v for u, v in pairs)
        assert len(set(pairs)) == len(pairs)


class TestExportImport:
    def test_csv_header_only_for_empty(self, tmp_path):
        g = Csng(
            node_count=3,
            edge_src=np.empty(0, dtype=np.int64),
            edge_dst=np.empty(0, dtype=np.int64),
            edge_dist=np.empty(0),
            edge_angle=np.empty(0),
            edge_weight=np.empty(0),
            directed=True,
        )
        path = tmp_path / "g.csv"
        export_graph(g, path)
        assert path.read_text().strip() == "src,dst,distance,angle,weight"

    def test_path_graph_row_count(self):
        ds = parallel_lines_dataset([0.0, 1.0, 2.5])
        directed = build_csng(ds, method="knn", k=1)
        assert directed.edge_count == 3  # out-degree 1 each
        und = build_csng(ds, method="rbn", radius=1.6)
        assert und.edge_count == 4  # path graph, both directions stored

    def test_binary_round_trip(self, small_dataset, tmp_path):
        g = build_csng(small_dataset, method="knn", k=4)
        p1, p2 = tmp_path / "g1.bin", tmp_path / "g2.bin"
        export_graph(g, p1)
        back = import_graph(p1)
        assert back.node_count == g.node_count
        assert np.array_equal(back.edge_src, g.edge_src)
        assert np.array_equal(back.edge_dst, g.edge_dst)
        export_graph(back, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_csv_round_trip_adjacency(self, small_dataset, tmp_path):
        g = build_csng(small_dataset, method="rbn", radius_frac=0.08)
        path = tmp_path / "g.csv"
        export_graph(g, path)
        back = import_graph(path)
        assert np.array_equal(back.edge_src, g.edge_src)
        assert np.array_equal(back.edge_dst, g.edge_dst)
        assert np.array_equal(back.edge_weight, g.edge_weight)  # repr round-trip
        assert not back.directed

    def test_csv_rows_sorted_by_src_dst(self, small_dataset, tmp_path):
        g = build_csng(small_dataset, method="knn", k=3)
        path = tmp_path / "g.csv"
        export_graph(g, path)
        rows = path.read_text().strip().splitlines()[1:]
        keys = [tuple(int(x) for x in r.split(",")[:2]) for r in rows]
        assert keys == sorted(keys)

    def test_build_determinism_byte_identical(self, small_dataset, tmp_path):
        for i, fmt in enumerate(("csv", "binary")):
            a = build_csng(small_dataset, method="knn", k=5)
            b = build_csng(small_dataset, method="knn", k=5)
            pa, pb = tmp_path / f"a{i}", tmp_path / f"b{i}"
            export_graph(a, pa, format=fmt)
            export_graph(b, pb, format=fmt)
            assert pa.read_bytes() == pb.read_bytes()

    def test_import_garbage_raises(self, tmp_path):
        p = tmp_path / "junk.bin"
        p.write_bytes(b"\xff\xfe\x00garbage" * 3)
        with pytest.raises(MalformedFileError):
            import_graph(p)

    def test_threads_match_sequential(self, small_dataset, tmp_path):
        a = build_csng(small_dataset, method="knn", k=4, threads=1)
        b = build_csng(small_dataset, method="knn", k=4, threads=2)
        assert np.array_equal(a.edge_src, b.edge_src)
        assert np.array_equal(a.edge_dst, b.edge_dst)
        assert np.array_equal(a.edge_weight, b.edge_weight)
