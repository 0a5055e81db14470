import numpy as np
import pytest

from csng.errors import EmptyInputError, InvalidIdError
from csng.index import QueryStats, SegmentKdTree, build_index, knn, rbn
from csng.metrics import METRICS, SegmentSoA, segment_distance

from conftest import make_random_lines
from csng.curves import dataset_from_lines, decompose
from oracles import BruteForce


def make_soa(n_segments, seed=0, points_per=3):
    rng = np.random.default_rng(seed)
    lists = [
        np.cumsum(rng.normal(size=(points_per, 3)) * 0.3, axis=0) + rng.random(3) * 10
        for _ in range(n_segments)
    ]
    return SegmentSoA.from_point_lists(lists), lists


class TestBuild:
    def test_single_segment_single_leaf(self):
        soa, _ = make_soa(1)
        tree = build_index(soa)
        assert len(tree.nodes) == 1
        assert tree.nodes[0].is_leaf
        assert list(tree.nodes[0].leaf_ids) == [0]

    def test_empty_raises(self):
        soa = SegmentSoA(
            pts=np.empty((0, 2, 3)),
            counts=np.empty(0, dtype=np.int64),
            aabb_min=np.empty((0, 3)),
            aabb_max=np.empty((0, 3)),
            centers=np.empty((0, 3)),
        )
        with pytest.raises(EmptyInputError):
            build_index(soa)

    def test_membership_and_leaf_sizes(self):
        soa, _ = make_soa(1000, seed=2)
        tree = build_index(soa, bucket=16)
        seen = []
        for node in tree.nodes:
            if node.is_leaf:
                assert len(node.leaf_ids) <= 16
                seen.extend(node.leaf_ids.tolist())
        assert sorted(seen) == list(range(1000))

    def test_depth_bound(self):
        for n, seed in ((1000, 3), (333, 4), (64, 5)):
            soa, _ = make_soa(n, seed=seed)
            tree = build_index(soa, bucket=16)
            bound = int(np.ceil(np.log2(n / 16))) + 2
            assert tree.depth() <= bound

    def test_node_aabbs_cover_full_segments(self):
        soa, lists = make_soa(200, seed=6, points_per=4)
        tree = build_index(soa, bucket=8)
        for ni, node in enumerate(tree.nodes):
            ids = tree.subtree_segment_ids(ni)
            for sid in ids:
                assert (lists[sid] >= node.lo - 1e-12).all()
                assert (lists[sid] <= node.hi + 1e-12).all()

    def test_all_identical_segments(self):
        pts = np.array([[0, 0, 0], [1, 0, 0]], dtype=float)
        soa = SegmentSoA.from_point_lists([pts] * 40)
        tree = build_index(soa, bucket=16)
        res = knn(tree, 5, 3, "longest")
        assert len(res) == 3
        assert all(d == 0.0 for _, d in res)
        assert [i for i, _ in res] == [0, 1, 2]  # ties -> ascending id


class TestKnn:
    def test_two_segments_mutual(self):
        soa, _ = make_soa(2, seed=7)
        tree = build_index(soa)
        assert [i for i, _ in knn(tree, 0, 1, "longest")] == [1]
        assert [i for i, _ in knn(tree, 1, 1, "longest")] == [0]

    def test_k_saturation(self):
        soa, _ = make_soa(9, seed=8)
        tree = build_index(soa)
        res = knn(tree, 0, 50, "longest")
        assert len(res) == 8
        assert [d for _, d in res] == sorted(d for _, d in res)

    def test_invalid_query(self):
        soa, _ = make_soa(3, seed=9)
        tree = build_index(soa)
        with pytest.raises(InvalidIdError):
            knn(tree, 5, 1, "longest")
        with pytest.raises(ValueError):
            knn(tree, 0, 0, "longest")

    @pytest.mark.parametrize("metric", METRICS)
    def test_exact_vs_brute_force_500(self, metric):
        soa, lists = make_soa(500, seed=10, points_per=4)
        tree = build_index(soa)
        bf = BruteForce(lists)
        for q in range(0, 500, 23):
            got = knn(tree, q, 60, metric)
            want = bf.knn(q, 60, metric)
            assert [g[0] for g in got] == [w[0] for w in want]
            assert np.allclose([g[1] for g in got], [w[1] for w in want], atol=1e-9)

    def test_never_contains_query(self):
        soa, _ = make_soa(50, seed=11)
        tree = build_index(soa)
        for q in range(0, 50, 7):
            assert q not in [i for i, _ in knn(tree, q, 10, "longest")]


class TestRbn:
    def test_radius_below_min_distance_empty(self):
        soa, lists = make_soa(20, seed=12)
        tree = build_index(soa)
        assert rbn(tree, 3, 1e-9, "longest") == []

    @pytest.mark.parametrize("metric", METRICS)
    @pytest.mark.parametrize("frac", [0.01, 0.10])
    def test_exact_vs_brute_force(self, metric, frac):
        ds = decompose(dataset_from_lines(make_random_lines(100, 11, seed=13)), 2)
        soa = SegmentSoA.from_dataset(ds)
        lists = [s.points for s in ds.segments]
        tree = build_index(soa)
        bf = BruteForce(lists)
        radius = frac * ds.bounds_diagonal
        for q in range(0, soa.n, 61):
            got = rbn(tree, q, radius, metric)
            want = bf.rbn(q, radius, metric)
            assert [g[0] for g in got] == [w[0] for w in want]

    def test_strict_inequality(self):
        # Two parallel unit segments exactly 1 apart: radius 1 excludes.
        lists = [
            np.array([[0, 0, 0], [1, 0, 0]], float),
            np.array([[0, 1, 0], [1, 1, 0]], float),
        ]
        soa = SegmentSoA.from_point_lists(lists)
        tree = build_index(soa)
        assert rbn(tree, 0, 1.0, "longest") == []
        assert [i for i, _ in rbn(tree, 0, 1.0 + 1e-9, "longest")] == [1]


class TestInstrumentation:
    def collect(self, tree: SegmentKdTree, soa, lists, metric, query, k=10):
        stats = QueryStats()
        knn(tree, query, k, metric, stats=stats)
        return stats

    @pytest.mark.parametrize("metric", METRICS)
    def test_pruned_lower_bounds_sound(self, metric):
        soa, lists = make_soa(400, seed=14, points_per=4)
        tree = build_index(soa)
        for q in (0, 37, 123):
            stats = self.collect(tree, soa, lists, metric, q)
            for node_id, lb in stats.pruned:
                for sid in tree.subtree_segment_ids(node_id):
                    true_d = segment_distance(lists[q], lists[sid], metric)
                    assert lb <= true_d + 1e-9

    @pytest.mark.parametrize("metric", METRICS)
    def test_rbn_pruned_lower_bounds_sound(self, metric):
        soa, lists = make_soa(300, seed=16, points_per=3)
        tree = build_index(soa)
        for q in (5, 99):
            stats = QueryStats()
            rbn(tree, q, 0.5, metric, stats=stats)
            assert stats.pruned  # the radius is tight enough to prune
            for node_id, lb in stats.pruned:
                for sid in tree.subtree_segment_ids(node_id):
                    true_d = segment_distance(lists[q], lists[sid], metric)
                    assert lb <= true_d + 1e-9

    def test_visited_leaves_sublinear(self):
        # Average visited leaves per query must grow far slower than N.
        sizes = (1000, 4000, 16000)
        visited = []
        for n in sizes:
            soa, _ = make_soa(n, seed=15)
            tree = build_index(soa)
            total = 0
            for q in range(0, n, n // 25):
                stats = QueryStats()
                knn(tree, q, 10, "longest", stats=stats)
                total += stats.leaves_visited
            visited.append(total / 25)
        leaves_growth = visited[-1] / visited[0]
        assert leaves_growth < (sizes[-1] / sizes[0]) / 2
