import concurrent.futures
import json

import pytest
from fastapi.testclient import TestClient

from csng.service import create_app
from csng.synthetic import planted_bundles


@pytest.fixture
def client():
    return TestClient(create_app(max_segments=10_000))


def lines_payload(n_bundles=3, rng_seed=2):
    ds, _ = planted_bundles(n_bundles=n_bundles, rng_seed=rng_seed)
    return {
        "lines": [{"vertices": ln.vertices.tolist()} for ln in ds.lines]
    }


def run_pipeline(client, resolution=1.0, seed=0):
    sid = client.post("/sessions").json()["session"]
    r1 = client.post(f"/sessions/{sid}/dataset", json=lines_payload())
    r2 = client.post(f"/sessions/{sid}/decompose", json={"L": 2})
    r3 = client.post(
        f"/sessions/{sid}/graph",
        json={"method": "rbn", "radius_frac": 0.10, "metric": "longest"},
    )
    r4 = client.post(
        f"/sessions/{sid}/communities", json={"resolution": resolution, "seed": seed}
    )
    return sid, (r1, r2, r3, r4)


class TestHappyPath:
    def test_generations_monotone(self, client):
        sid, (r1, r2, r3, r4) = run_pipeline(client)
        assert [r.status_code for r in (r1, r2, r3, r4)] == [200] * 4
        assert [r.json()["generation"] for r in (r1, r2, r3, r4)] == [1, 2, 3, 4]

    def test_trace_dataset(self, client):
        sid = client.post("/sessions").json()["session"]
        r = client.post(
            f"/sessions/{sid}/dataset",
            json={
                "trace": {
                    "field": {"kind": "circular"},
                    "cfg": {
                        "seeding": "uniform_grid",
                        "grid": [2, 2, 1],
                        "step_size": 0.05,
                        "max_steps": 30,
                    },
                }
            },
        )
        assert r.status_code == 200
        assert r.json()["lines"] == 4

    def test_session_info(self, client):
        sid, _ = run_pipeline(client)
        info = client.get(f"/sessions/{sid}").json()
        assert info["has_graph"] and info["has_tree"]
        assert info["segments"] > 0

    def test_tree_json_schema(self, client):
        from csng.schemas import COMMUNITIES_SCHEMA, validate

        sid, (_, _, _, r4) = run_pipeline(client)
        validate(r4.json()["tree"], COMMUNITIES_SCHEMA)


class TestErrors:
    def test_unknown_session_404(self, client):
        assert client.get("/sessions/nope").status_code == 404
        assert client.post("/sessions/nope/decompose", json={"L": 2}).status_code == 404

    def test_decompose_before_dataset_422(self, client):
        sid = client.post("/sessions").json()["session"]
        assert client.post(f"/sessions/{sid}/decompose", json={"L": 2}).status_code == 422

    def test_invalid_params_422(self, client):
        sid = client.post("/sessions").json()["session"]
        client.post(f"/sessions/{sid}/dataset", json=lines_payload())
        assert client.post(f"/sessions/{sid}/decompose", json={"L": 0}).status_code == 422
        assert (
            client.post(f"/sessions/{sid}/decompose", json={"L": "x"}).status_code == 422
        )

    def test_dataset_cap_413(self):
        client = TestClient(create_app(max_segments=10))
        sid = client.post("/sessions").json()["session"]
        r = client.post(f"/sessions/{sid}/dataset", json=lines_payload())
        assert r.status_code == 413

    def test_merge_incomparable_409_with_parents(self, client):
        sid, (_, _, _, r4) = run_pipeline(client)
        tree = r4.json()["tree"]
        leaves = sorted(
            (e for e in tree["tree"] if "segments" in e),
            key=lambda e: -e["cardinality"],
        )
        s1 = client.post(
            f"/sessions/{sid}/communities/{leaves[0]['id']}/split",
            json={"resolution": 1.0, "seed": 0},
        ).json()
        s2 = client.post(
            f"/sessions/{sid}/communities/{leaves[1]['id']}/split",
            json={"resolution": 1.0, "seed": 0},
        ).json()
        assert s1["status"] == "split" and s2["status"] == "split"
        r = client.post(
            f"/sessions/{sid}/communities/merge",
            json={"node_ids": [s1["new_children"][0], s2["new_children"][0]]},
        )
        assert r.status_code == 409
        assert set(r.json()["parents"]) == {leaves[0]["id"], leaves[1]["id"]}

    def test_failed_request_leaves_state_unchanged(self, client):
        sid, _ = run_pipeline(client)
        before_gen = client.get(f"/sessions/{sid}").json()["generation"]
        before_tree = client.get(f"/sessions/{sid}/segments").json()
        # Illegal merge attempt (root id 0 is not mergeable).
        r = client.post(f"/sessions/{sid}/communities/merge", json={"node_ids": [0, 1]})
        assert r.status_code == 422
        assert client.get(f"/sessions/{sid}").json()["generation"] == before_gen
        assert client.get(f"/sessions/{sid}/segments").json() == before_tree


class TestGenerations:
    def test_stale_generation_409(self, client):
        sid, _ = run_pipeline(client)
        r = client.post(
            f"/sessions/{sid}/decompose", json={"L": 3}, headers={"If-Generation": "1"}
        )
        assert r.status_code == 409

    def test_matching_generation_ok(self, client):
        sid, _ = run_pipeline(client)
        gen = client.get(f"/sessions/{sid}").json()["generation"]
        r = client.post(
            f"/sessions/{sid}/decompose",
            json={"L": 3},
            headers={"If-Generation": str(gen)},
        )
        assert r.status_code == 200

    def test_two_clients_same_generation_one_wins(self, client):
        sid, _ = run_pipeline(client)
        gen = str(client.get(f"/sessions/{sid}").json()["generation"])

        def mutate(L):
            return client.post(
                f"/sessions/{sid}/decompose",
                json={"L": L},
                headers={"If-Generation": gen},
            ).status_code

        with concurrent.futures.ThreadPoolExecutor(2) as pool:
            codes = sorted(pool.map(mutate, [3, 4]))
        assert codes == [200, 409]


class TestSegmentsAndLayout:
    def test_segments_membership(self, client):
        sid, (_, _, _, r4) = run_pipeline(client)
        tree = r4.json()["tree"]
        leaf = next(e for e in tree["tree"] if "segments" in e)
        r = client.get(f"/sessions/{sid}/segments", params={"nodes": str(leaf["id"])})
        assert r.status_code == 200
        body = r.json()
        assert sorted(s["id"] for s in body["segments"]) == sorted(leaf["segments"])
        assert all(s["node"] == leaf["id"] for s in body["segments"])
        assert all(len(s["points"][0]) == 3 for s in body["segments"])

    def test_segments_unknown_node_404(self, client):
        sid, _ = run_pipeline(client)
        r = client.get(f"/sessions/{sid}/segments", params={"nodes": "424242"})
        assert r.status_code == 404

    def test_split_unknown_node_404(self, client):
        sid, _ = run_pipeline(client)
        r = client.post(
            f"/sessions/{sid}/communities/424242/split",
            json={"resolution": 0.5, "seed": 0},
        )
        assert r.status_code == 404

    def test_layout_snapshot_schema(self, client):
        from csng.schemas import LAYOUT_SCHEMA, validate

        sid, _ = run_pipeline(client)
        doc = client.get(f"/sessions/{sid}/layout").json()
        validate(doc, LAYOUT_SCHEMA)
        assert doc["converged"] in (True, False)

    def test_layout_stream_frames_until_converged(self, client):
        sid, _ = run_pipeline(client)
        frames = []
        with client.websocket_connect(f"/sessions/{sid}/layout/stream") as ws:
            while True:
                frame = ws.receive_json()
                frames.append(frame)
                if frame.get("converged") is True and "nodes" not in frame:
                    break
        assert len(frames) >= 2
        for frame in frames[:-1]:
            ids = {n["id"] for n in frame["nodes"]}
            for e in frame["edges"]:
                assert e["u"] in ids and e["v"] in ids
        iterations = [f["iteration"] for f in frames[:-1]]
        assert iterations == sorted(iterations)

    def test_layout_consistent_after_merge(self, client):
        sid, (_, _, _, r4) = run_pipeline(client)
        tree = r4.json()["tree"]
        leaves = [e["id"] for e in tree["tree"] if "segments" in e]
        client.post(f"/sessions/{sid}/communities/merge", json={"node_ids": leaves[:2]})
        doc = client.get(f"/sessions/{sid}/layout").json()
        shown = {n["id"] for n in doc["nodes"]}
        assert leaves[0] not in shown and leaves[1] not in shown


class TestBaselineEndpoint:
    def test_baseline_with_ari(self, client):
        sid, _ = run_pipeline(client)
        r = client.post(
            f"/sessions/{sid}/baseline", json={"dim": 5, "k": 3, "seed": 42}
        )
        assert r.status_code == 200
        body = r.json()
        assert len(body["clusters"]) > 0
        assert body["ari_vs_tree"] >= 0.9  # planted bundles are easy


class TestStaticMount:
    def test_serves_ui_bundle(self, tmp_path):
        (tmp_path / "index.html").write_text("<html><body>explorer</body></html>")
        app = create_app(max_segments=1000, static_dir=str(tmp_path))
        c = TestClient(app)
        r = c.get("/")
        assert r.status_code == 200
        assert "explorer" in r.text
        # API routes still take precedence over the static mount.
        assert c.post("/sessions").status_code == 200


class TestReplay:
    def test_audit_log_replay_reproduces_state(self, client):
        sid, (_, _, _, r4) = run_pipeline(client, resolution=1.0, seed=7)
        tree = r4.json()["tree"]
        big = max(
            (e for e in tree["tree"] if "segments" in e), key=lambda e: e["cardinality"]
        )
        client.post(
            f"/sessions/{sid}/communities/{big['id']}/split",
            json={"resolution": 1.0, "seed": 3},
        )
        log = client.get(f"/sessions/{sid}/log").json()["log"]
        final_tree = client.get(f"/sessions/{sid}/segments").json()
        final_layout = client.get(f"/sessions/{sid}/layout").json()

        sid2 = client.post("/sessions").json()["session"]
        for entry in log:
            op, params = entry["op"], entry["params"]
            if op == "dataset":
                r = client.post(f"/sessions/{sid2}/dataset", json=params)
            elif op == "decompose":
                r = client.post(f"/sessions/{sid2}/decompose", json=params)
            elif op == "graph":
                r = client.post(f"/sessions/{sid2}/graph", json=params)
            elif op == "communities":
                r = client.post(f"/sessions/{sid2}/communities", json=params)
            elif op == "split":
                node = params.pop("node")
                r = client.post(
                    f"/sessions/{sid2}/communities/{node}/split", json=params
                )
            elif op == "merge":
                r = client.post(f"/sessions/{sid2}/communities/merge", json=params)
            assert r.status_code == 200
        replay_tree = client.get(f"/sessions/{sid2}/segments").json()
        replay_layout = client.get(f"/sessions/{sid2}/layout").json()
        assert _strip_gen(replay_tree) == _strip_gen(final_tree)
        assert _strip_gen(replay_layout) == _strip_gen(final_layout)


def _strip_gen(doc):
    doc = json.loads(json.dumps(doc))
    doc.pop("generation", None)
    return doc
