from __future__ import annotations

import time

import pytest
from fastapi.testclient import TestClient

from conftest import bfs_plan, descriptor_text, ingest_rows, submission_csv
from mapftrack.api import create_app


@pytest.fixture
def client(bench, store):
    return TestClient(create_app(bench, store))


def post_submission(client, csv_text, desc_text):
    return client.post(
        "/api/v1/submissions",
        files={
            "csv": ("results.csv", csv_text.encode(), "text/csv"),
            "descriptor": ("algo.txt", desc_text.encode(), "text/plain"),
        },
    )


def closed_k1_row(bench):
    scen = bench.scenarios[("empty-8-8", "even", 1)]
    plan = bfs_plan(bench.grid("empty-8-8"), scen.entries[0].start, scen.entries[0].goal)
    return ("empty-8-8", "even-1", 1, "", len(plan), plan)


class TestProgress:
    def test_whole_benchmark(self, client):
        r = client.get("/api/v1/progress")
        assert r.status_code == 200
        body = r.json()
        assert body["scope"] == "all"
        assert body["total"] == 82
        assert body["unknown"] == 82
        assert body["pct_unknown"] == 100.0

    def test_scoped_and_grouped(self, client):
        r = client.get("/api/v1/progress", params={"domain": "Open"})
        assert r.json()["total"] == 46
        r = client.get("/api/v1/progress", params={"group_by": "map"})
        assert [g["scope"] for g in r.json()] == ["empty-8-8", "pocket-6-6"]
        r = client.get(
            "/api/v1/progress",
            params={"map": "empty-8-8", "scenario": "even-1", "agents_max": 5},
        )
        assert r.json()["total"] == 5

    def test_reflects_store(self, bench, store, client):
        ingest_rows(bench, store, [closed_k1_row(bench)], "alpha")
        body = client.get("/api/v1/progress").json()
        assert body["closed"] == 1

    def test_errors(self, client):
        assert client.get("/api/v1/progress", params={"map": "mars"}).status_code == 404
        assert client.get("/api/v1/progress", params={"agents_min": 999}).status_code == 404
        assert client.get("/api/v1/progress", params={"group_by": "algorithm"}).status_code == 400
        r = client.get("/api/v1/progress", params={"scenario": "evenx"})
        assert r.status_code == 400
        assert "error" in r.json()

    def test_bad_query_type(self, client):
        assert client.get("/api/v1/progress", params={"agents_min": "lots"}).status_code == 400


class TestComparison:
    def test_scope_table(self, bench, store, client):
        ingest_rows(bench, store, [closed_k1_row(bench)], "alpha")
        body = client.get("/api/v1/comparison").json()
        assert body["scope"] == "all"
        (row,) = body["algorithms"]
        assert row["algorithm"] == "alpha"
        assert row["solved"] == 1

    def test_per_map_series(self, bench, store, client):
        ingest_rows(bench, store, [closed_k1_row(bench)], "alpha")
        body = client.get(
            "/api/v1/comparison", params={"map": "empty-8-8", "metric": "best_solution"}
        ).json()
        assert body["metric"] == "best_solution"
        points = body["series"]["alpha"]
        assert points[0] == {"agents": 1, "pct": 50.0}
        assert len(points) == 40

    def test_oracle_off_by_default(self, bench, store, client):
        ingest_rows(bench, store, [closed_k1_row(bench)], "alpha")
        names = [m["algorithm"] for m in client.get("/api/v1/comparison").json()["algorithms"]]
        assert names == ["alpha"]
        body = client.get("/api/v1/comparison", params={"include_oracle": "true"}).json()
        names = [m["algorithm"] for m in body["algorithms"]]
        assert names == ["alpha", "trivial-oracle"]

    def test_errors(self, bench, store, client):
        r = client.get("/api/v1/comparison", params={"map": "empty-8-8", "metric": "vibes"})
        assert r.status_code == 400
        r = client.get("/api/v1/comparison", params={"algorithms": "phantom"})
        assert r.status_code == 404


class TestInstances:
    def test_pagination(self, client):
        first = client.get("/api/v1/instances", params={"limit": 30}).json()
        assert first["total"] == 82
        assert len(first["items"]) == 30
        last = client.get("/api/v1/instances", params={"limit": 30, "offset": 60}).json()
        assert len(last["items"]) == 22
        assert first["items"][0] != last["items"][0]

    def test_item_shape(self, bench, store, client):
        ingest_rows(bench, store, [closed_k1_row(bench)], "alpha")
        body = client.get(
            "/api/v1/instances",
            params={"map": "empty-8-8", "scenario": "even-1", "agents_max": 2},
        ).json()
        one, two = body["items"]
        assert one["state"] == "closed"
        assert one["cost_algorithms"] == ["alpha"]
        assert one["lb_algorithms"] == ["trivial-oracle"]
        assert one["has_plan"] is True
        assert two["state"] == "unknown"
        assert two["lower_bound"] is None
        assert two["has_plan"] is False

    def test_limit_bounds(self, client):
        assert client.get("/api/v1/instances", params={"limit": 0}).status_code == 400
        assert client.get("/api/v1/instances", params={"limit": 1001}).status_code == 400
        assert client.get("/api/v1/instances", params={"offset": -1}).status_code == 400
        assert client.get("/api/v1/instances", params={"limit": 1000}).status_code == 200

    def test_empty_scope(self, client):
        r = client.get("/api/v1/instances", params={"map": "empty-8-8", "agents_min": 999})
        assert r.status_code == 404


class TestPlan:
    def test_full_payload(self, bench, store, client):
        row = closed_k1_row(bench)
        ingest_rows(bench, store, [row], "alpha")
        r = client.get(
            "/api/v1/plan",
            params={"map": "empty-8-8", "scenario": "even-1", "agents": 1},
        )
        assert r.status_code == 200
        body = r.json()
        assert body["width"] == 8 and body["height"] == 8
        assert body["plans"] == [row[5]]
        assert body["cost"] == row[4]
        assert len(body["pairs"]) == 1
        start = body["pairs"][0]["start"]
        scen = bench.scenarios[("empty-8-8", "even", 1)]
        assert tuple(start) == scen.entries[0].start

    def test_not_found_chain(self, bench, store, client):
        params = {"map": "mars", "scenario": "even-1", "agents": 1}
        assert client.get("/api/v1/plan", params=params).status_code == 404
        params = {"map": "empty-8-8", "scenario": "even-9", "agents": 1}
        assert client.get("/api/v1/plan", params=params).status_code == 404
        params = {"map": "empty-8-8", "scenario": "even-1", "agents": 99}
        assert client.get("/api/v1/plan", params=params).status_code == 404
        # instance exists but nobody has solved it
        params = {"map": "empty-8-8", "scenario": "even-1", "agents": 1}
        assert client.get("/api/v1/plan", params=params).status_code == 404
        # an lb-only record still has no plan to show
        ingest_rows(bench, store, [("empty-8-8", "even-1", 1, 2, "", "")], "alpha")
        assert client.get("/api/v1/plan", params=params).status_code == 404


class TestSubmissions:
    def test_sync_ingest(self, bench, client):
        r = post_submission(
            client,
            submission_csv([closed_k1_row(bench)]),
            descriptor_text("alpha"),
        )
        assert r.status_code == 201
        body = r.json()
        assert body["accepted"] == 1 and body["rejected"] == 0
        assert body["duplicate_batch"] is False
        assert body["rows"][0]["accepted"] is True
        # and the store now serves it
        assert client.get("/api/v1/progress").json()["closed"] == 1

    def test_duplicate_reported(self, bench, client):
        csv_text = submission_csv([("empty-8-8", "even-1", 1, 2, "", "")])
        desc = descriptor_text("alpha")
        assert post_submission(client, csv_text, desc).json()["duplicate_batch"] is False
        again = post_submission(client, csv_text, desc).json()
        assert again["duplicate_batch"] is True
        assert again["rows"][0]["reason"] == "DuplicateRow"

    def test_revocations_surfaced(self, bench, client):
        row = closed_k1_row(bench)
        d = row[4]
        r1 = post_submission(
            client,
            submission_csv([("empty-8-8", "even-1", 1, d + 5, "", "")]),
            descriptor_text("braid"),
        )
        r2 = post_submission(client, submission_csv([row]), descriptor_text("weft"))
        (notice,) = r2.json()["revocations"]
        assert notice["batch_id"] == r1.json()["batch_id"]
        assert "contradicted by verified cost" in notice["reason"]
        assert len(notice["instances"]) == 1

    def test_bad_payloads(self, bench, client):
        r = post_submission(client, "not,a,header\n1,2,3\n", descriptor_text("alpha"))
        assert r.status_code == 400
        r = post_submission(client, submission_csv([]), "authors: nobody\n")
        assert r.status_code == 400
        r = client.post(
            "/api/v1/submissions",
            files={
                "csv": ("results.csv", b"\xff\xfe junk", "text/csv"),
                "descriptor": ("algo.txt", b"algorithm: x\nauthors: y\n", "text/plain"),
            },
        )
        assert r.status_code == 400
        assert "UTF-8" in r.json()["error"]
        r = client.post(
            "/api/v1/submissions",
            files={"csv": ("results.csv", b"x", "text/csv")},
        )
        assert r.status_code == 400

    def test_upload_limit(self, bench, store):
        app = create_app(bench, store, upload_limit=64)
        tiny = TestClient(app)
        r = post_submission(tiny, "x" * 100, descriptor_text("alpha"))
        assert r.status_code == 413

    def test_async_job_flow(self, bench, store):
        app = create_app(bench, store, async_threshold=1)
        client = TestClient(app)
        r = post_submission(
            client, submission_csv([closed_k1_row(bench)]), descriptor_text("alpha")
        )
        assert r.status_code == 201
        job_id = r.json()["job_id"]
        assert r.json()["status"] == "pending"
        deadline = time.monotonic() + 10
        while time.monotonic() < deadline:
            job = client.get(f"/api/v1/submissions/{job_id}").json()
            if job["status"] != "pending":
                break
            time.sleep(0.02)
        assert job["status"] == "done"
        assert job["report"]["accepted"] == 1
        assert client.get("/api/v1/progress").json()["closed"] == 1

    def test_unknown_job(self, client):
        assert client.get("/api/v1/submissions/deadbeef").status_code == 404


class TestExport:
    def test_csv_download(self, bench, store, client):
        ingest_rows(bench, store, [closed_k1_row(bench)], "alpha")
        r = client.get("/api/v1/export", params={"level": "instance"})
        assert r.status_code == 200
        assert r.headers["content-type"].startswith("text/csv")
        assert 'filename="export-instance.csv"' in r.headers["content-disposition"]
        lines = r.text.strip().split("\n")
        assert lines[0].startswith("map_name,scenario,agents,")
        assert len(lines) == 1 + 82
        assert sum(1 for line in lines if ",closed," in line) == 1

    def test_level_validation(self, client):
        assert client.get("/api/v1/export", params={"level": "galaxy"}).status_code == 400
        for level in ("scenario", "map", "domain"):
            assert client.get("/api/v1/export", params={"level": level}).status_code == 200

    def test_empty_scope(self, client):
        r = client.get("/api/v1/export", params={"agents_min": 999})
        assert r.status_code == 404


class TestHealthAndTransport:
    def test_health(self, client):
        assert client.get("/api/v1/health").json() == {
            "status": "ok",
            "maps": 2,
            "scenarios": 4,
        }

    def test_large_responses_gzipped(self, client):
        r = client.get(
            "/api/v1/instances",
            params={"limit": 1000},
            headers={"Accept-Encoding": "gzip"},
        )
        assert r.status_code == 200
        assert r.headers.get("content-encoding") == "gzip"
        assert r.json()["total"] == 82
