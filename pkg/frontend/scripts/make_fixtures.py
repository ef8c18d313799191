#!/usr/bin/env python3
"""Regenerate the golden fixtures under frontend/fixtures/.

playback_golden.json pairs plan strings with the positions the backend
validator simulates for them, padded to the shared horizon. The UI test
replays the same plans through the TypeScript playback code and expects
identical positions at every timestep. chart_golden.json holds verbatim
API responses from a small seeded tracker so chart tests compare against
exactly what the server would send.

Run from the repo root: python3 frontend/scripts/make_fixtures.py
"""

from __future__ import annotations

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from mapftrack.api import create_app
from mapftrack.bench import load_benchmark, parse_map
from mapftrack.ingest import SUBMISSION_HEADER, ingest_batch, load_batch
from mapftrack.tracking import TrackingStore
from mapftrack.validate import PlanSet, simulate, validate_plan_set

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"

# --- playback cases ----------------------------------------------------


def open_grid(width: int, height: int, name: str):
    rows = "\n".join("." * width for _ in range(height))
    return parse_map(f"type octile\nheight {height}\nwidth {width}\nmap\n{rows}\n", name)


def playback_case(name: str, grid, pairs, plans: list[str]) -> dict:
    outcome = validate_plan_set(grid, pairs, PlanSet(tuple(plans)))
    assert outcome.valid, f"{name}: fixture plans must be valid: {outcome.reasons()}"
    horizon = max((len(p) for p in plans), default=0)
    paths = [simulate(grid, start, plan) for (start, _), plan in zip(pairs, plans)]
    positions = [
        [list(path[min(t, len(path) - 1)]) for path in paths] for t in range(horizon + 1)
    ]
    return {
        "name": name,
        "width": grid.width,
        "height": grid.height,
        "pairs": [{"start": list(s), "goal": list(g)} for s, g in pairs],
        "plans": plans,
        "horizon": horizon,
        "positions": positions,
    }


def synthetic_cases() -> list[dict]:
    cases = []
    cases.append(
        playback_case(
            "two-lanes",
            open_grid(4, 3, "two-lanes"),
            [((0, 0), (3, 0)), ((0, 2), (3, 2))],
            ["rrr", "rrr"],
        )
    )
    # a queue moving in lockstep; every agent waits twice then walks right
    cases.append(
        playback_case(
            "corridor-queue",
            open_grid(8, 3, "corridor-queue"),
            [((0, 1), (5, 1)), ((1, 1), (6, 1)), ((2, 1), (7, 1))],
            ["wwrrrrr", "wwrrrrr", "wwrrrrr"],
        )
    )
    # reaches the goal, waits, leaves, comes back
    cases.append(
        playback_case(
            "leave-and-return",
            open_grid(5, 1, "leave-and-return"),
            [((0, 0), (2, 0))],
            ["rrwlr"],
        )
    )
    # plans of different lengths; the short one must hold position
    cases.append(
        playback_case(
            "mixed-horizons",
            open_grid(3, 6, "mixed-horizons"),
            [((0, 0), (1, 0)), ((2, 0), (2, 5))],
            ["r", "ddddd"],
        )
    )
    return cases


# --- seeded tracker behind a live app -----------------------------------

LANE_ROWS = ["." * 8] * 8
POCKET_ROWS = [
    "......",
    ".@@...",
    ".@@...",
    "......",
    "...@..",
    "......",
]


def map_text(rows: list[str]) -> str:
    return f"type octile\nheight {len(rows)}\nwidth {len(rows[0])}\nmap\n" + "\n".join(rows) + "\n"


def scen_text(map_file: str, w: int, h: int, pairs) -> str:
    lines = ["version 1"]
    for (sx, sy), (gx, gy), dist in pairs:
        lines.append(
            "\t".join(
                [str(int(dist) // 4), map_file, str(w), str(h), str(sx), str(sy), str(gx), str(gy), f"{dist:.8f}"]
            )
        )
    return "\n".join(lines) + "\n"


def submission_csv(rows: list[tuple]) -> str:
    out = [",".join(SUBMISSION_HEADER)]
    for map_name, scenario, agents, lb, cost, plan in rows:
        plan_field = f'"{plan}"' if plan else ""
        out.append(f"{map_name},{scenario},{agents},{lb},{cost},{plan_field}")
    return "\n".join(out) + "\n"


def build_tree(root: Path) -> None:
    (root / "maps").mkdir()
    (root / "scens").mkdir()
    (root / "maps" / "lane-8-8.map").write_text(map_text(LANE_ROWS))
    (root / "maps" / "pocket-6-6.map").write_text(map_text(POCKET_ROWS))
    # straight lanes: entry i runs along row i, so any prefix of entries
    # admits the conflict-free plan set everyone uses below
    even = [((0, i), (7, i), 7.0) for i in range(8)]
    (root / "scens" / "lane-8-8-even-1.scen").write_text(scen_text("lane-8-8.map", 8, 8, even))
    rand = [((7, i), (0, i), 7.0) for i in range(4)]
    (root / "scens" / "lane-8-8-random-1.scen").write_text(scen_text("lane-8-8.map", 8, 8, rand))
    pocket = [
        ((0, 0), (5, 0), 5.0),
        ((0, 3), (5, 3), 5.0),
        ((0, 5), (5, 5), 5.0),
        ((5, 1), (5, 4), 3.0),
    ]
    (root / "scens" / "pocket-6-6-even-1.scen").write_text(scen_text("pocket-6-6.map", 6, 6, pocket))
    (root / "domains.txt").write_text("Open: lane-8-8\nRoom: pocket-6-6\n")


def ingest(bench, store, algorithm: str, rows: list[tuple]) -> None:
    desc = f"algorithm: {algorithm}\nauthors: Fixture Crew\n"
    report = ingest_batch(load_batch(submission_csv(rows), desc), bench, store)
    assert report.rejected == 0, f"{algorithm}: fixture rows rejected: {report.outcomes}"


def seed(bench, store) -> None:
    lane = lambda k: ";".join(["rrrrrrr"] * k)  # noqa: E731
    slow_lane = lambda k: ";".join(["wrrrrrrr"] * k)  # noqa: E731
    ingest(
        bench,
        store,
        "lane-runner",
        # k <= 3 optimal (closed by the distance bound), k >= 4 pays one
        # wait per agent so a gap stays open for the scatter plot
        [("lane-8-8", "even-1", k, "", 7 * k, lane(k)) for k in (1, 2, 3)]
        + [("lane-8-8", "even-1", k, "", 8 * k, slow_lane(k)) for k in (4, 5, 6)]
        + [
            ("pocket-6-6", "even-1", 1, "", 5, "rrrrr"),
            ("pocket-6-6", "even-1", 2, "", 12, "wrrrrr;wrrrrr"),
        ],
    )
    ingest(
        bench,
        store,
        "width-bound",
        [("lane-8-8", "even-1", k, 7 * k, "", "") for k in (1, 2, 3)]
        + [("lane-8-8", "even-1", k, 7 * k + 1, "", "") for k in (4, 5, 6)]
        + [
            ("pocket-6-6", "even-1", 1, 5, "", ""),
            ("pocket-6-6", "even-1", 2, 11, "", ""),
        ],
    )
    ingest(
        bench,
        store,
        "drift-search",
        [("lane-8-8", "random-1", k, "", 7 * k, ";".join(["lllllll"] * k)) for k in (1, 2)],
    )


def capture(client: TestClient) -> tuple[dict, dict]:
    def get(path: str) -> dict | list:
        resp = client.get(path)
        assert resp.status_code == 200, f"{path}: {resp.status_code} {resp.text}"
        return resp.json()

    charts = {
        "progress_overall": get("/api/v1/progress"),
        "progress_by_map": get("/api/v1/progress?group_by=map"),
        "comparison_lane_solved": get("/api/v1/comparison?map=lane-8-8&metric=solved"),
        "comparison_table_closed": get("/api/v1/comparison?metric=closed"),
        "instances_lane_even": get("/api/v1/instances?map=lane-8-8&scenario=even-1&limit=1000"),
    }
    missing = client.get("/api/v1/plan?map=lane-8-8&scenario=even-1&agents=7")
    assert missing.status_code == 404
    charts["plan_missing"] = {"status": missing.status_code, "body": missing.json()}

    plan = get("/api/v1/plan?map=lane-8-8&scenario=even-1&agents=3")
    return charts, plan


def api_playback_case(plan_payload: dict) -> dict:
    grid = parse_map(map_text(LANE_ROWS), name="lane-8-8")
    pairs = [(tuple(p["start"]), tuple(p["goal"])) for p in plan_payload["pairs"]]
    case = playback_case("from-api", grid, pairs, list(plan_payload["plans"]))
    assert case["width"] == plan_payload["width"]
    assert case["height"] == plan_payload["height"]
    case["payload"] = plan_payload
    return case


def main() -> None:
    FIXTURES.mkdir(exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        build_tree(root)
        bench = load_benchmark(root)
        store = TrackingStore()
        seed(bench, store)
        client = TestClient(create_app(bench, store))
        charts, plan_payload = capture(client)

    cases = synthetic_cases()
    cases.append(api_playback_case(plan_payload))
    (FIXTURES / "playback_golden.json").write_text(json.dumps({"cases": cases}, indent=2) + "\n")
    (FIXTURES / "chart_golden.json").write_text(json.dumps(charts, indent=2) + "\n")
    total = sum(c["horizon"] + 1 for c in cases)
    print(f"wrote {len(cases)} playback cases ({total} timesteps) and {len(charts)} chart captures")


if __name__ == "__main__":
    main()
