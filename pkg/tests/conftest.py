from __future__ import annotations

import random
from collections import deque
from pathlib import Path

import pytest

from mapftrack.bench import GridMap, load_benchmark, parse_map, write_scenario
from mapftrack.bounds import generate_even_scenario, generate_random_scenario
from mapftrack.ingest import SUBMISSION_HEADER, ingest_batch, load_batch
from mapftrack.tracking import TrackingStore


def grid_from_rows(rows: list[str], name: str = "fixture") -> GridMap:
    h, w = len(rows), len(rows[0])
    text = f"type octile\nheight {h}\nwidth {w}\nmap\n" + "\n".join(rows) + "\n"
    return parse_map(text, name=name)


def map_text(rows: list[str]) -> str:
    h, w = len(rows), len(rows[0])
    return f"type octile\nheight {h}\nwidth {w}\nmap\n" + "\n".join(rows) + "\n"


def bfs_plan(grid: GridMap, start: tuple[int, int], goal: tuple[int, int]) -> str:
    """One shortest-path plan string for a single agent, ignoring others."""
    if start == goal:
        return ""
    prev: dict[tuple[int, int], tuple[int, int] | None] = {start: None}
    queue = deque([start])
    names = {(0, -1): "u", (0, 1): "d", (-1, 0): "l", (1, 0): "r"}
    while queue:
        cur = queue.popleft()
        if cur == goal:
            break
        for dx, dy in names:
            nxt = (cur[0] + dx, cur[1] + dy)
            if grid.in_bounds(*nxt) and grid.is_traversable(*nxt) and nxt not in prev:
                prev[nxt] = cur
                queue.append(nxt)
    if goal not in prev:
        raise AssertionError(f"no path {start} -> {goal} on {grid.name}")
    chars = []
    cur = goal
    while prev[cur] is not None:
        before = prev[cur]
        chars.append(names[(cur[0] - before[0], cur[1] - before[1])])
        cur = before
    return "".join(reversed(chars))


def random_rows(rng: random.Random, width: int, height: int, p_block: float) -> list[str]:
    while True:
        rows = [
            "".join("." if rng.random() > p_block else "@" for _ in range(width))
            for _ in range(height)
        ]
        if any("." in row for row in rows):
            return rows


def submission_csv(rows: list[tuple]) -> str:
    """rows: (map_name, scenario, agents, lb or '', cost or '', plan or '')."""
    out = [",".join(SUBMISSION_HEADER)]
    for map_name, scenario, agents, lb, cost, plan in rows:
        plan_field = f'"{plan}"' if plan else ""
        out.append(f"{map_name},{scenario},{agents},{lb},{cost},{plan_field}")
    return "\n".join(out) + "\n"


def descriptor_text(algorithm: str, authors: str = "Test Team", **extra: str) -> str:
    lines = [f"algorithm: {algorithm}", f"authors: {authors}"]
    for key, value in extra.items():
        lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


def ingest_rows(bench, store: TrackingStore, rows: list[tuple], algorithm: str, salt: str = ""):
    """Shorthand: build a batch from tuples and push it through ingestion."""
    desc = descriptor_text(algorithm)
    if salt:
        desc += f"references: {salt}\n"
    raw = load_batch(submission_csv(rows), desc)
    return ingest_batch(raw, bench, store)


@pytest.fixture
def empty8() -> GridMap:
    return grid_from_rows(["." * 8] * 8, name="empty-8-8")


@pytest.fixture
def pocket6() -> GridMap:
    # small map with a central obstacle block
    return grid_from_rows(
        [
            "......",
            ".@@...",
            ".@@...",
            "......",
            "...@..",
            "......",
        ],
        name="pocket-6-6",
    )


@pytest.fixture
def bench_root(tmp_path: Path) -> Path:
    """A miniature benchmark tree: two maps, even+random scenarios each."""
    (tmp_path / "maps").mkdir()
    (tmp_path / "scens").mkdir()
    layouts = {
        "empty-8-8": ["." * 8] * 8,
        "pocket-6-6": [
            "......",
            ".@@...",
            ".@@...",
            "......",
            "...@..",
            "......",
        ],
    }
    for name, rows in layouts.items():
        (tmp_path / "maps" / f"{name}.map").write_text(map_text(rows))
        grid = grid_from_rows(rows, name=name)
        even = generate_even_scenario(grid, seed=11)
        (tmp_path / "scens" / f"{name}-even-1.scen").write_text(write_scenario(even))
        rand = generate_random_scenario(grid, n=6, seed=5)
        (tmp_path / "scens" / f"{name}-random-1.scen").write_text(write_scenario(rand))
    (tmp_path / "domains.txt").write_text("Open: empty-8-8\nRoom: pocket-6-6\n")
    return tmp_path


@pytest.fixture
def bench(bench_root: Path):
    return load_benchmark(bench_root)


@pytest.fixture
def store() -> TrackingStore:
    return TrackingStore()


@pytest.fixture
def disk_store(tmp_path: Path) -> TrackingStore:
    return TrackingStore(tmp_path / "events.jsonl")
