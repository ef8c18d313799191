"""Independent reference implementations used to cross-check the library.

Everything here works on plain string rows and tuple positions, shares no
code with the package, and favors obviousness over speed: BFS on a dict,
O(n^2) pairwise conflict scans over a materialized occupancy table, and a
brute-force arrival-time search. Keep it that way; these are the oracles.
"""

from __future__ import annotations

from collections import deque

PASSABLE = ".G"

STEP = {"u": (0, -1), "d": (0, 1), "l": (-1, 0), "r": (1, 0), "w": (0, 0)}


def free(rows: list[str], x: int, y: int) -> bool:
    return 0 <= y < len(rows) and 0 <= x < len(rows[0]) and rows[y][x] in PASSABLE


def free_cells(rows: list[str]) -> list[tuple[int, int]]:
    return [
        (x, y)
        for y in range(len(rows))
        for x in range(len(rows[0]))
        if rows[y][x] in PASSABLE
    ]


def bfs_field(rows: list[str], source: tuple[int, int]) -> dict[tuple[int, int], int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        x, y = queue.popleft()
        for dx, dy in ((0, -1), (0, 1), (-1, 0), (1, 0)):
            nxt = (x + dx, y + dy)
            if free(rows, *nxt) and nxt not in dist:
                dist[nxt] = dist[(x, y)] + 1
                queue.append(nxt)
    return dist


def bfs_dist(rows: list[str], s: tuple[int, int], g: tuple[int, int]) -> int | None:
    return bfs_field(rows, s).get(g)


def all_pairs_diameter(rows: list[str]) -> int:
    """Max shortest-path distance inside the largest connected component.

    Ties between equally large components break toward the one containing
    the smallest row-major cell, mirroring the documented convention.
    """
    cells = free_cells(rows)
    seen: set[tuple[int, int]] = set()
    components: list[list[tuple[int, int]]] = []
    for c in sorted(cells, key=lambda p: (p[1], p[0])):
        if c in seen:
            continue
        comp = sorted(bfs_field(rows, c), key=lambda p: (p[1], p[0]))
        seen.update(comp)
        components.append(comp)
    components.sort(key=lambda comp: (-len(comp), (comp[0][1], comp[0][0])))
    best = 0
    for src in components[0]:
        field = bfs_field(rows, src)
        best = max(best, max(field.values()))
    return best


def walk(rows: list[str], start: tuple[int, int], plan: str) -> list[tuple[int, int]]:
    """Simulate one agent; raises ValueError on the first illegal step."""
    if not free(rows, *start):
        raise ValueError(f"bad start {start}")
    pos = [start]
    x, y = start
    for t, ch in enumerate(plan, start=1):
        dx, dy = STEP[ch]
        x, y = x + dx, y + dy
        if not free(rows, x, y):
            raise ValueError(f"illegal step at t={t}")
        pos.append((x, y))
    return pos


def smallest_arrival(path: list[tuple[int, int]], goal: tuple[int, int]) -> int:
    """Brute-force smallest T with path[t] == goal for all t >= T."""
    if path[-1] != goal:
        raise ValueError("path does not end at goal")
    for t in range(len(path)):
        if all(p == goal for p in path[t:]):
            return t
    raise AssertionError("unreachable: last position is the goal")


def occupancy_conflicts(paths: list[list[tuple[int, int]]]):
    """Every vertex/edge conflict from the full agent x timestep table.

    An edge conflict is a swap: the two agents traverse the same edge in
    opposite directions, which requires actual movement (two agents parked
    on one cell are a vertex conflict, not an edge conflict). Sorted the
    same way the library sorts: time, agent pair, vertex before edge.
    """
    horizon = max(len(p) for p in paths) - 1
    pos = [[p[t] if t < len(p) else p[-1] for t in range(horizon + 1)] for p in paths]
    n = len(paths)
    found = []
    for t in range(horizon + 1):
        for i in range(n):
            for j in range(i + 1, n):
                if pos[i][t] == pos[j][t]:
                    found.append(("vertex", (i, j), t, pos[i][t]))
        if t == 0:
            continue
        for i in range(n):
            for j in range(i + 1, n):
                if (
                    pos[i][t - 1] == pos[j][t]
                    and pos[i][t] == pos[j][t - 1]
                    and pos[i][t - 1] != pos[i][t]
                ):
                    found.append(("edge", (i, j), t, (pos[i][t - 1], pos[i][t])))
    found.sort(key=lambda c: (c[2], c[1], c[0] != "vertex"))
    return found


def conflict_tuples(conflicts) -> list[tuple]:
    """Library Conflict objects in the oracle's tuple shape."""
    return [(c.kind, c.agents, c.time, c.location) for c in conflicts]
