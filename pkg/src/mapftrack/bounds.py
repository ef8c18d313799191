"""Shortest-path machinery: distances, trivial lower bounds, diameter,
and deterministic scenario generation.

The trivial lower bound for an instance is the sum of single-agent
shortest-path distances, ignoring interactions entirely. It is sound for
the cost convention used here because every agent must pay at least its
own distance before it can park on its goal.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass

from .bench import GridMap, ScenEntry, Scenario
from .errors import (
    BucketUnsatisfiable,
    DegenerateLowerBound,
    InconsistentBounds,
    NonTraversableEndpoint,
    NotEnoughCells,
    UnreachablePair,
)

UNREACHABLE = -1

PAIRS_PER_BUCKET = 10
BUCKET_SPAN = 4


@dataclass(frozen=True)
class DistanceField:
    """BFS distances from one source to every cell; -1 means unreachable."""

    source: tuple[int, int]
    width: int
    height: int
    dist: tuple[int, ...]

    def at(self, x: int, y: int) -> int:
        return self.dist[y * self.width + x]


def distance_field(grid: GridMap, source: tuple[int, int]) -> DistanceField:
    dist = _bfs(grid, source)
    return DistanceField(
        source=source, width=grid.width, height=grid.height, dist=tuple(dist)
    )


def _bfs(grid: GridMap, source: tuple[int, int]) -> list[int]:
    sx, sy = source
    if not grid.is_traversable(sx, sy):
        raise NonTraversableEndpoint(f"source {source} is blocked or outside the map")
    w, h = grid.width, grid.height
    cells = grid.cells
    dist = [UNREACHABLE] * (w * h)
    start = sy * w + sx
    dist[start] = 0
    queue = deque([start])
    while queue:
        c = queue.popleft()
        d = dist[c] + 1
        x, y = c % w, c // w
        if x > 0 and cells[c - 1] == 1 and dist[c - 1] < 0:
            dist[c - 1] = d
            queue.append(c - 1)
        if x + 1 < w and cells[c + 1] == 1 and dist[c + 1] < 0:
            dist[c + 1] = d
            queue.append(c + 1)
        if y > 0 and cells[c - w] == 1 and dist[c - w] < 0:
            dist[c - w] = d
            queue.append(c - w)
        if y + 1 < h and cells[c + w] == 1 and dist[c + w] < 0:
            dist[c + w] = d
            queue.append(c + w)
    return dist


def shortest_path_dist(
    grid: GridMap, start: tuple[int, int], goal: tuple[int, int]
) -> int | None:
    """Exact 4-connected distance, or None when no path exists."""
    if not grid.is_traversable(*goal):
        raise NonTraversableEndpoint(f"goal {goal} is blocked or outside the map")
    d = _bfs(grid, start)[goal[1] * grid.width + goal[0]]
    return None if d < 0 else d


def agent_distances(
    grid: GridMap, pairs: list[tuple[tuple[int, int], tuple[int, int]]]
) -> list[int]:
    """Per-agent shortest-path distances. Raises UnreachablePair(agent)."""
    fields: dict[tuple[int, int], list[int]] = {}
    out = []
    w = grid.width
    for i, (start, goal) in enumerate(pairs):
        if not grid.is_traversable(*start):
            raise NonTraversableEndpoint(f"agent {i}: start {start} unusable")
        if not grid.is_traversable(*goal):
            raise NonTraversableEndpoint(f"agent {i}: goal {goal} unusable")
        field = fields.get(start)
        if field is None:
            field = _bfs(grid, start)
            fields[start] = field
        d = field[goal[1] * w + goal[0]]
        if d < 0:
            raise UnreachablePair(i)
        out.append(d)
    return out


def trivial_lower_bound(
    grid: GridMap, pairs: list[tuple[tuple[int, int], tuple[int, int]]]
) -> int:
    """Sum of single-agent shortest-path distances."""
    return sum(agent_distances(grid, pairs))


def suboptimality_ratio(lower_bound: int, cost: int) -> float:
    """(cost - lower_bound) / lower_bound.

    Zero exactly when the bounds meet. The 0/0 case is defined as 0.0; a
    positive cost over a zero bound has no finite ratio and raises.
    """
    if lower_bound < 0 or cost < 0:
        raise InconsistentBounds(f"negative bound: L={lower_bound}, S={cost}")
    if cost < lower_bound:
        raise InconsistentBounds(f"cost {cost} below lower bound {lower_bound}")
    if lower_bound == 0:
        if cost == 0:
            return 0.0
        raise DegenerateLowerBound(f"lower bound 0 with cost {cost}")
    return (cost - lower_bound) / lower_bound


def _components(grid: GridMap) -> list[list[int]]:
    """Connected components as lists of cell ids, largest first.

    Ties on size break toward the component containing the smallest cell id
    so everything downstream is deterministic.
    """
    w = grid.width
    seen = bytearray(len(grid.cells))
    comps: list[list[int]] = []
    for c0, passable in enumerate(grid.cells):
        if passable != 1 or seen[c0]:
            continue
        comp = [c0]
        seen[c0] = 1
        queue = deque([c0])
        cells = grid.cells
        h = grid.height
        while queue:
            c = queue.popleft()
            x, y = c % w, c // w
            for nc in (
                c - 1 if x > 0 else -1,
                c + 1 if x + 1 < w else -1,
                c - w if y > 0 else -1,
                c + w if y + 1 < h else -1,
            ):
                if nc >= 0 and cells[nc] == 1 and not seen[nc]:
                    seen[nc] = 1
                    comp.append(nc)
                    queue.append(nc)
        comps.append(comp)
    comps.sort(key=lambda comp: (-len(comp), comp[0]))
    return comps


def map_diameter(grid: GridMap) -> int:
    """Exact max shortest-path distance within the largest component."""
    comps = _components(grid)
    if not comps:
        raise NonTraversableEndpoint(f"{grid.name}: no traversable cells")
    largest = comps[0]
    w = grid.width
    best = 0
    for c in largest:
        field = _bfs(grid, (c % w, c // w))
        m = max(field[other] for other in largest)
        if m > best:
            best = m
    return best


def generate_even_scenario(grid: GridMap, seed: int, index: int = 1) -> Scenario:
    """Distance-bucketed scenario: floor(d_max / 4) + 1 buckets, 10 pairs
    each, bucket i drawn uniformly without replacement from ordered pairs
    whose distance lies in [4i, 4i + 4]. Deterministic per seed.

    Start = goal pairs are excluded. A bucket with fewer than 10 candidate
    pairs raises BucketUnsatisfiable.
    """
    comps = _components(grid)
    if not comps:
        raise NonTraversableEndpoint(f"{grid.name}: no traversable cells")
    d_max = map_diameter(grid)
    n_buckets = d_max // BUCKET_SPAN + 1
    rng = random.Random(seed)

    # One pass over all ordered reachable pairs, keeping a uniform
    # without-replacement reservoir per bucket (algorithm R). Pair order is
    # row-major source then row-major target, so a fixed seed replays the
    # same choices byte for byte.
    reservoirs: list[list[tuple[int, int]]] = [[] for _ in range(n_buckets)]
    counts = [0] * n_buckets
    w = grid.width
    all_cells = [c for comp in comps for c in comp]
    all_cells.sort()
    for src in all_cells:
        field = _bfs(grid, (src % w, src // w))
        for dst in all_cells:
            d = field[dst]
            if d < 1:
                continue  # unreachable or the source itself
            # buckets b with b*4 <= d <= b*4 + 4
            lo = max(0, (d + BUCKET_SPAN - 1) // BUCKET_SPAN - 1)
            hi = min(d // BUCKET_SPAN, n_buckets - 1)
            for b in range(lo, hi + 1):
                if b * BUCKET_SPAN <= d <= b * BUCKET_SPAN + BUCKET_SPAN:
                    counts[b] += 1
                    res = reservoirs[b]
                    if len(res) < PAIRS_PER_BUCKET:
                        res.append((src, dst))
                    else:
                        j = rng.randrange(counts[b])
                        if j < PAIRS_PER_BUCKET:
                            res[j] = (src, dst)
    for b in range(n_buckets):
        if counts[b] < PAIRS_PER_BUCKET:
            raise BucketUnsatisfiable(b, counts[b], PAIRS_PER_BUCKET)

    entries: list[ScenEntry] = []
    dist_cache: dict[int, list[int]] = {}
    for b, res in enumerate(reservoirs):
        for src, dst in res:
            field = dist_cache.get(src)
            if field is None:
                field = _bfs(grid, (src % w, src // w))
                dist_cache[src] = field
            entries.append(
                ScenEntry(
                    bucket=b,
                    map_name=f"{grid.name}.map",
                    map_width=grid.width,
                    map_height=grid.height,
                    start=(src % w, src // w),
                    goal=(dst % w, dst // w),
                    ref_distance=float(field[dst]),
                )
            )
    return Scenario(map_name=grid.name, kind="even", index=index, entries=tuple(entries))


def generate_random_scenario(grid: GridMap, n: int, seed: int, index: int = 1) -> Scenario:
    """n start/goal pairs: starts pairwise distinct, goals pairwise
    distinct, each goal drawn from its start's connected component so the
    pair is always solvable. Deterministic per seed."""
    cells = [grid.cell_id(x, y) for (x, y) in grid.traversable_cells()]
    if n < 1:
        raise NotEnoughCells(f"need at least 1 pair, got n={n}")
    if n > len(cells):
        raise NotEnoughCells(f"{n} agents but only {len(cells)} traversable cells")
    rng = random.Random(seed)
    starts = rng.sample(cells, n)

    comp_of: dict[int, int] = {}
    comps = _components(grid)
    for ci, comp in enumerate(comps):
        for c in comp:
            comp_of[c] = ci
    pools: list[list[int]] = [sorted(comp) for comp in comps]

    w = grid.width
    entries: list[ScenEntry] = []
    dist_cache: dict[int, list[int]] = {}
    for i, src in enumerate(starts):
        pool = pools[comp_of[src]]
        # Prefer a goal that differs from the start; fall back only when the
        # component has nothing else left.
        choices = [c for c in pool if c != src] or list(pool)
        dst = choices[rng.randrange(len(choices))]
        pool.remove(dst)
        field = dist_cache.get(src)
        if field is None:
            field = _bfs(grid, (src % w, src // w))
            dist_cache[src] = field
        entries.append(
            ScenEntry(
                bucket=i // 10,
                map_name=f"{grid.name}.map",
                map_width=grid.width,
                map_height=grid.height,
                start=(src % w, src // w),
                goal=(dst % w, dst // w),
                ref_distance=float(field[dst]),
            )
        )
    return Scenario(map_name=grid.name, kind="random", index=index, entries=tuple(entries))
