"""Plan decoding, motion simulation, conflict detection and cost verdicts.

A single-agent plan is a string over {u, d, l, r, w}; input is
case-insensitive, the canonical form is lowercase. Multi-agent plans join
per-agent strings with ';' in scenario entry order. Agents act
simultaneously at integer timesteps; after its plan ends an agent stays at
its final position forever.

Cost convention (summed over agents): an agent's cost is the smallest T
such that it sits on its goal at every t >= T. Waiting on the goal at the
end is free; leaving the goal and coming back is not.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .bench import GridMap
from .errors import (
    GoalNotReached,
    IllegalCharacter,
    IntoObstacle,
    OutOfBounds,
)

ALPHABET = "udlrw"

# x grows to the right (columns), y grows downward (rows).
DELTAS: dict[str, tuple[int, int]] = {
    "u": (0, -1),
    "d": (0, 1),
    "l": (-1, 0),
    "r": (1, 0),
    "w": (0, 0),
}


class Action(Enum):
    UP = "u"
    DOWN = "d"
    LEFT = "l"
    RIGHT = "r"
    WAIT = "w"

    @property
    def delta(self) -> tuple[int, int]:
        return DELTAS[self.value]


def parse_plan(text: str) -> tuple[Action, ...]:
    """Decode one agent's plan string. Raises IllegalCharacter with position."""
    out = []
    for i, ch in enumerate(text):
        low = ch.lower()
        if low not in DELTAS:
            raise IllegalCharacter(ch, i)
        out.append(Action(low))
    return tuple(out)


def serialize_plan(actions: tuple[Action, ...] | str) -> str:
    """Canonical lowercase string form; inverse of parse_plan."""
    if isinstance(actions, str):
        return canonical_plan(actions)
    return "".join(a.value for a in actions)


def canonical_plan(text: str) -> str:
    """Lowercase and alphabet-check a plan string without building Actions."""
    low = text.lower()
    for i, ch in enumerate(low):
        if ch not in DELTAS:
            raise IllegalCharacter(text[i], i)
    return low


@dataclass(frozen=True)
class PlanSet:
    """Per-agent plans, stored canonically as lowercase strings."""

    plans: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "plans", tuple(canonical_plan(p) for p in self.plans))

    @classmethod
    def from_field(cls, text: str) -> "PlanSet":
        """Parse the joined wire form: per-agent strings separated by ';'."""
        return cls(plans=tuple(text.split(";")))

    def to_field(self) -> str:
        return ";".join(self.plans)

    @property
    def agents(self) -> int:
        return len(self.plans)

    @property
    def horizon(self) -> int:
        return max((len(p) for p in self.plans), default=0)


def simulate(
    grid: GridMap, start: tuple[int, int], actions: str | tuple[Action, ...]
) -> list[tuple[int, int]]:
    """Positions at t = 0..len(actions). Raises OutOfBounds/IntoObstacle
    carrying the timestep of the offending arrival."""
    if isinstance(actions, str):
        moves = canonical_plan(actions)
    else:
        moves = "".join(a.value for a in actions)
    w, h = grid.width, grid.height
    cells = grid.cells
    x, y = start
    if not (0 <= x < w and 0 <= y < h):
        raise OutOfBounds(f"start {start} outside {w}x{h}", 0)
    if cells[y * w + x] != 1:
        raise IntoObstacle(f"start {start} is blocked", 0)
    path = [(x, y)]
    append = path.append
    deltas = DELTAS
    for t, ch in enumerate(moves, start=1):
        dx, dy = deltas[ch]
        x += dx
        y += dy
        if not (0 <= x < w and 0 <= y < h):
            raise OutOfBounds(f"({x}, {y}) at t={t}", t)
        if cells[y * w + x] != 1:
            raise IntoObstacle(f"({x}, {y}) at t={t}", t)
        append((x, y))
    return path


def agent_cost(path: list[tuple[int, int]], goal: tuple[int, int]) -> int:
    """Smallest T with path[t] == goal for every t >= T.

    Trailing waits on the goal are free; an agent that leaves the goal pays
    until its final arrival. Raises GoalNotReached when the path does not
    end on the goal.
    """
    if path[-1] != goal:
        raise GoalNotReached(f"path ends at {path[-1]}, goal is {goal}")
    t = len(path) - 1
    while t > 0 and path[t - 1] == goal:
        t -= 1
    return t


@dataclass(frozen=True)
class Conflict:
    """kind 'vertex': two agents share a cell at `time` (location = cell).
    kind 'edge': a swap between t-1 and t (location = agent i's traversal
    as an ordered cell pair). agents is always (i, j) with i < j."""

    kind: str
    agents: tuple[int, int]
    time: int
    location: tuple

    def describe(self) -> str:
        i, j = self.agents
        if self.kind == "vertex":
            return f"vertex: agents {i},{j} share {self.location} at t={self.time}"
        a, b = self.location
        return f"edge: agents {i},{j} swap {a}<->{b} at t={self.time}"


# Above this many position samples the scan switches to the vectorized path.
_NUMPY_CUTOFF = 40_000


def find_conflicts(paths: list[list[tuple[int, int]]]) -> list[Conflict]:
    """All vertex and edge conflicts among the given paths.

    Agents whose path is shorter than the common horizon are padded by
    repeating their final position. Vertex conflicts are reported from t=0,
    edge conflicts from t=1 and only for actual movement; two agents parked
    on one cell already surface as vertex conflicts. Output is sorted by
    (time, i, j), vertex before edge on ties.
    """
    if not paths:
        return []
    for i, p in enumerate(paths):
        if not p:
            raise ValueError(f"agent {i}: empty path")
    stride = max(x for p in paths for x, _ in p) + 1
    encoded = [[y * stride + x for (x, y) in p] for p in paths]
    return _scan(encoded, stride)


def _scan(encoded: list[list[int]], stride: int) -> list[Conflict]:
    horizon = max(len(p) for p in encoded) - 1
    samples = len(encoded) * (horizon + 1)
    if samples > _NUMPY_CUTOFF:
        conflicts = _scan_vectorized(encoded, horizon, stride)
    else:
        conflicts = _scan_simple(encoded, horizon, stride)
    conflicts.sort(key=lambda c: (c.time, c.agents, c.kind != "vertex"))
    return conflicts


def _decode(cell: int, stride: int) -> tuple[int, int]:
    y, x = divmod(cell, stride)
    return (x, y)


def _scan_simple(encoded: list[list[int]], horizon: int, stride: int) -> list[Conflict]:
    n = len(encoded)
    # Pad by repeating the final cell so indexing below never goes past the end.
    padded = [p if len(p) == horizon + 1 else p + [p[-1]] * (horizon + 1 - len(p)) for p in encoded]
    out: list[Conflict] = []
    for t in range(horizon + 1):
        occupants: dict[int, int | list[int]] = {}
        for i in range(n):
            c = padded[i][t]
            prev = occupants.get(c)
            if prev is None:
                occupants[c] = i
            elif isinstance(prev, int):
                occupants[c] = [prev, i]
            else:
                prev.append(i)
        for c, who in occupants.items():
            if isinstance(who, list):
                loc = _decode(c, stride)
                for a in range(len(who)):
                    for b in range(a + 1, len(who)):
                        out.append(Conflict("vertex", (who[a], who[b]), t, loc))
    for t in range(1, horizon + 1):
        movers: dict[tuple[int, int], int | list[int]] = {}
        for i in range(n):
            a, b = padded[i][t - 1], padded[i][t]
            if a == b:
                continue
            prev = movers.get((a, b))
            if prev is None:
                movers[(a, b)] = i
            elif isinstance(prev, int):
                movers[(a, b)] = [prev, i]
            else:
                prev.append(i)
        for (a, b), who in movers.items():
            if a > b:
                continue  # handle each undirected edge once, from its low end
            opposite = movers.get((b, a))
            if opposite is None:
                continue
            forward = who if isinstance(who, list) else [who]
            backward = opposite if isinstance(opposite, list) else [opposite]
            for i in forward:
                for j in backward:
                    lo, hi = (i, j) if i < j else (j, i)
                    # location is agent lo's traversal direction
                    cells = (a, b) if lo == i else (b, a)
                    out.append(
                        Conflict(
                            "edge",
                            (lo, hi),
                            t,
                            (_decode(cells[0], stride), _decode(cells[1], stride)),
                        )
                    )
    return out


def _scan_vectorized(encoded: list[list[int]], horizon: int, stride: int) -> list[Conflict]:
    n = len(encoded)
    pos = np.empty((n, horizon + 1), dtype=np.int64)
    for i, p in enumerate(encoded):
        pos[i, : len(p)] = p
        if len(p) <= horizon:
            pos[i, len(p) :] = p[-1]

    out: list[Conflict] = []

    # Vertex: a column with duplicate values after sorting has a collision.
    srt = np.sort(pos, axis=0)
    dup_cols = np.nonzero((srt[1:] == srt[:-1]).any(axis=0))[0]
    for t in dup_cols:
        col = pos[:, t]
        occupants: dict[int, list[int]] = {}
        for i, c in enumerate(col.tolist()):
            occupants.setdefault(c, []).append(i)
        for c, who in occupants.items():
            if len(who) > 1:
                loc = _decode(c, stride)
                for a in range(len(who)):
                    for b in range(a + 1, len(who)):
                        out.append(Conflict("vertex", (who[a], who[b]), int(t), loc))

    # Edge: key each actual move by its undirected edge; rows that share a
    # key in one column are either a swap or a same-direction pair (the
    # latter is a vertex conflict, filtered by comparing directions).
    if horizon >= 1:
        frm = pos[:, :-1]
        to = pos[:, 1:]
        moving = frm != to
        big = np.int64(stride) * np.int64(stride) * 4 + 7
        key = np.where(
            moving,
            np.minimum(frm, to) * big + np.maximum(frm, to),
            -1 - np.arange(n, dtype=np.int64)[:, None],
        )
        ksrt = np.sort(key, axis=0)
        cand_cols = np.nonzero(((ksrt[1:] == ksrt[:-1]) & (ksrt[1:] >= 0)).any(axis=0))[0]
        for col in cand_cols:
            t = int(col) + 1
            groups: dict[int, list[int]] = {}
            kcol = key[:, col].tolist()
            for i, k in enumerate(kcol):
                if k >= 0:
                    groups.setdefault(k, []).append(i)
            for k, who in groups.items():
                if len(who) < 2:
                    continue
                for a in range(len(who)):
                    for b in range(a + 1, len(who)):
                        i, j = who[a], who[b]
                        if pos[i, col] == pos[j, col + 1] and pos[i, col + 1] == pos[j, col]:
                            out.append(
                                Conflict(
                                    "edge",
                                    (i, j),
                                    t,
                                    (
                                        _decode(int(pos[i, col]), stride),
                                        _decode(int(pos[i, col + 1]), stride),
                                    ),
                                )
                            )
    return out


@dataclass(frozen=True)
class AgentFault:
    """A per-agent failure found while simulating a plan set."""

    agent: int
    error: str  # out-of-bounds | into-obstacle | goal-not-reached
    time: int | None = None
    detail: str = ""

    def describe(self) -> str:
        at = f" at t={self.time}" if self.time is not None else ""
        return f"agent {self.agent}: {self.error}{at} ({self.detail})"


@dataclass(frozen=True)
class ValidationOutcome:
    """Verdict for a plan set against one instance.

    computed_cost is present exactly when every agent simulates cleanly and
    ends on its goal; conflicts may still make the outcome invalid. valid
    means no faults, no conflicts and, when a cost was claimed, an exact
    match with the computed one.
    """

    valid: bool
    computed_cost: int | None
    conflicts: tuple[Conflict, ...]
    per_agent_errors: tuple[AgentFault, ...]
    claimed_cost: int | None = None
    cost_mismatch: bool = False

    def reasons(self) -> list[str]:
        out = [f.describe() for f in self.per_agent_errors]
        out.extend(c.describe() for c in self.conflicts)
        if self.cost_mismatch:
            out.append(
                f"cost mismatch: claimed {self.claimed_cost}, computed {self.computed_cost}"
            )
        return out


def validate_plan_set(
    grid: GridMap,
    pairs: list[tuple[tuple[int, int], tuple[int, int]]],
    plans: PlanSet,
    claimed_cost: int | None = None,
) -> ValidationOutcome:
    """Full verdict: per-agent simulation, pairwise conflicts, cost check."""
    if len(pairs) != plans.agents:
        raise ValueError(f"{len(pairs)} agent pairs but {plans.agents} plans")
    faults: list[AgentFault] = []
    paths: list[list[int] | None] = []
    costs: list[int] = []
    w, h = grid.width, grid.height
    cells = grid.cells
    deltas = DELTAS
    for i, ((sx, sy), goal) in enumerate(pairs):
        moves = plans.plans[i]
        x, y = sx, sy
        if not (0 <= x < w and 0 <= y < h):
            faults.append(AgentFault(i, "out-of-bounds", 0, f"start ({x}, {y})"))
            paths.append(None)
            continue
        if cells[y * w + x] != 1:
            faults.append(AgentFault(i, "into-obstacle", 0, f"start ({x}, {y}) blocked"))
            paths.append(None)
            continue
        ids = [y * w + x]
        append = ids.append
        fault = None
        for t, ch in enumerate(moves, start=1):
            dx, dy = deltas[ch]
            x += dx
            y += dy
            if not (0 <= x < w and 0 <= y < h):
                fault = AgentFault(i, "out-of-bounds", t, f"({x}, {y})")
                break
            c = y * w + x
            if cells[c] != 1:
                fault = AgentFault(i, "into-obstacle", t, f"({x}, {y})")
                break
            append(c)
        if fault is not None:
            faults.append(fault)
            paths.append(None)
            continue
        paths.append(ids)
        gc = goal[1] * w + goal[0]
        if ids[-1] != gc:
            faults.append(
                AgentFault(i, "goal-not-reached", None, f"ends at ({x}, {y}), goal {goal}")
            )
        else:
            t = len(ids) - 1
            while t > 0 and ids[t - 1] == gc:
                t -= 1
            costs.append(t)

    # Conflicts are scanned over agents that simulated cleanly; indices in
    # the report refer to the original plan order.
    clean = [(i, p) for i, p in enumerate(paths) if p is not None]
    conflicts: list[Conflict] = []
    if clean:
        index_map = [i for i, _ in clean]
        raw = _scan([p for _, p in clean], w)
        for c in raw:
            a, b = c.agents
            conflicts.append(
                Conflict(c.kind, (index_map[a], index_map[b]), c.time, c.location)
            )

    computed = sum(costs) if len(costs) == len(pairs) else None
    mismatch = (
        claimed_cost is not None and computed is not None and claimed_cost != computed
    )
    valid = not faults and not conflicts and not mismatch and computed is not None
    return ValidationOutcome(
        valid=valid,
        computed_cost=computed,
        conflicts=tuple(conflicts),
        per_agent_errors=tuple(faults),
        claimed_cost=claimed_cost,
        cost_mismatch=mismatch,
    )
