from __future__ import annotations

import random

import pytest

import _oracles as oracle
from conftest import bfs_plan, grid_from_rows, random_rows
from mapftrack.errors import (
    GoalNotReached,
    IllegalCharacter,
    IntoObstacle,
    OutOfBounds,
)
from mapftrack.validate import (
    Action,
    PlanSet,
    agent_cost,
    canonical_plan,
    find_conflicts,
    parse_plan,
    serialize_plan,
    simulate,
    validate_plan_set,
)
from mapftrack.validate import _scan_simple, _scan_vectorized


class TestParsePlan:
    def test_alphabet(self):
        actions = parse_plan("udlrw")
        assert [a.value for a in actions] == ["u", "d", "l", "r", "w"]

    def test_empty(self):
        assert parse_plan("") == ()

    def test_case_insensitive(self):
        assert parse_plan("UdLrW") == parse_plan("udlrw")

    def test_illegal_character_position(self):
        with pytest.raises(IllegalCharacter) as exc:
            parse_plan("ux")
        assert exc.value.index == 1
        assert exc.value.char == "x"

    def test_roundtrip(self):
        rng = random.Random(3)
        for _ in range(50):
            text = "".join(rng.choice("udlrw") for _ in range(rng.randint(0, 20)))
            assert serialize_plan(parse_plan(text)) == text

    def test_canonical_plan(self):
        assert canonical_plan("RRdW") == "rrdw"
        with pytest.raises(IllegalCharacter):
            canonical_plan("rr dw")

    def test_action_deltas(self):
        assert Action.UP.delta == (0, -1)
        assert Action.DOWN.delta == (0, 1)
        assert Action.LEFT.delta == (-1, 0)
        assert Action.RIGHT.delta == (1, 0)
        assert Action.WAIT.delta == (0, 0)


class TestSimulate:
    def test_straight_line(self):
        grid = grid_from_rows(["..."] * 3)
        assert simulate(grid, (0, 0), "rrd") == [(0, 0), (1, 0), (2, 0), (2, 1)]

    def test_out_of_bounds_timestep(self):
        grid = grid_from_rows(["..."] * 3)
        with pytest.raises(OutOfBounds) as exc:
            simulate(grid, (0, 0), "u")
        assert exc.value.time == 1

    def test_into_obstacle_timestep(self):
        grid = grid_from_rows([".@.", "...", "..."])
        with pytest.raises(IntoObstacle) as exc:
            simulate(grid, (0, 0), "r")
        assert exc.value.time == 1

    def test_blocked_start(self):
        grid = grid_from_rows([".@.", "...", "..."])
        with pytest.raises(IntoObstacle) as exc:
            simulate(grid, (1, 0), "w")
        assert exc.value.time == 0

    def test_agrees_with_reference_walk(self):
        rng = random.Random(41)
        for _ in range(200):
            rows = random_rows(rng, rng.randint(2, 7), rng.randint(2, 7), 0.2)
            grid = grid_from_rows(rows)
            cells = oracle.free_cells(rows)
            start = cells[rng.randrange(len(cells))]
            plan = "".join(rng.choice("udlrw") for _ in range(rng.randint(0, 10)))
            try:
                expected = oracle.walk(rows, start, plan)
            except ValueError:
                with pytest.raises((OutOfBounds, IntoObstacle)):
                    simulate(grid, start, plan)
            else:
                assert simulate(grid, start, plan) == expected


class TestAgentCost:
    # values computed with the brute-force smallest-arrival oracle
    FROZEN = [
        ("rrww", (0, 0), (2, 0), 2),
        ("wrr", (0, 0), (2, 0), 3),
        ("rrllrr", (0, 0), (2, 0), 6),
        ("", (1, 1), (1, 1), 0),
        ("rlrl", (0, 0), (0, 0), 4),
    ]

    @pytest.mark.parametrize("plan,start,goal,expected", FROZEN)
    def test_frozen_cases(self, plan, start, goal, expected):
        grid = grid_from_rows(["....."] * 5)
        path = simulate(grid, start, plan)
        assert agent_cost(path, goal) == expected

    def test_goal_not_reached(self):
        grid = grid_from_rows(["..."])
        path = simulate(grid, (0, 0), "r")
        with pytest.raises(GoalNotReached):
            agent_cost(path, (2, 0))

    def test_matches_oracle_on_random_paths(self):
        rng = random.Random(99)
        grid = grid_from_rows(["......"] * 6)
        rows = ["......"] * 6
        for _ in range(300):
            start = (rng.randrange(6), rng.randrange(6))
            plan = "".join(rng.choice("udlrw") for _ in range(rng.randint(0, 12)))
            try:
                path = oracle.walk(rows, start, plan)
            except ValueError:
                continue
            goal = path[-1]
            assert agent_cost(simulate(grid, start, plan), goal) == oracle.smallest_arrival(path, goal)


class TestFindConflicts:
    def test_canonical_swap(self):
        paths = [[(0, 0), (1, 0)], [(1, 0), (0, 0)]]
        out = find_conflicts(paths)
        assert len(out) == 1
        conflict = out[0]
        assert conflict.kind == "edge"
        assert conflict.agents == (0, 1)
        assert conflict.time == 1
        assert conflict.location == ((0, 0), (1, 0))

    def test_vertex(self):
        paths = [
            [(0, 0), (0, 1), (1, 1)],
            [(2, 2), (2, 1), (1, 1)],
        ]
        out = find_conflicts(paths)
        assert [(c.kind, c.time) for c in out] == [("vertex", 2)]

    def test_single_agent_clean(self):
        assert find_conflicts([[(0, 0), (1, 0)]]) == []

    def test_shared_start_is_vertex_at_zero(self):
        out = find_conflicts([[(0, 0)], [(0, 0)]])
        assert [(c.kind, c.time) for c in out] == [("vertex", 0)]

    def test_goal_padding_collides(self):
        # agent 0's one-position path pads to (2,0) forever; agent 1 walks
        # into it at t=2
        paths = [
            [(2, 0)],
            [(0, 0), (1, 0), (2, 0)],
        ]
        out = find_conflicts(paths)
        assert [(c.kind, c.time, c.location) for c in out] == [("vertex", 2, (2, 0))]

    def test_following_is_legal(self):
        # j moves into the cell i vacates in the same step: allowed
        paths = [
            [(1, 0), (2, 0)],
            [(0, 0), (1, 0)],
        ]
        assert find_conflicts(paths) == []

    def test_mutual_wait_not_edge(self):
        # two parked agents on one cell: vertex conflicts only, never edge
        paths = [[(1, 1), (1, 1)], [(1, 1), (1, 1)]]
        out = find_conflicts(paths)
        assert all(c.kind == "vertex" for c in out)

    def test_sorted_by_time_agents_kind(self):
        paths = [
            [(0, 0), (1, 0), (1, 1)],
            [(1, 0), (0, 0), (1, 1)],
            [(0, 1), (0, 0), (0, 1)],
        ]
        out = find_conflicts(paths)
        keys = [(c.time, c.agents, c.kind != "vertex") for c in out]
        assert keys == sorted(keys)

    def test_permutation_equivariance(self):
        rng = random.Random(1234)
        for _ in range(60):
            rows = random_rows(rng, 5, 5, 0.15)
            cells = oracle.free_cells(rows)
            k = rng.randint(2, 4)
            paths = []
            for _ in range(k):
                start = cells[rng.randrange(len(cells))]
                plan = "".join(rng.choice("udlrw") for _ in range(6))
                try:
                    paths.append(oracle.walk(rows, start, plan))
                except ValueError:
                    paths.append([start])
            perm = list(range(k))
            rng.shuffle(perm)
            base = find_conflicts(paths)
            permuted = find_conflicts([paths[perm[i]] for i in range(k)])
            # map the permuted agent indices back and compare as sets
            inverse = {perm[i]: i for i in range(k)}
            back = {
                (c.kind, tuple(sorted((perm[c.agents[0]], perm[c.agents[1]]))), c.time)
                for c in permuted
            }
            fwd = {(c.kind, c.agents, c.time) for c in base}
            assert back == fwd
            assert bool(base) == bool(permuted)

    def test_matches_occupancy_oracle(self):
        rng = random.Random(777)
        for _ in range(500):
            rows = random_rows(rng, rng.randint(2, 6), rng.randint(2, 6), 0.25)
            cells = oracle.free_cells(rows)
            k = rng.randint(1, 4)
            paths = []
            for _ in range(k):
                start = cells[rng.randrange(len(cells))]
                path = [start]
                x, y = start
                for _ in range(rng.randint(0, 8)):
                    options = [(x, y)]
                    for dx, dy in ((0, -1), (0, 1), (-1, 0), (1, 0)):
                        if oracle.free(rows, x + dx, y + dy):
                            options.append((x + dx, y + dy))
                    x, y = options[rng.randrange(len(options))]
                    path.append((x, y))
                paths.append(path)
            assert oracle.conflict_tuples(find_conflicts(paths)) == oracle.occupancy_conflicts(paths)


class TestScanBackends:
    """The dict scan and the vectorized scan must be interchangeable."""

    def _encode(self, paths):
        stride = max(x for p in paths for x, _ in p) + 1
        horizon = max(len(p) for p in paths) - 1
        encoded = []
        for p in paths:
            row = [y * stride + x for x, y in p]
            row.extend([row[-1]] * (horizon + 1 - len(row)))
            encoded.append(row)
        return encoded, horizon, stride

    def test_backends_agree(self):
        rng = random.Random(2024)
        for _ in range(150):
            rows = random_rows(rng, 6, 6, 0.2)
            cells = oracle.free_cells(rows)
            paths = []
            for _ in range(rng.randint(2, 5)):
                start = cells[rng.randrange(len(cells))]
                path = [start]
                x, y = start
                for _ in range(rng.randint(1, 10)):
                    options = [(x, y)]
                    for dx, dy in ((0, -1), (0, 1), (-1, 0), (1, 0)):
                        if oracle.free(rows, x + dx, y + dy):
                            options.append((x + dx, y + dy))
                    x, y = options[rng.randrange(len(options))]
                    path.append((x, y))
                paths.append(path)
            encoded, horizon, stride = self._encode(paths)
            simple = _scan_simple(encoded, horizon, stride)
            vector = _scan_vectorized(encoded, horizon, stride)
            assert sorted(
                [(c.kind, c.agents, c.time, c.location) for c in simple],
                key=lambda t: (t[2], t[1], t[0] != "vertex"),
            ) == sorted(
                [(c.kind, c.agents, c.time, c.location) for c in vector],
                key=lambda t: (t[2], t[1], t[0] != "vertex"),
            )


class TestValidatePlanSet:
    def test_disjoint_straight_lines(self):
        grid = grid_from_rows(["..."] * 3)
        pairs = [((0, 0), (2, 0)), ((0, 2), (2, 2))]
        plans = PlanSet(plans=("rr", "rr"))
        # SIC frozen from the independent walk + smallest-arrival oracle
        outcome = validate_plan_set(grid, pairs, plans, claimed_cost=4)
        assert outcome.valid
        assert outcome.computed_cost == 4
        assert outcome.conflicts == () or outcome.conflicts == []

    def test_swap_invalid(self):
        grid = grid_from_rows(["..."])
        pairs = [((0, 0), (1, 0)), ((1, 0), (0, 0))]
        outcome = validate_plan_set(grid, pairs, PlanSet(plans=("r", "l")))
        assert not outcome.valid
        assert any(c.kind == "edge" for c in outcome.conflicts)
        assert outcome.computed_cost == 2  # cost still reported; conflicts decide

    def test_cost_mismatch(self):
        grid = grid_from_rows(["..."] * 3)
        pairs = [((0, 0), (2, 0)), ((0, 2), (2, 2))]
        outcome = validate_plan_set(grid, pairs, PlanSet(plans=("rr", "rr")), claimed_cost=3)
        assert not outcome.valid
        assert outcome.cost_mismatch
        assert outcome.computed_cost == 4
        assert any("claimed" in r for r in outcome.reasons())

    def test_goal_not_reached_fault(self):
        grid = grid_from_rows(["..."])
        outcome = validate_plan_set(grid, [((0, 0), (2, 0))], PlanSet(plans=("r",)))
        assert not outcome.valid
        assert outcome.computed_cost is None
        assert outcome.per_agent_errors[0].error == "goal-not-reached"

    def test_simulation_faults_reported_per_agent(self):
        grid = grid_from_rows([".@.", "...", "..."])
        pairs = [((0, 0), (1, 0)), ((0, 1), (0, 2))]
        outcome = validate_plan_set(grid, pairs, PlanSet(plans=("r", "d")))
        assert not outcome.valid
        faults = {f.agent: f.error for f in outcome.per_agent_errors}
        assert faults == {0: "into-obstacle"}

    def test_out_of_bounds_fault(self):
        grid = grid_from_rows(["..."])
        outcome = validate_plan_set(grid, [((0, 0), (0, 0))], PlanSet(plans=("u",)))
        assert outcome.per_agent_errors[0].error == "out-of-bounds"

    def test_count_mismatch_raises(self):
        grid = grid_from_rows(["..."])
        with pytest.raises(ValueError):
            validate_plan_set(grid, [((0, 0), (1, 0))], PlanSet(plans=("r", "l")))

    def test_padding_soundness(self):
        """Appending waits after the goal never changes validity or cost."""
        rng = random.Random(17)
        for _ in range(50):
            rows = random_rows(rng, 6, 6, 0.15)
            grid = grid_from_rows(rows)
            cells = oracle.free_cells(rows)
            k = rng.randint(1, 3)
            starts = [cells[rng.randrange(len(cells))] for _ in range(k)]
            plans, goals = [], []
            for s in starts:
                path = [s]
                x, y = s
                for _ in range(rng.randint(0, 8)):
                    options = [(x, y)]
                    for dx, dy in ((0, -1), (0, 1), (-1, 0), (1, 0)):
                        if oracle.free(rows, x + dx, y + dy):
                            options.append((x + dx, y + dy))
                    x, y = options[rng.randrange(len(options))]
                    path.append((x, y))
                goals.append(path[-1])
                moves = []
                for (ax, ay), (bx, by) in zip(path, path[1:]):
                    moves.append({(0, -1): "u", (0, 1): "d", (-1, 0): "l", (1, 0): "r", (0, 0): "w"}[(bx - ax, by - ay)])
                plans.append("".join(moves))
            pairs = list(zip(starts, goals))
            base = validate_plan_set(grid, pairs, PlanSet(plans=tuple(plans)))
            victim = rng.randrange(k)
            padded = list(plans)
            padded[victim] = padded[victim] + "w" * rng.randint(1, 4)
            after = validate_plan_set(grid, pairs, PlanSet(plans=tuple(padded)))
            assert base.valid == after.valid
            assert base.computed_cost == after.computed_cost

    def test_multi_agent_wire_format(self):
        plans = PlanSet.from_field("rr;DL;w")
        assert plans.plans == ("rr", "dl", "w")
        assert plans.to_field() == "rr;dl;w"
        assert plans.agents == 3
        assert plans.horizon == 2

    def test_validates_bfs_routed_instance(self, pocket6):
        pairs = [((0, 0), (5, 5)), ((5, 0), (0, 5))]
        plans = tuple(bfs_plan(pocket6, s, g) for s, g in pairs)
        outcome = validate_plan_set(pocket6, pairs, PlanSet(plans=plans))
        assert outcome.computed_cost is not None
        # routed independently, so conflicts may exist, but costs must match
        # the per-agent shortest distances by construction
        assert outcome.computed_cost == sum(len(p) for p in plans)
