"""External solver harness.

An adapter descriptor (JSON) names the solver, its command template and
whether it emits lower bounds:

    {
      "name": "my-solver",
      "authors": "...",
      "command": ["./solver", "--map", "{map}", "--scen", "{scen}",
                  "--agents", "{agents}", "--time", "{budget}"],
      "emits_lower_bounds": true
    }

The solver prints progress lines on stdout; the harness understands

    lb <int>       current best lower bound (last one wins)
    cost <int>     solution cost (last one wins)
    plan <field>   per-agent plans joined with ';'

and ignores everything else. Each instance gets one time window. Adapters
that declare lower bounds get another window whenever the reported bound
improved during the window that just expired; everything else is killed at
the deadline (SIGTERM to the process group, SIGKILL after a grace period).

A scenario run walks the agent count up from 1 and stops after a configured
number of consecutive failures, where failure means no validated solution.
Reported costs are validated locally before they make it into the batch.
"""

from __future__ import annotations

import json
import os
import signal
import subprocess
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .bench import GridMap, InstanceId, Scenario
from .errors import AdapterSpawnFailure, TrackerError
from .tracking import AlgorithmMeta
from .validate import PlanSet, validate_plan_set


@dataclass(frozen=True)
class RunnerPolicy:
    base_budget: float = 60.0  # seconds per instance window
    grace: float = 2.0  # SIGTERM -> SIGKILL gap at expiry
    failure_stop: int = 2  # consecutive failures that end a scenario
    agent_step: int = 1
    max_windows: int = 16  # hard cap on lb extensions per instance

    def __post_init__(self):
        if self.base_budget <= 0:
            raise TrackerError(f"budget must be positive, got {self.base_budget}")
        if self.failure_stop < 1 or self.agent_step < 1:
            raise TrackerError("failure_stop and agent_step must be >= 1")


@dataclass(frozen=True)
class SolverAdapter:
    name: str
    command: tuple[str, ...]
    emits_lower_bounds: bool = False
    authors: str = ""
    references: str = ""
    repository: str = ""

    @property
    def meta(self) -> AlgorithmMeta:
        return AlgorithmMeta(
            name=self.name,
            authors=self.authors,
            references=self.references,
            repository=self.repository,
        )

    def argv(self, map_path: str, scen_path: str, agents: int, budget: float) -> list[str]:
        subst = {
            "map": map_path,
            "scen": scen_path,
            "agents": str(agents),
            "budget": f"{budget:g}",
        }
        out = []
        for part in self.command:
            for key, value in subst.items():
                part = part.replace("{" + key + "}", value)
            out.append(part)
        return out


def load_adapter(path: str | Path) -> SolverAdapter:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise TrackerError(f"{path}: unreadable adapter descriptor: {exc}") from None
    if not isinstance(obj.get("name"), str) or not obj["name"]:
        raise TrackerError(f"{path}: adapter descriptor needs a name")
    command = obj.get("command")
    if not isinstance(command, list) or not command:
        raise TrackerError(f"{path}: adapter descriptor needs a command list")
    return SolverAdapter(
        name=obj["name"],
        command=tuple(str(c) for c in command),
        emits_lower_bounds=bool(obj.get("emits_lower_bounds", False)),
        authors=str(obj.get("authors", "")),
        references=str(obj.get("references", "")),
        repository=str(obj.get("repository", "")),
    )


class _OutputWatcher:
    """Tails solver stdout on a thread, tracking the protocol lines."""

    def __init__(self, stream):
        self._stream = stream
        self._lock = threading.Lock()
        self.lb: int | None = None
        self.cost: int | None = None
        self.plan: str | None = None
        self.thread = threading.Thread(target=self._run, daemon=True)
        self.thread.start()

    def _run(self) -> None:
        try:
            for line in self._stream:
                parts = line.strip().split(maxsplit=1)
                if len(parts) != 2:
                    continue
                tag, value = parts
                with self._lock:
                    if tag == "lb":
                        try:
                            self.lb = int(value)
                        except ValueError:
                            pass
                    elif tag == "cost":
                        try:
                            self.cost = int(value)
                        except ValueError:
                            pass
                    elif tag == "plan":
                        self.plan = value
        except ValueError:
            pass  # stream closed mid-read

    def current_lb(self) -> int | None:
        with self._lock:
            return self.lb

    def final(self) -> tuple[int | None, int | None, str | None]:
        self.thread.join(timeout=5.0)
        with self._lock:
            return self.lb, self.cost, self.plan


def _kill_group(proc: subprocess.Popen, grace: float) -> None:
    """SIGTERM the whole process group, escalate to SIGKILL after grace."""
    try:
        pgid = os.getpgid(proc.pid)
    except ProcessLookupError:
        return
    try:
        os.killpg(pgid, signal.SIGTERM)
    except ProcessLookupError:
        return
    try:
        proc.wait(timeout=grace)
    except subprocess.TimeoutExpired:
        try:
            os.killpg(pgid, signal.SIGKILL)
        except ProcessLookupError:
            pass
        proc.wait(timeout=5.0)


@dataclass(frozen=True)
class InstanceRun:
    """Outcome of one solver invocation. solved means a locally validated
    cost; lower_bound is kept only for adapters that declare the
    capability."""

    agents: int
    solved: bool
    lower_bound: int | None
    solution_cost: int | None
    plan: str | None
    windows: int
    elapsed: float
    error: str = ""


def run_instance(
    adapter: SolverAdapter,
    grid: GridMap,
    pairs: list[tuple[tuple[int, int], tuple[int, int]]],
    map_path: str,
    scen_path: str,
    policy: RunnerPolicy,
) -> InstanceRun:
    n = len(pairs)
    argv = adapter.argv(map_path, scen_path, n, policy.base_budget)
    started = time.monotonic()
    try:
        proc = subprocess.Popen(
            argv,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
            start_new_session=True,  # lets the deadline kill grandchildren too
        )
    except OSError as exc:
        raise AdapterSpawnFailure(f"{adapter.name}: cannot start {argv[0]!r}: {exc}") from None

    watcher = _OutputWatcher(proc.stdout)
    windows = 1
    lb_at_window_start: int | None = None
    while True:
        try:
            proc.wait(timeout=policy.base_budget)
            break
        except subprocess.TimeoutExpired:
            current = watcher.current_lb()
            improved = current is not None and (
                lb_at_window_start is None or current > lb_at_window_start
            )
            if adapter.emits_lower_bounds and improved and windows < policy.max_windows:
                lb_at_window_start = current
                windows += 1
                continue
            _kill_group(proc, policy.grace)
            break
    elapsed = time.monotonic() - started
    lb, cost, plan = watcher.final()
    if not adapter.emits_lower_bounds:
        lb = None

    if cost is None:
        return InstanceRun(
            agents=n,
            solved=False,
            lower_bound=lb,
            solution_cost=None,
            plan=None,
            windows=windows,
            elapsed=elapsed,
            error="no solution reported",
        )
    if plan is None:
        return InstanceRun(
            agents=n,
            solved=False,
            lower_bound=lb,
            solution_cost=None,
            plan=None,
            windows=windows,
            elapsed=elapsed,
            error=f"cost {cost} reported without a plan",
        )
    try:
        plans = PlanSet.from_field(plan)
        outcome = validate_plan_set(grid, pairs, plans, claimed_cost=cost)
    except TrackerError as exc:
        outcome = None
        detail = str(exc)
    if outcome is None or not outcome.valid:
        detail = detail if outcome is None else "; ".join(outcome.reasons()[:3])
        return InstanceRun(
            agents=n,
            solved=False,
            lower_bound=lb,
            solution_cost=None,
            plan=None,
            windows=windows,
            elapsed=elapsed,
            error=f"plan rejected: {detail}",
        )
    return InstanceRun(
        agents=n,
        solved=True,
        lower_bound=lb,
        solution_cost=cost,
        plan=plans.to_field(),
        windows=windows,
        elapsed=elapsed,
    )


@dataclass
class ScenarioRun:
    adapter: str
    map_name: str
    scenario: str
    runs: list[InstanceRun] = field(default_factory=list)
    stopped_reason: str = ""

    def result_rows(self) -> list[tuple[InstanceId, int | None, int | None, str | None]]:
        """Rows for the submission CSV: every run that produced something."""
        kind, index = self.scenario.split("-")
        out = []
        for r in self.runs:
            if r.lower_bound is None and r.solution_cost is None:
                continue
            inst = InstanceId(self.map_name, kind, int(index), r.agents)
            out.append((inst, r.lower_bound, r.solution_cost, r.plan))
        return out


def run_scenario(
    adapter: SolverAdapter,
    grid: GridMap,
    scenario: Scenario,
    map_path: str,
    scen_path: str,
    policy: RunnerPolicy | None = None,
    max_agents: int | None = None,
    progress=None,
) -> ScenarioRun:
    """Walk agent counts 1, 1+step, ... until the consecutive-failure stop
    or the scenario runs out of entries. progress, when given, is called
    with each InstanceRun as it finishes."""
    policy = policy or RunnerPolicy()
    limit = len(scenario.entries) if max_agents is None else min(max_agents, len(scenario.entries))
    result = ScenarioRun(
        adapter=adapter.name,
        map_name=scenario.map_name,
        scenario=scenario.name,
    )
    consecutive = 0
    n = 1
    while n <= limit:
        pairs = scenario.agents(n)
        try:
            run = run_instance(adapter, grid, pairs, map_path, scen_path, policy)
        except AdapterSpawnFailure as exc:
            run = InstanceRun(
                agents=n,
                solved=False,
                lower_bound=None,
                solution_cost=None,
                plan=None,
                windows=0,
                elapsed=0.0,
                error=str(exc),
            )
        result.runs.append(run)
        if progress is not None:
            progress(run)
        if run.solved:
            consecutive = 0
        else:
            consecutive += 1
            if consecutive >= policy.failure_stop:
                result.stopped_reason = (
                    f"{consecutive} consecutive failures at k={n}"
                )
                break
        n += policy.agent_step
    else:
        result.stopped_reason = f"exhausted entries at k={limit}"
    return result
