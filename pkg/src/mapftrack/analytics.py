"""Aggregation over the benchmark universe and a tracking store.

Every (scenario, agent count) pair of the loaded benchmark is an instance,
whether or not anything was ever submitted for it; untouched instances
count as unknown. Percentages are plain count/total*100, rounded to two
decimals only at the presentation edge.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .bench import Benchmark, InstanceId, Scenario
from .bounds import suboptimality_ratio, trivial_lower_bound
from .errors import (
    DegenerateLowerBound,
    EmptyScope,
    TrackerError,
    UnknownMap,
    UnknownScenario,
)
from .tracking import ORACLE_ALGORITHM, InstanceRecord, TrackingStore, classify

COMPARISON_METRICS = ("closed", "solved", "best_lb", "best_solution")


@dataclass(frozen=True)
class QueryScope:
    """Filter over the benchmark universe. Narrower fields need their
    parents: a scenario only means something under a map."""

    domain: str | None = None
    map_name: str | None = None
    scen_kind: str | None = None
    scen_index: int | None = None
    agents_min: int | None = None
    agents_max: int | None = None

    def __post_init__(self):
        if (self.scen_kind is None) != (self.scen_index is None):
            raise TrackerError("scenario scope needs both kind and index")
        if self.scen_kind is not None and self.map_name is None:
            raise TrackerError("scenario scope requires a map")
        if (
            self.agents_min is not None
            and self.agents_max is not None
            and self.agents_min > self.agents_max
        ):
            raise TrackerError(
                f"agent range {self.agents_min}..{self.agents_max} is empty"
            )

    def describe(self) -> str:
        parts = []
        if self.domain:
            parts.append(self.domain)
        if self.map_name:
            parts.append(self.map_name)
        if self.scen_kind:
            parts.append(f"{self.scen_kind}-{self.scen_index}")
        if self.agents_min is not None or self.agents_max is not None:
            lo = self.agents_min if self.agents_min is not None else 1
            hi = self.agents_max if self.agents_max is not None else "max"
            parts.append(f"k={lo}..{hi}")
        return "/".join(parts) if parts else "all"


def resolve_scenarios(bench: Benchmark, scope: QueryScope) -> list[Scenario]:
    """Scenarios matched by the scope, in (map, kind, index) order."""
    if scope.map_name is not None and scope.map_name not in bench.maps:
        raise UnknownMap(f"map {scope.map_name!r} not in benchmark")
    if scope.domain is not None and scope.domain not in bench.manifest.domain_names:
        raise EmptyScope(f"domain {scope.domain!r} has no maps in this benchmark")
    out = []
    for (map_name, kind, index) in sorted(bench.scenarios):
        if scope.map_name is not None and map_name != scope.map_name:
            continue
        if scope.domain is not None and bench.manifest.domain_of(map_name) != scope.domain:
            continue
        if scope.scen_kind is not None and (kind, index) != (scope.scen_kind, scope.scen_index):
            continue
        out.append(bench.scenarios[(map_name, kind, index)])
    if scope.scen_kind is not None and not out:
        raise UnknownScenario(
            f"{scope.map_name} has no scenario {scope.scen_kind}-{scope.scen_index}"
        )
    return out


def _agent_span(scope: QueryScope, entries: int) -> tuple[int, int]:
    lo = scope.agents_min if scope.agents_min is not None else 1
    hi = scope.agents_max if scope.agents_max is not None else entries
    return max(1, lo), min(entries, hi)


def instances_in_scope(bench: Benchmark, scope: QueryScope) -> list[InstanceId]:
    out = []
    for scen in resolve_scenarios(bench, scope):
        lo, hi = _agent_span(scope, len(scen.entries))
        for k in range(lo, hi + 1):
            out.append(InstanceId(scen.map_name, scen.kind, scen.index, k))
    return out


def _scope_total(bench: Benchmark, scope: QueryScope) -> int:
    total = 0
    for scen in resolve_scenarios(bench, scope):
        lo, hi = _agent_span(scope, len(scen.entries))
        if hi >= lo:
            total += hi - lo + 1
    return total


def _in_scope(bench: Benchmark, scope: QueryScope, inst: InstanceId) -> bool:
    if not bench.has_instance(inst):
        return False
    if scope.map_name is not None and inst.map_name != scope.map_name:
        return False
    if scope.domain is not None and bench.manifest.domain_of(inst.map_name) != scope.domain:
        return False
    if scope.scen_kind is not None and (
        inst.scen_kind != scope.scen_kind or inst.scen_index != scope.scen_index
    ):
        return False
    if scope.agents_min is not None and inst.agents < scope.agents_min:
        return False
    if scope.agents_max is not None and inst.agents > scope.agents_max:
        return False
    return True


@dataclass(frozen=True)
class ProgressSummary:
    scope: str
    total: int
    closed: int
    solved: int
    unknown: int

    @property
    def pct_closed(self) -> float:
        return round(100.0 * self.closed / self.total, 2) if self.total else 0.0

    @property
    def pct_solved(self) -> float:
        return round(100.0 * self.solved / self.total, 2) if self.total else 0.0

    @property
    def pct_unknown(self) -> float:
        return round(100.0 * self.unknown / self.total, 2) if self.total else 0.0


def progress_summary(bench: Benchmark, store: TrackingStore, scope: QueryScope) -> ProgressSummary:
    """Closed/solved/unknown counts over every instance the scope matches."""
    total = _scope_total(bench, scope)
    if total == 0:
        raise EmptyScope(f"scope {scope.describe()!r} matches no instances")
    closed = solved = 0
    for record in store.records():
        if not _in_scope(bench, scope, record.instance):
            continue
        state = classify(record)
        if state == "closed":
            closed += 1
        elif state == "solved":
            solved += 1
    return ProgressSummary(
        scope=scope.describe(),
        total=total,
        closed=closed,
        solved=solved,
        unknown=total - closed - solved,
    )


def grouped_progress(
    bench: Benchmark, store: TrackingStore, scope: QueryScope, by: str
) -> list[ProgressSummary]:
    """One summary per domain, map or scenario under the given scope."""
    if by == "domain":
        keys = [
            d
            for d in bench.manifest.domain_names
            if (scope.domain is None or d == scope.domain)
            and any(m in bench.maps for m in bench.manifest.maps_in(d))
        ]
        subs = [replace(scope, domain=d) for d in keys]
    elif by == "map":
        seen: list[str] = []
        for scen in resolve_scenarios(bench, scope):
            if scen.map_name not in seen:
                seen.append(scen.map_name)
        subs = [replace(scope, map_name=m) for m in seen]
    elif by == "scenario":
        subs = [
            replace(scope, map_name=s.map_name, scen_kind=s.kind, scen_index=s.index)
            for s in resolve_scenarios(bench, scope)
        ]
    else:
        raise TrackerError(f"cannot group by {by!r}")
    out = []
    for sub in subs:
        try:
            out.append(progress_summary(bench, store, sub))
        except EmptyScope:
            continue
    if not out:
        raise EmptyScope(f"scope {scope.describe()!r} matches no instances")
    return out


def progress_by_agents(
    bench: Benchmark, store: TrackingStore, map_name: str
) -> list[ProgressSummary]:
    """Progress at each agent count k over all scenarios of one map.

    The population at k is every scenario with at least k entries; k runs
    to the largest entry count, so late points may cover fewer scenarios.
    """
    scens = resolve_scenarios(bench, QueryScope(map_name=map_name))
    if not scens:
        raise EmptyScope(f"map {map_name!r} has no scenarios")
    max_k = max(len(s.entries) for s in scens)
    totals = [0] * (max_k + 1)
    for s in scens:
        for k in range(1, len(s.entries) + 1):
            totals[k] += 1
    closed = [0] * (max_k + 1)
    solved = [0] * (max_k + 1)
    for record in store.records():
        inst = record.instance
        if inst.map_name != map_name or not bench.has_instance(inst):
            continue
        state = classify(record)
        if state == "closed":
            closed[inst.agents] += 1
        elif state == "solved":
            solved[inst.agents] += 1
    return [
        ProgressSummary(
            scope=f"{map_name}/k={k}",
            total=totals[k],
            closed=closed[k],
            solved=solved[k],
            unknown=totals[k] - closed[k] - solved[k],
        )
        for k in range(1, max_k + 1)
        if totals[k] > 0
    ]


def _achieves(record: InstanceRecord, algorithm: str, metric: str) -> bool:
    state = classify(record)
    if metric == "solved":
        return any(
            ev.solution_cost is not None and ev.algorithm == algorithm
            for ev in record.events
        )
    if metric == "best_solution":
        return record.best_cost is not None and algorithm in record.best_cost.holders
    if metric == "best_lb":
        return record.best_lb is not None and algorithm in record.best_lb.holders
    if metric == "closed":
        return (
            state == "closed"
            and record.best_cost is not None
            and record.best_lb is not None
            and algorithm in record.best_cost.holders
            and algorithm in record.best_lb.holders
        )
    raise TrackerError(f"unknown comparison metric {metric!r}")


def comparison_by_agents(
    bench: Benchmark,
    store: TrackingStore,
    map_name: str,
    metric: str,
    algorithms: list[str] | None = None,
) -> dict[str, list[tuple[int, float]]]:
    """Per-algorithm percentage series keyed by agent count.

    The denominator at k is the number of scenarios of the map with at
    least k entries. Unknown metric or algorithm names raise.
    """
    if metric not in COMPARISON_METRICS:
        raise TrackerError(
            f"metric must be one of {COMPARISON_METRICS}, got {metric!r}"
        )
    scens = resolve_scenarios(bench, QueryScope(map_name=map_name))
    if not scens:
        raise EmptyScope(f"map {map_name!r} has no scenarios")
    known = store.algorithms(include_oracle=True)
    if algorithms is None:
        algorithms = store.algorithms(include_oracle=False)
    for a in algorithms:
        if a not in known:
            raise UnknownBatchAlgorithm(a)
    max_k = max(len(s.entries) for s in scens)
    totals = [0] * (max_k + 1)
    for s in scens:
        for k in range(1, len(s.entries) + 1):
            totals[k] += 1
    hits: dict[str, list[int]] = {a: [0] * (max_k + 1) for a in algorithms}
    for record in store.records():
        inst = record.instance
        if inst.map_name != map_name or not bench.has_instance(inst):
            continue
        for a in algorithms:
            if _achieves(record, a, metric):
                hits[a][inst.agents] += 1
    return {
        a: [
            (k, round(100.0 * hits[a][k] / totals[k], 2))
            for k in range(1, max_k + 1)
            if totals[k] > 0
        ]
        for a in algorithms
    }


class UnknownBatchAlgorithm(TrackerError):
    """Algorithm name not present in the store."""

    def __init__(self, name: str):
        super().__init__(f"unknown algorithm {name!r}")
        self.name = name


@dataclass(frozen=True)
class AlgoMetrics:
    """Per-algorithm achievement counters within a scope."""

    algorithm: str
    closed: int
    solved: int
    best_lower_bound: int
    best_solution: int


def algorithm_comparison(
    bench: Benchmark,
    store: TrackingStore,
    scope: QueryScope,
    algorithms: list[str] | None = None,
    include_oracle: bool = False,
) -> list[AlgoMetrics]:
    """Counters per algorithm over the scope, sorted by name.

    Ties share credit: every algorithm matching the best value counts. An
    instance is closed by an algorithm only when it holds both the best
    bound and the best cost there.
    """
    known = store.algorithms(include_oracle=True)
    if algorithms is None:
        algorithms = store.algorithms(include_oracle=include_oracle)
    for a in algorithms:
        if a not in known:
            raise UnknownBatchAlgorithm(a)
    counters = {a: [0, 0, 0, 0] for a in algorithms}
    for record in store.records():
        if not _in_scope(bench, scope, record.instance):
            continue
        for a in algorithms:
            if _achieves(record, a, "closed"):
                counters[a][0] += 1
            if _achieves(record, a, "solved"):
                counters[a][1] += 1
            if _achieves(record, a, "best_lb"):
                counters[a][2] += 1
            if _achieves(record, a, "best_solution"):
                counters[a][3] += 1
    return [
        AlgoMetrics(
            algorithm=a,
            closed=c[0],
            solved=c[1],
            best_lower_bound=c[2],
            best_solution=c[3],
        )
        for a, c in sorted(counters.items())
    ]


@dataclass(frozen=True)
class SuboptimalityPoint:
    agents: int
    ratio: float
    trivial_lb_only: bool  # bound side comes from the oracle alone


def suboptimality_series(
    bench: Benchmark,
    store: TrackingStore,
    map_name: str,
    scen_kind: str,
    scen_index: int,
) -> list[SuboptimalityPoint]:
    """(cost - bound) / bound per agent count for one scenario.

    Instances without a solution are skipped. When no submitted bound
    exists the oracle's shortest-path sum stands in and the point is
    flagged, since the true gap can only be smaller. Points whose bound is
    zero with positive cost are undefined and skipped.
    """
    scen = bench.scenario(map_name, scen_kind, scen_index)
    out = []
    for k in range(1, len(scen.entries) + 1):
        inst = InstanceId(map_name, scen_kind, scen_index, k)
        record = store.record(inst)
        if record is None or record.best_cost is None:
            continue
        if record.best_lb is not None:
            bound = record.best_lb.value
            trivial_only = record.best_lb.holders <= {ORACLE_ALGORITHM}
        else:
            bound = trivial_lower_bound(bench.grid(map_name), bench.pairs_for(inst))
            trivial_only = True
        try:
            ratio = suboptimality_ratio(bound, record.best_cost.value)
        except DegenerateLowerBound:
            continue
        out.append(SuboptimalityPoint(agents=k, ratio=ratio, trivial_lb_only=trivial_only))
    return out


EXPORT_LEVELS = ("instance", "scenario", "map", "domain")

_INSTANCE_HEADER = [
    "map_name",
    "scenario",
    "agents",
    "lower_bound",
    "solution_cost",
    "state",
    "lb_algorithms",
    "cost_algorithms",
    "plan_batch",
]
_SCENARIO_HEADER = [
    "map_name",
    "scenario",
    "instances",
    "closed",
    "solved",
    "unknown",
    "pct_closed",
    "pct_solved",
    "pct_unknown",
]
_MAP_HEADER = [
    "map_name",
    "instances",
    "closed",
    "solved",
    "unknown",
    "pct_closed",
    "pct_solved",
    "pct_unknown",
]
_DOMAIN_HEADER = [
    "domain",
    "maps",
    "instances",
    "closed",
    "solved",
    "unknown",
    "pct_closed",
    "pct_solved",
    "pct_unknown",
]


def export_results(
    bench: Benchmark, store: TrackingStore, scope: QueryScope, level: str
) -> tuple[list[str], list[list]]:
    """(header, rows) at the requested aggregation level, stably ordered."""
    if level == "instance":
        rows = []
        for inst in instances_in_scope(bench, scope):
            record = store.record(inst)
            lb = record.best_lb if record else None
            cost = record.best_cost if record else None
            rows.append(
                [
                    inst.map_name,
                    inst.scenario_name,
                    inst.agents,
                    lb.value if lb else "",
                    cost.value if cost else "",
                    classify(record),
                    ";".join(sorted(lb.holders)) if lb else "",
                    ";".join(sorted(cost.holders)) if cost else "",
                    cost.plan_batch if cost else "",
                ]
            )
        if not rows:
            raise EmptyScope(f"scope {scope.describe()!r} matches no instances")
        return _INSTANCE_HEADER, rows
    if level == "scenario":
        rows = []
        for s in resolve_scenarios(bench, scope):
            sub = replace(scope, map_name=s.map_name, scen_kind=s.kind, scen_index=s.index)
            try:
                p = progress_summary(bench, store, sub)
            except EmptyScope:
                continue
            rows.append(
                [
                    s.map_name,
                    s.name,
                    p.total,
                    p.closed,
                    p.solved,
                    p.unknown,
                    p.pct_closed,
                    p.pct_solved,
                    p.pct_unknown,
                ]
            )
        if not rows:
            raise EmptyScope(f"scope {scope.describe()!r} matches no instances")
        return _SCENARIO_HEADER, rows
    if level == "map":
        seen: list[str] = []
        for s in resolve_scenarios(bench, scope):
            if s.map_name not in seen:
                seen.append(s.map_name)
        rows = []
        for m in seen:
            try:
                p = progress_summary(bench, store, replace(scope, map_name=m))
            except EmptyScope:
                continue
            rows.append(
                [
                    m,
                    p.total,
                    p.closed,
                    p.solved,
                    p.unknown,
                    p.pct_closed,
                    p.pct_solved,
                    p.pct_unknown,
                ]
            )
        if not rows:
            raise EmptyScope(f"scope {scope.describe()!r} matches no instances")
        return _MAP_HEADER, rows
    if level == "domain":
        rows = []
        for d in bench.manifest.domain_names:
            if scope.domain is not None and d != scope.domain:
                continue
            sub = replace(scope, domain=d)
            try:
                p = progress_summary(bench, store, sub)
            except EmptyScope:
                continue
            n_maps = sum(1 for m in bench.manifest.maps_in(d) if m in bench.maps)
            rows.append(
                [
                    d,
                    n_maps,
                    p.total,
                    p.closed,
                    p.solved,
                    p.unknown,
                    p.pct_closed,
                    p.pct_solved,
                    p.pct_unknown,
                ]
            )
        if not rows:
            raise EmptyScope(f"scope {scope.describe()!r} matches no instances")
        return _DOMAIN_HEADER, rows
    raise TrackerError(f"level must be one of {EXPORT_LEVELS}, got {level!r}")
