"""Best-known bound and solution tracking for grid pathfinding benchmarks.

The package splits into: bench (maps, scenarios, instances, domains),
validate (plan strings, simulation, conflicts, costs), bounds (shortest
paths, trivial lower bounds, scenario generation), tracking (event-sourced
record store with revocation), analytics (progress, comparison, export),
ingest (CSV submission batches), runner (external solver harness), api
(HTTP service) and cli.
"""

from .bench import (
    Benchmark,
    DomainManifest,
    GridMap,
    InstanceId,
    ScenEntry,
    Scenario,
    bind_scenario,
    default_manifest,
    instance_agents,
    load_benchmark,
    load_manifest,
    load_map,
    parse_map,
    parse_scenario,
    scenario_from_path,
    write_scenario,
)
from .bounds import (
    DistanceField,
    distance_field,
    generate_even_scenario,
    generate_random_scenario,
    map_diameter,
    shortest_path_dist,
    suboptimality_ratio,
    trivial_lower_bound,
)
from .tracking import (
    AlgorithmMeta,
    BatchEntry,
    InstanceRecord,
    SubmissionBatch,
    TrackingStore,
    classify,
    record_result,
)
from .validate import (
    Action,
    Conflict,
    PlanSet,
    ValidationOutcome,
    agent_cost,
    find_conflicts,
    parse_plan,
    serialize_plan,
    simulate,
    validate_plan_set,
)

__version__ = "0.1.0"
