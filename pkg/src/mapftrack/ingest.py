"""Submission ingestion: CSV batches, row validation, atomic application.

A batch is two files: a CSV of results and a descriptor identifying the
algorithm. The CSV header is fixed:

    map_name,scenario,agents,lower_bound,solution_cost,plan

scenario is <kind>-<index> (e.g. even-1); lower_bound and solution_cost may
each be empty but not both; a non-empty solution_cost requires a plan. The
descriptor is 'key: value' lines with at least 'algorithm' and 'authors'.

The batch id is a content hash over both files, which doubles as the
duplicate-submission check: re-ingesting the same pair of files is a no-op.
Rows are validated first and applied to the store in one transaction, so a
failure or crash mid-ingest leaves the store exactly as it was.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass
from datetime import datetime, timezone

from .bench import Benchmark, InstanceId, parse_scenario_name
from .bounds import trivial_lower_bound
from .errors import (
    ColumnCountMismatch,
    IllegalCharacter,
    MalformedDescriptor,
    MissingHeader,
    TrackerError,
    UnreachablePair,
)
from .tracking import (
    ORACLE_ALGORITHM,
    AlgorithmMeta,
    BatchEntry,
    RevocationNotice,
    SubmissionBatch,
    TrackingStore,
)
from .validate import PlanSet, validate_plan_set

SUBMISSION_HEADER = ["map_name", "scenario", "agents", "lower_bound", "solution_cost", "plan"]

# per-row rejection reasons
PARSE_ERROR = "ParseError"
UNKNOWN_INSTANCE = "UnknownInstance"
PLAN_INVALID = "PlanInvalid"
COST_MISMATCH = "CostMismatch"
MISSING_PLAN = "MissingPlan"
DUPLICATE_ROW = "DuplicateRow"


@dataclass(frozen=True)
class RawRow:
    """One data row of the submission CSV, fields still as text."""

    line: int  # 1-based data row number (header not counted)
    map_name: str
    scenario: str
    agents: str
    lower_bound: str
    solution_cost: str
    plan: str


@dataclass(frozen=True)
class RawBatchFile:
    algorithm: AlgorithmMeta
    rows: tuple[RawRow, ...]
    batch_id: str


def parse_descriptor(text: str) -> AlgorithmMeta:
    """Parse the sidecar descriptor. Required: algorithm, authors."""
    fields: dict[str, str] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise MalformedDescriptor(f"line {line_no}: expected 'key: value'")
        key, _, value = line.partition(":")
        fields[key.strip().lower()] = value.strip()
    if "algorithm" not in fields or not fields["algorithm"]:
        raise MalformedDescriptor("descriptor is missing 'algorithm'")
    if "authors" not in fields or not fields["authors"]:
        raise MalformedDescriptor("descriptor is missing 'authors'")
    if fields["algorithm"] == ORACLE_ALGORITHM:
        raise MalformedDescriptor(f"{ORACLE_ALGORITHM!r} is reserved for system bounds")
    return AlgorithmMeta(
        name=fields["algorithm"],
        authors=fields["authors"],
        references=fields.get("references", ""),
        repository=fields.get("repository", ""),
    )


def parse_submission_csv(text: str) -> tuple[RawRow, ...]:
    """Parse the CSV body. Raises MissingHeader / ColumnCountMismatch."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MissingHeader("submission CSV is empty") from None
    if [h.strip() for h in header] != SUBMISSION_HEADER:
        raise MissingHeader(
            f"first row must be {','.join(SUBMISSION_HEADER)!r}, got {header!r}"
        )
    rows = []
    for i, fields in enumerate(reader, start=1):
        if not fields:
            continue
        if len(fields) != len(SUBMISSION_HEADER):
            raise ColumnCountMismatch(i, len(fields), len(SUBMISSION_HEADER))
        rows.append(
            RawRow(
                line=i,
                map_name=fields[0].strip(),
                scenario=fields[1].strip(),
                agents=fields[2].strip(),
                lower_bound=fields[3].strip(),
                solution_cost=fields[4].strip(),
                plan=fields[5].strip(),
            )
        )
    return tuple(rows)


def batch_content_hash(csv_text: str, descriptor_text: str) -> str:
    digest = hashlib.sha256()
    digest.update(descriptor_text.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(csv_text.encode("utf-8"))
    return digest.hexdigest()[:16]


def load_batch(csv_text: str, descriptor_text: str) -> RawBatchFile:
    return RawBatchFile(
        algorithm=parse_descriptor(descriptor_text),
        rows=parse_submission_csv(csv_text),
        batch_id=batch_content_hash(csv_text, descriptor_text),
    )


@dataclass(frozen=True)
class RowOutcome:
    line: int
    instance: str
    accepted: bool
    reason: str = ""
    detail: str = ""


@dataclass(frozen=True)
class IngestReport:
    batch_id: str
    algorithm: str
    duplicate_batch: bool
    outcomes: tuple[RowOutcome, ...]
    revocations: tuple[RevocationNotice, ...]

    @property
    def accepted(self) -> int:
        return sum(1 for o in self.outcomes if o.accepted)

    @property
    def rejected(self) -> int:
        return sum(1 for o in self.outcomes if not o.accepted)


def _check_row(
    row: RawRow, bench: Benchmark
) -> tuple[BatchEntry, int | None] | RowOutcome:
    """Validate one row. Returns (entry, oracle bound) or a rejection."""

    def reject(reason: str, detail: str) -> RowOutcome:
        return RowOutcome(
            line=row.line,
            instance=f"{row.map_name}-{row.scenario} k={row.agents}",
            accepted=False,
            reason=reason,
            detail=detail,
        )

    try:
        kind, index = parse_scenario_name(row.scenario)
        agents = int(row.agents)
        lb = int(row.lower_bound) if row.lower_bound else None
        cost = int(row.solution_cost) if row.solution_cost else None
    except (TrackerError, ValueError) as exc:
        return reject(PARSE_ERROR, str(exc))
    if agents < 1:
        return reject(PARSE_ERROR, f"agents must be >= 1, got {agents}")
    if lb is None and cost is None:
        return reject(PARSE_ERROR, "row carries neither lower_bound nor solution_cost")
    if (lb is not None and lb < 0) or (cost is not None and cost < 0):
        return reject(PARSE_ERROR, "bounds must be non-negative")
    if cost is None and row.plan:
        return reject(PARSE_ERROR, "plan given without a solution_cost to verify")
    if cost is not None and not row.plan:
        return reject(MISSING_PLAN, "solution_cost requires its plan")

    inst = InstanceId(row.map_name, kind, index, agents)
    if not bench.has_instance(inst):
        return reject(UNKNOWN_INSTANCE, "no such instance in the loaded benchmark")

    grid = bench.grid(row.map_name)
    pairs = bench.pairs_for(inst)
    plan_field = None
    if cost is not None:
        try:
            plans = PlanSet.from_field(row.plan)
        except IllegalCharacter as exc:
            return reject(PARSE_ERROR, str(exc))
        if plans.agents != agents:
            return reject(
                PLAN_INVALID, f"{plans.agents} per-agent plans for {agents} agents"
            )
        outcome = validate_plan_set(grid, pairs, plans, claimed_cost=cost)
        if not outcome.valid:
            if outcome.cost_mismatch and not outcome.per_agent_errors and not outcome.conflicts:
                return reject(
                    COST_MISMATCH,
                    f"claimed {cost}, computed {outcome.computed_cost}",
                )
            return reject(PLAN_INVALID, "; ".join(outcome.reasons()[:4]))
        plan_field = plans.to_field()

    try:
        oracle = trivial_lower_bound(grid, pairs)
    except UnreachablePair as exc:
        # benchmark scenarios only pair reachable cells, so this marks a
        # broken benchmark tree rather than a bad submission
        return reject(UNKNOWN_INSTANCE, str(exc))
    entry = BatchEntry(
        instance=inst, lower_bound=lb, solution_cost=cost, plan=plan_field
    )
    return entry, oracle


def ingest_batch(
    raw: RawBatchFile,
    bench: Benchmark,
    store: TrackingStore,
    received_at: str | None = None,
) -> IngestReport:
    """Validate every row, then apply the accepted ones in one transaction.

    Re-ingesting a batch with the same content hash rejects every row as
    DuplicateRow and leaves the store untouched. Bound contradictions
    surface as revocation notices on the report, not errors.
    """
    if received_at is None:
        received_at = datetime.now(timezone.utc).isoformat(timespec="seconds")

    if store.has_batch(raw.batch_id):
        outcomes = tuple(
            RowOutcome(
                line=r.line,
                instance=f"{r.map_name}-{r.scenario} k={r.agents}",
                accepted=False,
                reason=DUPLICATE_ROW,
                detail=f"batch {raw.batch_id} already ingested",
            )
            for r in raw.rows
        )
        return IngestReport(
            batch_id=raw.batch_id,
            algorithm=raw.algorithm.name,
            duplicate_batch=True,
            outcomes=outcomes,
            revocations=(),
        )

    outcomes: list[RowOutcome] = []
    entries: list[BatchEntry] = []
    oracle_bounds: dict[InstanceId, int] = {}
    seen: set[InstanceId] = set()
    for row in raw.rows:
        checked = _check_row(row, bench)
        if isinstance(checked, RowOutcome):
            outcomes.append(checked)
            continue
        entry, oracle = checked
        if entry.instance in seen:
            outcomes.append(
                RowOutcome(
                    line=row.line,
                    instance=str(entry.instance),
                    accepted=False,
                    reason=DUPLICATE_ROW,
                    detail="instance already covered earlier in this batch",
                )
            )
            continue
        seen.add(entry.instance)
        entries.append(entry)
        oracle_bounds[entry.instance] = oracle
        outcomes.append(
            RowOutcome(line=row.line, instance=str(entry.instance), accepted=True)
        )

    revocations: tuple[RevocationNotice, ...] = ()
    if entries:
        batch = SubmissionBatch(
            batch_id=raw.batch_id,
            algorithm=raw.algorithm,
            received_at=received_at,
            entries=tuple(entries),
        )
        result = store.apply_batch(batch, oracle_bounds=oracle_bounds)
        revocations = result.revocations
    return IngestReport(
        batch_id=raw.batch_id,
        algorithm=raw.algorithm.name,
        duplicate_batch=False,
        outcomes=tuple(outcomes),
        revocations=revocations,
    )


def render_submission_csv(rows: list[tuple[InstanceId, int | None, int | None, str | None]]) -> str:
    """Inverse of parse_submission_csv for runner output and exports."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUBMISSION_HEADER)
    for inst, lb, cost, plan in rows:
        writer.writerow(
            [
                inst.map_name,
                inst.scenario_name,
                inst.agents,
                "" if lb is None else lb,
                "" if cost is None else cost,
                plan or "",
            ]
        )
    return buf.getvalue()


def render_descriptor(meta: AlgorithmMeta) -> str:
    lines = [f"algorithm: {meta.name}", f"authors: {meta.authors}"]
    if meta.references:
        lines.append(f"references: {meta.references}")
    if meta.repository:
        lines.append(f"repository: {meta.repository}")
    return "\n".join(lines) + "\n"
