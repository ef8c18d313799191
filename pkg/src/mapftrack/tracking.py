"""Best-known bound records: event-sourced store, classification, revocation.

The durable artifact is an append-only log of JSON lines. Every mutation is
a transaction: its events are buffered and written together, terminated by
a commit marker; a load ignores (and trims) anything after the last commit,
so a crash mid-write cannot leave half a batch behind. All derived state
(per-instance records with best bounds and holders) is rebuilt from the log
on open and is never persisted separately.

Lower bounds are trusted on ingestion. When a verified solution cost later
contradicts a stored lower bound, every lower bound from the offending
batch is revoked: the batch is flagged, affected records are recomputed
from their surviving contributions, and a revocation event lands in the log
before the contribution that exposed it, so replay never re-raises.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path

from .bench import InstanceId
from .errors import BoundConflict, TrackerError, UnknownBatch

LOG_FORMAT_NAME = "mapftrack-events"
LOG_FORMAT_VERSION = 1

# Reserved name under which the system records its own shortest-path-sum
# lower bounds. Comparison queries can include or exclude it explicitly.
ORACLE_ALGORITHM = "trivial-oracle"
ORACLE_BATCH = "trivial-oracle"


@dataclass(frozen=True)
class AlgorithmMeta:
    """Descriptor accompanying a submission batch."""

    name: str
    authors: str = ""
    references: str = ""
    repository: str = ""


@dataclass(frozen=True)
class BatchEntry:
    """One row of a submission: at least one of lower_bound/solution_cost;
    a solution cost always comes with its plan (already validated)."""

    instance: InstanceId
    lower_bound: int | None = None
    solution_cost: int | None = None
    plan: str | None = None

    def __post_init__(self):
        if self.lower_bound is None and self.solution_cost is None:
            raise TrackerError(f"{self.instance}: entry carries neither bound nor cost")
        if self.solution_cost is not None and self.plan is None:
            raise TrackerError(f"{self.instance}: solution cost without a plan")


@dataclass(frozen=True)
class SubmissionBatch:
    batch_id: str
    algorithm: AlgorithmMeta
    received_at: str
    entries: tuple[BatchEntry, ...]


@dataclass(frozen=True)
class Contribution:
    """An accepted entry as stored per instance, in arrival order."""

    batch_id: str
    algorithm: str
    lower_bound: int | None = None
    solution_cost: int | None = None
    plan: str | None = None


@dataclass
class RecordEvent:
    """History line on a record. lb_revoked marks lower bounds that no
    longer count; the original claim is kept for the audit trail."""

    batch_id: str
    algorithm: str
    lower_bound: int | None
    solution_cost: int | None
    lb_revoked: bool = False


@dataclass
class BestBound:
    value: int
    holders: frozenset[str]
    batch_ids: frozenset[str]


@dataclass
class BestSolution:
    value: int
    holders: frozenset[str]
    batch_ids: frozenset[str]
    plan: str
    plan_batch: str


@dataclass
class InstanceRecord:
    instance: InstanceId
    best_lb: BestBound | None = None
    best_cost: BestSolution | None = None
    events: list[RecordEvent] = field(default_factory=list)


def classify(record: InstanceRecord | None) -> str:
    """closed: bounds meet; solved: cost known, bound open; unknown: no cost."""
    if record is None or record.best_cost is None:
        return "unknown"
    if record.best_lb is not None and record.best_lb.value == record.best_cost.value:
        return "closed"
    return "solved"


def record_result(
    record: InstanceRecord,
    contribution: Contribution,
    *,
    lb_revoked: bool = False,
    check: bool = True,
) -> bool:
    """Fold one accepted contribution into a record, in place.

    Returns False for an exact repeat of an already-applied contribution
    (idempotence). Raises BoundConflict before touching anything when the
    contribution contradicts the record; the caller resolves the conflict
    by revoking the offending batch and retrying.
    """
    for ev in record.events:
        if (
            ev.batch_id == contribution.batch_id
            and ev.algorithm == contribution.algorithm
            and ev.lower_bound == contribution.lower_bound
            and ev.solution_cost == contribution.solution_cost
        ):
            return False

    lb = None if lb_revoked else contribution.lower_bound
    cost = contribution.solution_cost

    if check:
        if cost is not None and record.best_lb is not None and cost < record.best_lb.value:
            offenders = tuple(
                sorted(
                    {
                        ev.batch_id
                        for ev in record.events
                        if not ev.lb_revoked
                        and ev.lower_bound is not None
                        and ev.lower_bound > cost
                    }
                )
            )
            raise BoundConflict("cost_undercuts_lb", record.instance, offenders)
        projected = record.best_cost.value if record.best_cost is not None else None
        if cost is not None:
            projected = cost if projected is None else min(projected, cost)
        if lb is not None and projected is not None and lb > projected:
            raise BoundConflict("lb_exceeds_cost", record.instance, (contribution.batch_id,))

    record.events.append(
        RecordEvent(
            batch_id=contribution.batch_id,
            algorithm=contribution.algorithm,
            lower_bound=contribution.lower_bound,
            solution_cost=contribution.solution_cost,
            lb_revoked=lb_revoked,
        )
    )
    if cost is not None:
        bc = record.best_cost
        if bc is None or cost < bc.value:
            record.best_cost = BestSolution(
                value=cost,
                holders=frozenset([contribution.algorithm]),
                batch_ids=frozenset([contribution.batch_id]),
                plan=contribution.plan or "",
                plan_batch=contribution.batch_id,
            )
        elif cost == bc.value:
            record.best_cost = replace(
                bc,
                holders=bc.holders | {contribution.algorithm},
                batch_ids=bc.batch_ids | {contribution.batch_id},
            )
    if lb is not None:
        bl = record.best_lb
        if bl is None or lb > bl.value:
            record.best_lb = BestBound(
                value=lb,
                holders=frozenset([contribution.algorithm]),
                batch_ids=frozenset([contribution.batch_id]),
            )
        elif lb == bl.value:
            record.best_lb = replace(
                bl,
                holders=bl.holders | {contribution.algorithm},
                batch_ids=bl.batch_ids | {contribution.batch_id},
            )
    return True


@dataclass(frozen=True)
class RevocationNotice:
    batch_id: str
    reason: str
    instances: tuple[InstanceId, ...]


@dataclass(frozen=True)
class BatchApplyResult:
    batch_id: str
    duplicate: bool
    applied_entries: int
    revocations: tuple[RevocationNotice, ...]


@dataclass
class _BatchState:
    meta: AlgorithmMeta
    received_at: str
    lb_revoked: bool = False
    revoke_reason: str = ""


def _instance_to_json(inst: InstanceId) -> dict:
    return {
        "map": inst.map_name,
        "kind": inst.scen_kind,
        "index": inst.scen_index,
        "agents": inst.agents,
    }


def _instance_from_json(obj: dict) -> InstanceId:
    return InstanceId(
        map_name=obj["map"],
        scen_kind=obj["kind"],
        scen_index=obj["index"],
        agents=obj["agents"],
    )


class TrackingStore:
    """Instance records backed by an append-only event log.

    path=None keeps everything in memory (tests, dry runs). All public
    methods are safe to call from multiple threads; writers serialize on
    one lock so readers never observe a half-applied batch.
    """

    def __init__(self, path: str | Path | None = None):
        self._lock = threading.RLock()
        self._path = Path(path) if path is not None else None
        self._fh = None
        self._batches: dict[str, _BatchState] = {}
        self._contribs: dict[InstanceId, list[Contribution]] = {}
        self._records: dict[InstanceId, InstanceRecord] = {}
        self._batch_instances: dict[str, set[InstanceId]] = {}
        if self._path is not None:
            self._open_log()

    # --- log plumbing -------------------------------------------------------

    def _open_log(self) -> None:
        assert self._path is not None
        self._path.parent.mkdir(parents=True, exist_ok=True)
        if self._path.exists() and self._path.stat().st_size > 0:
            committed_end = self._replay_file()
            if committed_end < self._path.stat().st_size:
                # a crash left an unfinished transaction; trim it
                with open(self._path, "r+b") as fh:
                    fh.truncate(committed_end)
        else:
            self._path.write_text(
                json.dumps(
                    {
                        "type": "format",
                        "name": LOG_FORMAT_NAME,
                        "version": LOG_FORMAT_VERSION,
                    }
                )
                + "\n"
            )
        self._fh = open(self._path, "a", encoding="utf-8")

    def _replay_file(self) -> int:
        """Apply all committed transactions; return the byte offset just
        past the last commit marker."""
        assert self._path is not None
        committed_end = 0
        pending: list[dict] = []
        offset = 0
        with open(self._path, "rb") as fh:
            first = True
            for raw in fh:
                offset += len(raw)
                try:
                    event = json.loads(raw.decode("utf-8"))
                except (UnicodeDecodeError, json.JSONDecodeError):
                    break  # torn write; everything from here on is dead
                if first:
                    first = False
                    if event.get("type") != "format" or event.get("name") != LOG_FORMAT_NAME:
                        raise TrackerError(f"{self._path}: not an event log")
                    if event.get("version", 0) > LOG_FORMAT_VERSION:
                        raise TrackerError(
                            f"{self._path}: log version {event.get('version')} "
                            f"is newer than supported {LOG_FORMAT_VERSION}"
                        )
                    committed_end = offset
                    continue
                if event.get("type") == "commit":
                    for ev in pending:
                        self._apply_event(ev)
                    pending.clear()
                    committed_end = offset
                else:
                    pending.append(event)
        return committed_end

    def _apply_event(self, event: dict) -> None:
        etype = event.get("type")
        if etype == "batch":
            meta = AlgorithmMeta(
                name=event["algorithm"],
                authors=event.get("authors", ""),
                references=event.get("references", ""),
                repository=event.get("repository", ""),
            )
            self._batches.setdefault(
                event["batch_id"], _BatchState(meta=meta, received_at=event.get("received_at", ""))
            )
        elif etype == "result":
            batch = self._batches[event["batch_id"]]
            contribution = Contribution(
                batch_id=event["batch_id"],
                algorithm=batch.meta.name,
                lower_bound=event.get("lb"),
                solution_cost=event.get("cost"),
                plan=event.get("plan"),
            )
            inst = _instance_from_json(event)
            self._fold(inst, contribution)
        elif etype == "revoke_lbs":
            self._revoke_in_memory(event["batch_id"], event.get("reason", ""))
        else:
            raise TrackerError(f"unknown event type {etype!r} in log")

    def _write_txn(self, events: list[dict]) -> None:
        if self._fh is None:
            return
        payload = "".join(json.dumps(ev, sort_keys=True) + "\n" for ev in events)
        payload += json.dumps({"type": "commit", "events": len(events)}) + "\n"
        try:
            self._fh.write(payload)
            self._fh.flush()
            os.fsync(self._fh.fileno())
        except Exception:
            # memory may be ahead of disk; rebuild from what actually landed
            self._reset_memory()
            self._fh.close()
            self._open_log()
            raise

    def _reset_memory(self) -> None:
        self._batches = {}
        self._contribs = {}
        self._records = {}
        self._batch_instances = {}

    # --- folding ------------------------------------------------------------

    def _fold(self, inst: InstanceId, contribution: Contribution) -> bool:
        """Apply one contribution to memory. Assumes conflicts already
        resolved (replay) or handled by the caller (live apply)."""
        batch = self._batches[contribution.batch_id]
        record = self._records.get(inst)
        if record is None:
            record = InstanceRecord(instance=inst)
            self._records[inst] = record
        applied = record_result(record, contribution, lb_revoked=batch.lb_revoked)
        if applied:
            self._contribs.setdefault(inst, []).append(contribution)
            self._batch_instances.setdefault(contribution.batch_id, set()).add(inst)
        return applied

    def _rebuild_record(self, inst: InstanceId) -> None:
        record = InstanceRecord(instance=inst)
        for contribution in self._contribs.get(inst, []):
            batch = self._batches[contribution.batch_id]
            record_result(record, contribution, lb_revoked=batch.lb_revoked)
        self._records[inst] = record

    def _revoke_in_memory(self, batch_id: str, reason: str) -> tuple[InstanceId, ...]:
        batch = self._batches.get(batch_id)
        if batch is None:
            raise UnknownBatch(f"batch {batch_id!r} not in store")
        if batch.lb_revoked:
            return ()
        batch.lb_revoked = True
        batch.revoke_reason = reason
        affected = sorted(
            inst
            for inst in self._batch_instances.get(batch_id, ())
            if any(
                c.batch_id == batch_id and c.lower_bound is not None
                for c in self._contribs.get(inst, [])
            )
        )
        for inst in affected:
            self._rebuild_record(inst)
        return tuple(affected)

    # --- public API -----------------------------------------------------------

    def apply_batch(
        self,
        batch: SubmissionBatch,
        oracle_bounds: dict[InstanceId, int] | None = None,
    ) -> BatchApplyResult:
        """Apply a validated batch atomically.

        oracle_bounds are the system's own trivial lower bounds for the
        touched instances; they ride along in the same transaction under
        the reserved algorithm name. Contradictions trigger revocations
        inside the transaction and are reported, never raised.
        """
        with self._lock:
            if batch.batch_id in self._batches:
                return BatchApplyResult(
                    batch_id=batch.batch_id,
                    duplicate=True,
                    applied_entries=0,
                    revocations=(),
                )
            events: list[dict] = []
            revocations: list[RevocationNotice] = []

            if oracle_bounds:
                if ORACLE_BATCH not in self._batches:
                    ev = {
                        "type": "batch",
                        "batch_id": ORACLE_BATCH,
                        "algorithm": ORACLE_ALGORITHM,
                        "received_at": batch.received_at,
                    }
                    self._apply_event(ev)
                    events.append(ev)
                for inst in sorted(oracle_bounds):
                    ev = {
                        "type": "result",
                        "batch_id": ORACLE_BATCH,
                        "lb": oracle_bounds[inst],
                        **_instance_to_json(inst),
                    }
                    # sound by construction, cannot conflict with a verified cost
                    if self._fold(inst, Contribution(ORACLE_BATCH, ORACLE_ALGORITHM, lower_bound=oracle_bounds[inst])):
                        events.append(ev)

            batch_ev = {
                "type": "batch",
                "batch_id": batch.batch_id,
                "algorithm": batch.algorithm.name,
                "authors": batch.algorithm.authors,
                "references": batch.algorithm.references,
                "repository": batch.algorithm.repository,
                "received_at": batch.received_at,
            }
            self._apply_event(batch_ev)
            events.append(batch_ev)

            applied = 0
            for entry in batch.entries:
                contribution = Contribution(
                    batch_id=batch.batch_id,
                    algorithm=batch.algorithm.name,
                    lower_bound=entry.lower_bound,
                    solution_cost=entry.solution_cost,
                    plan=entry.plan,
                )
                for _ in range(3):
                    try:
                        did = self._fold(entry.instance, contribution)
                        break
                    except BoundConflict as bc:
                        for offender in bc.offending_batches:
                            reason = (
                                f"lower bound contradicted by verified cost on {bc.instance}"
                                if bc.kind == "cost_undercuts_lb"
                                else f"lower bound exceeds verified cost on {bc.instance}"
                            )
                            ev = {"type": "revoke_lbs", "batch_id": offender, "reason": reason}
                            affected = self._revoke_in_memory(offender, reason)
                            events.append(ev)
                            revocations.append(
                                RevocationNotice(
                                    batch_id=offender, reason=reason, instances=affected
                                )
                            )
                else:
                    raise AssertionError("bound conflict not resolved by revocation")
                if did:
                    applied += 1
                    events.append(
                        {
                            "type": "result",
                            "batch_id": batch.batch_id,
                            "lb": entry.lower_bound,
                            "cost": entry.solution_cost,
                            "plan": entry.plan,
                            **_instance_to_json(entry.instance),
                        }
                    )
            self._write_txn(events)
            return BatchApplyResult(
                batch_id=batch.batch_id,
                duplicate=False,
                applied_entries=applied,
                revocations=tuple(revocations),
            )

    def seed_oracle(self, bounds: dict[InstanceId, int], received_at: str = "") -> int:
        """Record trivial lower bounds outside any submission. Returns the
        number of instances actually updated."""
        with self._lock:
            events: list[dict] = []
            if ORACLE_BATCH not in self._batches:
                ev = {
                    "type": "batch",
                    "batch_id": ORACLE_BATCH,
                    "algorithm": ORACLE_ALGORITHM,
                    "received_at": received_at,
                }
                self._apply_event(ev)
                events.append(ev)
            applied = 0
            for inst in sorted(bounds):
                ev = {
                    "type": "result",
                    "batch_id": ORACLE_BATCH,
                    "lb": bounds[inst],
                    **_instance_to_json(inst),
                }
                if self._fold(inst, Contribution(ORACLE_BATCH, ORACLE_ALGORITHM, lower_bound=bounds[inst])):
                    events.append(ev)
                    applied += 1
            if events:
                self._write_txn(events)
            return applied

    def revoke_batch_lower_bounds(self, batch_id: str, reason: str = "manual revocation") -> RevocationNotice:
        """Drop every lower bound the batch contributed and recompute the
        affected records. Raises UnknownBatch."""
        with self._lock:
            if batch_id not in self._batches:
                raise UnknownBatch(f"batch {batch_id!r} not in store")
            affected = self._revoke_in_memory(batch_id, reason)
            if affected:
                self._write_txn([{"type": "revoke_lbs", "batch_id": batch_id, "reason": reason}])
            return RevocationNotice(batch_id=batch_id, reason=reason, instances=affected)

    # --- queries ---------------------------------------------------------------

    def record(self, inst: InstanceId) -> InstanceRecord | None:
        with self._lock:
            return self._records.get(inst)

    def records(self) -> list[InstanceRecord]:
        with self._lock:
            return [self._records[k] for k in sorted(self._records)]

    def has_batch(self, batch_id: str) -> bool:
        with self._lock:
            return batch_id in self._batches

    def batch_meta(self, batch_id: str) -> AlgorithmMeta:
        with self._lock:
            try:
                return self._batches[batch_id].meta
            except KeyError:
                raise UnknownBatch(f"batch {batch_id!r} not in store") from None

    def batch_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._batches)

    def is_lb_revoked(self, batch_id: str) -> bool:
        with self._lock:
            try:
                return self._batches[batch_id].lb_revoked
            except KeyError:
                raise UnknownBatch(f"batch {batch_id!r} not in store") from None

    def algorithms(self, include_oracle: bool = False) -> list[str]:
        with self._lock:
            names = {b.meta.name for b in self._batches.values()}
        if not include_oracle:
            names.discard(ORACLE_ALGORITHM)
        return sorted(names)

    def snapshot_bytes(self) -> bytes:
        """Canonical serialization of the derived state (no history, no
        timestamps): what revocation-equivalence and rebuild tests compare.

        Records left with neither bound nor cost (everything revoked) are
        omitted; they are indistinguishable from untouched instances."""
        with self._lock:
            lines = []
            for inst in sorted(self._records):
                record = self._records[inst]
                if record.best_lb is None and record.best_cost is None:
                    continue
                state: dict = {"instance": _instance_to_json(inst), "state": classify(record)}
                if record.best_lb is not None:
                    state["lb"] = {
                        "value": record.best_lb.value,
                        "algorithms": sorted(record.best_lb.holders),
                        "batches": sorted(record.best_lb.batch_ids),
                    }
                if record.best_cost is not None:
                    state["cost"] = {
                        "value": record.best_cost.value,
                        "algorithms": sorted(record.best_cost.holders),
                        "batches": sorted(record.best_cost.batch_ids),
                        "plan": record.best_cost.plan,
                        "plan_batch": record.best_cost.plan_batch,
                    }
                lines.append(json.dumps(state, sort_keys=True, separators=(",", ":")))
            return ("\n".join(lines) + "\n").encode("utf-8")

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None
