from __future__ import annotations

import json

import pytest

from mapftrack.bench import InstanceId
from mapftrack.errors import BoundConflict, TrackerError, UnknownBatch
from mapftrack.tracking import (
    ORACLE_ALGORITHM,
    AlgorithmMeta,
    BatchEntry,
    Contribution,
    InstanceRecord,
    SubmissionBatch,
    TrackingStore,
    classify,
    record_result,
)

INST = InstanceId("empty-8-8", "even", 1, 2)
OTHER = InstanceId("empty-8-8", "even", 1, 3)


def make_batch(batch_id, algorithm, entries, received="2026-01-01T00:00:00Z"):
    return SubmissionBatch(
        batch_id=batch_id,
        algorithm=AlgorithmMeta(name=algorithm, authors="someone"),
        received_at=received,
        entries=tuple(entries),
    )


def lb_entry(lb, inst=INST):
    return BatchEntry(instance=inst, lower_bound=lb)


def cost_entry(cost, plan="rr;dd", inst=INST, lb=None):
    return BatchEntry(instance=inst, lower_bound=lb, solution_cost=cost, plan=plan)


class TestBatchEntry:
    def test_needs_bound_or_cost(self):
        with pytest.raises(TrackerError):
            BatchEntry(instance=INST)

    def test_cost_needs_plan(self):
        with pytest.raises(TrackerError):
            BatchEntry(instance=INST, solution_cost=5)


class TestRecordResult:
    def test_monotone_improvement(self):
        rec = InstanceRecord(instance=INST)
        record_result(rec, Contribution("b1", "algo-a", solution_cost=14, plan="p"))
        record_result(rec, Contribution("b2", "algo-b", solution_cost=12, plan="q"))
        assert rec.best_cost.value == 12
        assert rec.best_cost.holders == {"algo-b"}
        assert rec.best_cost.plan == "q"

    def test_tie_shares_credit(self):
        rec = InstanceRecord(instance=INST)
        record_result(rec, Contribution("b1", "algo-a", solution_cost=12, plan="p"))
        record_result(rec, Contribution("b2", "algo-b", solution_cost=12, plan="q"))
        assert rec.best_cost.value == 12
        assert rec.best_cost.holders == {"algo-a", "algo-b"}
        # the plan reference stays with the first batch that attained the value
        assert rec.best_cost.plan_batch == "b1"
        assert rec.best_cost.plan == "p"

    def test_worse_cost_keeps_best(self):
        rec = InstanceRecord(instance=INST)
        record_result(rec, Contribution("b1", "algo-a", solution_cost=12, plan="p"))
        record_result(rec, Contribution("b2", "algo-b", solution_cost=15, plan="q"))
        assert rec.best_cost.value == 12
        assert rec.best_cost.holders == {"algo-a"}
        assert len(rec.events) == 2  # history keeps everything

    def test_lb_improvement_and_tie(self):
        rec = InstanceRecord(instance=INST)
        record_result(rec, Contribution("b1", "algo-a", lower_bound=9))
        record_result(rec, Contribution("b2", "algo-b", lower_bound=11))
        record_result(rec, Contribution("b3", "algo-c", lower_bound=11))
        assert rec.best_lb.value == 11
        assert rec.best_lb.holders == {"algo-b", "algo-c"}

    def test_idempotent(self):
        rec = InstanceRecord(instance=INST)
        contribution = Contribution("b1", "algo-a", solution_cost=12, plan="p")
        assert record_result(rec, contribution) is True
        assert record_result(rec, contribution) is False
        assert len(rec.events) == 1

    def test_lb_exceeds_cost_conflict(self):
        rec = InstanceRecord(instance=INST)
        record_result(rec, Contribution("b1", "algo-a", solution_cost=14, plan="p"))
        with pytest.raises(BoundConflict) as exc:
            record_result(rec, Contribution("b2", "algo-b", lower_bound=15))
        assert exc.value.kind == "lb_exceeds_cost"
        assert exc.value.offending_batches == ("b2",)
        # nothing was mutated by the failed fold
        assert len(rec.events) == 1
        assert rec.best_lb is None

    def test_cost_undercuts_lb_conflict(self):
        rec = InstanceRecord(instance=INST)
        record_result(rec, Contribution("b1", "algo-a", lower_bound=10))
        record_result(rec, Contribution("b2", "algo-b", lower_bound=9))
        with pytest.raises(BoundConflict) as exc:
            record_result(rec, Contribution("b3", "algo-c", solution_cost=8, plan="p"))
        assert exc.value.kind == "cost_undercuts_lb"
        # every unrevoked batch whose bound beats the verified cost offends
        assert exc.value.offending_batches == ("b1", "b2")

    def test_equal_lb_and_cost_close(self):
        rec = InstanceRecord(instance=INST)
        record_result(rec, Contribution("b1", "algo-a", lower_bound=10))
        record_result(rec, Contribution("b2", "algo-b", solution_cost=10, plan="p"))
        assert classify(rec) == "closed"


class TestClassify:
    def test_unknown_without_record(self):
        assert classify(None) == "unknown"

    def test_states(self):
        rec = InstanceRecord(instance=INST)
        assert classify(rec) == "unknown"
        record_result(rec, Contribution("b1", "algo-a", lower_bound=9))
        assert classify(rec) == "unknown"
        record_result(rec, Contribution("b2", "algo-b", solution_cost=10, plan="p"))
        assert classify(rec) == "solved"
        record_result(rec, Contribution("b3", "algo-c", lower_bound=10))
        assert classify(rec) == "closed"


class TestApplyBatch:
    def test_basic_apply_with_oracle(self, store):
        result = store.apply_batch(
            make_batch("b1", "algo-a", [cost_entry(7)]), oracle_bounds={INST: 6}
        )
        assert not result.duplicate
        assert result.applied_entries == 1
        rec = store.record(INST)
        assert rec.best_lb.value == 6
        assert rec.best_lb.holders == {ORACLE_ALGORITHM}
        assert rec.best_cost.value == 7
        assert classify(rec) == "solved"

    def test_duplicate_batch_id_noop(self, store):
        store.apply_batch(make_batch("b1", "algo-a", [cost_entry(7)]))
        before = store.snapshot_bytes()
        result = store.apply_batch(make_batch("b1", "algo-a", [cost_entry(5, plan="x")]))
        assert result.duplicate
        assert store.snapshot_bytes() == before

    def test_lb_batch_then_better_cost_revokes(self, store):
        store.apply_batch(make_batch("b1", "algo-a", [lb_entry(10)]), oracle_bounds={INST: 4})
        result = store.apply_batch(make_batch("b2", "algo-b", [cost_entry(8)]))
        assert len(result.revocations) == 1
        notice = result.revocations[0]
        assert notice.batch_id == "b1"
        assert notice.instances == (INST,)
        rec = store.record(INST)
        assert rec.best_cost.value == 8
        assert rec.best_lb.value == 4  # falls back to the oracle bound
        assert store.is_lb_revoked("b1")

    def test_revocation_drops_to_next_best(self, store):
        store.apply_batch(make_batch("b1", "algo-a", [lb_entry(9)]))
        store.apply_batch(make_batch("b2", "algo-b", [lb_entry(15)]))
        notice = store.revoke_batch_lower_bounds("b2", reason="test")
        assert notice.instances == (INST,)
        assert store.record(INST).best_lb.value == 9
        assert store.record(INST).best_lb.holders == {"algo-a"}

    def test_revoking_tied_bound_keeps_value(self, store):
        store.apply_batch(make_batch("b1", "algo-a", [lb_entry(9)]))
        store.apply_batch(make_batch("b2", "algo-b", [lb_entry(9)]))
        store.revoke_batch_lower_bounds("b2")
        rec = store.record(INST)
        assert rec.best_lb.value == 9
        assert rec.best_lb.holders == {"algo-a"}

    def test_revoke_unknown_batch(self, store):
        with pytest.raises(UnknownBatch):
            store.revoke_batch_lower_bounds("missing")

    def test_revoke_idempotent(self, store):
        store.apply_batch(make_batch("b1", "algo-a", [lb_entry(9)]))
        first = store.revoke_batch_lower_bounds("b1")
        second = store.revoke_batch_lower_bounds("b1")
        assert first.instances == (INST,)
        assert second.instances == ()

    def test_self_contradicting_entry(self, store):
        # the entry's own lb beats its verified cost: cost wins, the batch
        # loses its lower bounds
        result = store.apply_batch(
            make_batch("b1", "algo-a", [cost_entry(14, lb=15)])
        )
        assert len(result.revocations) == 1
        assert result.revocations[0].batch_id == "b1"
        rec = store.record(INST)
        assert rec.best_cost.value == 14
        assert rec.best_lb is None

    def test_incoming_lb_against_verified_cost(self, store):
        store.apply_batch(make_batch("b1", "algo-a", [cost_entry(14), lb_entry(9, OTHER)]))
        result = store.apply_batch(make_batch("b2", "algo-b", [lb_entry(15)]))
        assert result.revocations and result.revocations[0].batch_id == "b2"
        rec = store.record(INST)
        assert rec.best_lb is None or rec.best_lb.value <= 14
        # OTHER instance is untouched by the revocation
        assert store.record(OTHER).best_lb.value == 9

    def test_seed_oracle(self, store):
        applied = store.seed_oracle({INST: 6, OTHER: 4})
        assert applied == 2
        assert store.seed_oracle({INST: 6}) == 0  # idempotent
        assert store.algorithms() == []
        assert store.algorithms(include_oracle=True) == [ORACLE_ALGORITHM]

    def test_tie_fairness_order_independent(self):
        a = TrackingStore()
        b = TrackingStore()
        batches = [
            make_batch("b1", "algo-a", [cost_entry(12, plan="p")]),
            make_batch("b2", "algo-b", [cost_entry(12, plan="p")]),
        ]
        a.apply_batch(batches[0])
        a.apply_batch(batches[1])
        b.apply_batch(batches[1])
        b.apply_batch(batches[0])
        ra, rb = a.record(INST), b.record(INST)
        assert ra.best_cost.value == rb.best_cost.value
        assert ra.best_cost.holders == rb.best_cost.holders
        assert ra.best_cost.batch_ids == rb.best_cost.batch_ids


class TestEventLog:
    def test_replay_reproduces_snapshot(self, tmp_path):
        path = tmp_path / "log.jsonl"
        store = TrackingStore(path)
        store.apply_batch(make_batch("b1", "algo-a", [lb_entry(10)]), oracle_bounds={INST: 4})
        store.apply_batch(make_batch("b2", "algo-b", [cost_entry(8)]))
        snap = store.snapshot_bytes()
        store.close()

        again = TrackingStore(path)
        assert again.snapshot_bytes() == snap
        assert again.is_lb_revoked("b1")
        again.close()

    def test_replay_after_manual_revocation(self, tmp_path):
        path = tmp_path / "log.jsonl"
        store = TrackingStore(path)
        store.apply_batch(make_batch("b1", "algo-a", [lb_entry(9)]))
        store.apply_batch(make_batch("b2", "algo-b", [lb_entry(15)]))
        store.revoke_batch_lower_bounds("b2", reason="suspicious")
        snap = store.snapshot_bytes()
        store.close()
        again = TrackingStore(path)
        assert again.snapshot_bytes() == snap
        assert again.record(INST).best_lb.value == 9
        again.close()

    def test_torn_tail_is_trimmed(self, tmp_path):
        path = tmp_path / "log.jsonl"
        store = TrackingStore(path)
        store.apply_batch(make_batch("b1", "algo-a", [lb_entry(10)]))
        snap = store.snapshot_bytes()
        store.close()

        good_size = path.stat().st_size
        with open(path, "a", encoding="utf-8") as fh:
            fh.write('{"type":"batch","batch_id":"b2","algorithm":"x"}\n')
            fh.write('{"type":"result","batch_id":"b2","lb":99,"map":"em')  # torn

        again = TrackingStore(path)
        assert again.snapshot_bytes() == snap
        assert not again.has_batch("b2")
        again.close()
        assert path.stat().st_size == good_size

    def test_uncommitted_events_ignored(self, tmp_path):
        path = tmp_path / "log.jsonl"
        store = TrackingStore(path)
        store.apply_batch(make_batch("b1", "algo-a", [lb_entry(10)]))
        snap = store.snapshot_bytes()
        store.close()
        # complete JSON lines but no commit marker: still not applied
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps({"type": "batch", "batch_id": "b9", "algorithm": "x"}) + "\n")
        again = TrackingStore(path)
        assert again.snapshot_bytes() == snap
        assert not again.has_batch("b9")
        again.close()

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "notalog.jsonl"
        path.write_text('{"hello": "world"}\n')
        with pytest.raises(TrackerError):
            TrackingStore(path)

    def test_crash_mid_write_leaves_pre_batch_state(self, tmp_path):
        path = tmp_path / "log.jsonl"
        store = TrackingStore(path)
        store.apply_batch(make_batch("b1", "algo-a", [lb_entry(10)]))
        before = store.snapshot_bytes()

        class TornHandle:
            """Writes half the payload, then the disk dies."""

            def __init__(self, real):
                self._real = real

            def write(self, text):
                self._real.write(text[: max(1, len(text) // 2)])
                self._real.flush()
                raise OSError("no space left on device")

            def flush(self):
                self._real.flush()

            def fileno(self):
                return self._real.fileno()

            def close(self):
                self._real.close()

        store._fh = TornHandle(store._fh)
        with pytest.raises(OSError):
            store.apply_batch(make_batch("b2", "algo-b", [cost_entry(3, plan="rrr")]))
        # in-memory state has been rebuilt from what actually committed
        assert store.snapshot_bytes() == before
        assert not store.has_batch("b2")
        # and the store is usable again after the failure
        store.apply_batch(make_batch("b3", "algo-c", [cost_entry(4, plan="rrrr")]))
        assert store.record(INST).best_cost.value == 4
        store.close()

        again = TrackingStore(path)
        assert again.has_batch("b3")
        assert not again.has_batch("b2")
        again.close()


class TestSnapshot:
    def test_contentless_records_omitted(self, store):
        store.apply_batch(make_batch("b1", "algo-a", [lb_entry(9)]))
        store.revoke_batch_lower_bounds("b1")
        assert store.snapshot_bytes() == b"\n"

    def test_snapshot_is_canonical(self, store):
        store.apply_batch(make_batch("b1", "algo-a", [lb_entry(9), lb_entry(4, OTHER)]))
        lines = store.snapshot_bytes().decode().strip().split("\n")
        assert len(lines) == 2
        parsed = [json.loads(line) for line in lines]
        assert [p["instance"]["agents"] for p in parsed] == [2, 3]
