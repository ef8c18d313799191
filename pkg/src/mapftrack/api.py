"""HTTP/JSON service over a benchmark and a tracking store.

All routes live under /api/v1/. Reads are safe to run concurrently with
submissions: batches apply atomically under the store lock and submissions
are processed strictly one at a time, so no response can observe half a
batch. Large responses (plan payloads in particular) are gzip-compressed
when the client accepts it.
"""

from __future__ import annotations

import csv as csv_lib
import io
import threading
import uuid
from dataclasses import asdict

from fastapi import FastAPI, File, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.gzip import GZipMiddleware
from fastapi.responses import JSONResponse, StreamingResponse

from .analytics import (
    COMPARISON_METRICS,
    EXPORT_LEVELS,
    QueryScope,
    UnknownBatchAlgorithm,
    algorithm_comparison,
    comparison_by_agents,
    export_results,
    grouped_progress,
    instances_in_scope,
    progress_summary,
)
from .bench import Benchmark, InstanceId, parse_scenario_name
from .errors import (
    EmptyScope,
    TrackerError,
    UnknownMap,
    UnknownScenario,
)
from .ingest import IngestReport, ingest_batch, load_batch
from .tracking import TrackingStore, classify

DEFAULT_UPLOAD_LIMIT = 32 * 1024 * 1024
DEFAULT_ASYNC_THRESHOLD = 512 * 1024

_NOT_FOUND = (UnknownMap, UnknownScenario, EmptyScope, UnknownBatchAlgorithm)


class _ApiError(Exception):
    def __init__(self, status: int, message: str):
        self.status = status
        self.message = message


def _scope_from_params(
    domain: str | None = None,
    map_name: str | None = None,
    scenario: str | None = None,
    agents_min: int | None = None,
    agents_max: int | None = None,
) -> QueryScope:
    kind = index = None
    if scenario:
        kind, index = parse_scenario_name(scenario)
    return QueryScope(
        domain=domain or None,
        map_name=map_name or None,
        scen_kind=kind,
        scen_index=index,
        agents_min=agents_min,
        agents_max=agents_max,
    )


def _summary_json(p) -> dict:
    return {
        "scope": p.scope,
        "total": p.total,
        "closed": p.closed,
        "solved": p.solved,
        "unknown": p.unknown,
        "pct_closed": p.pct_closed,
        "pct_solved": p.pct_solved,
        "pct_unknown": p.pct_unknown,
    }


def _report_json(report: IngestReport) -> dict:
    return {
        "batch_id": report.batch_id,
        "algorithm": report.algorithm,
        "duplicate_batch": report.duplicate_batch,
        "accepted": report.accepted,
        "rejected": report.rejected,
        "rows": [asdict(o) for o in report.outcomes],
        "revocations": [
            {
                "batch_id": r.batch_id,
                "reason": r.reason,
                "instances": [str(i) for i in r.instances],
            }
            for r in report.revocations
        ],
    }


def create_app(
    bench: Benchmark,
    store: TrackingStore,
    upload_limit: int = DEFAULT_UPLOAD_LIMIT,
    async_threshold: int = DEFAULT_ASYNC_THRESHOLD,
) -> FastAPI:
    app = FastAPI(title="mapftrack", docs_url=None, redoc_url=None)
    app.add_middleware(GZipMiddleware, minimum_size=4096)

    ingest_lock = threading.Lock()  # submissions are strictly serial
    jobs: dict[str, dict] = {}
    jobs_lock = threading.Lock()

    @app.exception_handler(_ApiError)
    async def _api_error(_request: Request, exc: _ApiError):
        return JSONResponse(status_code=exc.status, content={"error": exc.message})

    @app.exception_handler(TrackerError)
    async def _tracker_error(_request: Request, exc: TrackerError):
        status = 404 if isinstance(exc, _NOT_FOUND) else 400
        return JSONResponse(status_code=status, content={"error": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors()[:2])})

    @app.get("/api/v1/progress")
    def progress(
        domain: str | None = None,
        map: str | None = None,
        scenario: str | None = None,
        agents_min: int | None = None,
        agents_max: int | None = None,
        group_by: str | None = None,
    ):
        scope = _scope_from_params(domain, map, scenario, agents_min, agents_max)
        if group_by is None:
            return _summary_json(progress_summary(bench, store, scope))
        if group_by not in ("domain", "map", "scenario"):
            raise _ApiError(400, f"group_by must be domain, map or scenario, got {group_by!r}")
        return [
            _summary_json(p) for p in grouped_progress(bench, store, scope, by=group_by)
        ]

    @app.get("/api/v1/comparison")
    def comparison(
        map: str | None = None,
        metric: str = "solved",
        algorithms: str | None = None,
        domain: str | None = None,
        scenario: str | None = None,
        agents_min: int | None = None,
        agents_max: int | None = None,
        include_oracle: bool = False,
    ):
        names = [a.strip() for a in algorithms.split(",") if a.strip()] if algorithms else None
        if map is not None and scenario is None:
            # the per-map drilldown: series over agent counts
            if metric not in COMPARISON_METRICS:
                raise _ApiError(400, f"metric must be one of {COMPARISON_METRICS}")
            series = comparison_by_agents(bench, store, map, metric, names)
            return {
                "map": map,
                "metric": metric,
                "series": {
                    a: [{"agents": k, "pct": v} for k, v in pts]
                    for a, pts in series.items()
                },
            }
        scope = _scope_from_params(domain, map, scenario, agents_min, agents_max)
        metrics = algorithm_comparison(
            bench, store, scope, algorithms=names, include_oracle=include_oracle
        )
        return {
            "scope": scope.describe(),
            "algorithms": [asdict(m) for m in metrics],
        }

    @app.get("/api/v1/instances")
    def instances(
        domain: str | None = None,
        map: str | None = None,
        scenario: str | None = None,
        agents_min: int | None = None,
        agents_max: int | None = None,
        limit: int = 100,
        offset: int = 0,
    ):
        if limit < 1 or limit > 1000:
            raise _ApiError(400, f"limit must be in 1..1000, got {limit}")
        if offset < 0:
            raise _ApiError(400, f"offset must be >= 0, got {offset}")
        scope = _scope_from_params(domain, map, scenario, agents_min, agents_max)
        all_instances = instances_in_scope(bench, scope)
        if not all_instances:
            raise _ApiError(404, f"scope {scope.describe()!r} matches no instances")
        page = all_instances[offset : offset + limit]
        items = []
        for inst in page:
            record = store.record(inst)
            lb = record.best_lb if record else None
            cost = record.best_cost if record else None
            items.append(
                {
                    "map": inst.map_name,
                    "scenario": inst.scenario_name,
                    "agents": inst.agents,
                    "lower_bound": lb.value if lb else None,
                    "solution_cost": cost.value if cost else None,
                    "state": classify(record),
                    "lb_algorithms": sorted(lb.holders) if lb else [],
                    "cost_algorithms": sorted(cost.holders) if cost else [],
                    "has_plan": bool(cost and cost.plan),
                }
            )
        return {
            "total": len(all_instances),
            "offset": offset,
            "limit": limit,
            "items": items,
        }

    @app.get("/api/v1/plan")
    def plan(map: str, scenario: str, agents: int):
        kind, index = parse_scenario_name(scenario)
        scen = bench.scenario(map, kind, index)  # 404 on unknown map/scenario
        inst = InstanceId(map, kind, index, agents)
        if not bench.has_instance(inst):
            raise _ApiError(404, f"no instance {inst}")
        record = store.record(inst)
        if record is None or record.best_cost is None or not record.best_cost.plan:
            raise _ApiError(404, f"no stored plan for {inst}")
        grid = bench.grid(map)
        pairs = bench.pairs_for(inst)
        return {
            "map": map,
            "scenario": scenario,
            "agents": agents,
            "width": grid.width,
            "height": grid.height,
            "cost": record.best_cost.value,
            "algorithms": sorted(record.best_cost.holders),
            "pairs": [
                {"start": list(s), "goal": list(g)} for s, g in pairs
            ],
            "plans": record.best_cost.plan.split(";"),
        }

    def _run_ingest(csv_text: str, descriptor_text: str) -> IngestReport:
        raw = load_batch(csv_text, descriptor_text)
        with ingest_lock:
            return ingest_batch(raw, bench, store)

    @app.post("/api/v1/submissions", status_code=201)
    async def submit(
        csv: UploadFile = File(...),
        descriptor: UploadFile = File(...),
    ):
        csv_bytes = await csv.read()
        descriptor_bytes = await descriptor.read()
        if len(csv_bytes) + len(descriptor_bytes) > upload_limit:
            raise _ApiError(413, f"submission exceeds {upload_limit} bytes")
        try:
            csv_text = csv_bytes.decode("utf-8")
            descriptor_text = descriptor_bytes.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise _ApiError(400, f"submission files must be UTF-8: {exc}") from None
        if len(csv_bytes) <= async_threshold:
            return _report_json(_run_ingest(csv_text, descriptor_text))
        job_id = uuid.uuid4().hex
        with jobs_lock:
            jobs[job_id] = {"status": "pending"}

        def work():
            try:
                report = _run_ingest(csv_text, descriptor_text)
                with jobs_lock:
                    jobs[job_id] = {"status": "done", "report": _report_json(report)}
            except TrackerError as exc:
                with jobs_lock:
                    jobs[job_id] = {"status": "failed", "error": str(exc)}

        threading.Thread(target=work, daemon=True).start()
        return {"job_id": job_id, "status": "pending"}

    @app.get("/api/v1/submissions/{job_id}")
    def submission_status(job_id: str):
        with jobs_lock:
            job = jobs.get(job_id)
        if job is None:
            raise _ApiError(404, f"no submission job {job_id!r}")
        return job

    @app.get("/api/v1/export")
    def export(
        level: str = "instance",
        domain: str | None = None,
        map: str | None = None,
        scenario: str | None = None,
        agents_min: int | None = None,
        agents_max: int | None = None,
    ):
        if level not in EXPORT_LEVELS:
            raise _ApiError(400, f"level must be one of {EXPORT_LEVELS}, got {level!r}")
        scope = _scope_from_params(domain, map, scenario, agents_min, agents_max)
        header, rows = export_results(bench, store, scope, level)
        buf = io.StringIO()
        writer = csv_lib.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return StreamingResponse(
            iter([buf.getvalue()]),
            media_type="text/csv",
            headers={
                "Content-Disposition": f'attachment; filename="export-{level}.csv"'
            },
        )

    @app.get("/api/v1/health")
    def health():
        return {"status": "ok", "maps": len(bench.maps), "scenarios": len(bench.scenarios)}

    return app


def serve(
    bench: Benchmark,
    store: TrackingStore,
    host: str = "127.0.0.1",
    port: int = 8080,
    upload_limit: int = DEFAULT_UPLOAD_LIMIT,
) -> None:
    import uvicorn

    app = create_app(bench, store, upload_limit=upload_limit)
    uvicorn.run(app, host=host, port=port, log_level="warning")
