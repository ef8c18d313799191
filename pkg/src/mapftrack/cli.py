"""Command line interface.

Exit codes: 0 success / valid, 1 domain failure (invalid plan, rejected
rows, unsolvable query), 2 usage or I/O errors. Machine-readable output via
--format csv or --format json; failures print a 'reason: <Code> ...' line.

The benchmark root (maps/, scens/, domains.txt) comes from --benchmark-root
or the MAPFTRACK_BENCHMARK_ROOT environment variable; the store path from
--store or MAPFTRACK_STORE.
"""

from __future__ import annotations

import csv as csv_lib
import io
import json
import sys
from pathlib import Path

import click

from . import analytics, bounds, ingest, runner as runner_mod
from .bench import (
    Benchmark,
    default_manifest,
    load_benchmark,
    load_map,
    scenario_from_path,
    write_scenario,
)
from .errors import TrackerError
from .tracking import TrackingStore
from .validate import PlanSet, validate_plan_set

FORMATS = ("table", "csv", "json")


def _fail(exc_or_msg, code: str | None = None) -> None:
    """Print the machine-parseable reason line and exit 1."""
    if isinstance(exc_or_msg, BaseException):
        code = code or type(exc_or_msg).__name__
        message = str(exc_or_msg)
    else:
        message = str(exc_or_msg)
        code = code or "Error"
    click.echo(f"reason: {code}: {message}")
    sys.exit(1)


def _emit_table(header: list[str], rows: list[list], fmt: str) -> None:
    if fmt == "json":
        click.echo(
            json.dumps([dict(zip(header, row)) for row in rows], indent=2, default=str)
        )
        return
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv_lib.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        click.echo(buf.getvalue(), nl=False)
        return
    widths = [len(h) for h in header]
    str_rows = [[str(v) for v in row] for row in rows]
    for row in str_rows:
        for i, v in enumerate(row):
            widths[i] = max(widths[i], len(v))
    click.echo("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    click.echo("  ".join("-" * w for w in widths))
    for row in str_rows:
        click.echo("  ".join(v.ljust(w) for v, w in zip(row, widths)))


def _load_bench(ctx: click.Context) -> Benchmark:
    root = ctx.obj.get("benchmark_root")
    if not root:
        raise click.UsageError(
            "no benchmark root: pass --benchmark-root or set MAPFTRACK_BENCHMARK_ROOT"
        )
    try:
        return load_benchmark(root)
    except (TrackerError, OSError) as exc:
        raise click.ClickException(f"cannot load benchmark at {root}: {exc}") from None


def _open_store(ctx: click.Context) -> TrackingStore:
    path = ctx.obj.get("store")
    if not path:
        raise click.UsageError("no store path: pass --store or set MAPFTRACK_STORE")
    return TrackingStore(path)


def _scope_options(fn):
    fn = click.option("--domain", default=None, help="Restrict to one domain.")(fn)
    fn = click.option("--map", "map_name", default=None, help="Restrict to one map.")(fn)
    fn = click.option(
        "--scenario", default=None, help="Restrict to one scenario, e.g. even-1."
    )(fn)
    fn = click.option("--agents-min", type=int, default=None)(fn)
    fn = click.option("--agents-max", type=int, default=None)(fn)
    return fn


def _build_scope(domain, map_name, scenario, agents_min, agents_max) -> analytics.QueryScope:
    kind = index = None
    if scenario:
        from .bench import parse_scenario_name

        kind, index = parse_scenario_name(scenario)
    return analytics.QueryScope(
        domain=domain,
        map_name=map_name,
        scen_kind=kind,
        scen_index=index,
        agents_min=agents_min,
        agents_max=agents_max,
    )


@click.group()
@click.option(
    "--benchmark-root",
    envvar="MAPFTRACK_BENCHMARK_ROOT",
    type=click.Path(file_okay=False),
    default=None,
    help="Directory holding maps/, scens/ and optionally domains.txt.",
)
@click.option(
    "--store",
    envvar="MAPFTRACK_STORE",
    type=click.Path(dir_okay=False),
    default=None,
    help="Event log file backing the tracking store.",
)
@click.option("--format", "fmt", type=click.Choice(FORMATS), default="table")
@click.pass_context
def main(ctx: click.Context, benchmark_root: str | None, store: str | None, fmt: str):
    """Track best-known bounds and solutions for grid pathfinding benchmarks."""
    ctx.ensure_object(dict)
    ctx.obj["benchmark_root"] = benchmark_root
    ctx.obj["store"] = store
    ctx.obj["format"] = fmt


@main.command()
@click.argument("map_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("scen_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("agents", type=int)
@click.argument("plan_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--claimed-cost", type=int, default=None, help="Cost the plan claims to meet.")
@click.pass_context
def validate(ctx, map_file, scen_file, agents, plan_file, claimed_cost):
    """Check a plan file against an instance.

    The plan file holds one per-agent action string per line, or a single
    line with the strings joined by ';'.
    """
    fmt = ctx.obj["format"]
    try:
        grid = load_map(map_file)
        scen = scenario_from_path(scen_file)
        pairs = scen.agents(agents)
        text = Path(plan_file).read_text().strip()
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        plans = PlanSet.from_field(lines[0]) if len(lines) == 1 else PlanSet(tuple(lines))
    except TrackerError as exc:
        _fail(exc)
        return
    outcome = validate_plan_set(grid, pairs, plans, claimed_cost=claimed_cost)
    if fmt == "json":
        click.echo(
            json.dumps(
                {
                    "valid": outcome.valid,
                    "computed_cost": outcome.computed_cost,
                    "claimed_cost": outcome.claimed_cost,
                    "reasons": outcome.reasons(),
                },
                indent=2,
            )
        )
    else:
        verdict = "valid" if outcome.valid else "invalid"
        click.echo(f"{verdict} cost={outcome.computed_cost}")
        for reason in outcome.reasons():
            click.echo(f"  {reason}")
    if not outcome.valid:
        first = outcome.reasons()[0] if outcome.reasons() else "invalid plan"
        click.echo(f"reason: PlanInvalid: {first}")
        sys.exit(1)


@main.command()
@click.argument("map_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("scen_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("agents", type=int)
@click.pass_context
def lb(ctx, map_file, scen_file, agents):
    """Print the shortest-path-sum lower bound for an instance."""
    fmt = ctx.obj["format"]
    try:
        grid = load_map(map_file)
        scen = scenario_from_path(scen_file)
        pairs = scen.agents(agents)
        dists = bounds.agent_distances(grid, pairs)
    except TrackerError as exc:
        _fail(exc)
        return
    total = sum(dists)
    if fmt == "json":
        click.echo(json.dumps({"lower_bound": total, "per_agent": dists}))
    else:
        _emit_table(
            ["agent", "start", "goal", "distance"],
            [[i, str(p[0]), str(p[1]), d] for i, (p, d) in enumerate(zip(pairs, dists))],
            fmt,
        )
        click.echo(f"lower_bound {total}")


@main.command(name="ingest")
@click.argument("csv_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("descriptor_file", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def ingest_cmd(ctx, csv_file, descriptor_file):
    """Ingest a submission batch (CSV + descriptor) into the store."""
    fmt = ctx.obj["format"]
    bench = _load_bench(ctx)
    store = _open_store(ctx)
    try:
        raw = ingest.load_batch(
            Path(csv_file).read_text(), Path(descriptor_file).read_text()
        )
    except TrackerError as exc:
        _fail(exc)
        return
    report = ingest.ingest_batch(raw, bench, store)
    if fmt == "json":
        from .api import _report_json

        click.echo(json.dumps(_report_json(report), indent=2))
    else:
        click.echo(
            f"batch {report.batch_id} ({report.algorithm}): "
            f"{report.accepted} accepted, {report.rejected} rejected"
            + (" [duplicate batch]" if report.duplicate_batch else "")
        )
        for o in report.outcomes:
            if not o.accepted:
                click.echo(f"  row {o.line}: {o.reason}: {o.detail}")
        for r in report.revocations:
            click.echo(
                f"  revoked lower bounds of batch {r.batch_id}: {r.reason} "
                f"({len(r.instances)} instances recomputed)"
            )
    if report.rejected and not report.accepted:
        reason = report.outcomes[0].reason if report.outcomes else "AllRowsRejected"
        click.echo(f"reason: {reason}: every row was rejected")
        sys.exit(1)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8080)
@click.option("--upload-cap", type=int, default=None, help="Max submission size in bytes.")
@click.pass_context
def serve(ctx, host, port, upload_cap):
    """Serve the HTTP API over the benchmark and store."""
    from .api import DEFAULT_UPLOAD_LIMIT, serve as serve_app

    bench = _load_bench(ctx)
    store = _open_store(ctx)
    click.echo(f"serving on http://{host}:{port}/api/v1/ ...")
    serve_app(
        bench,
        store,
        host=host,
        port=port,
        upload_limit=upload_cap or DEFAULT_UPLOAD_LIMIT,
    )


@main.command()
@click.option("--level", type=click.Choice(analytics.EXPORT_LEVELS), default="instance")
@_scope_options
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def export(ctx, level, domain, map_name, scenario, agents_min, agents_max, output):
    """Dump best-known results at a chosen aggregation level."""
    fmt = ctx.obj["format"]
    bench = _load_bench(ctx)
    store = _open_store(ctx)
    try:
        scope = _build_scope(domain, map_name, scenario, agents_min, agents_max)
        header, rows = analytics.export_results(bench, store, scope, level)
    except TrackerError as exc:
        _fail(exc)
        return
    if output:
        with open(output, "w", newline="") as fh:
            writer = csv_lib.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        click.echo(f"wrote {len(rows)} rows to {output}")
    else:
        _emit_table(header, rows, "csv" if fmt == "table" else fmt)


@main.command()
@_scope_options
@click.option("--outdir", "-o", type=click.Path(file_okay=False), required=True)
@click.pass_context
def report(ctx, domain, map_name, scenario, agents_min, agents_max, outdir):
    """Write CSV exports plus progress/comparison figures to a directory."""
    from .report import write_report

    bench = _load_bench(ctx)
    store = _open_store(ctx)
    try:
        scope = _build_scope(domain, map_name, scenario, agents_min, agents_max)
        written = write_report(bench, store, scope, outdir)
    except TrackerError as exc:
        _fail(exc)
        return
    for path in written:
        click.echo(str(path))


@main.command()
@click.argument("adapter_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("map_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("scen_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--budget", type=float, default=60.0, help="Seconds per instance window.")
@click.option("--failure-stop", type=int, default=2)
@click.option("--step", type=int, default=1)
@click.option("--max-agents", type=int, default=None)
@click.option("--outdir", "-o", type=click.Path(file_okay=False), required=True)
@click.pass_context
def run(ctx, adapter_file, map_file, scen_file, budget, failure_stop, step, max_agents, outdir):
    """Drive a solver over one scenario and write a submission batch."""
    try:
        adapter = runner_mod.load_adapter(adapter_file)
        grid = load_map(map_file)
        scen = scenario_from_path(scen_file)
    except TrackerError as exc:
        _fail(exc)
        return
    policy = runner_mod.RunnerPolicy(
        base_budget=budget, failure_stop=failure_stop, agent_step=step
    )

    def progress(r):
        status = "solved" if r.solved else f"failed ({r.error})"
        lbtxt = f" lb={r.lower_bound}" if r.lower_bound is not None else ""
        click.echo(
            f"k={r.agents}: {status}{lbtxt} windows={r.windows} {r.elapsed:.1f}s"
        )

    result = runner_mod.run_scenario(
        adapter,
        grid,
        scen,
        map_file,
        scen_file,
        policy=policy,
        max_agents=max_agents,
        progress=progress,
    )
    click.echo(f"stopped: {result.stopped_reason}")
    rows = result.result_rows()
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{scen.map_name}-{scen.name}-{adapter.name}"
    csv_path = out / f"{stem}.csv"
    csv_path.write_text(ingest.render_submission_csv(rows))
    desc_path = out / f"{stem}.descriptor"
    desc_path.write_text(ingest.render_descriptor(adapter.meta))
    click.echo(f"wrote {csv_path} ({len(rows)} rows) and {desc_path}")
    if not rows:
        click.echo("reason: NoResults: solver produced nothing usable")
        sys.exit(1)


@main.command()
@click.argument("map_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--kind", type=click.Choice(["even", "random"]), required=True)
@click.option("--seed", type=int, default=1)
@click.option("--index", type=int, default=1)
@click.option("--agents", "n_agents", type=int, default=None, help="Pairs for random kind.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def genscen(ctx, map_file, kind, seed, index, n_agents, output):
    """Generate a scenario file for a map (deterministic per seed)."""
    try:
        grid = load_map(map_file)
        if kind == "even":
            scen = bounds.generate_even_scenario(grid, seed=seed, index=index)
        else:
            if not n_agents:
                raise click.UsageError("--agents is required for --kind random")
            scen = bounds.generate_random_scenario(grid, n=n_agents, seed=seed, index=index)
    except TrackerError as exc:
        _fail(exc)
        return
    text = write_scenario(scen)
    if output is None:
        output = f"{grid.name}-{kind}-{index}.scen"
    Path(output).write_text(text)
    click.echo(f"wrote {output} ({len(scen.entries)} entries)")


@main.command()
@click.argument("batch_id")
@click.option("--reason", default="manual revocation")
@click.pass_context
def revoke(ctx, batch_id, reason):
    """Revoke every lower bound a batch contributed."""
    store = _open_store(ctx)
    try:
        notice = store.revoke_batch_lower_bounds(batch_id, reason=reason)
    except TrackerError as exc:
        _fail(exc)
        return
    click.echo(
        f"revoked lower bounds of {notice.batch_id}: "
        f"{len(notice.instances)} instances recomputed"
    )


if __name__ == "__main__":
    main()
