"""Report rendering: delimited exports plus matplotlib figures.

The report path writes, into one output directory, the CSV exports for the
requested scope and a small set of figures next to them: stacked progress
bars, per-algorithm comparison series over agent counts (when the scope
names a map), and a suboptimality scatter (when it names a scenario).
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .analytics import (
    COMPARISON_METRICS,
    QueryScope,
    comparison_by_agents,
    export_results,
    grouped_progress,
    progress_by_agents,
    suboptimality_series,
)
from .bench import Benchmark
from .errors import EmptyScope, TrackerError
from .tracking import TrackingStore

STATE_COLORS = {"closed": "#2a9d2a", "solved": "#e8a13c", "unknown": "#b0b0b0"}


def _save(fig, path: Path) -> None:
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def fig_progress_bars(summaries, title: str, path: Path) -> None:
    """One stacked bar (closed/solved/unknown percent) per summary."""
    labels = [p.scope for p in summaries]
    closed = [p.pct_closed for p in summaries]
    solved = [p.pct_solved for p in summaries]
    unknown = [p.pct_unknown for p in summaries]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.9 * len(labels) + 2.0), 4.0))
    xs = range(len(labels))
    ax.bar(xs, closed, color=STATE_COLORS["closed"], label="closed")
    ax.bar(xs, solved, bottom=closed, color=STATE_COLORS["solved"], label="solved")
    bottoms = [c + s for c, s in zip(closed, solved)]
    ax.bar(xs, unknown, bottom=bottoms, color=STATE_COLORS["unknown"], label="unknown")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("% of instances")
    ax.set_ylim(0, 100)
    ax.set_title(title)
    ax.legend(loc="lower right", fontsize=8)
    _save(fig, path)


def fig_progress_by_agents(summaries, title: str, path: Path) -> None:
    """Closed/solved/unknown percentage curves over the agent count."""
    ks = [int(p.scope.rsplit("=", 1)[1]) for p in summaries]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(ks, [p.pct_closed for p in summaries], color=STATE_COLORS["closed"], label="closed")
    ax.plot(ks, [p.pct_solved for p in summaries], color=STATE_COLORS["solved"], label="solved")
    ax.plot(ks, [p.pct_unknown for p in summaries], color=STATE_COLORS["unknown"], label="unknown")
    ax.set_xlabel("agents")
    ax.set_ylabel("% of instances")
    ax.set_ylim(-2, 102)
    ax.set_title(title)
    ax.legend(fontsize=8)
    _save(fig, path)


def fig_comparison(series: dict[str, list[tuple[int, float]]], metric: str, title: str, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for name in sorted(series):
        pts = series[name]
        ax.plot([k for k, _ in pts], [v for _, v in pts], marker=".", label=name)
    ax.set_xlabel("agents")
    ax.set_ylabel(f"% {metric}")
    ax.set_ylim(-2, 102)
    ax.set_title(title)
    ax.legend(fontsize=8)
    _save(fig, path)


def fig_suboptimality(points, title: str, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    tight = [(p.agents, p.ratio) for p in points if not p.trivial_lb_only]
    loose = [(p.agents, p.ratio) for p in points if p.trivial_lb_only]
    if tight:
        ax.scatter([a for a, _ in tight], [r for _, r in tight], s=14, color="#3366bb", label="submitted bound")
    if loose:
        ax.scatter(
            [a for a, _ in loose],
            [r for _, r in loose],
            s=14,
            color="#bb4444",
            marker="^",
            label="trivial bound only",
        )
    ax.set_xlabel("agents")
    ax.set_ylabel("suboptimality ratio")
    ax.set_title(title)
    if tight or loose:
        ax.legend(fontsize=8)
    _save(fig, path)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_report(
    bench: Benchmark, store: TrackingStore, scope: QueryScope, outdir: str | Path
) -> list[Path]:
    """Render everything the scope supports; returns the files written."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    for level in ("instance", "scenario", "map", "domain"):
        try:
            header, rows = export_results(bench, store, scope, level)
        except (EmptyScope, TrackerError):
            continue
        path = outdir / f"export-{level}.csv"
        _write_csv(path, header, rows)
        written.append(path)

    group_by = "scenario" if scope.map_name else ("map" if scope.domain else "domain")
    try:
        summaries = grouped_progress(bench, store, scope, by=group_by)
    except EmptyScope:
        summaries = []
    if summaries:
        path = outdir / "progress.png"
        fig_progress_bars(summaries, f"progress by {group_by} ({scope.describe()})", path)
        written.append(path)

    if scope.map_name:
        by_agents = progress_by_agents(bench, store, scope.map_name)
        if by_agents:
            path = outdir / "progress-by-agents.png"
            fig_progress_by_agents(by_agents, f"{scope.map_name}: progress vs agents", path)
            written.append(path)
        algorithms = store.algorithms()
        if algorithms:
            for metric in COMPARISON_METRICS:
                series = comparison_by_agents(bench, store, scope.map_name, metric, algorithms)
                path = outdir / f"comparison-{metric}.png"
                fig_comparison(series, metric, f"{scope.map_name}: {metric} by algorithm", path)
                written.append(path)

    if scope.map_name and scope.scen_kind and scope.scen_index is not None:
        points = suboptimality_series(
            bench, store, scope.map_name, scope.scen_kind, scope.scen_index
        )
        if points:
            path = outdir / "suboptimality.png"
            fig_suboptimality(
                points,
                f"{scope.map_name}-{scope.scen_kind}-{scope.scen_index}: cost vs bound gap",
                path,
            )
            written.append(path)
    return written
