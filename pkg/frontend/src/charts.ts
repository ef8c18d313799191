// Chart geometry builders. Pure functions from API payloads to
// positioned shapes; no DOM, no fetching, so tests can compare numbers
// directly. Values shown to the user always pass through displayValue
// so the label is the API number rounded to two decimals, nothing else.

import type { ComparisonSeries, InstanceItem, ProgressSummary } from "./types.js";

/** Round for display: two decimals, half away from zero is fine here. */
export function displayValue(v: number): number {
  return Math.round(v * 100) / 100;
}

export function formatPct(v: number): string {
  return `${displayValue(v).toFixed(2)}%`;
}

// --- stacked progress bars -------------------------------------------

export interface BarSegment {
  kind: "closed" | "solved" | "unknown";
  x: number;
  width: number;
  value: number; // displayed percentage
  count: number;
}

export interface ProgressBar {
  label: string;
  total: number;
  segments: BarSegment[];
}

/**
 * One horizontal stacked bar per row. Segment widths are fractions of
 * the given pixel width; labels carry the rounded percentage.
 */
export function buildProgressBars(rows: ProgressSummary[], width: number): ProgressBar[] {
  return rows.map((row) => {
    const parts: [BarSegment["kind"], number, number][] = [
      ["closed", row.pct_closed, row.closed],
      ["solved", row.pct_solved, row.solved],
      ["unknown", row.pct_unknown, row.unknown],
    ];
    let x = 0;
    const segments: BarSegment[] = [];
    for (const [kind, pct, count] of parts) {
      const w = row.total > 0 ? (count / row.total) * width : 0;
      segments.push({ kind, x, width: w, value: displayValue(pct), count });
      x += w;
    }
    return { label: row.scope, total: row.total, segments };
  });
}

// --- comparison lines --------------------------------------------------

export interface ChartScales {
  x: (v: number) => number;
  y: (v: number) => number;
  xDomain: [number, number];
  yDomain: [number, number];
}

export interface Polyline {
  algorithm: string;
  points: { x: number; y: number; agents: number; value: number }[];
}

function linearScale(d0: number, d1: number, r0: number, r1: number): (v: number) => number {
  const span = d1 - d0;
  if (span === 0) return () => (r0 + r1) / 2;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

/**
 * Build the selected subset of series from an already-fetched payload.
 * Toggling an algorithm on or off is a pure re-slice of the same data;
 * nothing here triggers a network request.
 */
export function buildComparisonLines(
  payload: ComparisonSeries,
  selected: string[],
  width: number,
  height: number,
): { lines: Polyline[]; scales: ChartScales } {
  const names = selected.filter((a) => a in payload.series);
  let maxAgents = 1;
  for (const name of names) {
    for (const pt of payload.series[name] ?? []) maxAgents = Math.max(maxAgents, pt.agents);
  }
  const x = linearScale(0, maxAgents, 0, width);
  const y = linearScale(0, 100, height, 0); // y grows downward on screen
  const lines = names.map((algorithm) => ({
    algorithm,
    points: (payload.series[algorithm] ?? []).map((pt) => ({
      x: x(pt.agents),
      y: y(pt.pct),
      agents: pt.agents,
      value: displayValue(pt.pct),
    })),
  }));
  return { lines, scales: { x, y, xDomain: [0, maxAgents], yDomain: [0, 100] } };
}

// --- suboptimality scatter ---------------------------------------------

export interface ScatterPoint {
  x: number;
  y: number;
  agents: number;
  ratio: number; // displayed value
  scenario: string;
}

/**
 * Gap ratio (cost - bound) / bound per instance, plotted against agent
 * count. Derived from the served bound and cost; instances without
 * both, or with a zero bound, carry no ratio and are skipped.
 */
export function buildSuboptimalityScatter(
  items: InstanceItem[],
  width: number,
  height: number,
): { points: ScatterPoint[]; scales: ChartScales } {
  const usable = items.filter(
    (it) => it.lower_bound !== null && it.solution_cost !== null && it.lower_bound > 0,
  );
  let maxAgents = 1;
  let maxRatio = 0;
  const raw = usable.map((it) => {
    const ratio = (it.solution_cost! - it.lower_bound!) / it.lower_bound!;
    maxAgents = Math.max(maxAgents, it.agents);
    maxRatio = Math.max(maxRatio, ratio);
    return { agents: it.agents, ratio, scenario: it.scenario };
  });
  const x = linearScale(0, maxAgents, 0, width);
  const y = linearScale(0, Math.max(maxRatio, 0.01), height, 0);
  const points = raw.map((r) => ({
    x: x(r.agents),
    y: y(r.ratio),
    agents: r.agents,
    ratio: displayValue(r.ratio),
    scenario: r.scenario,
  }));
  return { points, scales: { x, y, xDomain: [0, maxAgents], yDomain: [0, Math.max(maxRatio, 0.01)] } };
}
