// ViewState and its URL form. Every view the app can show serializes to
// a query string and back, so any screen is a link someone can share;
// parsing is defensive because these strings arrive hand-edited.

import { COMPARISON_METRICS, type ComparisonMetric } from "./types.js";
import type { PlaybackState } from "./playback.js";

export type Level = "domain" | "map" | "scenario" | "instance";

export type Metric = ComparisonMetric | "suboptimality";

export interface Scope {
  domain?: string;
  map?: string;
  scenario?: string; // "<kind>-<index>", e.g. "even-1"
  agents?: number; // instance level only
}

export interface ViewState {
  level: Level;
  scope: Scope;
  algorithms: string[];
  metric: Metric;
  playback: PlaybackState;
}

const LEVELS: Level[] = ["domain", "map", "scenario", "instance"];
const SPEED_MIN = 0.25;
const SPEED_MAX = 16;

export function defaultViewState(): ViewState {
  return {
    level: "domain",
    scope: {},
    algorithms: [],
    metric: "solved",
    playback: { timestep: 0, speed: 2, playing: false },
  };
}

function deepestSupported(scope: Scope): Level {
  if (scope.map && scope.scenario && scope.agents !== undefined) return "instance";
  if (scope.map && scope.scenario) return "scenario";
  if (scope.map) return "map";
  return "domain";
}

/**
 * Enforce the invariants: the level never claims scope fields that are
 * missing, scope fields deeper than the level are dropped, numbers are
 * finite and in range. Always returns a new object.
 */
export function normalizeViewState(state: ViewState): ViewState {
  const scope: Scope = {};
  if (state.scope.domain) scope.domain = state.scope.domain;
  if (state.scope.map) scope.map = state.scope.map;
  if (state.scope.scenario && scope.map) scope.scenario = state.scope.scenario;
  const agents = state.scope.agents;
  if (agents !== undefined && Number.isInteger(agents) && agents >= 1 && scope.scenario) {
    scope.agents = agents;
  }

  const wanted = LEVELS.indexOf(state.level);
  const supported = LEVELS.indexOf(deepestSupported(scope));
  const level = LEVELS[Math.min(wanted < 0 ? 0 : wanted, supported)]!;
  if (level !== "instance") delete scope.agents;
  if (level === "map" || level === "domain") delete scope.scenario;
  if (level === "domain") delete scope.map;

  const metric: Metric =
    state.metric === "suboptimality" || COMPARISON_METRICS.includes(state.metric as ComparisonMetric)
      ? state.metric
      : "solved";

  const t = Number.isFinite(state.playback.timestep)
    ? Math.max(0, Math.floor(state.playback.timestep))
    : 0;
  const speed = Number.isFinite(state.playback.speed)
    ? Math.min(SPEED_MAX, Math.max(SPEED_MIN, state.playback.speed))
    : 2;

  return {
    level,
    scope,
    algorithms: [...new Set(state.algorithms.filter((a) => a.length > 0))],
    metric,
    playback: { timestep: t, speed, playing: Boolean(state.playback.playing) },
  };
}

/** Clamp the stored timestep once the instance horizon is known. */
export function clampTimestep(state: ViewState, horizon: number): ViewState {
  const t = Math.min(state.playback.timestep, Math.max(0, horizon));
  if (t === state.playback.timestep) return state;
  return { ...state, playback: { ...state.playback, timestep: t } };
}

export function serializeViewState(state: ViewState): string {
  const s = normalizeViewState(state);
  const q = new URLSearchParams();
  if (s.level !== "domain") q.set("level", s.level);
  if (s.scope.domain) q.set("domain", s.scope.domain);
  if (s.scope.map) q.set("map", s.scope.map);
  if (s.scope.scenario) q.set("scenario", s.scope.scenario);
  if (s.scope.agents !== undefined) q.set("agents", String(s.scope.agents));
  if (s.algorithms.length > 0) q.set("algos", s.algorithms.join(","));
  if (s.metric !== "solved") q.set("metric", s.metric);
  if (s.playback.timestep !== 0) q.set("t", String(s.playback.timestep));
  if (s.playback.speed !== 2) q.set("speed", String(s.playback.speed));
  if (s.playback.playing) q.set("playing", "1");
  return q.toString();
}

export function parseViewState(query: string): ViewState {
  const q = new URLSearchParams(query);
  const raw = defaultViewState();
  const level = q.get("level");
  if (level && (LEVELS as string[]).includes(level)) raw.level = level as Level;
  raw.scope = {
    domain: q.get("domain") ?? undefined,
    map: q.get("map") ?? undefined,
    scenario: q.get("scenario") ?? undefined,
    agents: q.has("agents") ? Number(q.get("agents")) : undefined,
  };
  raw.algorithms = (q.get("algos") ?? "").split(",").map((a) => a.trim());
  raw.metric = (q.get("metric") ?? "solved") as Metric;
  raw.playback = {
    timestep: q.has("t") ? Number(q.get("t")) : 0,
    speed: q.has("speed") ? Number(q.get("speed")) : 2,
    playing: q.get("playing") === "1",
  };
  return normalizeViewState(raw);
}
