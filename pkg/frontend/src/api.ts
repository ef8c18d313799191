// Thin typed client for the tracker's JSON API. All knowledge about
// scores, bounds and states lives on the server; this file only builds
// query strings and decodes the documented payload shapes.

import type {
  ComparisonSeries,
  ComparisonTable,
  HealthInfo,
  InstancesPage,
  PlanPayload,
  ProgressSummary,
} from "./types.js";
import type { Scope } from "./state.js";

export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, message: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
  }
}

type FetchLike = (url: string, init?: { signal?: AbortSignal }) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}>;

function scopeParams(scope: Scope): URLSearchParams {
  const q = new URLSearchParams();
  if (scope.domain) q.set("domain", scope.domain);
  if (scope.map) q.set("map", scope.map);
  if (scope.scenario) q.set("scenario", scope.scenario);
  return q;
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(base = "/api/v1", fetchFn?: FetchLike) {
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async get<T>(path: string, q?: URLSearchParams, signal?: AbortSignal): Promise<T> {
    const qs = q && [...q.keys()].length > 0 ? `?${q.toString()}` : "";
    const resp = await this.fetchFn(`${this.base}${path}${qs}`, { signal });
    const body = (await resp.json().catch(() => ({}))) as Record<string, unknown>;
    if (!resp.ok) {
      const msg = typeof body.error === "string" ? body.error : `request failed (${resp.status})`;
      throw new ApiError(resp.status, msg);
    }
    return body as T;
  }

  health(signal?: AbortSignal): Promise<HealthInfo> {
    return this.get("/health", undefined, signal);
  }

  progress(scope: Scope, groupBy?: string, signal?: AbortSignal): Promise<ProgressSummary | ProgressSummary[]> {
    const q = scopeParams(scope);
    if (groupBy) q.set("group_by", groupBy);
    return this.get("/progress", q, signal);
  }

  comparison(scope: Scope, metric: string, signal?: AbortSignal): Promise<ComparisonSeries | ComparisonTable> {
    const q = scopeParams(scope);
    q.set("metric", metric);
    return this.get("/comparison", q, signal);
  }

  instances(scope: Scope, offset = 0, limit = 200, signal?: AbortSignal): Promise<InstancesPage> {
    const q = scopeParams(scope);
    q.set("offset", String(offset));
    q.set("limit", String(limit));
    return this.get("/instances", q, signal);
  }

  plan(map: string, scenario: string, agents: number, signal?: AbortSignal): Promise<PlanPayload> {
    const q = new URLSearchParams({ map, scenario, agents: String(agents) });
    return this.get("/plan", q, signal);
  }
}

/**
 * Serializes fetches for one screen region: starting a new request
 * aborts the one in flight, and a response that lost the race never
 * reaches the caller, so stale data cannot overwrite fresh data.
 */
export class ScopedFetcher {
  private controller: AbortController | null = null;
  private seq = 0;

  async run<T>(task: (signal: AbortSignal) => Promise<T>): Promise<T | null> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    const ticket = ++this.seq;
    try {
      const value = await task(controller.signal);
      return ticket === this.seq ? value : null;
    } catch (err) {
      if (controller.signal.aborted || ticket !== this.seq) return null;
      throw err;
    }
  }

  cancel(): void {
    this.controller?.abort();
    this.controller = null;
    this.seq++;
  }
}
