// Wire types for the /api/v1 JSON payloads. These mirror the server's
// response shapes field for field; nothing here is derived client-side.

export interface ProgressSummary {
  scope: string;
  total: number;
  closed: number;
  solved: number;
  unknown: number;
  pct_closed: number;
  pct_solved: number;
  pct_unknown: number;
}

export interface AlgoMetrics {
  algorithm: string;
  closed: number;
  solved: number;
  best_lower_bound: number;
  best_solution: number;
}

export interface ComparisonTable {
  scope: string;
  algorithms: AlgoMetrics[];
}

export interface SeriesPoint {
  agents: number;
  pct: number;
}

export interface ComparisonSeries {
  map: string;
  metric: string;
  series: Record<string, SeriesPoint[]>;
}

export interface InstanceItem {
  map: string;
  scenario: string;
  agents: number;
  lower_bound: number | null;
  solution_cost: number | null;
  state: "closed" | "solved" | "unknown";
  lb_algorithms: string[];
  cost_algorithms: string[];
  has_plan: boolean;
}

export interface InstancesPage {
  total: number;
  offset: number;
  limit: number;
  items: InstanceItem[];
}

export interface PlanPair {
  start: [number, number];
  goal: [number, number];
}

export interface PlanPayload {
  map: string;
  scenario: string;
  agents: number;
  width: number;
  height: number;
  cost: number;
  algorithms: string[];
  pairs: PlanPair[];
  plans: string[];
}

export interface HealthInfo {
  status: string;
  maps: number;
  scenarios: number;
}

export const COMPARISON_METRICS = ["closed", "solved", "best_lb", "best_solution"] as const;
export type ComparisonMetric = (typeof COMPARISON_METRICS)[number];
