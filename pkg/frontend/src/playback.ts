// Plan playback. Recomputes marker positions from the plan strings the
// API serves, with the same action semantics the validator uses: u/d/l/r
// move one cell (y grows downward), w waits, letters are case-insensitive,
// and an agent whose plan has ended stays parked on its final cell.

import type { PlanPayload } from "./types.js";

export type Cell = [number, number];

const DELTAS: Record<string, Cell> = {
  u: [0, -1],
  d: [0, 1],
  l: [-1, 0],
  r: [1, 0],
  w: [0, 0],
};

/** Positions at t = 0..plan.length. Throws on characters outside udlrw. */
export function simulatePlan(start: Cell, plan: string): Cell[] {
  let [x, y] = start;
  const path: Cell[] = [[x, y]];
  for (let i = 0; i < plan.length; i++) {
    const delta = DELTAS[plan[i]!.toLowerCase()];
    if (!delta) {
      throw new Error(`illegal plan character ${JSON.stringify(plan[i])} at ${i}`);
    }
    x += delta[0];
    y += delta[1];
    path.push([x, y]);
  }
  return path;
}

export interface PlaybackState {
  timestep: number;
  speed: number; // timesteps per second
  playing: boolean;
}

/**
 * One loaded instance: per-agent paths precomputed once, a frame-clock
 * that turns elapsed wall time into timesteps, and the marker accessor
 * the renderer reads. The clock is independent of any fetching; a model
 * is immutable once constructed.
 */
export class PlaybackModel {
  readonly width: number;
  readonly height: number;
  readonly horizon: number;
  readonly starts: Cell[];
  readonly goals: Cell[];
  private readonly paths: Cell[][];

  timestep = 0;
  speed = 2;
  playing = false;
  private fraction = 0; // sub-timestep accumulator for the frame clock

  constructor(payload: PlanPayload) {
    if (payload.pairs.length !== payload.plans.length) {
      throw new Error(
        `payload has ${payload.pairs.length} pairs but ${payload.plans.length} plans`
      );
    }
    this.width = payload.width;
    this.height = payload.height;
    this.starts = payload.pairs.map((p) => [p.start[0], p.start[1]] as Cell);
    this.goals = payload.pairs.map((p) => [p.goal[0], p.goal[1]] as Cell);
    this.paths = payload.plans.map((plan, i) => simulatePlan(this.starts[i]!, plan));
    this.horizon = Math.max(0, ...payload.plans.map((p) => p.length));
  }

  get agents(): number {
    return this.paths.length;
  }

  /** Marker cell of one agent at timestep t (clamped to the path end). */
  positionAt(agent: number, t: number): Cell {
    const path = this.paths[agent];
    if (!path) throw new Error(`no agent ${agent}`);
    const clamped = Math.max(0, Math.min(Math.floor(t), path.length - 1));
    return path[clamped]!;
  }

  /** All marker cells at timestep t, in agent order. */
  markersAt(t: number): Cell[] {
    return this.paths.map((_, i) => this.positionAt(i, t));
  }

  play(): void {
    // restarting from the end is the common replay gesture
    if (this.timestep >= this.horizon) this.seek(0);
    this.playing = true;
  }

  pause(): void {
    this.playing = false;
    this.fraction = 0;
  }

  step(delta: number): void {
    this.pause();
    this.seek(this.timestep + delta);
  }

  seek(t: number): void {
    this.timestep = Math.max(0, Math.min(Math.floor(t), this.horizon));
    this.fraction = 0;
  }

  setSpeed(speed: number): void {
    if (Number.isFinite(speed) && speed > 0) this.speed = speed;
  }

  /**
   * Advance the frame clock by dt seconds. Returns true when the visible
   * timestep changed. Pauses itself at the horizon.
   */
  advance(dt: number): boolean {
    if (!this.playing || dt <= 0) return false;
    this.fraction += dt * this.speed;
    const whole = Math.floor(this.fraction);
    if (whole < 1) return false;
    this.fraction -= whole;
    const next = Math.min(this.timestep + whole, this.horizon);
    const moved = next !== this.timestep;
    this.timestep = next;
    if (this.timestep >= this.horizon) this.playing = false;
    return moved;
  }

  state(): PlaybackState {
    return { timestep: this.timestep, speed: this.speed, playing: this.playing };
  }
}
