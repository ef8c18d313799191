// Grid rendering: a pan/zoom viewport over cell coordinates and a
// drawing surface the renderer talks to. The surface is an interface
// so tests can record draw calls instead of needing a real canvas;
// only visible cells are walked, so huge maps stay cheap.

import { agentColor } from "./colors.js";
import type { Cell } from "./playback.js";

export interface Surface {
  clear(w: number, h: number): void;
  rect(x: number, y: number, w: number, h: number, fill: string): void;
  circle(x: number, y: number, r: number, fill: string): void;
  line(x0: number, y0: number, x1: number, y1: number, stroke: string, width: number): void;
  text(s: string, x: number, y: number, fill: string): void;
}

/** Maps world (cell) coordinates to screen pixels. scale = pixels per cell. */
export class GridViewport {
  scale: number;
  offsetX: number;
  offsetY: number;

  constructor(scale = 24, offsetX = 0, offsetY = 0) {
    this.scale = scale;
    this.offsetX = offsetX;
    this.offsetY = offsetY;
  }

  worldToScreen(wx: number, wy: number): [number, number] {
    return [wx * this.scale + this.offsetX, wy * this.scale + this.offsetY];
  }

  screenToWorld(sx: number, sy: number): [number, number] {
    return [(sx - this.offsetX) / this.scale, (sy - this.offsetY) / this.scale];
  }

  pan(dx: number, dy: number): void {
    this.offsetX += dx;
    this.offsetY += dy;
  }

  /** Zoom keeping the world point under (sx, sy) fixed on screen. */
  zoomAt(sx: number, sy: number, factor: number): void {
    const next = Math.min(200, Math.max(2, this.scale * factor));
    const applied = next / this.scale;
    this.offsetX = sx - (sx - this.offsetX) * applied;
    this.offsetY = sy - (sy - this.offsetY) * applied;
    this.scale = next;
  }

  /** Inclusive cell range intersecting a viewW x viewH screen, clipped to the map. */
  visibleCellRange(
    viewW: number,
    viewH: number,
    mapW: number,
    mapH: number,
  ): { x0: number; y0: number; x1: number; y1: number } | null {
    const [wx0, wy0] = this.screenToWorld(0, 0);
    const [wx1, wy1] = this.screenToWorld(viewW, viewH);
    const x0 = Math.max(0, Math.floor(wx0));
    const y0 = Math.max(0, Math.floor(wy0));
    const x1 = Math.min(mapW - 1, Math.ceil(wx1));
    const y1 = Math.min(mapH - 1, Math.ceil(wy1));
    if (x0 > x1 || y0 > y1) return null;
    return { x0, y0, x1, y1 };
  }

  /** Center the whole map in the view with a small margin. */
  fit(viewW: number, viewH: number, mapW: number, mapH: number): void {
    const margin = 16;
    this.scale = Math.min(
      200,
      Math.max(2, Math.min((viewW - 2 * margin) / mapW, (viewH - 2 * margin) / mapH)),
    );
    this.offsetX = (viewW - mapW * this.scale) / 2;
    this.offsetY = (viewH - mapH * this.scale) / 2;
  }
}

export interface RenderInput {
  width: number; // map width in cells
  height: number;
  markers: Cell[]; // agent index -> cell
  goals: Cell[];
  viewW: number;
  viewH: number;
}

const CELL_BG = "#f5f3ee";
const GRID_LINE = "#d8d4ca";
const GOAL_RING = "#9a958a";

/** Draw the lattice, goal rings, and one dot per agent at its marker cell. */
export function renderFrame(surface: Surface, vp: GridViewport, input: RenderInput): void {
  surface.clear(input.viewW, input.viewH);
  const range = vp.visibleCellRange(input.viewW, input.viewH, input.width, input.height);
  if (!range) return;

  const [bx, by] = vp.worldToScreen(range.x0, range.y0);
  const w = (range.x1 - range.x0 + 1) * vp.scale;
  const h = (range.y1 - range.y0 + 1) * vp.scale;
  surface.rect(bx, by, w, h, CELL_BG);

  // one line per visible row/column rather than per cell
  if (vp.scale >= 6) {
    for (let x = range.x0; x <= range.x1 + 1; x++) {
      const [sx] = vp.worldToScreen(x, 0);
      surface.line(sx, by, sx, by + h, GRID_LINE, 1);
    }
    for (let y = range.y0; y <= range.y1 + 1; y++) {
      const [, sy] = vp.worldToScreen(0, y);
      surface.line(bx, sy, bx + w, sy, GRID_LINE, 1);
    }
  }

  const r = Math.max(2, vp.scale * 0.36);
  for (let i = 0; i < input.goals.length; i++) {
    const [gx, gy] = input.goals[i]!;
    if (gx < range.x0 - 1 || gx > range.x1 + 1 || gy < range.y0 - 1 || gy > range.y1 + 1) continue;
    const [cx, cy] = vp.worldToScreen(gx + 0.5, gy + 0.5);
    surface.circle(cx, cy, r + 2, GOAL_RING);
    surface.circle(cx, cy, r, CELL_BG);
  }
  for (let i = 0; i < input.markers.length; i++) {
    const [mx, my] = input.markers[i]!;
    if (mx < range.x0 - 1 || mx > range.x1 + 1 || my < range.y0 - 1 || my > range.y1 + 1) continue;
    const [cx, cy] = vp.worldToScreen(mx + 0.5, my + 0.5);
    surface.circle(cx, cy, r, agentColor(i));
    if (vp.scale >= 18) surface.text(String(i), cx, cy, "#ffffff");
  }
}

export type DrawCall =
  | { op: "clear"; w: number; h: number }
  | { op: "rect"; x: number; y: number; w: number; h: number; fill: string }
  | { op: "circle"; x: number; y: number; r: number; fill: string }
  | { op: "line"; x0: number; y0: number; x1: number; y1: number; stroke: string; width: number }
  | { op: "text"; s: string; x: number; y: number; fill: string };

/** Test double: remembers every call so assertions can inspect geometry. */
export class RecordingSurface implements Surface {
  calls: DrawCall[] = [];

  clear(w: number, h: number): void {
    this.calls = [{ op: "clear", w, h }];
  }

  rect(x: number, y: number, w: number, h: number, fill: string): void {
    this.calls.push({ op: "rect", x, y, w, h, fill });
  }

  circle(x: number, y: number, r: number, fill: string): void {
    this.calls.push({ op: "circle", x, y, r, fill });
  }

  line(x0: number, y0: number, x1: number, y1: number, stroke: string, width: number): void {
    this.calls.push({ op: "line", x0, y0, x1, y1, stroke, width });
  }

  text(s: string, x: number, y: number, fill: string): void {
    this.calls.push({ op: "text", s, x, y, fill });
  }

  circles(): Extract<DrawCall, { op: "circle" }>[] {
    return this.calls.filter((c): c is Extract<DrawCall, { op: "circle" }> => c.op === "circle");
  }
}

/** Adapter over CanvasRenderingContext2D for the browser build. */
export class CanvasSurface implements Surface {
  private readonly ctx: CanvasRenderingContext2D;

  constructor(ctx: CanvasRenderingContext2D) {
    this.ctx = ctx;
  }

  clear(w: number, h: number): void {
    this.ctx.clearRect(0, 0, w, h);
  }

  rect(x: number, y: number, w: number, h: number, fill: string): void {
    this.ctx.fillStyle = fill;
    this.ctx.fillRect(x, y, w, h);
  }

  circle(x: number, y: number, r: number, fill: string): void {
    this.ctx.fillStyle = fill;
    this.ctx.beginPath();
    this.ctx.arc(x, y, r, 0, Math.PI * 2);
    this.ctx.fill();
  }

  line(x0: number, y0: number, x1: number, y1: number, stroke: string, width: number): void {
    this.ctx.strokeStyle = stroke;
    this.ctx.lineWidth = width;
    this.ctx.beginPath();
    this.ctx.moveTo(x0, y0);
    this.ctx.lineTo(x1, y1);
    this.ctx.stroke();
  }

  text(s: string, x: number, y: number, fill: string): void {
    this.ctx.fillStyle = fill;
    this.ctx.font = "10px sans-serif";
    this.ctx.textAlign = "center";
    this.ctx.textBaseline = "middle";
    this.ctx.fillText(s, x, y);
  }
}
