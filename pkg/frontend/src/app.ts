// Browser entry point. Everything here is wiring: read state from the
// URL, fetch through ApiClient, hand payloads to the pure chart and
// playback modules, push pixels. No scoring or bound logic lives here.

import { ApiClient, ApiError, ScopedFetcher } from "./api.js";
import { buildComparisonLines, buildProgressBars, buildSuboptimalityScatter, formatPct } from "./charts.js";
import { agentColor } from "./colors.js";
import { CanvasSurface, GridViewport, renderFrame } from "./grid.js";
import { PlaybackModel } from "./playback.js";
import {
  clampTimestep,
  defaultViewState,
  normalizeViewState,
  parseViewState,
  serializeViewState,
  type Level,
  type Metric,
  type ViewState,
} from "./state.js";
import type { ComparisonSeries, InstanceItem, PlanPayload, ProgressSummary } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

function option(value: string, label?: string): HTMLOptionElement {
  const o = el("option");
  o.value = value;
  o.textContent = label ?? value;
  return o;
}

const METRICS: { value: Metric; label: string }[] = [
  { value: "closed", label: "closed" },
  { value: "solved", label: "solved" },
  { value: "best_lb", label: "best bounds held" },
  { value: "best_solution", label: "best solutions held" },
  { value: "suboptimality", label: "gap ratio" },
];

class App {
  private state: ViewState = defaultViewState();
  private readonly api = new ApiClient();
  private readonly scopeFetch = new ScopedFetcher();
  private readonly chartFetch = new ScopedFetcher();
  private readonly planFetch = new ScopedFetcher();

  private model: PlaybackModel | null = null;
  private plan: PlanPayload | null = null;
  private readonly vp = new GridViewport();
  private lastFrame = 0;
  private needsFit = false;

  private banner!: HTMLDivElement;
  private mapSelect!: HTMLSelectElement;
  private scenSelect!: HTMLSelectElement;
  private agentSelect!: HTMLSelectElement;
  private metricSelect!: HTMLSelectElement;
  private algoBox!: HTMLDivElement;
  private progressBox!: HTMLDivElement;
  private chartBox!: HTMLDivElement;
  private playBox!: HTMLDivElement;
  private canvas!: HTMLCanvasElement;
  private timeLabel!: HTMLSpanElement;
  private playBtn!: HTMLButtonElement;

  private knownAlgos: string[] = [];
  private lastSeries: ComparisonSeries | null = null;
  private lastItems: InstanceItem[] | null = null;

  constructor(private readonly root: HTMLElement) {}

  start(): void {
    this.state = parseViewState(location.search.replace(/^\?/, ""));
    this.buildDom();
    window.addEventListener("popstate", () => {
      this.state = parseViewState(location.search.replace(/^\?/, ""));
      this.refreshAll();
    });
    this.refreshAll();
    requestAnimationFrame((t) => this.frame(t));
  }

  private setState(patch: Partial<ViewState>): void {
    this.state = normalizeViewState({ ...this.state, ...patch });
    const qs = serializeViewState(this.state);
    history.replaceState(null, "", qs ? `?${qs}` : location.pathname);
  }

  // --- DOM skeleton -----------------------------------------------------

  private buildDom(): void {
    this.root.textContent = "";
    this.banner = el("div", "banner hidden");
    const controls = el("div", "controls");

    this.mapSelect = el("select");
    this.scenSelect = el("select");
    this.agentSelect = el("select");
    this.metricSelect = el("select");
    for (const m of METRICS) this.metricSelect.append(option(m.value, m.label));

    const labeled = (text: string, node: HTMLElement) => {
      const wrap = el("label", "field");
      wrap.append(el("span", "field-name", text), node);
      return wrap;
    };
    controls.append(
      labeled("map", this.mapSelect),
      labeled("scenario", this.scenSelect),
      labeled("agents", this.agentSelect),
      labeled("metric", this.metricSelect),
    );

    this.mapSelect.addEventListener("change", () => {
      const map = this.mapSelect.value;
      this.setState({
        level: map ? "map" : "domain",
        scope: map ? { map } : {},
        playback: { ...this.state.playback, timestep: 0, playing: false },
      });
      this.refreshAll();
    });
    this.scenSelect.addEventListener("change", () => {
      const scenario = this.scenSelect.value;
      const map = this.state.scope.map;
      this.setState({
        level: scenario ? "scenario" : "map",
        scope: scenario ? { map, scenario } : { map },
        playback: { ...this.state.playback, timestep: 0, playing: false },
      });
      this.refreshAll();
    });
    this.agentSelect.addEventListener("change", () => {
      const agents = Number(this.agentSelect.value);
      const { map, scenario } = this.state.scope;
      this.setState({
        level: agents >= 1 ? "instance" : "scenario",
        scope: agents >= 1 ? { map, scenario, agents } : { map, scenario },
        playback: { ...this.state.playback, timestep: 0, playing: false },
      });
      this.refreshAll();
    });
    this.metricSelect.addEventListener("change", () => {
      this.setState({ metric: this.metricSelect.value as Metric });
      this.renderChart(); // re-slice of fetched data unless scatter needs rows
      if (this.state.metric === "suboptimality" && !this.lastItems) this.refreshChartData();
    });

    this.algoBox = el("div", "algos");
    this.progressBox = el("div", "panel");
    this.chartBox = el("div", "panel");
    this.playBox = el("div", "panel hidden");

    this.canvas = el("canvas");
    this.canvas.width = 720;
    this.canvas.height = 480;
    this.timeLabel = el("span", "time", "t = 0 / 0");
    this.playBtn = el("button", undefined, "play");
    const stepBack = el("button", undefined, "-1");
    const stepFwd = el("button", undefined, "+1");
    const speed = el("select");
    for (const s of [0.5, 1, 2, 4, 8]) speed.append(option(String(s), `${s}x`));
    speed.value = String(this.state.playback.speed);

    this.playBtn.addEventListener("click", () => {
      if (!this.model) return;
      if (this.model.state().playing) this.model.pause();
      else this.model.play();
      this.syncPlayback();
    });
    stepBack.addEventListener("click", () => {
      this.model?.step(-1);
      this.syncPlayback();
    });
    stepFwd.addEventListener("click", () => {
      this.model?.step(1);
      this.syncPlayback();
    });
    speed.addEventListener("change", () => {
      this.model?.setSpeed(Number(speed.value));
      this.syncPlayback();
    });

    // drag to pan, wheel to zoom about the cursor
    let dragging = false;
    let lastX = 0;
    let lastY = 0;
    this.canvas.addEventListener("mousedown", (e) => {
      dragging = true;
      lastX = e.offsetX;
      lastY = e.offsetY;
    });
    window.addEventListener("mouseup", () => {
      dragging = false;
    });
    this.canvas.addEventListener("mousemove", (e) => {
      if (!dragging) return;
      this.vp.pan(e.offsetX - lastX, e.offsetY - lastY);
      lastX = e.offsetX;
      lastY = e.offsetY;
      this.drawPlayback();
    });
    this.canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.vp.zoomAt(e.offsetX, e.offsetY, e.deltaY < 0 ? 1.15 : 1 / 1.15);
      this.drawPlayback();
    });

    const bar = el("div", "playbar");
    bar.append(this.playBtn, stepBack, stepFwd, speed, this.timeLabel);
    this.playBox.append(bar, this.canvas);

    this.root.append(this.banner, controls, this.algoBox, this.progressBox, this.chartBox, this.playBox);
  }

  private showError(msg: string): void {
    this.banner.textContent = msg;
    this.banner.classList.remove("hidden");
  }

  private clearError(): void {
    this.banner.classList.add("hidden");
  }

  // --- data loading -------------------------------------------------------

  private refreshAll(): void {
    this.metricSelect.value = this.state.metric;
    void this.refreshScopeOptions();
    void this.refreshProgress();
    void this.refreshChartData();
    void this.refreshPlan();
  }

  /** Populate the drill-down selectors from grouped progress rows. */
  private async refreshScopeOptions(): Promise<void> {
    try {
      const result = await this.scopeFetch.run(async (signal) => {
        const maps = (await this.api.progress({}, "map", signal)) as ProgressSummary[];
        let scens: ProgressSummary[] = [];
        let agents: number[] = [];
        if (this.state.scope.map) {
          scens = (await this.api.progress(
            { map: this.state.scope.map },
            "scenario",
            signal,
          )) as ProgressSummary[];
        }
        if (this.state.scope.map && this.state.scope.scenario) {
          const page = await this.api.instances(
            { map: this.state.scope.map, scenario: this.state.scope.scenario },
            0,
            1000,
            signal,
          );
          agents = page.items.map((it) => it.agents);
        }
        return { maps, scens, agents };
      });
      if (!result) return;
      this.fillSelect(this.mapSelect, result.maps.map((r) => r.scope), this.state.scope.map, "all maps");
      this.fillSelect(
        this.scenSelect,
        result.scens.map((r) => r.scope),
        this.state.scope.scenario,
        "all scenarios",
      );
      this.fillSelect(
        this.agentSelect,
        result.agents.map(String),
        this.state.scope.agents !== undefined ? String(this.state.scope.agents) : undefined,
        "pick agents",
      );
      this.scenSelect.disabled = !this.state.scope.map;
      this.agentSelect.disabled = !this.state.scope.scenario;
    } catch (err) {
      this.showError(err instanceof ApiError ? err.message : "failed to load scope lists");
    }
  }

  private fillSelect(sel: HTMLSelectElement, values: string[], current: string | undefined, blank: string): void {
    sel.textContent = "";
    sel.append(option("", blank));
    for (const v of values) sel.append(option(v));
    sel.value = current && values.includes(current) ? current : "";
  }

  private async refreshProgress(): Promise<void> {
    const groupBy: Record<Level, string | undefined> = {
      domain: "domain",
      map: "scenario",
      scenario: undefined,
      instance: undefined,
    };
    try {
      const rows = await this.chartFetch.run(async (signal) => {
        const res = await this.api.progress(this.state.scope, groupBy[this.state.level], signal);
        return Array.isArray(res) ? res : [res];
      });
      if (!rows) return;
      this.clearError();
      this.renderProgress(rows);
    } catch (err) {
      this.progressBox.textContent = "";
      this.showError(err instanceof ApiError ? err.message : "progress request failed");
    }
  }

  private async refreshChartData(): Promise<void> {
    const { map, scenario } = this.state.scope;
    try {
      if (this.state.metric === "suboptimality" || this.state.level === "scenario") {
        const page = await this.planFetchSafe(() =>
          this.api.instances(this.state.scope, 0, 1000),
        );
        if (page) {
          this.lastItems = page.items;
          this.renderChart();
        }
        return;
      }
      if (map && !scenario) {
        const res = await this.api.comparison({ map }, this.state.metric);
        if ("series" in res) {
          this.lastSeries = res;
          const names = Object.keys(res.series).sort();
          this.knownAlgos = names;
          if (this.state.algorithms.length === 0) this.setState({ algorithms: names });
          this.renderAlgoToggles();
          this.renderChart();
        }
        return;
      }
      const res = await this.api.comparison(this.state.scope, this.state.metric);
      if ("algorithms" in res) {
        this.lastSeries = null;
        this.knownAlgos = res.algorithms.map((a) => a.algorithm);
        this.renderAlgoToggles();
        this.renderTable(res.algorithms);
      }
    } catch (err) {
      this.chartBox.textContent = "";
      this.showError(err instanceof ApiError ? err.message : "comparison request failed");
    }
  }

  private async planFetchSafe<T>(task: () => Promise<T>): Promise<T | null> {
    try {
      return await task();
    } catch (err) {
      this.chartBox.textContent = "";
      this.showError(err instanceof ApiError ? err.message : "request failed");
      return null;
    }
  }

  private async refreshPlan(): Promise<void> {
    const { map, scenario, agents } = this.state.scope;
    if (this.state.level !== "instance" || !map || !scenario || agents === undefined) {
      this.playBox.classList.add("hidden");
      this.model = null;
      this.plan = null;
      return;
    }
    this.playBox.classList.remove("hidden");
    try {
      const payload = await this.planFetch.run((signal) => this.api.plan(map, scenario, agents, signal));
      if (!payload) return;
      this.clearError();
      this.plan = payload;
      this.model = new PlaybackModel(payload);
      this.state = clampTimestep(this.state, this.model.horizon);
      this.model.seek(this.state.playback.timestep);
      this.model.setSpeed(this.state.playback.speed);
      if (this.state.playback.playing) this.model.play();
      this.needsFit = true;
      this.syncPlayback();
    } catch (err) {
      this.model = null;
      this.plan = null;
      const ctx = this.canvas.getContext("2d");
      if (ctx) ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
      this.timeLabel.textContent =
        err instanceof ApiError && err.status === 404
          ? "no stored plan for this instance"
          : "plan request failed";
    }
  }

  // --- rendering ----------------------------------------------------------

  private renderProgress(rows: ProgressSummary[]): void {
    this.progressBox.textContent = "";
    const bars = buildProgressBars(rows, 600);
    for (const bar of bars) {
      const row = el("div", "bar-row");
      row.append(el("span", "bar-label", `${bar.label} (${bar.total})`));
      const track = el("div", "bar-track");
      track.style.width = "600px";
      for (const seg of bar.segments) {
        const piece = el("div", `seg seg-${seg.kind}`);
        piece.style.left = `${seg.x}px`;
        piece.style.width = `${seg.width}px`;
        piece.title = `${seg.kind}: ${formatPct(seg.value)} (${seg.count})`;
        track.append(piece);
      }
      row.append(track);
      this.progressBox.append(row);
    }
  }

  private renderAlgoToggles(): void {
    this.algoBox.textContent = "";
    for (const name of this.knownAlgos) {
      const lab = el("label", "algo-toggle");
      const box = el("input");
      box.type = "checkbox";
      box.checked = this.state.algorithms.includes(name);
      box.addEventListener("change", () => {
        const next = box.checked
          ? [...this.state.algorithms, name]
          : this.state.algorithms.filter((a) => a !== name);
        this.setState({ algorithms: next });
        this.renderChart(); // toggling re-slices lastSeries, no refetch
      });
      const swatch = el("span", "swatch");
      swatch.style.background = agentColor(this.knownAlgos.indexOf(name));
      lab.append(box, swatch, document.createTextNode(name));
      this.algoBox.append(lab);
    }
  }

  private renderChart(): void {
    if (this.state.metric === "suboptimality") {
      this.renderScatter();
      return;
    }
    if (!this.lastSeries) return;
    this.chartBox.textContent = "";
    if (this.state.algorithms.length === 0) {
      this.chartBox.append(el("p", "hint", "select at least one algorithm to compare"));
      return;
    }
    const W = 640;
    const H = 320;
    const { lines } = buildComparisonLines(this.lastSeries, this.state.algorithms, W, H);
    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    svg.setAttribute("viewBox", `0 0 ${W} ${H}`);
    svg.setAttribute("width", String(W));
    svg.setAttribute("height", String(H));
    for (const line of lines) {
      const poly = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
      poly.setAttribute("points", line.points.map((p) => `${p.x},${p.y}`).join(" "));
      poly.setAttribute("fill", "none");
      poly.setAttribute("stroke", agentColor(this.knownAlgos.indexOf(line.algorithm)));
      poly.setAttribute("stroke-width", "2");
      svg.append(poly);
      for (const p of line.points) {
        const dot = document.createElementNS("http://www.w3.org/2000/svg", "circle");
        dot.setAttribute("cx", String(p.x));
        dot.setAttribute("cy", String(p.y));
        dot.setAttribute("r", "3");
        dot.setAttribute("fill", agentColor(this.knownAlgos.indexOf(line.algorithm)));
        const tip = document.createElementNS("http://www.w3.org/2000/svg", "title");
        tip.textContent = `${line.algorithm} @ ${p.agents} agents: ${formatPct(p.value)}`;
        dot.append(tip);
        svg.append(dot);
      }
    }
    this.chartBox.append(svg);
  }

  private renderScatter(): void {
    if (!this.lastItems) return;
    this.chartBox.textContent = "";
    const W = 640;
    const H = 320;
    const { points } = buildSuboptimalityScatter(this.lastItems, W, H);
    if (points.length === 0) {
      this.chartBox.append(el("p", "hint", "no instances with both a bound and a cost here"));
      return;
    }
    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    svg.setAttribute("viewBox", `0 0 ${W} ${H}`);
    svg.setAttribute("width", String(W));
    svg.setAttribute("height", String(H));
    for (const p of points) {
      const dot = document.createElementNS("http://www.w3.org/2000/svg", "circle");
      dot.setAttribute("cx", String(p.x));
      dot.setAttribute("cy", String(p.y));
      dot.setAttribute("r", "3");
      dot.setAttribute("fill", "#5469d4");
      const tip = document.createElementNS("http://www.w3.org/2000/svg", "title");
      tip.textContent = `${p.scenario} @ ${p.agents} agents: ratio ${p.ratio.toFixed(2)}`;
      dot.append(tip);
      svg.append(dot);
    }
    this.chartBox.append(svg);
  }

  private renderTable(rows: { algorithm: string; closed: number; solved: number; best_lower_bound: number; best_solution: number }[]): void {
    this.chartBox.textContent = "";
    const table = el("table", "cmp");
    const head = el("tr");
    for (const h of ["algorithm", "closed", "solved", "best bounds", "best solutions"]) {
      head.append(el("th", undefined, h));
    }
    table.append(head);
    for (const r of rows) {
      if (this.state.algorithms.length > 0 && !this.state.algorithms.includes(r.algorithm)) continue;
      const tr = el("tr");
      tr.append(
        el("td", undefined, r.algorithm),
        el("td", undefined, String(r.closed)),
        el("td", undefined, String(r.solved)),
        el("td", undefined, String(r.best_lower_bound)),
        el("td", undefined, String(r.best_solution)),
      );
      table.append(tr);
    }
    this.chartBox.append(table);
  }

  private syncPlayback(): void {
    if (!this.model) return;
    const st = this.model.state();
    this.playBtn.textContent = st.playing ? "pause" : "play";
    this.timeLabel.textContent = `t = ${st.timestep} / ${this.model.horizon}`;
    this.setState({ playback: st });
    this.drawPlayback();
  }

  private drawPlayback(): void {
    if (!this.model || !this.plan) return;
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    if (this.needsFit) {
      this.vp.fit(this.canvas.width, this.canvas.height, this.plan.width, this.plan.height);
      this.needsFit = false;
    }
    renderFrame(new CanvasSurface(ctx), this.vp, {
      width: this.plan.width,
      height: this.plan.height,
      markers: this.model.markersAt(this.model.state().timestep),
      goals: this.plan.pairs.map((p) => [p.goal[0], p.goal[1]] as [number, number]),
      viewW: this.canvas.width,
      viewH: this.canvas.height,
    });
  }

  /** Frame clock: advances playback by wall time, independent of fetches. */
  private frame(now: number): void {
    const dt = this.lastFrame ? (now - this.lastFrame) / 1000 : 0;
    this.lastFrame = now;
    if (this.model && this.model.state().playing) {
      if (this.model.advance(dt)) this.syncPlayback();
    }
    requestAnimationFrame((t) => this.frame(t));
  }
}

export function mount(root: HTMLElement): void {
  new App(root).start();
}

const rootNode = typeof document !== "undefined" ? document.getElementById("app") : null;
if (rootNode) mount(rootNode);
