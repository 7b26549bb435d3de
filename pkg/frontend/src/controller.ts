/** Session controller: glues the HTTP client to the view.
 *
 * All numbers shown by the UI originate in server payloads held here; the
 * controller transforms layout (rasters, diffs of stored snapshots) but never
 * computes a rate, coverage, or power figure of its own.
 *
 * Mutations are funneled through a single promise chain so rapid interactions
 * serialize client-side: the second request is not sent until the first
 * resolved, so revisions are observed in order and no update is lost.
 */

import { ApiHttpError, Client } from "./api.js";
import { DELTA_BANDS_MBPS, DELTA_BAND_COLORS } from "./colors.js";
import { buildLegend, buildRaster, pixelToCell, pixelToLatLon } from "./heatmap.js";
import type { Legend, Raster } from "./heatmap.js";
import { ViewState } from "./state.js";
import type { LayerName } from "./state.js";
import { validateRateMap } from "./types.js";
import type {
  DeltaSummary,
  GridInfo,
  MutationResult,
  PlanResult,
  RateMapPayload,
  SessionDetail,
  SitePayload,
} from "./types.js";

/** Callbacks the DOM layer implements; tests substitute a recording fake. */
export interface UiSink {
  /** metrics, sites, history, or plan state changed; re-read the controller */
  modelChanged(): void;
  renderRaster(raster: Raster, legend: Legend): void;
  /** null means the compare panel is disabled (unknown revision) */
  renderCompare(view: CompareView | null): void;
  toast(message: string): void;
  errorBanner(message: string): void;
  /** placement click landed outside the mapped area */
  cursorWarning(): void;
}

/** Rate-layer values captured at one revision, for the compare panel. */
export interface Snapshot {
  revision: number;
  avgRateMbps: number;
  values: Float64Array;
}

export interface CompareView {
  revisionA: number;
  revisionB: number;
  avgA: number;
  avgB: number;
  /** avg(B) - avg(A), both server-reported */
  avgDifference: number;
  deltaValues: Float64Array;
  raster: Raster;
  legend: Legend;
}

export class Controller {
  readonly state = new ViewState();
  session: SessionDetail | null = null;
  lastDelta: DeltaSummary | null = null;
  lastPlan: PlanResult | null = null;
  lastCompare: CompareView | null = null;
  provisionalMarker: { lat: number; lon: number } | null = null;
  readonly snapshots = new Map<number, Snapshot>();

  private grid: GridInfo | null = null;
  private queue: Promise<void> = Promise.resolve();

  constructor(
    private readonly client: Client,
    private readonly ui: UiSink,
  ) {}

  /** Resolves once every queued mutation so far has settled. */
  idle(): Promise<void> {
    return this.queue;
  }

  get sites(): SitePayload[] {
    return this.session === null ? [] : this.session.sites;
  }

  gridInfo(): GridInfo | null {
    return this.grid;
  }

  private sessionIdOrThrow(): string {
    if (this.state.sessionId === null) throw new Error("no session attached");
    return this.state.sessionId;
  }

  private enqueue<T>(op: () => Promise<T>): Promise<T> {
    const run = this.queue.then(op);
    this.queue = run.then(
      () => undefined,
      () => undefined,
    );
    return run;
  }

  async openByPath(path: string): Promise<void> {
    const created = await this.client.createSessionByPath(path);
    await this.attach(created.id);
  }

  async attach(sessionId: string): Promise<void> {
    const detail = await this.client.getSession(sessionId);
    this.session = detail;
    this.grid = detail.grid;
    this.lastDelta = null;
    this.lastPlan = null;
    this.lastCompare = null;
    this.snapshots.clear();
    this.state.reset(detail.id);
    this.state.recordMetric(detail.revision, detail.metrics.avg_rate_mbps);
    this.ui.modelChanged();
    await this.captureSnapshot();
  }

  /** Re-read session metadata (poll); revision may not have moved. */
  async refreshSession(): Promise<void> {
    const detail = await this.client.getSession(this.sessionIdOrThrow());
    this.session = detail;
    this.state.recordMetric(detail.revision, detail.metrics.avg_rate_mbps);
    this.ui.modelChanged();
  }

  /** Fetch one layer, gate it through the schema check, remember rate-layer
   * snapshots. Returns null (after raising the error banner) on a payload
   * that fails validation — nothing is rendered from it. */
  private async fetchLayer(layer: LayerName | "rate"): Promise<RateMapPayload | null> {
    const payload = await this.client.rateMap(this.sessionIdOrThrow(), layer);
    const problem = validateRateMap(payload);
    if (problem !== null) {
      this.ui.errorBanner(`rate map payload rejected: ${problem}`);
      return null;
    }
    if (payload.layer === "rate") this.storeSnapshot(payload);
    return payload;
  }

  private storeSnapshot(payload: RateMapPayload): void {
    const entry = this.state.entryFor(payload.revision);
    if (entry === undefined) return; // no avg known for that revision; skip
    this.snapshots.set(payload.revision, {
      revision: payload.revision,
      avgRateMbps: entry.avgRateMbps,
      values: Float64Array.from(payload.values),
    });
  }

  /** Redraw the active layer. */
  async refreshLayer(): Promise<void> {
    const payload = await this.fetchLayer(this.state.activeLayer);
    if (payload !== null) {
      this.ui.renderRaster(buildRaster(payload), buildLegend(payload.layer, payload.bands));
    }
  }

  /** Capture a rate-layer snapshot for the current revision, then redraw.
   * When the rate layer is the one displayed, a single fetch serves both. */
  private async captureSnapshot(): Promise<void> {
    if (this.state.activeLayer !== "rate") await this.fetchLayer("rate");
    await this.refreshLayer();
  }

  /** Switch the displayed layer. Only the layer endpoint is hit — session
   * metadata stays cached. */
  async setLayer(layer: LayerName): Promise<void> {
    if (this.state.setLayer(layer)) {
      this.ui.modelChanged();
      await this.refreshLayer();
    }
  }

  /** Map click in placement mode: convert the canvas position and add an
   * equipped turbine there. Outside the canvas nothing is sent. */
  clickAt(x: number, y: number, canvasW: number, canvasH: number): void {
    if (!this.state.placementMode || this.grid === null) return;
    const cell = pixelToCell(this.grid, canvasW, canvasH, x, y);
    const position = pixelToLatLon(this.grid, canvasW, canvasH, x, y);
    if (cell === null || position === null) {
      this.ui.cursorWarning();
      return;
    }
    void this.placeSite(position.lat, position.lon);
  }

  /** Add a site with an optimistic marker, reconciled when the POST lands. */
  placeSite(lat: number, lon: number): Promise<void> {
    this.provisionalMarker = { lat, lon };
    this.ui.modelChanged();
    return this.enqueue(async () => {
      try {
        const result = await this.client.addSite(this.sessionIdOrThrow(), { lat, lon });
        await this.afterMutation(result);
      } catch (e) {
        this.reportFailure("placement rejected", e);
      } finally {
        this.provisionalMarker = null;
        this.ui.modelChanged();
      }
    });
  }

  equipSite(siteId: string): Promise<void> {
    return this.enqueue(async () => {
      try {
        const result = await this.client.equipSite(this.sessionIdOrThrow(), siteId);
        await this.afterMutation(result);
      } catch (e) {
        this.reportFailure(`equip ${siteId} failed`, e);
      }
    });
  }

  removeSite(siteId: string): Promise<void> {
    return this.enqueue(async () => {
      try {
        const result = await this.client.removeSite(this.sessionIdOrThrow(), siteId);
        await this.afterMutation(result);
      } catch (e) {
        this.reportFailure(`remove ${siteId} failed`, e);
      }
    });
  }

  runPlan(k: number, exhaustive = false): Promise<PlanResult | null> {
    return this.enqueue(async () => {
      try {
        const plan = await this.client.plan(this.sessionIdOrThrow(), k, exhaustive);
        this.lastPlan = plan;
        this.ui.modelChanged();
        return plan;
      } catch (e) {
        this.reportFailure("plan failed", e);
        return null;
      }
    });
  }

  confirmPlan(): Promise<void> {
    return this.enqueue(async () => {
      try {
        const result = await this.client.confirmPlan(this.sessionIdOrThrow());
        this.lastPlan = null;
        await this.afterMutation(result);
      } catch (e) {
        this.reportFailure("confirm failed", e);
      }
    });
  }

  /** Compare two stored revisions. Unknown revisions disable the panel. */
  compare(revisionA: number, revisionB: number): void {
    const a = this.snapshots.get(revisionA);
    const b = this.snapshots.get(revisionB);
    if (a === undefined || b === undefined || this.grid === null) {
      this.lastCompare = null;
      this.ui.renderCompare(null);
      return;
    }
    const deltaValues = new Float64Array(a.values.length);
    for (let i = 0; i < deltaValues.length; i++) deltaValues[i] = b.values[i] - a.values[i];
    const bands = { breakpoints: [...DELTA_BANDS_MBPS], colors: [...DELTA_BAND_COLORS] };
    const raster = buildRaster({
      rows: this.grid.rows,
      cols: this.grid.cols,
      values: deltaValues,
      bands,
    });
    const view: CompareView = {
      revisionA,
      revisionB,
      avgA: a.avgRateMbps,
      avgB: b.avgRateMbps,
      avgDifference: b.avgRateMbps - a.avgRateMbps,
      deltaValues,
      raster,
      legend: buildLegend("delta_vs_baseline", bands),
    };
    this.lastCompare = view;
    this.ui.renderCompare(view);
  }

  private async afterMutation(result: MutationResult): Promise<void> {
    this.state.recordMetric(result.revision, result.metrics.avg_rate_mbps);
    this.lastDelta = result.delta;
    this.session = await this.client.getSession(this.sessionIdOrThrow());
    this.ui.modelChanged();
    await this.captureSnapshot();
  }

  private reportFailure(what: string, e: unknown): void {
    const reason = e instanceof ApiHttpError ? e.detail : String(e);
    this.ui.toast(`${what}: ${reason}`);
  }
}
