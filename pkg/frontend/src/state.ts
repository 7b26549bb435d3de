/** Client-side view state: session handle, layer selection, metric history. */

export type LayerName = "rate" | "p_cov" | "share4" | "delta";

export const LAYERS: readonly LayerName[] = ["rate", "p_cov", "share4", "delta"];

export interface HistoryEntry {
  revision: number;
  avgRateMbps: number;
}

export class ViewState {
  sessionId: string | null = null;
  activeLayer: LayerName = "rate";
  selectedSiteId: string | null = null;
  placementMode = false;
  /** avg rate per revision, strictly ordered by revision */
  readonly history: HistoryEntry[] = [];

  reset(sessionId: string): void {
    this.sessionId = sessionId;
    this.selectedSiteId = null;
    this.placementMode = false;
    this.history.length = 0;
  }

  /** Append a (revision, avg rate) point.
   *
   * Re-recording the latest revision overwrites in place (poll refreshes are
   * idempotent); an older revision is a programming error and throws.
   */
  recordMetric(revision: number, avgRateMbps: number): void {
    const last = this.history[this.history.length - 1];
    if (last !== undefined) {
      if (revision < last.revision) {
        throw new RangeError(`history must be ordered by revision: got ${revision} after ${last.revision}`);
      }
      if (revision === last.revision) {
        last.avgRateMbps = avgRateMbps;
        return;
      }
    }
    this.history.push({ revision, avgRateMbps });
  }

  entryFor(revision: number): HistoryEntry | undefined {
    return this.history.find((e) => e.revision === revision);
  }

  /** Switch the active layer; returns whether it changed. */
  setLayer(layer: LayerName): boolean {
    if (!LAYERS.includes(layer)) throw new RangeError(`unknown layer: ${layer}`);
    if (layer === this.activeLayer) return false;
    this.activeLayer = layer;
    return true;
  }
}
