/** Wire contracts for the planner service HTTP JSON API.
 *
 * These mirror the server's payloads field-for-field; the UI never derives a
 * number the server already provides. `validateRateMap` is the schema gate in
 * front of the renderer: a payload that fails it is never partially drawn.
 */

export interface Bbox {
  lat_min: number;
  lon_min: number;
  lat_max: number;
  lon_max: number;
}

export interface GridInfo {
  rows: number;
  cols: number;
  cell_size_m: number;
  bbox: Bbox;
}

export interface Metrics {
  avg_rate_mbps: number;
  avg_rate_se_mbps: number;
  share4: number;
  share3: number;
  mean_p_cov: number;
  total_population: number;
  n_cells: number;
  n_range_clamped: number;
  scenario_fingerprint: string;
  /** present on live session metrics, absent on baseline_metrics */
  no_active_bs?: boolean;
}

export interface SitePayload {
  id: string;
  lat: number;
  lon: number;
  structure: string;
  tech: string;
  height_m: number;
  power_w: number;
  farm_id: string | null;
  active: boolean;
}

export interface SessionSummary {
  id: string;
  revision: number;
  metrics: Metrics;
  grid: GridInfo;
  sites: SitePayload[];
}

export interface SessionDetail extends SessionSummary {
  baseline_metrics: Metrics;
  edit_log_length: number;
  plan_pending: boolean;
  plan_running: boolean;
}

export interface DeltaSummary {
  max_gain_mbps: number;
  max_loss_mbps: number;
  frac_degraded: number;
  avg_rate_change_mbps: number;
}

export interface MutationResult {
  revision: number;
  metrics: Metrics;
  delta: DeltaSummary;
  /** server-assigned site id, add-site responses only */
  id?: string;
  /** confirmed plan selection, plan/confirm responses only */
  selected?: string[];
}

export interface BandScale {
  breakpoints: number[];
  colors: string[];
}

export interface RateMapPayload extends GridInfo {
  layer: string;
  revision: number;
  values: number[];
  bands: BandScale;
}

export interface PlanResult {
  selected: string[];
  metric_before: number;
  metric_after: number;
  per_step_metrics: number[];
  method: string;
  evaluations: number;
  baseline_no_bs: boolean;
  base_revision: number;
  candidate_ids: string[];
}

export interface AddSiteBody {
  lat: number;
  lon: number;
  id?: string;
  height_m?: number;
  power_w?: number;
  farm_id?: string;
  full_recompute?: boolean;
}

const HEX_COLOR = /^#[0-9a-fA-F]{6}$/;

function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

/** Check a rate-map payload against the documented schema.
 *
 * Returns a human-readable problem description, or null when the payload is
 * well-formed. Callers must not render anything from a payload that fails.
 */
export function validateRateMap(p: unknown): string | null {
  if (typeof p !== "object" || p === null) return "payload is not an object";
  const doc = p as Record<string, unknown>;
  if (typeof doc.layer !== "string") return "missing layer name";
  if (!Number.isInteger(doc.revision) || (doc.revision as number) < 0) {
    return "revision must be a non-negative integer";
  }
  if (!Number.isInteger(doc.rows) || (doc.rows as number) < 1) return "rows must be a positive integer";
  if (!Number.isInteger(doc.cols) || (doc.cols as number) < 1) return "cols must be a positive integer";
  if (!isFiniteNumber(doc.cell_size_m) || doc.cell_size_m <= 0) return "cell_size_m must be positive";

  const bbox = doc.bbox as Record<string, unknown> | undefined;
  if (typeof bbox !== "object" || bbox === null) return "missing bbox";
  for (const k of ["lat_min", "lon_min", "lat_max", "lon_max"]) {
    if (!isFiniteNumber(bbox[k])) return `bbox.${k} must be a finite number`;
  }
  if ((bbox.lat_max as number) <= (bbox.lat_min as number)) return "bbox latitude range is empty";
  if ((bbox.lon_max as number) <= (bbox.lon_min as number)) return "bbox longitude range is empty";

  const values = doc.values;
  if (!Array.isArray(values)) return "values must be an array";
  const expected = (doc.rows as number) * (doc.cols as number);
  if (values.length !== expected) {
    return `values length ${values.length} does not match rows*cols = ${expected}`;
  }
  for (let i = 0; i < values.length; i++) {
    if (!isFiniteNumber(values[i])) return `values[${i}] is not a finite number`;
  }

  const bands = doc.bands as Record<string, unknown> | undefined;
  if (typeof bands !== "object" || bands === null) return "missing bands";
  const breakpoints = bands.breakpoints;
  const colors = bands.colors;
  if (!Array.isArray(breakpoints) || breakpoints.length === 0) return "bands.breakpoints must be a non-empty array";
  for (let i = 0; i < breakpoints.length; i++) {
    if (!isFiniteNumber(breakpoints[i])) return `bands.breakpoints[${i}] is not a finite number`;
    if (i > 0 && breakpoints[i] <= breakpoints[i - 1]) return "bands.breakpoints must be strictly increasing";
  }
  if (!Array.isArray(colors) || colors.length !== breakpoints.length + 1) {
    return "bands.colors must have one more entry than breakpoints";
  }
  for (let i = 0; i < colors.length; i++) {
    if (typeof colors[i] !== "string" || !HEX_COLOR.test(colors[i] as string)) {
      return `bands.colors[${i}] is not a #rrggbb color`;
    }
  }
  return null;
}
