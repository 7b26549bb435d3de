import { describe, expect, it } from "vitest";

import type { FetchLike } from "../src/api.js";
import { Client } from "../src/api.js";
import { Controller } from "../src/controller.js";
import type { CompareView, UiSink } from "../src/controller.js";
import type { Legend, Raster } from "../src/heatmap.js";
import {
  DELTA_BANDS_MBPS,
  DELTA_BAND_COLORS,
  RATE_BANDS_MBPS,
  RATE_BAND_COLORS,
  hexToRgb,
} from "../src/colors.js";
import type { Metrics, RateMapPayload, SessionDetail } from "../src/types.js";

const GRID = {
  rows: 2,
  cols: 2,
  cell_size_m: 100.0,
  bbox: { lat_min: 50.0, lon_min: 8.0, lat_max: 50.0018, lon_max: 8.0028 },
};

function mkMetrics(avg: number): Metrics {
  return {
    avg_rate_mbps: avg,
    avg_rate_se_mbps: 0.01,
    share4: 0.5,
    share3: 0.5,
    mean_p_cov: 0.9,
    total_population: 100,
    n_cells: 4,
    n_range_clamped: 0,
    scenario_fingerprint: "abc123",
    no_active_bs: false,
  };
}

interface MiniState {
  revision: number;
  avg: number;
  values: number[];
}

function mkDetail(state: MiniState, baselineAvg: number): SessionDetail {
  return {
    id: "s1",
    revision: state.revision,
    metrics: mkMetrics(state.avg),
    baseline_metrics: mkMetrics(baselineAvg),
    grid: GRID,
    sites: [],
    edit_log_length: state.revision,
    plan_pending: false,
    plan_running: false,
  };
}

function mkRateMap(state: MiniState, layer: string): RateMapPayload {
  const name = layer === "delta" ? "delta_vs_baseline" : layer;
  const bands =
    name === "delta_vs_baseline"
      ? { breakpoints: [...DELTA_BANDS_MBPS], colors: [...DELTA_BAND_COLORS] }
      : { breakpoints: [...RATE_BANDS_MBPS], colors: [...RATE_BAND_COLORS] };
  return { layer: name, revision: state.revision, values: [...state.values], bands, ...GRID };
}

function jsonResponse(doc: unknown, status = 200): Response {
  return new Response(JSON.stringify(doc), {
    status,
    headers: { "content-type": "application/json" },
  });
}

interface LoggedRequest {
  method: string;
  url: string;
  body: unknown;
}

type AddSiteHook = (body: { lat: number; lon: number }) => Promise<Response> | Response;

/** Scripted stand-in for the service: serves a session detail, rate maps, and
 * an overridable add-site mutation, recording every request. */
function makeService(opts: { addSite?: AddSiteHook } = {}) {
  const state: MiniState = { revision: 0, avg: 1.5, values: [1, 1, 2, 2] };
  const log: LoggedRequest[] = [];
  const defaultAddSite: AddSiteHook = () => {
    state.revision += 1;
    state.avg = 9.5;
    state.values = [3, 1, 2, 5];
    return jsonResponse({
      revision: state.revision,
      metrics: mkMetrics(state.avg),
      delta: { max_gain_mbps: 3, max_loss_mbps: 0, frac_degraded: 0, avg_rate_change_mbps: 8 },
      id: `user-${state.revision}`,
    });
  };
  const addSite = opts.addSite ?? defaultAddSite;

  const fetchFn: FetchLike = async (input, init) => {
    const method = init?.method ?? "GET";
    const body = typeof init?.body === "string" ? (JSON.parse(init.body) as unknown) : undefined;
    log.push({ method, url: input, body });
    const url = new URL(input);
    if (method === "GET" && url.pathname === "/sessions/s1") {
      return jsonResponse(mkDetail(state, 1.5));
    }
    if (method === "GET" && url.pathname === "/sessions/s1/ratemap") {
      return jsonResponse(mkRateMap(state, url.searchParams.get("layer") ?? "rate"));
    }
    if (method === "POST" && url.pathname === "/sessions/s1/sites") {
      return addSite(body as { lat: number; lon: number });
    }
    return jsonResponse({ detail: `unscripted route: ${method} ${url.pathname}` }, 500);
  };
  return { state, log, fetchFn };
}

class FakeUi implements UiSink {
  rasters: { raster: Raster; legend: Legend }[] = [];
  compares: (CompareView | null)[] = [];
  toasts: string[] = [];
  banners: string[] = [];
  cursorWarnings = 0;
  modelChanges = 0;

  modelChanged(): void {
    this.modelChanges += 1;
  }
  renderRaster(raster: Raster, legend: Legend): void {
    this.rasters.push({ raster, legend });
  }
  renderCompare(view: CompareView | null): void {
    this.compares.push(view);
  }
  toast(message: string): void {
    this.toasts.push(message);
  }
  errorBanner(message: string): void {
    this.banners.push(message);
  }
  cursorWarning(): void {
    this.cursorWarnings += 1;
  }
}

function mkController(fetchFn: FetchLike) {
  const ui = new FakeUi();
  const controller = new Controller(new Client("http://stub", fetchFn), ui);
  return { controller, ui };
}

describe("attach", () => {
  it("records the baseline metric, snapshots it, and renders the rate layer", async () => {
    const svc = makeService();
    const { controller, ui } = mkController(svc.fetchFn);
    await controller.attach("s1");
    expect(controller.state.history).toEqual([{ revision: 0, avgRateMbps: 1.5 }]);
    expect([...controller.snapshots.keys()]).toEqual([0]);
    expect(ui.rasters).toHaveLength(1);
    expect(ui.rasters[0].legend.title).toBe("rate");
    expect(ui.rasters[0].raster.width).toBe(2);
  });
});

describe("layer switching", () => {
  it("fetches only the layer endpoint, never session metadata", async () => {
    const svc = makeService();
    const { controller, ui } = mkController(svc.fetchFn);
    await controller.attach("s1");
    svc.log.length = 0;
    await controller.setLayer("p_cov");
    expect(svc.log).toHaveLength(1);
    expect(svc.log[0].url).toContain("/sessions/s1/ratemap?layer=p_cov");
    expect(ui.rasters[ui.rasters.length - 1].legend.title).toBe("p_cov");
  });

  it("is a no-op when the layer is already active", async () => {
    const svc = makeService();
    const { controller } = mkController(svc.fetchFn);
    await controller.attach("s1");
    svc.log.length = 0;
    await controller.setLayer("rate");
    expect(svc.log).toHaveLength(0);
  });
});

describe("payload validation gate", () => {
  it("raises the error banner and renders nothing from a broken payload", async () => {
    const svc = makeService();
    const good = svc.fetchFn;
    let breakNext = false;
    const fetchFn: FetchLike = async (input, init) => {
      const res = await good(input, init);
      if (breakNext && input.includes("/ratemap")) {
        const doc = (await res.json()) as RateMapPayload;
        doc.values = doc.values.slice(0, 2); // wrong length
        return jsonResponse(doc);
      }
      return res;
    };
    const { controller, ui } = mkController(fetchFn);
    await controller.attach("s1");
    const rendered = ui.rasters.length;
    breakNext = true;
    await controller.setLayer("share4");
    expect(ui.banners).toHaveLength(1);
    expect(ui.banners[0]).toContain("rate map payload rejected");
    expect(ui.banners[0]).toContain("does not match rows*cols");
    expect(ui.rasters).toHaveLength(rendered); // no partial render
  });
});

describe("placement", () => {
  it("shows an optimistic marker, then reconciles and appends history", async () => {
    const svc = makeService();
    const { controller, ui } = mkController(svc.fetchFn);
    await controller.attach("s1");
    const done = controller.placeSite(50.001, 8.001);
    expect(controller.provisionalMarker).toEqual({ lat: 50.001, lon: 8.001 });
    await done;
    expect(controller.provisionalMarker).toBeNull();
    expect(controller.state.history).toEqual([
      { revision: 0, avgRateMbps: 1.5 },
      { revision: 1, avgRateMbps: 9.5 },
    ]);
    expect(controller.session?.revision).toBe(1);
    expect(controller.lastDelta?.avg_rate_change_mbps).toBe(8);
    expect(ui.toasts).toHaveLength(0);
    expect([...controller.snapshots.keys()]).toEqual([0, 1]);
  });

  it("removes the marker and toasts when the server rejects the position", async () => {
    const svc = makeService({
      addSite: () => jsonResponse({ detail: "position outside the area of interest" }, 422),
    });
    const { controller, ui } = mkController(svc.fetchFn);
    await controller.attach("s1");
    await controller.placeSite(10.0, 10.0);
    expect(controller.provisionalMarker).toBeNull();
    expect(ui.toasts).toHaveLength(1);
    expect(ui.toasts[0]).toBe("placement rejected: position outside the area of interest");
    expect(controller.state.history).toHaveLength(1); // nothing appended
    expect(controller.session?.revision).toBe(0);
  });

  it("sends nothing for a click outside the canvas", async () => {
    const svc = makeService();
    const { controller, ui } = mkController(svc.fetchFn);
    await controller.attach("s1");
    controller.state.placementMode = true;
    svc.log.length = 0;
    controller.clickAt(-3, 5, 12, 12);
    controller.clickAt(5, 12, 12, 12);
    await controller.idle();
    expect(svc.log).toHaveLength(0);
    expect(ui.cursorWarnings).toBe(2);
  });

  it("ignores clicks when placement mode is off", async () => {
    const svc = makeService();
    const { controller } = mkController(svc.fetchFn);
    await controller.attach("s1");
    svc.log.length = 0;
    controller.clickAt(5, 5, 12, 12);
    await controller.idle();
    expect(svc.log).toHaveLength(0);
  });

  it("posts a position inside the bounding box for an in-canvas click", async () => {
    const svc = makeService();
    const { controller } = mkController(svc.fetchFn);
    await controller.attach("s1");
    controller.state.placementMode = true;
    controller.clickAt(3, 3, 12, 12); // north-west quarter
    await controller.idle();
    const post = svc.log.find((r) => r.method === "POST");
    expect(post).toBeDefined();
    const body = post!.body as { lat: number; lon: number };
    expect(body.lat).toBeGreaterThan(GRID.bbox.lat_min);
    expect(body.lat).toBeLessThan(GRID.bbox.lat_max);
    expect(body.lon).toBeGreaterThan(GRID.bbox.lon_min);
    expect(body.lon).toBeLessThan(GRID.bbox.lon_max);
    // north-west quarter -> upper half of the latitude range
    expect(body.lat).toBeGreaterThan((GRID.bbox.lat_min + GRID.bbox.lat_max) / 2);
  });

  it("queues a rapid second placement behind the first", async () => {
    let release!: () => void;
    const gate = new Promise<void>((resolve) => (release = resolve));
    let posts = 0;
    const svc = makeService({
      addSite: async () => {
        posts += 1;
        if (posts === 1) await gate;
        svc.state.revision += 1;
        svc.state.avg = svc.state.revision === 1 ? 5.0 : 7.0;
        return jsonResponse({
          revision: svc.state.revision,
          metrics: mkMetrics(svc.state.avg),
          delta: { max_gain_mbps: 1, max_loss_mbps: 0, frac_degraded: 0, avg_rate_change_mbps: 1 },
          id: `user-${svc.state.revision}`,
        });
      },
    });
    const { controller } = mkController(svc.fetchFn);
    await controller.attach("s1");
    const first = controller.placeSite(50.0005, 8.0005);
    const second = controller.placeSite(50.0012, 8.0022);
    // let any eagerly-started work settle: the second POST must not have fired
    await new Promise((resolve) => setTimeout(resolve, 20));
    expect(posts).toBe(1);
    release();
    await first;
    await second;
    expect(posts).toBe(2);
    expect(controller.state.history.map((e) => e.revision)).toEqual([0, 1, 2]);
    expect(controller.state.history.map((e) => e.avgRateMbps)).toEqual([1.5, 5.0, 7.0]);
  });
});

describe("compare panel", () => {
  async function withTwoRevisions() {
    const svc = makeService();
    const pair = mkController(svc.fetchFn);
    await pair.controller.attach("s1");
    await pair.controller.placeSite(50.001, 8.001);
    return pair;
  }

  it("shows zero difference and a uniform neutral raster for a = b", async () => {
    const { controller } = await withTwoRevisions();
    controller.compare(1, 1);
    const view = controller.lastCompare;
    expect(view).not.toBeNull();
    expect(view!.avgDifference).toBe(0);
    expect([...view!.deltaValues]).toEqual([0, 0, 0, 0]);
    const [nr, ng, nb] = hexToRgb("#f7f7f7");
    for (let i = 0; i < view!.raster.pixels.length; i += 4) {
      expect(view!.raster.pixels[i]).toBe(nr);
      expect(view!.raster.pixels[i + 1]).toBe(ng);
      expect(view!.raster.pixels[i + 2]).toBe(nb);
    }
  });

  it("diffs stored snapshots elementwise and negates when swapped", async () => {
    const { controller } = await withTwoRevisions();
    controller.compare(0, 1);
    let view = controller.lastCompare!;
    expect(view.avgDifference).toBeCloseTo(8.0, 12); // 9.5 - 1.5
    expect([...view.deltaValues]).toEqual([2, 0, 0, 3]); // [3,1,2,5] - [1,1,2,2]
    controller.compare(1, 0);
    view = controller.lastCompare!;
    expect(view.avgDifference).toBeCloseTo(-8.0, 12);
    expect([...view.deltaValues]).toEqual([-2, 0, 0, -3]);
  });

  it("disables the panel for an unknown revision", async () => {
    const { controller, ui } = await withTwoRevisions();
    controller.compare(0, 7);
    expect(controller.lastCompare).toBeNull();
    expect(ui.compares[ui.compares.length - 1]).toBeNull();
  });
});
