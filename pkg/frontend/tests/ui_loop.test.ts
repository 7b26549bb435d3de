// @vitest-environment jsdom

/** End-to-end loop against a live service: open the bundled mini scenario,
 * click once to place a turbine on the uncovered population cluster, and
 * check that every displayed number is exactly the server's.
 */

import * as path from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Client } from "../src/api.js";
import { RATE_BANDS_MBPS, RATE_BAND_COLORS } from "../src/colors.js";
import { cellToPixel } from "../src/heatmap.js";
import { mountApp } from "../src/main.js";
import type { App } from "../src/main.js";
import type { RateMapPayload, SessionDetail } from "../src/types.js";
import { REPO_ROOT, startService } from "./helpers/server.js";
import type { RunningService } from "./helpers/server.js";

// the mini scenario's population has an isolated cluster in the north-east,
// out of reach of its single 3G tower; grid cell (9, 9) sits on its peak
const CLUSTER_CELL = { row: 9, col: 9 };

let svc: RunningService;

beforeAll(async () => {
  // jsdom has no 2-D canvas; the app skips drawing on a null context, but
  // jsdom's own stub logs a "not implemented" error first — silence it
  Object.defineProperty(HTMLCanvasElement.prototype, "getContext", {
    value: () => null,
  });
  svc = await startService();
});

afterAll(async () => {
  await svc.stop();
});

async function waitFor(check: () => boolean, what: string, timeoutMs = 60_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!check()) {
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await new Promise((resolve) => setTimeout(resolve, 50));
  }
}

async function serverDetail(sessionId: string): Promise<SessionDetail> {
  const res = await fetch(`${svc.baseUrl}/sessions/${sessionId}`);
  expect(res.ok).toBe(true);
  return (await res.json()) as SessionDetail;
}

function mountFreshApp(): App {
  document.body.innerHTML = "";
  const root = document.createElement("div");
  document.body.appendChild(root);
  return mountApp(root, new Client(svc.baseUrl));
}

describe("interactive planning loop", () => {
  it("opens a session, places one turbine by clicking, and mirrors the server metrics", async () => {
    const app = mountFreshApp();
    const { refs, controller } = app;

    // open the bundled scenario through the form
    refs.scenarioPath.value = path.join(REPO_ROOT, "scenarios", "mini");
    refs.openBtn.click();
    await waitFor(() => controller.session !== null, "session to open");
    await controller.idle();

    const sessionId = controller.session!.id;
    const baseline = await serverDetail(sessionId);
    expect(baseline.revision).toBe(0);
    const baselineAvg = baseline.baseline_metrics.avg_rate_mbps;

    // displayed avg rate is exactly the server metric for revision 0
    expect(Number(refs.avgRate.textContent)).toBe(baseline.metrics.avg_rate_mbps);
    expect(baseline.metrics.avg_rate_mbps).toBe(baselineAvg);
    expect(refs.revision.textContent).toBe("0");

    // the canvas was sized by the first render: one block per grid cell
    const grid = controller.gridInfo()!;
    expect(grid.rows).toBe(12);
    expect(grid.cols).toBe(12);
    expect(refs.canvas.width).toBeGreaterThan(0);

    // the server's palette matches the constants the legend is drawn from
    const mapRes = await fetch(`${svc.baseUrl}/sessions/${sessionId}/ratemap?layer=rate`);
    const mapPayload = (await mapRes.json()) as RateMapPayload;
    expect(mapPayload.bands.breakpoints).toEqual([...RATE_BANDS_MBPS]);
    expect(mapPayload.bands.colors).toEqual([...RATE_BAND_COLORS]);

    // arm placement mode and click the scripted uncovered-cluster cell
    refs.placeToggle.click();
    expect(controller.state.placementMode).toBe(true);
    Object.defineProperty(refs.canvas, "getBoundingClientRect", {
      value: () => ({
        left: 0,
        top: 0,
        x: 0,
        y: 0,
        width: refs.canvas.width,
        height: refs.canvas.height,
        right: refs.canvas.width,
        bottom: refs.canvas.height,
        toJSON: () => ({}),
      }),
    });
    const target = cellToPixel(grid, refs.canvas.width, refs.canvas.height, CLUSTER_CELL.row, CLUSTER_CELL.col);
    refs.canvas.dispatchEvent(
      new MouseEvent("click", { clientX: target.x, clientY: target.y, bubbles: true }),
    );
    await controller.idle();
    await waitFor(() => controller.session!.revision === 1, "revision 1");

    // the server accepted the placement where the click landed
    const after = await serverDetail(sessionId);
    expect(after.revision).toBe(1);
    const placed = after.sites.find((s) => s.id === "user-1");
    expect(placed).toBeDefined();
    expect(placed!.active).toBe(true);
    expect(placed!.tech).toBe("G4");

    // displayed avg rate equals the server metric and beats the baseline
    expect(Number(refs.avgRate.textContent)).toBe(after.metrics.avg_rate_mbps);
    expect(after.metrics.avg_rate_mbps).toBeGreaterThan(baselineAvg);
    expect(refs.revision.textContent).toBe("1");

    // history gained exactly the server's numbers, in revision order
    expect(controller.state.history).toEqual([
      { revision: 0, avgRateMbps: baselineAvg },
      { revision: 1, avgRateMbps: after.metrics.avg_rate_mbps },
    ]);
    expect(refs.historyList.children).toHaveLength(2);
    expect(refs.siteList.textContent).toContain("user-1");

    // compare panel: identical revisions -> zero average difference and a
    // zero per-cell delta
    refs.compareA.value = "1";
    refs.compareB.value = "1";
    refs.compareBtn.click();
    expect(refs.comparePanel.classList.contains("disabled")).toBe(false);
    expect(refs.compareDiff.textContent).toBe("0");
    const view = controller.lastCompare!;
    expect(view.avgDifference).toBe(0);
    expect([...view.deltaValues].every((v) => v === 0)).toBe(true);

    // and baseline vs current shows exactly the server-reported gain
    refs.compareA.value = "0";
    refs.compareB.value = "1";
    refs.compareBtn.click();
    const gain = controller.lastCompare!;
    expect(gain.avgDifference).toBeCloseTo(after.metrics.avg_rate_mbps - baselineAvg, 12);
    expect([...gain.deltaValues].some((v) => v > 0)).toBe(true);
  }, 120_000);

  it("keeps the displayed metric equal to the server's across a remove", async () => {
    const app = mountFreshApp();
    const { refs, controller } = app;
    refs.scenarioPath.value = path.join(REPO_ROOT, "scenarios", "mini");
    refs.openBtn.click();
    await waitFor(() => controller.session !== null, "session to open");
    await controller.idle();
    const sessionId = controller.session!.id;
    const before = await serverDetail(sessionId);

    await controller.placeSite(before.grid.bbox.lat_min + 0.001, before.grid.bbox.lon_min + 0.001);
    await waitFor(() => controller.session!.revision === 1, "revision 1");
    const placedId = controller.sites.find((s) => s.id.startsWith("user-"))!.id;

    await controller.removeSite(placedId);
    await waitFor(() => controller.session!.revision === 2, "revision 2");
    const after = await serverDetail(sessionId);
    expect(Number(refs.avgRate.textContent)).toBe(after.metrics.avg_rate_mbps);
    // removing the only added site restores the baseline figure
    expect(after.metrics.avg_rate_mbps).toBe(before.metrics.avg_rate_mbps);
  }, 120_000);
});
