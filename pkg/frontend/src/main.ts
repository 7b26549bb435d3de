/** DOM shell: builds the page, wires events to the controller, and blits
 * rasters. Numeric readouts print the server values verbatim (String(x)),
 * so what is displayed is exactly the metric the service reported.
 */

import { Client } from "./api.js";
import { Controller } from "./controller.js";
import type { CompareView, UiSink } from "./controller.js";
import { latLonToPixel } from "./heatmap.js";
import type { Legend, Raster } from "./heatmap.js";
import { LAYERS } from "./state.js";
import type { LayerName } from "./state.js";

export const CANVAS_SCALE = 6; // screen pixels per grid cell, as in the PNG export

export interface AppRefs {
  scenarioPath: HTMLInputElement;
  openBtn: HTMLButtonElement;
  sessionLabel: HTMLElement;
  layerBar: HTMLElement;
  canvas: HTMLCanvasElement;
  legend: HTMLElement;
  placeToggle: HTMLInputElement;
  revision: HTMLElement;
  avgRate: HTMLElement;
  avgRateSe: HTMLElement;
  share4: HTMLElement;
  meanPCov: HTMLElement;
  deltaLine: HTMLElement;
  siteList: HTMLElement;
  historyList: HTMLElement;
  compareA: HTMLSelectElement;
  compareB: HTMLSelectElement;
  compareBtn: HTMLButtonElement;
  compareDiff: HTMLElement;
  comparePanel: HTMLElement;
  compareCanvas: HTMLCanvasElement;
  planK: HTMLInputElement;
  planExhaustive: HTMLInputElement;
  planBtn: HTMLButtonElement;
  confirmBtn: HTMLButtonElement;
  planResult: HTMLElement;
  toast: HTMLElement;
  errorBanner: HTMLElement;
}

export interface App {
  controller: Controller;
  refs: AppRefs;
}

const PAGE = `
<header class="bar">
  <input id="scenario-path" size="40" placeholder="scenario bundle path on the server">
  <button id="open-btn">Open</button>
  <span id="session-label"></span>
</header>
<div id="error-banner" hidden></div>
<div class="columns">
  <div class="map-pane">
    <nav id="layer-bar"></nav>
    <canvas id="map" width="60" height="60"></canvas>
    <div id="legend"></div>
    <label class="bar"><input type="checkbox" id="place-toggle"> place turbine on click</label>
  </div>
  <aside>
    <section>
      <h2>Metrics</h2>
      <dl>
        <dt>revision</dt><dd id="revision">-</dd>
        <dt>avg rate</dt><dd><span id="avg-rate">-</span> Mbps</dd>
        <dt>avg rate SE</dt><dd><span id="avg-rate-se">-</span> Mbps</dd>
        <dt>share on 4G</dt><dd id="share4">-</dd>
        <dt>mean coverage</dt><dd id="mean-p-cov">-</dd>
      </dl>
      <p id="delta-line"></p>
    </section>
    <section>
      <h2>Plan</h2>
      <label>k <input id="plan-k" type="number" value="1" min="0" size="3"></label>
      <label><input id="plan-exhaustive" type="checkbox"> exhaustive</label>
      <button id="plan-btn">Run plan</button>
      <button id="confirm-btn">Confirm</button>
      <p id="plan-result"></p>
    </section>
    <section>
      <h2>Sites</h2>
      <ul id="site-list"></ul>
    </section>
    <section>
      <h2>History</h2>
      <ol id="history-list"></ol>
    </section>
    <section id="compare-panel">
      <h2>Compare</h2>
      <label>a <select id="compare-a"></select></label>
      <label>b <select id="compare-b"></select></label>
      <button id="compare-btn">Compare</button>
      <p>avg rate difference: <span id="compare-diff">-</span> Mbps</p>
      <canvas id="compare-canvas" width="60" height="60"></canvas>
    </section>
  </aside>
</div>
<div id="toast" hidden></div>
`;

function grab<T extends HTMLElement>(root: HTMLElement, id: string): T {
  const el = root.querySelector<T>(`#${id}`);
  if (el === null) throw new Error(`missing element #${id}`);
  return el;
}

/** Blit a raster onto a canvas, one cell -> CANVAS_SCALE^2 pixels, no
 * smoothing. Quietly skips drawing where no 2-D context exists (jsdom). */
function paintRaster(canvas: HTMLCanvasElement, raster: Raster): void {
  canvas.width = raster.width * CANVAS_SCALE;
  canvas.height = raster.height * CANVAS_SCALE;
  const ctx = canvas.getContext("2d");
  if (ctx === null) return;
  const cellsCanvas = canvas.ownerDocument.createElement("canvas");
  cellsCanvas.width = raster.width;
  cellsCanvas.height = raster.height;
  const cellsCtx = cellsCanvas.getContext("2d");
  if (cellsCtx === null) return;
  cellsCtx.putImageData(new ImageData(raster.pixels, raster.width, raster.height), 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(cellsCanvas, 0, 0, canvas.width, canvas.height);
}

export function mountApp(root: HTMLElement, client: Client): App {
  root.innerHTML = PAGE;
  const refs: AppRefs = {
    scenarioPath: grab(root, "scenario-path"),
    openBtn: grab(root, "open-btn"),
    sessionLabel: grab(root, "session-label"),
    layerBar: grab(root, "layer-bar"),
    canvas: grab(root, "map"),
    legend: grab(root, "legend"),
    placeToggle: grab(root, "place-toggle"),
    revision: grab(root, "revision"),
    avgRate: grab(root, "avg-rate"),
    avgRateSe: grab(root, "avg-rate-se"),
    share4: grab(root, "share4"),
    meanPCov: grab(root, "mean-p-cov"),
    deltaLine: grab(root, "delta-line"),
    siteList: grab(root, "site-list"),
    historyList: grab(root, "history-list"),
    compareA: grab(root, "compare-a"),
    compareB: grab(root, "compare-b"),
    compareBtn: grab(root, "compare-btn"),
    compareDiff: grab(root, "compare-diff"),
    comparePanel: grab(root, "compare-panel"),
    compareCanvas: grab(root, "compare-canvas"),
    planK: grab(root, "plan-k"),
    planExhaustive: grab(root, "plan-exhaustive"),
    planBtn: grab(root, "plan-btn"),
    confirmBtn: grab(root, "confirm-btn"),
    planResult: grab(root, "plan-result"),
    toast: grab(root, "toast"),
    errorBanner: grab(root, "error-banner"),
  };

  let toastTimer: ReturnType<typeof setTimeout> | null = null;
  let lastRaster: Raster | null = null;

  const sink: UiSink = {
    modelChanged(): void {
      renderModel();
    },
    renderRaster(raster: Raster, legend: Legend): void {
      lastRaster = raster;
      paintRaster(refs.canvas, raster);
      drawMarkers();
      refs.legend.innerHTML = "";
      const title = refs.legend.ownerDocument.createElement("strong");
      title.textContent = legend.title;
      refs.legend.appendChild(title);
      for (const entry of legend.entries) {
        const item = refs.legend.ownerDocument.createElement("span");
        item.className = "legend-entry";
        const swatch = refs.legend.ownerDocument.createElement("i");
        swatch.style.background = entry.color;
        item.appendChild(swatch);
        item.appendChild(refs.legend.ownerDocument.createTextNode(` ${entry.label}`));
        refs.legend.appendChild(item);
      }
    },
    renderCompare(view: CompareView | null): void {
      if (view === null) {
        refs.comparePanel.classList.add("disabled");
        refs.compareDiff.textContent = "-";
        return;
      }
      refs.comparePanel.classList.remove("disabled");
      refs.compareDiff.textContent = String(view.avgDifference);
      paintRaster(refs.compareCanvas, view.raster);
    },
    toast(message: string): void {
      refs.toast.textContent = message;
      refs.toast.hidden = false;
      if (toastTimer !== null) clearTimeout(toastTimer);
      toastTimer = setTimeout(() => {
        refs.toast.hidden = true;
      }, 4000);
    },
    errorBanner(message: string): void {
      refs.errorBanner.textContent = message;
      refs.errorBanner.hidden = false;
    },
    cursorWarning(): void {
      refs.canvas.classList.add("outside");
      sink.toast("outside the mapped area");
    },
  };

  const controller = new Controller(client, sink);

  function drawMarkers(): void {
    const ctx = refs.canvas.getContext("2d");
    const grid = controller.gridInfo();
    if (ctx === null || grid === null || lastRaster === null) return;
    const w = refs.canvas.width;
    const h = refs.canvas.height;
    for (const site of controller.sites) {
      const p = latLonToPixel(grid, w, h, site.lat, site.lon);
      if (p === null) continue;
      ctx.beginPath();
      ctx.arc(p.x, p.y, CANVAS_SCALE * 0.6, 0, 2 * Math.PI);
      ctx.fillStyle = site.active ? "#d62728" : "#888888";
      ctx.fill();
      ctx.strokeStyle = "#ffffff";
      ctx.stroke();
    }
    const prov = controller.provisionalMarker;
    if (prov !== null) {
      const p = latLonToPixel(grid, w, h, prov.lat, prov.lon);
      if (p !== null) {
        ctx.beginPath();
        ctx.arc(p.x, p.y, CANVAS_SCALE * 0.75, 0, 2 * Math.PI);
        ctx.strokeStyle = "#1f77b4";
        ctx.stroke();
      }
    }
  }

  function renderModel(): void {
    const doc = root.ownerDocument;
    const session = controller.session;
    refs.sessionLabel.textContent = session === null ? "" : `session ${session.id}`;
    refs.revision.textContent = session === null ? "-" : String(session.revision);
    refs.avgRate.textContent = session === null ? "-" : String(session.metrics.avg_rate_mbps);
    refs.avgRateSe.textContent = session === null ? "-" : String(session.metrics.avg_rate_se_mbps);
    refs.share4.textContent = session === null ? "-" : String(session.metrics.share4);
    refs.meanPCov.textContent = session === null ? "-" : String(session.metrics.mean_p_cov);
    const delta = controller.lastDelta;
    refs.deltaLine.textContent =
      delta === null
        ? ""
        : `last edit: avg ${String(delta.avg_rate_change_mbps)} Mbps, ` +
          `max gain ${String(delta.max_gain_mbps)}, max loss ${String(delta.max_loss_mbps)}, ` +
          `degraded ${String(delta.frac_degraded)}`;

    refs.siteList.innerHTML = "";
    for (const site of controller.sites) {
      const li = doc.createElement("li");
      li.dataset.siteId = site.id;
      const text = doc.createElement("span");
      text.textContent = `${site.id} [${site.structure}/${site.tech}] ${site.active ? "on air" : "idle"}`;
      li.appendChild(text);
      if (site.structure === "WT" && site.tech === "NONE") {
        const btn = doc.createElement("button");
        btn.textContent = "equip";
        btn.addEventListener("click", () => void controller.equipSite(site.id));
        li.appendChild(btn);
      }
      const rm = doc.createElement("button");
      rm.textContent = "remove";
      rm.addEventListener("click", () => void controller.removeSite(site.id));
      li.appendChild(rm);
      refs.siteList.appendChild(li);
    }
    if (controller.provisionalMarker !== null) {
      const li = doc.createElement("li");
      li.className = "provisional";
      li.textContent = "(placing...)";
      refs.siteList.appendChild(li);
    }

    refs.historyList.innerHTML = "";
    for (const entry of controller.state.history) {
      const li = doc.createElement("li");
      li.textContent = `rev ${entry.revision}: ${String(entry.avgRateMbps)} Mbps`;
      refs.historyList.appendChild(li);
    }

    const revisions = [...controller.snapshots.keys()].sort((x, y) => x - y);
    for (const select of [refs.compareA, refs.compareB]) {
      const keep = select.value;
      select.innerHTML = "";
      for (const rev of revisions) {
        const opt = doc.createElement("option");
        opt.value = String(rev);
        opt.textContent = `rev ${rev}`;
        select.appendChild(opt);
      }
      if (revisions.some((r) => String(r) === keep)) select.value = keep;
    }

    const plan = controller.lastPlan;
    refs.planResult.textContent =
      plan === null
        ? ""
        : `plan (${plan.method}): [${plan.selected.join(", ")}] -> ${String(plan.metric_after)} Mbps ` +
          `(from ${String(plan.metric_before)})`;

    for (const btn of Array.from(refs.layerBar.querySelectorAll("button"))) {
      btn.classList.toggle("active", btn.dataset.layer === controller.state.activeLayer);
    }
    drawMarkers();
  }

  for (const layer of LAYERS) {
    const btn = root.ownerDocument.createElement("button");
    btn.dataset.layer = layer;
    btn.textContent = layer;
    btn.addEventListener("click", () => void controller.setLayer(layer));
    refs.layerBar.appendChild(btn);
  }

  refs.openBtn.addEventListener("click", () => {
    void controller.openByPath(refs.scenarioPath.value).catch((e) => sink.toast(`open failed: ${String(e)}`));
  });

  refs.placeToggle.addEventListener("change", () => {
    controller.state.placementMode = refs.placeToggle.checked;
    refs.canvas.classList.toggle("placing", refs.placeToggle.checked);
  });

  refs.canvas.addEventListener("click", (e: MouseEvent) => {
    refs.canvas.classList.remove("outside");
    const rect = refs.canvas.getBoundingClientRect();
    const sx = rect.width > 0 ? refs.canvas.width / rect.width : 1;
    const sy = rect.height > 0 ? refs.canvas.height / rect.height : 1;
    const x = (e.clientX - rect.left) * sx;
    const y = (e.clientY - rect.top) * sy;
    controller.clickAt(x, y, refs.canvas.width, refs.canvas.height);
  });

  refs.planBtn.addEventListener("click", () => {
    void controller.runPlan(Number(refs.planK.value), refs.planExhaustive.checked);
  });
  refs.confirmBtn.addEventListener("click", () => {
    void controller.confirmPlan();
  });

  refs.compareBtn.addEventListener("click", () => {
    controller.compare(Number(refs.compareA.value), Number(refs.compareB.value));
  });

  return { controller, refs };
}

// boot only inside a page that declares the app root
const bootRoot = typeof document !== "undefined" ? document.getElementById("planner-app") : null;
if (bootRoot !== null) {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("api") ?? window.location.origin;
  mountApp(bootRoot, new Client(base));
}
