import { describe, expect, it } from "vitest";

import { DELTA_BANDS_MBPS, DELTA_BAND_COLORS, RATE_BANDS_MBPS, RATE_BAND_COLORS, hexToRgb } from "../src/colors.js";
import {
  buildLegend,
  buildRaster,
  cellToPixel,
  latLonToPixel,
  pixelToCell,
  pixelToLatLon,
} from "../src/heatmap.js";
import type { GridInfo } from "../src/types.js";

const GRID: GridInfo = {
  rows: 3,
  cols: 4,
  cell_size_m: 250,
  bbox: { lat_min: 50.0, lon_min: 8.0, lat_max: 50.006738, lon_max: 8.013976 },
};

function pixelAt(r: { pixels: Uint8ClampedArray; width: number }, imgRow: number, col: number): [number, number, number, number] {
  const o = (imgRow * r.width + col) * 4;
  return [r.pixels[o], r.pixels[o + 1], r.pixels[o + 2], r.pixels[o + 3]];
}

describe("buildRaster", () => {
  it("paints an all-zero delta layer in the uniform neutral color", () => {
    const raster = buildRaster({
      rows: 3,
      cols: 4,
      values: new Array(12).fill(0),
      bands: { breakpoints: [...DELTA_BANDS_MBPS], colors: [...DELTA_BAND_COLORS] },
    });
    const [nr, ng, nb] = hexToRgb("#f7f7f7");
    for (let i = 0; i < 12; i++) {
      const o = i * 4;
      expect([raster.pixels[o], raster.pixels[o + 1], raster.pixels[o + 2]]).toEqual([nr, ng, nb]);
      expect(raster.pixels[o + 3]).toBe(255);
    }
  });

  it("places a single hot cell at the right image position", () => {
    // grid row 0 is the southern edge, so it must land on the bottom scanline
    const values = new Array(12).fill(0);
    values[0 * 4 + 2] = 10; // grid (row 0, col 2)
    const raster = buildRaster({
      rows: 3,
      cols: 4,
      values,
      bands: { breakpoints: [...RATE_BANDS_MBPS], colors: [...RATE_BAND_COLORS] },
    });
    const hot = hexToRgb("#fde725");
    const cold = hexToRgb("#440154");
    for (let imgRow = 0; imgRow < 3; imgRow++) {
      for (let col = 0; col < 4; col++) {
        const [r, g, b] = pixelAt(raster, imgRow, col);
        if (imgRow === 2 && col === 2) expect([r, g, b]).toEqual(hot);
        else expect([r, g, b]).toEqual(cold);
      }
    }
  });

  it("sizes the raster one pixel per cell", () => {
    const raster = buildRaster({
      rows: 3,
      cols: 4,
      values: new Array(12).fill(0),
      bands: { breakpoints: [...RATE_BANDS_MBPS], colors: [...RATE_BAND_COLORS] },
    });
    expect(raster.width).toBe(4);
    expect(raster.height).toBe(3);
    expect(raster.pixels.length).toBe(3 * 4 * 4);
  });
});

describe("buildLegend", () => {
  it("uses Mbps for rate and delta layers", () => {
    const legend = buildLegend("rate", { breakpoints: [...RATE_BANDS_MBPS], colors: [...RATE_BAND_COLORS] });
    expect(legend.title).toBe("rate");
    expect(legend.entries).toHaveLength(6);
    expect(legend.entries[0]).toEqual({ color: "#440154", label: "< 1 Mbps" });
    const delta = buildLegend("delta_vs_baseline", {
      breakpoints: [...DELTA_BANDS_MBPS],
      colors: [...DELTA_BAND_COLORS],
    });
    expect(delta.entries[6].label).toBe(">= 2 Mbps");
  });

  it("drops the unit for fraction layers", () => {
    const legend = buildLegend("p_cov", { breakpoints: [0.5], colors: ["#000000", "#ffffff"] });
    expect(legend.entries[0].label).toBe("< 0.5");
  });
});

describe("canvas geometry", () => {
  const W = 4 * 6;
  const H = 3 * 6;

  it("maps pixels to cells with north at the top", () => {
    // top-left pixel block is the north-west cell: last grid row, col 0
    expect(pixelToCell(GRID, W, H, 0, 0)).toEqual({ row: 2, col: 0 });
    expect(pixelToCell(GRID, W, H, W - 1, H - 1)).toEqual({ row: 0, col: 3 });
  });

  it("returns null outside the canvas", () => {
    expect(pixelToCell(GRID, W, H, -1, 5)).toBeNull();
    expect(pixelToCell(GRID, W, H, W, 5)).toBeNull();
    expect(pixelToCell(GRID, W, H, 5, H)).toBeNull();
    expect(pixelToLatLon(GRID, W, H, 5, -1)).toBeNull();
  });

  it("round-trips cell centers", () => {
    for (const [row, col] of [
      [0, 0],
      [2, 3],
      [1, 2],
    ] as const) {
      const p = cellToPixel(GRID, W, H, row, col);
      expect(pixelToCell(GRID, W, H, p.x, p.y)).toEqual({ row, col });
    }
  });

  it("maps the top edge to lat_max and the left edge to lon_min", () => {
    const nw = pixelToLatLon(GRID, W, H, 0, 0);
    expect(nw).not.toBeNull();
    expect(nw!.lat).toBeCloseTo(GRID.bbox.lat_max, 9);
    expect(nw!.lon).toBeCloseTo(GRID.bbox.lon_min, 9);
  });

  it("round-trips lat/lon through pixels", () => {
    const lat = 50.003;
    const lon = 8.007;
    const p = latLonToPixel(GRID, W, H, lat, lon);
    expect(p).not.toBeNull();
    const back = pixelToLatLon(GRID, W, H, p!.x, p!.y);
    expect(back!.lat).toBeCloseTo(lat, 9);
    expect(back!.lon).toBeCloseTo(lon, 9);
  });

  it("rejects positions outside the bounding box", () => {
    expect(latLonToPixel(GRID, W, H, 49.9, 8.007)).toBeNull();
    expect(latLonToPixel(GRID, W, H, 50.003, 8.5)).toBeNull();
  });
});
