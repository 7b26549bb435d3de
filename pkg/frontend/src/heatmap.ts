/** Pure raster building and canvas geometry.
 *
 * Everything here is data-in/data-out so it can be tested without a 2-D
 * canvas implementation; the DOM layer only blits the returned pixels.
 */

import { bandIndex, hexToRgb, legendLabels } from "./colors.js";
import type { BandScale, GridInfo } from "./types.js";

/** The slice of a rate-map payload the rasterizer needs. */
export interface RasterInput {
  rows: number;
  cols: number;
  values: ArrayLike<number>;
  bands: BandScale;
}

/** RGBA pixel buffer, one pixel per grid cell, row 0 = top scanline. */
export interface Raster {
  width: number;
  height: number;
  pixels: Uint8ClampedArray<ArrayBuffer>;
}

/** Paint one pixel per cell. Grid row 0 is the southern edge, so the image
 * is flipped vertically (north at the top), matching the PNG export. */
export function buildRaster(p: RasterInput): Raster {
  const { rows, cols } = p;
  const palette = p.bands.colors.map(hexToRgb);
  const pixels = new Uint8ClampedArray(rows * cols * 4);
  for (let imgRow = 0; imgRow < rows; imgRow++) {
    const gridRow = rows - 1 - imgRow;
    for (let col = 0; col < cols; col++) {
      const value = p.values[gridRow * cols + col];
      const [r, g, b] = palette[bandIndex(value, p.bands.breakpoints)];
      const o = (imgRow * cols + col) * 4;
      pixels[o] = r;
      pixels[o + 1] = g;
      pixels[o + 2] = b;
      pixels[o + 3] = 255;
    }
  }
  return { width: cols, height: rows, pixels };
}

export interface LegendEntry {
  color: string;
  label: string;
}

export interface Legend {
  title: string;
  entries: LegendEntry[];
}

const LAYER_UNITS: Record<string, string> = {
  rate: "Mbps",
  delta_vs_baseline: "Mbps",
  p_cov: "",
  share4: "",
};

export function buildLegend(layer: string, bands: BandScale): Legend {
  const unit = LAYER_UNITS[layer] ?? "";
  const labels = legendLabels(bands.breakpoints, unit);
  return {
    title: layer,
    entries: bands.colors.map((color, i) => ({ color, label: labels[i] })),
  };
}

export interface Cell {
  row: number;
  col: number;
}

/** Canvas pixel -> grid cell, or null outside the canvas. Cells tile the
 * canvas uniformly; pixel row 0 (top) is the northernmost grid row. */
export function pixelToCell(grid: GridInfo, canvasW: number, canvasH: number, x: number, y: number): Cell | null {
  if (x < 0 || y < 0 || x >= canvasW || y >= canvasH) return null;
  const col = Math.floor((x / canvasW) * grid.cols);
  const imgRow = Math.floor((y / canvasH) * grid.rows);
  return { row: grid.rows - 1 - imgRow, col };
}

/** Canvas pixel of a grid cell's center. */
export function cellToPixel(grid: GridInfo, canvasW: number, canvasH: number, row: number, col: number): { x: number; y: number } {
  const imgRow = grid.rows - 1 - row;
  return {
    x: ((col + 0.5) / grid.cols) * canvasW,
    y: ((imgRow + 0.5) / grid.rows) * canvasH,
  };
}

/** Canvas pixel -> lat/lon, linear in the session's bounding box.
 *
 * The grid may overhang the box by less than one cell when the box span is
 * not an exact multiple of the cell size; the bundled scenarios are snapped
 * to exact multiples, and the server echoes the position it actually used,
 * so the sub-cell approximation never accumulates.
 */
export function pixelToLatLon(grid: GridInfo, canvasW: number, canvasH: number, x: number, y: number): { lat: number; lon: number } | null {
  if (x < 0 || y < 0 || x >= canvasW || y >= canvasH) return null;
  const b = grid.bbox;
  return {
    lat: b.lat_max - (y / canvasH) * (b.lat_max - b.lat_min),
    lon: b.lon_min + (x / canvasW) * (b.lon_max - b.lon_min),
  };
}

/** Inverse of pixelToLatLon; null outside the bounding box. */
export function latLonToPixel(grid: GridInfo, canvasW: number, canvasH: number, lat: number, lon: number): { x: number; y: number } | null {
  const b = grid.bbox;
  if (lat < b.lat_min || lat > b.lat_max || lon < b.lon_min || lon > b.lon_max) return null;
  return {
    x: ((lon - b.lon_min) / (b.lon_max - b.lon_min)) * canvasW,
    y: ((b.lat_max - lat) / (b.lat_max - b.lat_min)) * canvasH,
  };
}
