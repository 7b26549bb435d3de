/** Shared palette constants.
 *
 * These are hand-mirrored from the server's PNG export so that the browser
 * heat map and the CLI artifacts stay visually comparable; the integration
 * test cross-checks them against the live service payload.
 */

export const RATE_BANDS_MBPS: readonly number[] = [1.0, 2.0, 3.0, 4.0, 5.0];
export const RATE_BAND_COLORS: readonly string[] = [
  "#440154", // < 1 Mbps
  "#414487", // 1-2
  "#2a788e", // 2-3
  "#22a884", // 3-4
  "#7ad151", // 4-5
  "#fde725", // >= 5
];

export const DELTA_BANDS_MBPS: readonly number[] = [-2.0, -0.5, -0.05, 0.05, 0.5, 2.0];
export const DELTA_BAND_COLORS: readonly string[] = [
  "#2166ac", // <= -2 Mbps
  "#67a9cf", // -2 .. -0.5
  "#d1e5f0", // -0.5 .. -0.05
  "#f7f7f7", // -0.05 .. 0.05 (unchanged)
  "#fddbc7", // 0.05 .. 0.5
  "#ef8a62", // 0.5 .. 2
  "#b2182b", // >= 2 Mbps
];

export const FRACTION_BANDS: readonly number[] = [0.2, 0.4, 0.6, 0.8, 0.95];

/** Palette band for a value: the number of breakpoints at or below it.
 *
 * Band k covers [breakpoints[k-1], breakpoints[k]); a value equal to a
 * breakpoint lands in the band above it, matching the server's banding.
 */
export function bandIndex(value: number, breakpoints: readonly number[]): number {
  let i = 0;
  while (i < breakpoints.length && value >= breakpoints[i]) i++;
  return i;
}

export function hexToRgb(color: string): [number, number, number] {
  const c = color.startsWith("#") ? color.slice(1) : color;
  if (c.length !== 6) throw new RangeError(`not a #rrggbb color: ${color}`);
  const n = parseInt(c, 16);
  if (Number.isNaN(n)) throw new RangeError(`not a #rrggbb color: ${color}`);
  return [(n >> 16) & 0xff, (n >> 8) & 0xff, n & 0xff];
}

/** One label per band: "< a", "a - b", ..., ">= z", with an optional unit. */
export function legendLabels(breakpoints: readonly number[], unit: string): string[] {
  const suffix = unit === "" ? "" : ` ${unit}`;
  const labels: string[] = [`< ${breakpoints[0]}${suffix}`];
  for (let i = 1; i < breakpoints.length; i++) {
    labels.push(`${breakpoints[i - 1]} - ${breakpoints[i]}${suffix}`);
  }
  labels.push(`>= ${breakpoints[breakpoints.length - 1]}${suffix}`);
  return labels;
}
