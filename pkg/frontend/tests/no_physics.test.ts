import { readFileSync, readdirSync } from "node:fs";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

const SRC = path.resolve(path.dirname(fileURLToPath(import.meta.url)), "..", "src");

/** The client must show server numbers, never recompute them: no power laws,
 * exponentials, logarithms, or trigonometry anywhere in the shipped sources.
 * (Math.floor/round/abs and plain arithmetic for layout are fine.) */
const BANNED = [
  // exponentiation operator between operands (doc-comment stars don't count)
  /[\w)\]]\s*\*\*\s*[-\w.(]/,
  /Math\.(pow|exp|expm1|log|log2|log10|log1p|sqrt|cbrt|hypot|atan2?|asin|acos|sinh?|cosh?|tanh?)\b/,
  /\b(sinr|snr|nakagami|rayleigh|fading|pathloss|path_loss|dbm?_to|to_db)\b/i,
];

describe("no client-side physics", () => {
  const files = readdirSync(SRC).filter((f) => f.endsWith(".ts"));

  it("scans a non-empty source tree", () => {
    expect(files.length).toBeGreaterThanOrEqual(6);
  });

  for (const file of readdirSync(SRC).filter((f) => f.endsWith(".ts"))) {
    it(`${file} contains no rate or radio math`, () => {
      const text = readFileSync(path.join(SRC, file), "utf8");
      for (const pattern of BANNED) {
        const match = text.match(pattern);
        expect(match, `${file} matched ${pattern}: ${match?.[0]}`).toBeNull();
      }
    });
  }
});
