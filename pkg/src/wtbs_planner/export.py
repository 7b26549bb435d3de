"""Rate-map exports: CSV tables, PNG heatmaps, and metric summaries.

The PNG palette is fixed and documented so that downstream tooling (and
golden-file tests) can rely on exact bytes: rate maps use six bands with
breakpoints at 1/2/3/4/5 Mbps; delta maps use a seven-band diverging ramp.
"""

from __future__ import annotations

import io
import json

import numpy as np
from PIL import Image

from .netsim import MapDelta, RateMap, metric_standard_error, population_weighted_average

# rate heatmap: band k covers [bands[k-1], bands[k]) Mbps, the last band is
# open-ended (>= 5 Mbps)
RATE_BANDS_MBPS: tuple[float, ...] = (1.0, 2.0, 3.0, 4.0, 5.0)
RATE_BAND_COLORS: tuple[str, ...] = (
    "#440154",  # < 1 Mbps
    "#414487",  # 1-2
    "#2a788e",  # 2-3
    "#22a884",  # 3-4
    "#7ad151",  # 4-5
    "#fde725",  # >= 5
)

# delta heatmap: diverging, near-zero band is neutral
DELTA_BANDS_MBPS: tuple[float, ...] = (-2.0, -0.5, -0.05, 0.05, 0.5, 2.0)
DELTA_BAND_COLORS: tuple[str, ...] = (
    "#2166ac",  # <= -2 Mbps
    "#67a9cf",  # -2 .. -0.5
    "#d1e5f0",  # -0.5 .. -0.05
    "#f7f7f7",  # -0.05 .. 0.05 (unchanged)
    "#fddbc7",  # 0.05 .. 0.5
    "#ef8a62",  # 0.5 .. 2
    "#b2182b",  # >= 2 Mbps
)

# fraction layers (p_cov, share4) reuse the rate colors over [0, 1]
FRACTION_BANDS: tuple[float, ...] = (0.2, 0.4, 0.6, 0.8, 0.95)


def hex_to_rgb(color: str) -> tuple[int, int, int]:
    c = color.lstrip("#")
    return int(c[0:2], 16), int(c[2:4], 16), int(c[4:6], 16)


def band_index(values: np.ndarray, bands: tuple[float, ...]) -> np.ndarray:
    """Index of the palette band each value falls in."""
    return np.searchsorted(np.asarray(bands), np.asarray(values), side="right")


def ratemap_csv(rate_map: RateMap) -> str:
    """CSV export, one line per grid cell (row-major, row 0 south)."""
    lines = ["row,col,lat,lon,p_cov,rate_mbps,share4"]
    rows, cols = rate_map.shape
    for r in range(rows):
        for c in range(cols):
            p = rate_map.aoi.cell_center(r, c)
            lines.append(
                f"{r},{c},{p.lat!r},{p.lon!r},"
                f"{float(rate_map.p_cov[r, c])!r},"
                f"{float(rate_map.rate_mbps[r, c])!r},"
                f"{float(rate_map.share4[r, c])!r}"
            )
    return "\n".join(lines) + "\n"


def _paint(values: np.ndarray, bands: tuple[float, ...], colors: tuple[str, ...], scale: int) -> Image.Image:
    idx = band_index(values, bands)
    palette = np.array([hex_to_rgb(c) for c in colors], dtype=np.uint8)
    rgb = palette[idx]
    # row 0 is the southern edge; image origin is top-left, so flip
    rgb = rgb[::-1, :, :]
    img = Image.fromarray(rgb, mode="RGB")
    if scale > 1:
        img = img.resize((values.shape[1] * scale, values.shape[0] * scale), Image.NEAREST)
    return img


def ratemap_png(rate_map: RateMap, scale: int = 6) -> bytes:
    return _png_bytes(_paint(rate_map.rate_mbps, RATE_BANDS_MBPS, RATE_BAND_COLORS, scale))


def fraction_png(values: np.ndarray, scale: int = 6) -> bytes:
    return _png_bytes(_paint(values, FRACTION_BANDS, RATE_BAND_COLORS, scale))


def delta_png(delta: MapDelta | np.ndarray, scale: int = 6) -> bytes:
    values = delta.delta_mbps if isinstance(delta, MapDelta) else delta
    return _png_bytes(_paint(values, DELTA_BANDS_MBPS, DELTA_BAND_COLORS, scale))


def _png_bytes(img: Image.Image) -> bytes:
    buf = io.BytesIO()
    # fixed encoder settings keep output byte-stable across runs
    img.save(buf, format="PNG", optimize=False, compress_level=6)
    return buf.getvalue()


def metrics_dict(rate_map: RateMap, pop) -> dict:
    """Summary metrics for a simulated map (population-weighted)."""
    weights = pop.population
    total = float(weights.sum())
    # an all-outside or empty population file is legal; report zeros rather
    # than failing the export
    if total > 0:
        avg = population_weighted_average(rate_map, pop)
        se = metric_standard_error(rate_map, pop)
        share4 = float((weights * rate_map.share4).sum() / total)
    else:
        avg = se = share4 = 0.0
    return {
        "avg_rate_mbps": avg,
        "avg_rate_se_mbps": se,
        "share4": share4,
        "share3": 1.0 - share4,
        "mean_p_cov": float(rate_map.p_cov.mean()),
        "total_population": total,
        "n_cells": int(rate_map.p_cov.size),
        "n_range_clamped": rate_map.n_range_clamped,
        "scenario_fingerprint": rate_map.scenario_fingerprint,
    }


def metrics_json(rate_map: RateMap, pop) -> str:
    return json.dumps(metrics_dict(rate_map, pop), indent=2, sort_keys=True) + "\n"
