"""Regenerate the bundled scenarios under scenarios/.

Fully deterministic; population rasters are sums of Gaussian blobs sampled
at the exact cell-center lattice of each area.  Run from the repo root:

    python3 tools/make_bundles.py
"""

from __future__ import annotations

import math
from pathlib import Path

from wtbs_planner.geodata import M_PER_DEG_LAT, AreaOfInterest, GeoPoint

ROOT = Path(__file__).resolve().parent.parent / "scenarios"


def make_aoi(lat_min: float, lon_min: float, rows: int, cols: int, cell_m: float) -> AreaOfInterest:
    m_per_deg_lon = M_PER_DEG_LAT * math.cos(math.radians(lat_min))
    lat_max = lat_min + rows * cell_m / M_PER_DEG_LAT
    lon_max = lon_min + cols * cell_m / m_per_deg_lon
    return AreaOfInterest(
        min_point=GeoPoint(lat_min, lon_min),
        max_point=GeoPoint(lat_max, lon_max),
        cell_size_m=cell_m,
    )


def km_to_point(aoi: AreaOfInterest, x_km: float, y_km: float) -> GeoPoint:
    return aoi.frame.unproject(x_km * 1000.0, y_km * 1000.0)


def population_csv(aoi: AreaOfInterest, blobs: list[tuple[float, float, float, float]]) -> str:
    """blobs: (x_km, y_km, sigma_km, peak density). Cells below 0.5 are omitted."""
    rows, cols = aoi.shape
    lines = ["lat,lon,density"]
    cs_km = aoi.cell_size_m / 1000.0
    for r in range(rows):
        y = (r + 0.5) * cs_km
        for c in range(cols):
            x = (c + 0.5) * cs_km
            d = 0.0
            for bx, by, sigma, peak in blobs:
                q = ((x - bx) ** 2 + (y - by) ** 2) / (2.0 * sigma * sigma)
                if q < 12.0:
                    d += peak * math.exp(-q)
            if d >= 0.5:
                p = aoi.cell_center(r, c)
                lines.append(f"{p.lat:.7f},{p.lon:.7f},{d:.3f}")
    return "\n".join(lines) + "\n"


def sites_csv(aoi: AreaOfInterest, rows: list[tuple]) -> str:
    """rows: (id, x_km, y_km, structure, tech, height, power, farm)."""
    lines = ["id,lat,lon,structure,tech,height_m,power_w,farm_id"]
    for sid, x, y, structure, tech, height, power, farm in rows:
        p = km_to_point(aoi, x, y)
        h = "" if height is None else f"{height}"
        w = "" if power is None else f"{power}"
        lines.append(f"{sid},{p.lat:.7f},{p.lon:.7f},{structure},{tech},{h},{w},{farm}")
    return "\n".join(lines) + "\n"


def cfg_text(aoi: AreaOfInterest, preset: str, sim: dict) -> str:
    sim_lines = "\n".join(f"{k} = {v}" for k, v in sim.items())
    return f"""[area]
lat_min = {aoi.min_point.lat!r}
lon_min = {aoi.min_point.lon!r}
lat_max = {aoi.max_point.lat!r}
lon_max = {aoi.max_point.lon!r}
cell_size_m = {aoi.cell_size_m!r}

[environment]
preset = {preset}

[simulation]
{sim_lines}
"""


def write(name: str, files: dict[str, str]) -> None:
    d = ROOT / name
    d.mkdir(parents=True, exist_ok=True)
    for fname, text in files.items():
        (d / fname).write_text(text)
    print(f"wrote {name}: {', '.join(files)}")


def synthetic_france() -> None:
    # 18 x 18 km rural area: three 3G towers in the west/south, a dense
    # settlement cluster in the north-east with existing turbines nearby,
    # plus three possible new turbine positions
    aoi = make_aoi(48.30, -3.40, 100, 100, 180.0)
    sites = [
        ("ct-1", 4.5, 9.0, "CT", "G3", 30, 10, ""),
        ("ct-2", 9.0, 4.5, "CT", "G3", 30, 10, ""),
        ("ct-3", 3.5, 14.5, "CT", "G3", 30, 10, ""),
        ("wt-a1", 15.0, 15.0, "WT", "NONE", 100, 11, "farm-a"),
        ("wt-a2", 15.8, 14.6, "WT", "NONE", 120, 11, "farm-a"),
        ("wt-b1", 10.5, 13.0, "WT", "NONE", 100, 11, "farm-b"),
        ("wt-c1", 2.0, 2.0, "WT", "NONE", 100, 11, "farm-c"),
    ]
    candidates = [
        ("cand-1", 15.0, 4.0, "WT", "NONE", 100, 11, "farm-d"),
        ("cand-2", 4.0, 15.5, "WT", "NONE", 100, 11, "farm-e"),
        ("cand-3", 9.0, 9.5, "WT", "NONE", 100, 11, "farm-f"),
    ]
    blobs = [
        (15.3, 15.3, 1.0, 300.0),  # north-east cluster, main target
        (15.0, 4.0, 0.9, 120.0),  # south-east cluster
        (4.0, 15.5, 0.9, 120.0),  # north-west cluster
        (4.5, 9.0, 1.2, 60.0),  # towns around the towers
        (9.0, 4.5, 1.2, 60.0),
        (3.5, 14.5, 1.2, 60.0),
    ]
    write(
        "synthetic-france",
        {
            "scenario.cfg": cfg_text(
                aoi, "rural", {"bias": 29.0, "iterations": 10000, "seed": 424242}
            ),
            "sites.csv": sites_csv(aoi, sites),
            "candidates.csv": sites_csv(aoi, candidates),
            "population.csv": population_csv(aoi, blobs),
        },
    )


def bias_flip() -> None:
    # one strong 3G tower west, one weak-carrier 4G turbine east, people in
    # between: raising the 4G bias flips associations cell by cell
    aoi = make_aoi(47.00, -2.00, 30, 30, 200.0)
    sites = [
        ("ct-1", 1.2, 3.0, "CT", "G3", 30, 10, ""),
        ("wt-1", 4.2, 3.0, "WT", "G4", 100, 11, "farm-x"),
    ]
    blobs = [(3.4, 3.0, 0.7, 200.0)]
    write(
        "bias-flip",
        {
            "scenario.cfg": cfg_text(aoi, "rural", {"bias": 1.0, "iterations": 10000, "seed": 7}),
            "sites.csv": sites_csv(aoi, sites),
            "population.csv": population_csv(aoi, blobs),
        },
    )


def planner_oracle() -> None:
    # five isolated population clusters, one unequipped turbine at each,
    # cluster sizes strictly ordered so the best k-subset is unambiguous
    aoi = make_aoi(46.00, 1.00, 40, 40, 200.0)
    sites = [
        ("ct-1", 0.5, 0.5, "CT", "G3", 30, 10, ""),
        ("cand-a", 1.6, 6.4, "WT", "NONE", 100, 11, "farm-pa"),
        ("cand-b", 6.4, 6.4, "WT", "NONE", 100, 11, "farm-pb"),
        ("cand-c", 6.4, 1.6, "WT", "NONE", 100, 11, "farm-pc"),
        ("cand-d", 4.0, 4.0, "WT", "NONE", 100, 11, "farm-pd"),
        ("cand-e", 1.6, 3.2, "WT", "NONE", 100, 11, "farm-pe"),
    ]
    blobs = [
        (1.6, 6.4, 0.45, 260.0),
        (6.4, 6.4, 0.45, 180.0),
        (6.4, 1.6, 0.45, 120.0),
        (4.0, 4.0, 0.45, 80.0),
        (1.6, 3.2, 0.45, 50.0),
        (0.5, 0.5, 0.45, 40.0),
    ]
    write(
        "planner-oracle",
        {
            "scenario.cfg": cfg_text(aoi, "rural", {"bias": 29.0, "iterations": 10000, "seed": 99}),
            "sites.csv": sites_csv(aoi, sites),
            "population.csv": population_csv(aoi, blobs),
        },
    )


def mini() -> None:
    # small fast bundle for interactive tests: a village near the tower, a
    # turbine by the north-east hamlet, and an uncovered cluster south-east
    aoi = make_aoi(50.00, 8.00, 12, 12, 250.0)
    sites = [
        ("ct-1", 0.6, 0.6, "CT", "G3", 30, 10, ""),
        ("wt-1", 2.2, 2.2, "WT", "NONE", None, None, "farm-m"),  # blank -> defaults
    ]
    blobs = [
        (0.6, 0.6, 0.4, 80.0),
        (2.25, 2.25, 0.35, 150.0),
        (2.5, 0.65, 0.3, 120.0),  # no site nearby; UI click target
    ]
    write(
        "mini",
        {
            "scenario.cfg": cfg_text(aoi, "rural", {"bias": 29.0, "iterations": 1500, "seed": 11}),
            "sites.csv": sites_csv(aoi, sites),
            "population.csv": population_csv(aoi, blobs),
        },
    )


if __name__ == "__main__":
    synthetic_france()
    bias_flip()
    planner_oracle()
    mini()
