"""Geographic inputs: sites, population rasters, and the local planar frame.

All distances are in meters.  Latitude/longitude pairs are projected onto a
local equirectangular plane anchored at the south-west corner of the area of
interest; this is accurate to well under a percent for the few-tens-of-km
areas this tool is meant for.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

M_PER_DEG_LAT = 111320.0

# defaults applied when the CSV leaves height/power blank
CT_HEIGHT_M = 30.0
CT_POWER_W = 10.0
WT_HEIGHT_M = 100.0
WT_POWER_W = 11.0

SITES_HEADER = ["id", "lat", "lon", "structure", "tech", "height_m", "power_w", "farm_id"]
POPULATION_HEADER = ["lat", "lon", "density"]


class GeodataError(ValueError):
    """Raised when an input file or value fails validation."""


class Structure(str, Enum):
    CELL_TOWER = "CT"
    WIND_TURBINE = "WT"


class Tech(str, Enum):
    G3 = "G3"
    G4 = "G4"
    NONE = "NONE"  # turbine without radio equipment


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0):
            raise GeodataError(f"latitude {self.lat} outside [-90, 90]")
        if not (-180.0 <= self.lon <= 180.0):
            raise GeodataError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class LocalFrame:
    """Equirectangular projection anchored at ``origin``.

    x grows east, y grows north, both in meters.  The per-degree longitude
    scale is fixed at the origin latitude, so points far from the origin
    accumulate distortion; ``project`` warns beyond 2 degrees of latitude.
    """

    origin: GeoPoint

    @property
    def m_per_deg_lat(self) -> float:
        return M_PER_DEG_LAT

    @property
    def m_per_deg_lon(self) -> float:
        return M_PER_DEG_LAT * math.cos(math.radians(self.origin.lat))

    def project(self, point: GeoPoint) -> tuple[float, float]:
        if abs(point.lat - self.origin.lat) > 2.0:
            warnings.warn(
                f"point {point.lat:.4f} deg is more than 2 deg of latitude from the "
                f"frame origin; projection error grows with distance",
                stacklevel=2,
            )
        x = (point.lon - self.origin.lon) * self.m_per_deg_lon
        y = (point.lat - self.origin.lat) * self.m_per_deg_lat
        return x, y

    def unproject(self, x: float, y: float) -> GeoPoint:
        return GeoPoint(
            lat=self.origin.lat + y / self.m_per_deg_lat,
            lon=self.origin.lon + x / self.m_per_deg_lon,
        )


@dataclass(frozen=True)
class AreaOfInterest:
    """Bounding box plus cell size; defines the analysis grid.

    The grid covers the box with square cells of ``cell_size_m`` meters,
    row 0 at the southern edge, column 0 at the western edge.
    """

    min_point: GeoPoint
    max_point: GeoPoint
    cell_size_m: float

    def __post_init__(self):
        if self.cell_size_m <= 0:
            raise GeodataError(f"cell_size_m must be positive, got {self.cell_size_m}")
        if self.max_point.lat <= self.min_point.lat:
            raise GeodataError("max corner latitude must exceed min corner latitude")
        if self.max_point.lon <= self.min_point.lon:
            raise GeodataError("max corner longitude must exceed min corner longitude")

    @property
    def frame(self) -> LocalFrame:
        return LocalFrame(origin=self.min_point)

    @property
    def shape(self) -> tuple[int, int]:
        """(rows, cols) of the analysis grid covering the box."""
        w, h = self.frame.project(self.max_point)
        # the 1e-9 slack keeps spans that are an exact multiple of the cell
        # size (up to float rounding) from gaining a spurious extra cell
        cols = max(1, math.ceil(w / self.cell_size_m - 1e-9))
        rows = max(1, math.ceil(h / self.cell_size_m - 1e-9))
        return rows, cols

    def cell_center(self, row: int, col: int) -> GeoPoint:
        f = self.frame
        return f.unproject((col + 0.5) * self.cell_size_m, (row + 0.5) * self.cell_size_m)

    def cell_centers_xy(self) -> tuple[np.ndarray, np.ndarray]:
        """Planar coordinates of all cell centers, each shaped (rows, cols)."""
        rows, cols = self.shape
        x = (np.arange(cols) + 0.5) * self.cell_size_m
        y = (np.arange(rows) + 0.5) * self.cell_size_m
        return np.broadcast_to(x, (rows, cols)).copy(), np.broadcast_to(y[:, None], (rows, cols)).copy()

    def cell_index(self, point: GeoPoint) -> tuple[int, int] | None:
        """Grid cell containing ``point``, or None if outside the box."""
        x, y = self.frame.project(point)
        col = math.floor(x / self.cell_size_m)
        row = math.floor(y / self.cell_size_m)
        rows, cols = self.shape
        if 0 <= row < rows and 0 <= col < cols:
            return row, col
        return None


@dataclass(frozen=True)
class SiteRecord:
    """One base-station site: an existing tower or a (candidate) turbine."""

    id: str
    point: GeoPoint
    structure: Structure
    tech: Tech
    height_m: float
    power_w: float
    farm_id: str | None = None

    def __post_init__(self):
        if not self.id:
            raise GeodataError("site id must be non-empty")
        if self.height_m <= 0:
            raise GeodataError(f"site {self.id}: height_m must be positive")
        if self.power_w <= 0:
            raise GeodataError(f"site {self.id}: power_w must be positive")
        if self.structure is Structure.CELL_TOWER:
            if self.tech is Tech.NONE:
                raise GeodataError(f"site {self.id}: cell towers always carry equipment")
            if self.farm_id is not None:
                raise GeodataError(f"site {self.id}: farm_id applies to wind turbines only")
        if self.structure is Structure.WIND_TURBINE and self.tech is Tech.G3:
            raise GeodataError(f"site {self.id}: turbine base stations are 4G only")

    @property
    def active(self) -> bool:
        return self.tech is not Tech.NONE


@dataclass
class PopulationGrid:
    """Population density raster aligned with an AreaOfInterest grid."""

    aoi: AreaOfInterest
    density: np.ndarray = field(repr=False)  # persons per km^2, shape (rows, cols)

    def __post_init__(self):
        expected = self.aoi.shape
        if self.density.shape != expected:
            raise GeodataError(
                f"density shape {self.density.shape} does not match grid {expected}"
            )
        if np.any(self.density < 0):
            raise GeodataError("population density must be non-negative")

    @property
    def cell_area_km2(self) -> float:
        return (self.aoi.cell_size_m / 1000.0) ** 2

    @property
    def population(self) -> np.ndarray:
        """Persons per cell."""
        return self.density * self.cell_area_km2

    def total_population(self) -> float:
        return float(self.population.sum())


def _parse_float(token: str, what: str, line: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise GeodataError(f"line {line}: {what} is not a number: {token!r}") from None


def _reader(text: str, required: list[str], what: str) -> csv.DictReader:
    r = csv.DictReader(io.StringIO(text))
    if r.fieldnames is None:
        raise GeodataError(f"{what}: empty input")
    missing = [c for c in required if c not in r.fieldnames]
    if missing:
        raise GeodataError(f"{what}: header is missing columns {missing}")
    return r


def parse_sites(text: str) -> list[SiteRecord]:
    """Parse the sites CSV.

    Required columns: id, lat, lon, structure, tech, height_m, power_w,
    farm_id.  Unknown columns are ignored.  Blank height/power fall back to
    the per-structure defaults (CT: 30 m / 10 W, WT: 100 m / 11 W).
    """
    reader = _reader(text, SITES_HEADER, "sites")
    sites: list[SiteRecord] = []
    seen: set[str] = set()
    for line, row in enumerate(reader, start=2):
        sid = (row["id"] or "").strip()
        if not sid:
            raise GeodataError(f"line {line}: missing site id")
        if sid in seen:
            raise GeodataError(f"line {line}: duplicate site id {sid!r}")
        seen.add(sid)

        s_token = (row["structure"] or "").strip().upper()
        try:
            structure = Structure(s_token)
        except ValueError:
            raise GeodataError(f"line {line}: unknown structure {row['structure']!r}") from None
        t_token = (row["tech"] or "").strip().upper() or "NONE"
        try:
            tech = Tech(t_token)
        except ValueError:
            raise GeodataError(f"line {line}: unknown tech {row['tech']!r}") from None

        h_token = (row["height_m"] or "").strip()
        p_token = (row["power_w"] or "").strip()
        defaults = (
            (CT_HEIGHT_M, CT_POWER_W)
            if structure is Structure.CELL_TOWER
            else (WT_HEIGHT_M, WT_POWER_W)
        )
        height = _parse_float(h_token, "height_m", line) if h_token else defaults[0]
        power = _parse_float(p_token, "power_w", line) if p_token else defaults[1]
        farm = (row["farm_id"] or "").strip() or None

        try:
            point = GeoPoint(
                _parse_float(row["lat"], "lat", line), _parse_float(row["lon"], "lon", line)
            )
            sites.append(
                SiteRecord(
                    id=sid,
                    point=point,
                    structure=structure,
                    tech=tech,
                    height_m=height,
                    power_w=power,
                    farm_id=farm,
                )
            )
        except GeodataError as e:
            raise GeodataError(f"line {line}: {e}") from None
    return sites


def write_sites(sites: list[SiteRecord]) -> str:
    """Serialize sites back to the canonical CSV form (round-trips parse_sites)."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(SITES_HEADER)
    for s in sites:
        w.writerow(
            [
                s.id,
                repr(s.point.lat),
                repr(s.point.lon),
                s.structure.value,
                s.tech.value,
                repr(s.height_m),
                repr(s.power_w),
                s.farm_id or "",
            ]
        )
    return out.getvalue()


def parse_population(text: str, aoi: AreaOfInterest) -> tuple[PopulationGrid, int]:
    """Parse the population CSV into a density raster.

    Each row is one sample (lat, lon, density in persons/km^2) assigned to
    the grid cell containing it.  Cells with no sample get density zero.
    Two samples in one cell is an error; samples outside the box are
    dropped, and the count of dropped samples is returned alongside.
    """
    reader = _reader(text, POPULATION_HEADER, "population")
    rows, cols = aoi.shape
    density = np.zeros((rows, cols))
    filled = np.zeros((rows, cols), dtype=bool)
    skipped = 0
    for line, row in enumerate(reader, start=2):
        lat = _parse_float(row["lat"], "lat", line)
        lon = _parse_float(row["lon"], "lon", line)
        d = _parse_float(row["density"], "density", line)
        if d < 0:
            raise GeodataError(f"line {line}: density must be non-negative, got {d}")
        try:
            point = GeoPoint(lat, lon)
        except GeodataError as e:
            raise GeodataError(f"line {line}: {e}") from None
        idx = aoi.cell_index(point)
        if idx is None:
            skipped += 1
            continue
        if filled[idx]:
            raise GeodataError(f"line {line}: second sample for grid cell {idx}")
        filled[idx] = True
        density[idx] = d
    return PopulationGrid(aoi=aoi, density=density), skipped


def write_population(grid: PopulationGrid) -> str:
    """Serialize non-zero cells as cell-center samples (round-trips parse_population)."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(POPULATION_HEADER)
    rows, cols = grid.aoi.shape
    for r in range(rows):
        for c in range(cols):
            if grid.density[r, c] != 0.0:
                p = grid.aoi.cell_center(r, c)
                w.writerow([repr(p.lat), repr(p.lon), repr(float(grid.density[r, c]))])
    return out.getvalue()


def dedupe_farms(sites: list[SiteRecord]) -> tuple[list[SiteRecord], list[str]]:
    """Enforce one equipped turbine per wind farm.

    Among equipped turbines sharing a farm_id only the tallest keeps its
    equipment (ties broken by lowest id); the rest are demoted to NONE.
    Turbines without a farm_id are treated as one-turbine farms.  Returns
    the adjusted list (original order) and the demoted ids.
    """
    keep: dict[str, SiteRecord] = {}
    for s in sites:
        if s.structure is not Structure.WIND_TURBINE or not s.active or s.farm_id is None:
            continue
        cur = keep.get(s.farm_id)
        if cur is None or (s.height_m, _neg_id_rank(s.id)) > (cur.height_m, _neg_id_rank(cur.id)):
            keep[s.farm_id] = s

    out: list[SiteRecord] = []
    demoted: list[str] = []
    for s in sites:
        if (
            s.structure is Structure.WIND_TURBINE
            and s.active
            and s.farm_id is not None
            and keep[s.farm_id].id != s.id
        ):
            out.append(replace(s, tech=Tech.NONE))
            demoted.append(s.id)
        else:
            out.append(s)
    return out, demoted


class _neg_id_rank:
    """Orders ids so that a *lower* id wins a max() comparison."""

    __slots__ = ("id",)

    def __init__(self, id: str):
        self.id = id

    def __lt__(self, other: "_neg_id_rank") -> bool:
        return self.id > other.id

    def __eq__(self, other: object) -> bool:
        return isinstance(other, _neg_id_rank) and self.id == other.id
