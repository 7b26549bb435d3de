"""Shared fixtures: bundled scenario paths and small synthetic scenarios."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from wtbs_planner.channel import get_preset
from wtbs_planner.geodata import (
    AreaOfInterest,
    GeoPoint,
    PopulationGrid,
    SiteRecord,
    Structure,
    Tech,
)
from wtbs_planner.netsim import SimConfig
from wtbs_planner.scenario import Scenario

REPO_ROOT = Path(__file__).resolve().parents[1]
SCENARIO_ROOT = REPO_ROOT / "scenarios"


@pytest.fixture(scope="session")
def scenario_root() -> Path:
    return SCENARIO_ROOT


@pytest.fixture(scope="session")
def mini_bundle(scenario_root) -> Path:
    return scenario_root / "mini"


@pytest.fixture
def rural():
    return get_preset("rural")


@pytest.fixture
def suburban():
    return get_preset("suburban")


def make_aoi(lat0=48.0, lon0=2.0, rows=4, cols=4, cell_m=200.0) -> AreaOfInterest:
    """Small grid anchored at (lat0, lon0); exact row/col counts by construction."""
    frame_lat = 111320.0
    frame_lon = 111320.0 * np.cos(np.radians(lat0))
    return AreaOfInterest(
        GeoPoint(lat0, lon0),
        GeoPoint(lat0 + rows * cell_m / frame_lat, lon0 + cols * cell_m / frame_lon),
        cell_m,
    )


def site_at_xy(aoi: AreaOfInterest, sid: str, x_m: float, y_m: float, *,
               structure=Structure.CELL_TOWER, tech=Tech.G3,
               height_m=None, power_w=None, farm_id=None) -> SiteRecord:
    """Place a site by local metric coordinates instead of lat/lon arithmetic."""
    point = aoi.frame.unproject(x_m, y_m)
    if height_m is None:
        height_m = 30.0 if structure is Structure.CELL_TOWER else 100.0
    if power_w is None:
        power_w = 10.0 if structure is Structure.CELL_TOWER else 11.0
    return SiteRecord(sid, point, structure, tech, height_m, power_w, farm_id)


def uniform_population(aoi: AreaOfInterest, density=100.0) -> PopulationGrid:
    rows, cols = aoi.shape
    return PopulationGrid(aoi, np.full((rows, cols), float(density)))


def make_scenario(sites, *, rows=4, cols=4, cell_m=200.0, density=100.0,
                  preset_name="rural", sim=None) -> Scenario:
    aoi = make_aoi(rows=rows, cols=cols, cell_m=cell_m)
    if sim is None:
        sim = SimConfig(iterations=400, seed=3)
    return Scenario(aoi, list(sites), uniform_population(aoi, density),
                    get_preset(preset_name), sim, preset_name=preset_name)


@pytest.fixture
def tiny_scenario():
    """One 3G tower plus one unequipped turbine on a 4x4 grid; fast to simulate."""

    def build(**kw):
        aoi = make_aoi(rows=kw.pop("rows", 4), cols=kw.pop("cols", 4),
                       cell_m=kw.pop("cell_m", 200.0))
        ct = site_at_xy(aoi, "ct-1", 150.0, 150.0)
        wt = site_at_xy(aoi, "wt-1", 650.0, 650.0,
                        structure=Structure.WIND_TURBINE, tech=Tech.NONE, farm_id="f1")
        sim = kw.pop("sim", SimConfig(iterations=400, seed=3))
        density = kw.pop("density", 100.0)
        assert not kw, f"unused kwargs {kw}"
        return Scenario(aoi, [ct, wt], uniform_population(aoi, density),
                        get_preset("rural"), sim, preset_name="rural")

    return build
