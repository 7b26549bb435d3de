"""Scenario bundles: a config file plus sites and population CSVs.

A bundle is a directory holding ``scenario.cfg`` (INI), ``sites.csv`` and
``population.csv``.  Every simulation setting has a baked-in default, so an
empty ``[simulation]`` section means the standard values; only the area
box is mandatory.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, replace
from pathlib import Path

from .channel import PRESETS, EnvironmentPreset, get_preset
from .geodata import (
    CT_HEIGHT_M,
    CT_POWER_W,
    WT_HEIGHT_M,
    WT_POWER_W,
    AreaOfInterest,
    GeodataError,
    GeoPoint,
    PopulationGrid,
    SiteRecord,
    Structure,
    Tech,
    dedupe_farms,
    parse_population,
    parse_sites,
)
from .netsim import SimConfig

CONFIG_NAME = "scenario.cfg"
SITES_NAME = "sites.csv"
POPULATION_NAME = "population.csv"

_SIM_KEYS = {
    "beta_db": float,
    "noise_w": float,
    "bias": float,
    "iterations": int,
    "seed": int,
    "rate3_mbps": float,
    "rate4_mbps": float,
    "bandwidth_multiplier": float,
    "cross_tech_interference": bool,
    "user_height_m": float,
}
_ENV_KEYS = {
    "s_a": float,
    "s_b": float,
    "eta3_db": float,
    "eta4_db": float,
    "alpha_los": float,
    "alpha_nlos": float,
    "m_los": float,
    "m_nlos": float,
    "eta_los_db": float,
    "eta_nlos_db": float,
}
_AREA_KEYS = {
    "lat_min": float,
    "lon_min": float,
    "lat_max": float,
    "lon_max": float,
    "cell_size_m": float,
}
_FILES_KEYS = {"sites": str, "population": str}


class ConfigError(ValueError):
    """Raised when scenario.cfg fails validation."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Parsed scenario.cfg: area box, file names, environment, simulation."""

    aoi: AreaOfInterest
    sites_file: str
    population_file: str
    preset: EnvironmentPreset
    preset_name: str | None
    sim: SimConfig


@dataclass
class Scenario:
    """A fully loaded planning scenario."""

    aoi: AreaOfInterest
    sites: list[SiteRecord]
    population: PopulationGrid
    preset: EnvironmentPreset
    sim: SimConfig
    preset_name: str | None = None
    pop_samples_skipped: int = 0

    @property
    def active_sites(self) -> list[SiteRecord]:
        return [s for s in self.sites if s.active]

    def site_by_id(self, site_id: str) -> SiteRecord:
        for s in self.sites:
            if s.id == site_id:
                return s
        raise KeyError(site_id)

    def with_sites(self, sites: list[SiteRecord]) -> "Scenario":
        return Scenario(
            aoi=self.aoi,
            sites=list(sites),
            population=self.population,
            preset=self.preset,
            sim=self.sim,
            preset_name=self.preset_name,
            pop_samples_skipped=self.pop_samples_skipped,
        )

    def with_equipped(self, site_ids) -> "Scenario":
        """Equip the given turbine ids with 4G, then re-apply the
        one-per-farm rule."""
        ids = set(site_ids)
        known = {s.id for s in self.sites}
        unknown = ids - known
        if unknown:
            raise KeyError(f"unknown site ids: {sorted(unknown)}")
        out = []
        for s in self.sites:
            if s.id in ids:
                if s.structure is not Structure.WIND_TURBINE:
                    raise ValueError(f"site {s.id} is not a wind turbine")
                out.append(replace(s, tech=Tech.G4))
            else:
                out.append(s)
        deduped, _ = dedupe_farms(out)
        return self.with_sites(deduped)


def _section(cp: configparser.ConfigParser, name: str, allowed: dict, path: str) -> dict:
    if not cp.has_section(name):
        return {}
    out = {}
    for key, raw in cp.items(name):
        if key not in allowed:
            raise ConfigError(f"{path}: [{name}] has unknown key {key!r}")
        typ = allowed[key]
        try:
            if typ is bool:
                out[key] = cp.getboolean(name, key)
            else:
                out[key] = typ(raw)
        except ValueError:
            raise ConfigError(f"{path}: [{name}] {key} = {raw!r} is not a valid {typ.__name__}") from None
    return out


def parse_config(text: str, path: str = CONFIG_NAME) -> ScenarioConfig:
    """Parse scenario.cfg text.  ``path`` is used in error messages only."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=path)
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from None

    known_sections = {"area", "files", "environment", "simulation"}
    extra = set(cp.sections()) - known_sections
    if extra:
        raise ConfigError(f"{path}: unknown sections {sorted(extra)}")

    area = _section(cp, "area", _AREA_KEYS, path)
    missing = sorted(set(_AREA_KEYS) - set(area))
    if missing:
        raise ConfigError(f"{path}: [area] is missing keys {missing}")
    try:
        aoi = AreaOfInterest(
            min_point=GeoPoint(area["lat_min"], area["lon_min"]),
            max_point=GeoPoint(area["lat_max"], area["lon_max"]),
            cell_size_m=area["cell_size_m"],
        )
    except GeodataError as e:
        raise ConfigError(f"{path}: [area] {e}") from None

    files = _section(cp, "files", _FILES_KEYS, path)
    sites_file = files.get("sites", SITES_NAME)
    population_file = files.get("population", POPULATION_NAME)

    env = _section(cp, "environment", _ENV_KEYS | {"preset": str}, path)
    preset_name = env.pop("preset", None)
    try:
        if preset_name is not None:
            if preset_name not in PRESETS:
                raise ConfigError(
                    f"{path}: unknown preset {preset_name!r}; known: {sorted(PRESETS)}"
                )
            base = get_preset(preset_name)
            if env:  # explicit keys override preset fields
                base = replace(base, **env)
                preset_name = None
        elif env:
            required = {"s_a", "s_b", "eta3_db", "eta4_db"}
            missing = sorted(required - set(env))
            if missing:
                raise ConfigError(
                    f"{path}: [environment] without a preset needs keys {missing}"
                )
            base = EnvironmentPreset(**env)
        else:
            base = get_preset("rural")
            preset_name = "rural"
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{path}: [environment] {e}") from None

    sim_kwargs = _section(cp, "simulation", _SIM_KEYS, path)
    try:
        sim = SimConfig(**sim_kwargs)
    except ValueError as e:
        raise ConfigError(f"{path}: [simulation] {e}") from None

    return ScenarioConfig(
        aoi=aoi,
        sites_file=sites_file,
        population_file=population_file,
        preset=base,
        preset_name=preset_name,
        sim=sim,
    )


def render_config(cfg: ScenarioConfig) -> str:
    """Serialize a ScenarioConfig back to INI text (round-trips parse_config)."""
    cp = configparser.ConfigParser()
    cp["area"] = {
        "lat_min": repr(cfg.aoi.min_point.lat),
        "lon_min": repr(cfg.aoi.min_point.lon),
        "lat_max": repr(cfg.aoi.max_point.lat),
        "lon_max": repr(cfg.aoi.max_point.lon),
        "cell_size_m": repr(cfg.aoi.cell_size_m),
    }
    cp["files"] = {"sites": cfg.sites_file, "population": cfg.population_file}
    if cfg.preset_name is not None:
        cp["environment"] = {"preset": cfg.preset_name}
    else:
        env = {
            "s_a": repr(cfg.preset.s_a),
            "s_b": repr(cfg.preset.s_b),
            "eta3_db": repr(cfg.preset.eta3_db),
            "eta4_db": repr(cfg.preset.eta4_db),
            "alpha_los": repr(cfg.preset.alpha_los),
            "alpha_nlos": repr(cfg.preset.alpha_nlos),
            "m_los": repr(cfg.preset.m_los),
            "m_nlos": repr(cfg.preset.m_nlos),
        }
        if cfg.preset.eta_los_db is not None:
            env["eta_los_db"] = repr(cfg.preset.eta_los_db)
            env["eta_nlos_db"] = repr(cfg.preset.eta_nlos_db)
        cp["environment"] = env
    cp["simulation"] = {
        "beta_db": repr(cfg.sim.beta_db),
        "noise_w": repr(cfg.sim.noise_w),
        "bias": repr(cfg.sim.bias),
        "iterations": str(cfg.sim.iterations),
        "seed": str(cfg.sim.seed),
        "rate3_mbps": repr(cfg.sim.rate3_mbps),
        "rate4_mbps": repr(cfg.sim.rate4_mbps),
        "bandwidth_multiplier": repr(cfg.sim.bandwidth_multiplier),
        "cross_tech_interference": str(cfg.sim.cross_tech_interference).lower(),
        "user_height_m": repr(cfg.sim.user_height_m),
    }
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def load_scenario_texts(
    cfg_text: str, sites_text: str, population_text: str, cfg_path: str = CONFIG_NAME
) -> Scenario:
    """Build a Scenario from in-memory bundle texts."""
    cfg = parse_config(cfg_text, cfg_path)
    sites = parse_sites(sites_text)
    population, skipped = parse_population(population_text, cfg.aoi)
    sites, _ = dedupe_farms(sites)
    return Scenario(
        aoi=cfg.aoi,
        sites=sites,
        population=population,
        preset=cfg.preset,
        sim=cfg.sim,
        preset_name=cfg.preset_name,
        pop_samples_skipped=skipped,
    )


def load_scenario(path) -> Scenario:
    """Load a bundle from a directory (or a direct path to scenario.cfg)."""
    p = Path(path)
    cfg_path = p / CONFIG_NAME if p.is_dir() else p
    if not cfg_path.is_file():
        raise ConfigError(f"scenario config not found: {cfg_path}")
    base = cfg_path.parent
    cfg = parse_config(cfg_path.read_text(), str(cfg_path))
    sites_path = base / cfg.sites_file
    pop_path = base / cfg.population_file
    if not sites_path.is_file():
        raise ConfigError(f"sites file not found: {sites_path}")
    if not pop_path.is_file():
        raise ConfigError(f"population file not found: {pop_path}")
    try:
        sites = parse_sites(sites_path.read_text())
    except GeodataError as e:
        raise ConfigError(f"{sites_path}: {e}") from None
    try:
        population, skipped = parse_population(pop_path.read_text(), cfg.aoi)
    except GeodataError as e:
        raise ConfigError(f"{pop_path}: {e}") from None
    sites, _ = dedupe_farms(sites)
    return Scenario(
        aoi=cfg.aoi,
        sites=sites,
        population=population,
        preset=cfg.preset,
        sim=cfg.sim,
        preset_name=cfg.preset_name,
        pop_samples_skipped=skipped,
    )


def default_config_dict() -> dict:
    """Every baked-in default, for documentation and golden-file checks."""
    sim = SimConfig()
    return {
        "simulation": {
            "beta_db": sim.beta_db,
            "noise_w": sim.noise_w,
            "bias": sim.bias,
            "iterations": sim.iterations,
            "seed": sim.seed,
            "rate3_mbps": sim.rate3_mbps,
            "rate4_mbps": sim.rate4_mbps,
            "bandwidth_multiplier": sim.bandwidth_multiplier,
            "cross_tech_interference": sim.cross_tech_interference,
            "user_height_m": sim.user_height_m,
        },
        "site_defaults": {
            "ct_height_m": CT_HEIGHT_M,
            "ct_power_w": CT_POWER_W,
            "wt_height_m": WT_HEIGHT_M,
            "wt_power_w": WT_POWER_W,
        },
        "presets": {
            name: {
                "s_a": p.s_a,
                "s_b": p.s_b,
                "eta3_db": p.eta3_db,
                "eta4_db": p.eta4_db,
                "alpha_los": p.alpha_los,
                "alpha_nlos": p.alpha_nlos,
                "m_los": p.m_los,
                "m_nlos": p.m_nlos,
            }
            for name, p in sorted(PRESETS.items())
        },
    }
