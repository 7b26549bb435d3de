"""Monte Carlo network simulation: association, SINR, coverage, and rate maps.

Every grid cell is evaluated independently with its own random substream
keyed by (seed, row, col), so a map is reproducible bit-for-bit no matter
how cells are scheduled across workers.  Per iteration the engine samples
each site's LoS state, associates the cell user to the strongest biased
mean power, then samples fading gains and checks the SINR threshold.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

from . import channel
from .channel import EnvironmentPreset, Visibility
from .geodata import AreaOfInterest, PopulationGrid, SiteRecord, Tech


class NoActiveBsError(RuntimeError):
    """Simulation requested with no equipped base station."""


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo and link-budget settings."""

    beta_db: float = -5.0
    noise_w: float = 1e-12
    bias: float = 1.0
    iterations: int = 10_000
    seed: int = 0
    rate3_mbps: float = 2.0
    rate4_mbps: float = 17.5
    # noise_w is per unit band; scale here if a wider band is modeled
    bandwidth_multiplier: float = 1.0
    cross_tech_interference: bool = True
    user_height_m: float = 0.0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.noise_w <= 0:
            raise ValueError("noise_w must be positive")
        if self.bias < 1.0:
            raise ValueError("bias must be at least 1 (1 means no preference)")
        if self.rate3_mbps <= 0 or self.rate4_mbps <= 0:
            raise ValueError("rate values must be positive")
        if self.bandwidth_multiplier <= 0:
            raise ValueError("bandwidth_multiplier must be positive")
        if self.user_height_m < 0:
            raise ValueError("user_height_m must be non-negative")

    @property
    def beta_linear(self) -> float:
        return 10.0 ** (self.beta_db / 10.0)

    @property
    def noise_total_w(self) -> float:
        return self.noise_w * self.bandwidth_multiplier


@dataclass
class Realization:
    """One sampled channel state across the active sites."""

    visibility: np.ndarray  # bool per site, True = LoS
    gains: np.ndarray  # fading power gain per site

    def __post_init__(self):
        self.visibility = np.asarray(self.visibility, dtype=bool)
        self.gains = np.asarray(self.gains, dtype=float)
        if self.visibility.shape != self.gains.shape:
            raise ValueError("visibility and gains must have one entry per site")
        if np.any(self.gains <= 0):
            raise ValueError("fading gains must be positive")


@dataclass(frozen=True)
class CellResult:
    p_cov: float
    rate_lb_mbps: float
    share4: float
    serving_histogram: np.ndarray  # association count per site
    rate_se_mbps: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.p_cov <= 1.0 and 0.0 <= self.share4 <= 1.0):
            raise ValueError("p_cov and share4 must lie in [0, 1]")


@dataclass
class RateMap:
    """Per-cell simulation results over the analysis grid."""

    aoi: AreaOfInterest
    p_cov: np.ndarray
    rate_mbps: np.ndarray
    share4: np.ndarray
    rate_se_mbps: np.ndarray = field(repr=False)
    serving_histogram: np.ndarray = field(repr=False)  # (rows, cols, n_sites)
    range_clamped: np.ndarray = field(repr=False)  # links clamped to MIN_RANGE_M, per cell
    site_ids: tuple[str, ...] = ()
    scenario_fingerprint: str = ""
    aoi_fingerprint: str = ""

    @property
    def shape(self) -> tuple[int, int]:
        return self.p_cov.shape

    @property
    def n_range_clamped(self) -> int:
        return int(self.range_clamped.sum())

    def cell(self, row: int, col: int) -> CellResult:
        return CellResult(
            p_cov=float(self.p_cov[row, col]),
            rate_lb_mbps=float(self.rate_mbps[row, col]),
            share4=float(self.share4[row, col]),
            serving_histogram=self.serving_histogram[row, col].copy(),
            rate_se_mbps=float(self.rate_se_mbps[row, col]),
        )


@dataclass
class MapDelta:
    delta_mbps: np.ndarray
    max_gain_mbps: float
    max_loss_mbps: float  # magnitude of the worst degradation, 0 if none
    frac_degraded: float


def _require_active(sites: list[SiteRecord]) -> list[SiteRecord]:
    if not sites:
        raise NoActiveBsError("no active BS")
    inactive = [s.id for s in sites if not s.active]
    if inactive:
        raise ValueError(f"unequipped sites cannot be simulated: {inactive}")
    return sites


def mean_power_profile(
    user_xy: tuple[float, float],
    sites: list[SiteRecord],
    realization: Realization,
    preset: EnvironmentPreset,
    frame=None,
    user_height_m: float = 0.0,
) -> np.ndarray:
    """Fading-averaged received power (W) from every site, conditioned on the
    realization's LoS states.

    ``user_xy`` is planar meters; site lat/lon positions are projected
    through ``frame`` (required).
    """
    if frame is None:
        raise ValueError("a projection frame is required")
    _require_active(sites)
    if len(sites) != realization.visibility.shape[0]:
        raise ValueError("realization does not match site count")
    ux, uy = user_xy
    out = np.empty(len(sites))
    for i, s in enumerate(sites):
        sx, sy = frame.project(s.point)
        h = s.height_m - user_height_m
        if h <= 0:
            raise ValueError(f"site {s.id}: antenna at or below user height")
        r = math.sqrt((sx - ux) ** 2 + (sy - uy) ** 2 + h**2)
        vis = Visibility.LOS if realization.visibility[i] else Visibility.NLOS
        eta = channel.db_to_linear(preset.eta_db_for(s.tech, vis))
        out[i] = channel.mean_rx_power(s.power_w, eta, r, preset.alpha(vis))
    return out


def associate(profile: np.ndarray, techs: list[Tech], bias: float) -> int:
    """Index of the serving site: strongest mean power with 4G entries scaled
    by the bias.  Ties resolve to the lowest index."""
    if len(profile) == 0:
        raise NoActiveBsError("no active BS")
    scores = np.asarray(profile, dtype=float).copy()
    for i, t in enumerate(techs):
        if t is Tech.G4:
            scores[i] *= bias
    return int(np.argmax(scores))


def instantaneous_sinr(
    profile: np.ndarray, gains: np.ndarray, serving: int, noise_w: float
) -> float:
    """SINR of one realization; bias plays no role here."""
    rx = np.asarray(profile, dtype=float) * np.asarray(gains, dtype=float)
    interference = rx.sum() - rx[serving]
    return float(rx[serving] / (interference + noise_w))


@dataclass(frozen=True)
class _SiteStatics:
    """Per-site constants precomputed once per map evaluation."""

    xy: np.ndarray  # (S, 2) planar coordinates
    height: np.ndarray  # (S,) antenna height above the user plane
    power: np.ndarray  # (S,)
    eta_los: np.ndarray  # (S,) linear excess loss when LoS
    eta_nlos: np.ndarray  # (S,)
    is4: np.ndarray  # (S,) bool
    rate: np.ndarray  # (S,) Mbps delivered when serving and covered
    ids: tuple[str, ...]


def _site_statics(sites: list[SiteRecord], preset: EnvironmentPreset, cfg: SimConfig, frame) -> _SiteStatics:
    _require_active(sites)
    xy = np.array([frame.project(s.point) for s in sites], dtype=float)
    height = np.array([s.height_m - cfg.user_height_m for s in sites], dtype=float)
    if np.any(height <= 0):
        low = [s.id for s in sites if s.height_m <= cfg.user_height_m]
        raise ValueError(f"antenna at or below user height: {low}")
    power = np.array([s.power_w for s in sites], dtype=float)
    eta_los = np.array(
        [channel.db_to_linear(preset.eta_db_for(s.tech, Visibility.LOS)) for s in sites]
    )
    eta_nlos = np.array(
        [channel.db_to_linear(preset.eta_db_for(s.tech, Visibility.NLOS)) for s in sites]
    )
    is4 = np.array([s.tech is Tech.G4 for s in sites], dtype=bool)
    rate = np.where(is4, cfg.rate4_mbps, cfg.rate3_mbps)
    return _SiteStatics(
        xy=xy,
        height=height,
        power=power,
        eta_los=eta_los,
        eta_nlos=eta_nlos,
        is4=is4,
        rate=rate,
        ids=tuple(s.id for s in sites),
    )


def _sample_gains(
    rng: np.random.Generator, vis: np.ndarray, m_los: float, m_nlos: float
) -> np.ndarray:
    """Nakagami power gains for an (iterations, sites) visibility table.

    The common integer shapes avoid numpy's elementwise-shape gamma path,
    which dominates the per-cell budget otherwise: m=1 is a plain
    exponential and m=2 the mean of two.
    """
    if m_los == 1.0 and m_nlos == 1.0:
        return rng.standard_exponential(vis.shape)
    if m_los == 2.0 and m_nlos == 1.0:
        e1 = rng.standard_exponential(vis.shape)
        e2 = rng.standard_exponential(vis.shape)
        return np.where(vis, 0.5 * (e1 + e2), e1)
    m = np.where(vis, m_los, m_nlos)
    return rng.gamma(m, 1.0 / m)


def _simulate_cell_arrays(
    user_xy: tuple[float, float],
    st: _SiteStatics,
    preset: EnvironmentPreset,
    cfg: SimConfig,
    rng: np.random.Generator,
) -> tuple[float, float, float, float, np.ndarray, int]:
    """Run all iterations for one cell.  Returns (p_cov, rate_lb, share4,
    rate_se, histogram, n_clamped)."""
    dx = st.xy[:, 0] - user_xy[0]
    dy = st.xy[:, 1] - user_xy[1]
    d = np.sqrt(dx * dx + dy * dy)
    r = np.sqrt(d * d + st.height * st.height)
    n_clamped = int(np.count_nonzero(r < channel.MIN_RANGE_M))
    r = np.maximum(r, channel.MIN_RANGE_M)
    theta = np.degrees(np.arctan2(st.height, d))
    p_los = channel.los_probability(theta, preset)

    p_los_w = st.power * st.eta_los * r ** (-preset.alpha_los)
    p_nlos_w = st.power * st.eta_nlos * r ** (-preset.alpha_nlos)
    bias_vec = np.where(st.is4, cfg.bias, 1.0)

    n = cfg.iterations
    # draw order is part of the reproducibility contract: visibility
    # uniforms first (n, S), then fading gains
    u = rng.random((n, len(st.ids)))
    vis = u < p_los
    prof = np.where(vis, p_los_w, p_nlos_w)
    serving = np.argmax(prof * bias_vec, axis=1)

    gains = _sample_gains(rng, vis, preset.m_los, preset.m_nlos)
    rx = prof * gains
    total = rx.sum(axis=1)
    srv = np.take_along_axis(rx, serving[:, None], axis=1).ravel()
    serving_is4 = st.is4[serving]
    if cfg.cross_tech_interference:
        interference = total - srv
    else:
        total4 = (rx * st.is4).sum(axis=1)
        interference = np.where(serving_is4, total4, total - total4) - srv
    sinr = srv / (interference + cfg.noise_total_w)

    covered = sinr > cfg.beta_linear
    rate_samples = np.where(covered, st.rate[serving], 0.0)
    p_cov = float(covered.mean())
    rate_lb = float(rate_samples.mean())
    share4 = float(serving_is4.mean())
    if n > 1:
        rate_se = float(rate_samples.std(ddof=1) / math.sqrt(n))
    else:
        rate_se = 0.0
    hist = np.bincount(serving, minlength=len(st.ids))
    return p_cov, rate_lb, share4, rate_se, hist, n_clamped


def _cell_rng(seed: int, row: int, col: int) -> np.random.Generator:
    return np.random.default_rng((seed, row, col))


def simulate_cell(
    user_xy: tuple[float, float],
    sites: list[SiteRecord],
    preset: EnvironmentPreset,
    cfg: SimConfig,
    frame=None,
    cell: tuple[int, int] = (0, 0),
) -> CellResult:
    """Monte Carlo result for a single user location.

    ``user_xy`` is planar meters in the frame used to project site
    positions (required).  ``cell`` selects the random substream and
    defaults to grid cell (0, 0).
    """
    if frame is None:
        raise ValueError("a projection frame is required")
    st = _site_statics(sites, preset, cfg, frame)
    rng = _cell_rng(cfg.seed, cell[0], cell[1])
    p_cov, rate_lb, share4, rate_se, hist, _ = _simulate_cell_arrays(
        user_xy, st, preset, cfg, rng
    )
    return CellResult(
        p_cov=p_cov,
        rate_lb_mbps=rate_lb,
        share4=share4,
        serving_histogram=hist,
        rate_se_mbps=rate_se,
    )


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def aoi_fingerprint(aoi: AreaOfInterest) -> str:
    payload = _canonical(
        {
            "min": [aoi.min_point.lat, aoi.min_point.lon],
            "max": [aoi.max_point.lat, aoi.max_point.lon],
            "cell_size_m": aoi.cell_size_m,
        }
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def scenario_fingerprint(
    aoi: AreaOfInterest, sites: list[SiteRecord], preset: EnvironmentPreset, cfg: SimConfig
) -> str:
    payload = _canonical(
        {
            "aoi": {
                "min": [aoi.min_point.lat, aoi.min_point.lon],
                "max": [aoi.max_point.lat, aoi.max_point.lon],
                "cell_size_m": aoi.cell_size_m,
            },
            "sites": [
                [s.id, s.point.lat, s.point.lon, s.structure.value, s.tech.value, s.height_m, s.power_w]
                for s in sites
                if s.active
            ],
            "preset": [
                preset.s_a,
                preset.s_b,
                preset.eta3_db,
                preset.eta4_db,
                preset.alpha_los,
                preset.alpha_nlos,
                preset.m_los,
                preset.m_nlos,
                preset.eta_los_db,
                preset.eta_nlos_db,
            ],
            "cfg": [
                cfg.beta_db,
                cfg.noise_w,
                cfg.bias,
                cfg.iterations,
                cfg.seed,
                cfg.rate3_mbps,
                cfg.rate4_mbps,
                cfg.bandwidth_multiplier,
                cfg.cross_tech_interference,
                cfg.user_height_m,
            ],
        }
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass
class _MapJob:
    """Picklable payload shipped to worker processes."""

    aoi: AreaOfInterest
    sites: list[SiteRecord]
    preset: EnvironmentPreset
    cfg: SimConfig


def _run_rows(job: _MapJob, rows: list[tuple[int, list[int]]]):
    st = _site_statics(job.sites, job.preset, job.cfg, job.aoi.frame)
    cs = job.aoi.cell_size_m
    out = []
    for row, cols in rows:
        uy = (row + 0.5) * cs
        buf = []
        for col in cols:
            ux = (col + 0.5) * cs
            rng = _cell_rng(job.cfg.seed, row, col)
            buf.append((col, _simulate_cell_arrays((ux, uy), st, job.preset, job.cfg, rng)))
        out.append((row, buf))
    return out


def _run_rows_star(args):
    return _run_rows(*args)


def simulate_map(
    scenario, cfg: SimConfig | None = None, workers: int = 1, cells: np.ndarray | None = None
) -> RateMap:
    """Simulate every grid cell of a scenario.

    ``scenario`` provides aoi, active_sites, and preset (see scenario
    module); ``cfg`` defaults to the scenario's own simulation config.
    ``workers`` > 1 splits rows across processes; results are bit-identical
    to the single-worker run because each cell owns its substream.

    ``cells``, when given, is a boolean (rows, cols) mask restricting the
    computation to selected cells; unselected cells are left at zero.  A
    selected cell's result is identical to the full-map run.
    """
    if cfg is None:
        cfg = scenario.sim
    sites = scenario.active_sites
    if not sites:
        raise NoActiveBsError("no active BS")
    aoi = scenario.aoi
    rows, cols = aoi.shape
    job = _MapJob(aoi=aoi, sites=sites, preset=scenario.preset, cfg=cfg)

    if cells is None:
        worklist = [(r, list(range(cols))) for r in range(rows)]
    else:
        if cells.shape != (rows, cols):
            raise ValueError(f"cell mask shape {cells.shape} does not match grid {(rows, cols)}")
        worklist = [
            (r, np.nonzero(cells[r])[0].tolist()) for r in range(rows) if cells[r].any()
        ]

    if workers <= 1 or len(worklist) <= 1:
        results = _run_rows(job, worklist)
    else:
        workers = min(workers, len(worklist))
        chunks = [worklist[i::workers] for i in range(workers)]
        ctx = get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            parts = list(pool.map(_run_rows_star, [(job, chunk) for chunk in chunks]))
        results = [row_entry for part in parts for row_entry in part]

    n_sites = len(sites)
    p_cov = np.zeros((rows, cols))
    rate = np.zeros((rows, cols))
    share4 = np.zeros((rows, cols))
    rate_se = np.zeros((rows, cols))
    hist = np.zeros((rows, cols, n_sites), dtype=np.int64)
    clamped = np.zeros((rows, cols), dtype=np.int32)
    for row, buf in results:
        for col, (pc, rl, s4, se, h, nc) in buf:
            p_cov[row, col] = pc
            rate[row, col] = rl
            share4[row, col] = s4
            rate_se[row, col] = se
            hist[row, col] = h
            clamped[row, col] = nc
    return RateMap(
        aoi=aoi,
        p_cov=p_cov,
        rate_mbps=rate,
        share4=share4,
        rate_se_mbps=rate_se,
        serving_histogram=hist,
        range_clamped=clamped,
        site_ids=tuple(s.id for s in sites),
        scenario_fingerprint=scenario_fingerprint(aoi, sites, scenario.preset, cfg),
        aoi_fingerprint=aoi_fingerprint(aoi),
    )


def population_weighted_average(rate_map: RateMap, pop: PopulationGrid) -> float:
    """Mbps averaged over people rather than area."""
    if rate_map.shape != pop.aoi.shape:
        raise ValueError(
            f"rate map grid {rate_map.shape} does not match population grid {pop.aoi.shape}"
        )
    weights = pop.population
    total = weights.sum()
    if total <= 0:
        raise ValueError("total population is zero; weighted average undefined")
    return float((weights * rate_map.rate_mbps).sum() / total)


def metric_standard_error(rate_map: RateMap, pop: PopulationGrid) -> float:
    """Monte Carlo standard error of the population-weighted average, from
    per-cell rate standard errors (cells are independent)."""
    weights = pop.population
    total = weights.sum()
    if total <= 0:
        raise ValueError("total population is zero")
    var = ((weights / total) ** 2 * rate_map.rate_se_mbps**2).sum()
    return float(math.sqrt(var))


def diff_maps(before: RateMap, after: RateMap) -> MapDelta:
    """Per-cell rate change (after − before) plus summary statistics."""
    if before.shape != after.shape:
        raise ValueError("rate maps have different grid dimensions")
    if before.aoi_fingerprint != after.aoi_fingerprint:
        raise ValueError("rate maps cover different areas")
    delta = after.rate_mbps - before.rate_mbps
    return MapDelta(
        delta_mbps=delta,
        max_gain_mbps=float(max(delta.max(), 0.0)),
        max_loss_mbps=float(max(-delta.min(), 0.0)),
        frac_degraded=float((delta < 0).mean()),
    )
