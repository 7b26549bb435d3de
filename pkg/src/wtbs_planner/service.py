"""Session-oriented HTTP JSON API for interactive coverage planning.

Each session wraps one scenario, its baseline rate map, and the current map
after edits.  Mutations are serialized per session, recompute with the
session's fixed seed (so deltas reflect edits, never Monte Carlo noise),
and append to an on-disk edit log that restores the session after a
restart.

Single-site mutations recompute only the cells within the mutated site's
influence radius (where its mean received power still exceeds the noise
floor); plan confirmation and restore do full recomputes.
"""

from __future__ import annotations

import json
import os
import secrets
import shutil
import threading
from dataclasses import dataclass, field
from dataclasses import replace as dc_replace
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Query
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict

from . import export, planner
from .channel import Visibility, db_to_linear
from .geodata import (
    GeodataError,
    GeoPoint,
    SiteRecord,
    Structure,
    Tech,
    WT_HEIGHT_M,
    WT_POWER_W,
    dedupe_farms,
)
from .netsim import (
    NoActiveBsError,
    RateMap,
    aoi_fingerprint,
    diff_maps,
    scenario_fingerprint,
    simulate_map,
)
from .scenario import (
    CONFIG_NAME,
    ConfigError,
    Scenario,
    load_scenario,
    load_scenario_texts,
    parse_config,
    render_config,
)

DEFAULT_GRID_CAP = 300  # max rows and max cols per session


class ApiError(Exception):
    def __init__(self, status: int, detail: str):
        self.status = status
        self.detail = detail
        super().__init__(detail)


class CreateSessionRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    path: str | None = None
    scenario_cfg: str | None = None
    sites_csv: str | None = None
    population_csv: str | None = None


class AddSiteRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    lat: float
    lon: float
    id: str | None = None
    height_m: float | None = None
    power_w: float | None = None
    farm_id: str | None = None
    full_recompute: bool = False


class PlanRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    k: int = 1
    exhaustive: bool = False


@dataclass
class _Session:
    id: str
    scenario: Scenario
    baseline_map: RateMap
    current_map: RateMap
    revision: int = 0
    edit_log: list = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    plan_running: bool = False
    last_plan: dict | None = None
    store_dir: Path | None = None


def _zero_map(scenario: Scenario, cfg) -> RateMap:
    rows, cols = scenario.aoi.shape
    return RateMap(
        aoi=scenario.aoi,
        p_cov=np.zeros((rows, cols)),
        rate_mbps=np.zeros((rows, cols)),
        share4=np.zeros((rows, cols)),
        rate_se_mbps=np.zeros((rows, cols)),
        serving_histogram=np.zeros((rows, cols, 0), dtype=np.int64),
        range_clamped=np.zeros((rows, cols), dtype=np.int32),
        site_ids=(),
        scenario_fingerprint=scenario_fingerprint(scenario.aoi, [], scenario.preset, cfg),
        aoi_fingerprint=aoi_fingerprint(scenario.aoi),
    )


def _compute_map(scenario: Scenario, workers: int) -> RateMap:
    try:
        return simulate_map(scenario, scenario.sim, workers=workers)
    except NoActiveBsError:
        return _zero_map(scenario, scenario.sim)


def _influence_radius_m(site: SiteRecord, scenario: Scenario) -> float:
    """Distance at which the site's mean received power drops to the noise
    floor, using its most favorable visibility state."""
    preset = scenario.preset
    tech = site.tech if site.tech is not Tech.NONE else Tech.G4
    eta = max(
        db_to_linear(preset.eta_db_for(tech, Visibility.LOS)),
        db_to_linear(preset.eta_db_for(tech, Visibility.NLOS)),
    )
    cfg = scenario.sim
    return float((site.power_w * eta / cfg.noise_total_w) ** (1.0 / preset.alpha_los))


def _recompute(
    old_map: RateMap,
    new_scenario: Scenario,
    changed_sites: list[SiteRecord],
    workers: int,
    full: bool,
) -> RateMap:
    """Current map after a mutation.  Partial recompute covers the influence
    radius of every changed site; cells outside keep their old values (their
    received power from the changed sites sits below the noise floor)."""
    if not new_scenario.active_sites:
        return _zero_map(new_scenario, new_scenario.sim)
    if full:
        return simulate_map(new_scenario, new_scenario.sim, workers=workers)

    aoi = new_scenario.aoi
    frame = aoi.frame
    cx, cy = aoi.cell_centers_xy()
    mask = np.zeros(aoi.shape, dtype=bool)
    for s in changed_sites:
        x, y = frame.project(s.point)
        r = _influence_radius_m(s, new_scenario)
        mask |= (cx - x) ** 2 + (cy - y) ** 2 <= r * r
    if mask.all():
        return simulate_map(new_scenario, new_scenario.sim, workers=workers)

    fresh = simulate_map(new_scenario, new_scenario.sim, workers=workers, cells=mask)
    keep = ~mask
    fresh.p_cov[keep] = old_map.p_cov[keep]
    fresh.rate_mbps[keep] = old_map.rate_mbps[keep]
    fresh.share4[keep] = old_map.share4[keep]
    fresh.rate_se_mbps[keep] = old_map.rate_se_mbps[keep]
    fresh.range_clamped[keep] = old_map.range_clamped[keep]
    # histogram site axis may have changed; remap kept cells by site id
    old_index = {sid: i for i, sid in enumerate(old_map.site_ids)}
    kept_old = old_map.serving_histogram[keep]
    kept_new = np.zeros((kept_old.shape[0], len(fresh.site_ids)), dtype=np.int64)
    for j, sid in enumerate(fresh.site_ids):
        oi = old_index.get(sid)
        if oi is not None:
            kept_new[:, j] = kept_old[:, oi]
    fresh.serving_histogram[keep] = kept_new
    return fresh


def _site_payload(s: SiteRecord) -> dict:
    return {
        "id": s.id,
        "lat": s.point.lat,
        "lon": s.point.lon,
        "structure": s.structure.value,
        "tech": s.tech.value,
        "height_m": s.height_m,
        "power_w": s.power_w,
        "farm_id": s.farm_id,
        "active": s.active,
    }


def _metrics(session: _Session) -> dict:
    d = export.metrics_dict(session.current_map, session.scenario.population)
    d["no_active_bs"] = len(session.current_map.site_ids) == 0
    return d


def _delta_summary(old_map: RateMap, new_map: RateMap, pop) -> dict:
    d = diff_maps(old_map, new_map)
    weights = pop.population
    total = float(weights.sum())
    avg_change = float((weights * d.delta_mbps).sum() / total) if total > 0 else 0.0
    return {
        "max_gain_mbps": d.max_gain_mbps,
        "max_loss_mbps": d.max_loss_mbps,
        "frac_degraded": d.frac_degraded,
        "avg_rate_change_mbps": avg_change,
    }


def _grid_payload(session: _Session) -> dict:
    aoi = session.scenario.aoi
    rows, cols = aoi.shape
    return {
        "rows": rows,
        "cols": cols,
        "cell_size_m": aoi.cell_size_m,
        "bbox": {
            "lat_min": aoi.min_point.lat,
            "lon_min": aoi.min_point.lon,
            "lat_max": aoi.max_point.lat,
            "lon_max": aoi.max_point.lon,
        },
    }


_LAYERS = ("rate", "p_cov", "share4", "delta_vs_baseline")


def create_app(
    session_root: str | os.PathLike | None = None,
    grid_cap: int | None = None,
    workers: int | None = None,
) -> FastAPI:
    """Build the service.  Sessions persist under ``session_root`` and are
    restored (bundle + edit-log replay) when the app starts."""
    root = Path(
        session_root
        if session_root is not None
        else os.environ.get("WTBS_SESSION_DIR", ".wtbs_sessions")
    )
    cap = grid_cap if grid_cap is not None else int(os.environ.get("WTBS_GRID_CAP", DEFAULT_GRID_CAP))
    n_workers = workers if workers is not None else int(os.environ.get("WTBS_WORKERS", "1"))

    app = FastAPI(title="wtbs planner service")
    sessions: dict[str, _Session] = {}
    sessions_lock = threading.Lock()

    @app.exception_handler(ApiError)
    async def _api_error(_, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"detail": exc.detail})

    # ---- persistence ----------------------------------------------------

    def _persist_log(session: _Session) -> None:
        if session.store_dir is None:
            return
        (session.store_dir / "edit_log.json").write_text(
            json.dumps(session.edit_log, indent=1) + "\n"
        )
        (session.store_dir / "meta.json").write_text(
            json.dumps({"id": session.id, "revision": session.revision}) + "\n"
        )

    def _store_bundle(sid: str, req: CreateSessionRequest) -> Path | None:
        try:
            root.mkdir(parents=True, exist_ok=True)
        except OSError:
            return None
        bundle_dir = root / sid / "bundle"
        bundle_dir.mkdir(parents=True, exist_ok=True)
        if req.path is not None:
            src = Path(req.path)
            src_cfg = src / CONFIG_NAME if src.is_dir() else src
            cfg = parse_config(src_cfg.read_text(), str(src_cfg))
            src_base = src_cfg.parent
            sites_name = Path(cfg.sites_file).name
            pop_name = Path(cfg.population_file).name
            if sites_name == cfg.sites_file and pop_name == cfg.population_file:
                shutil.copy(src_cfg, bundle_dir / CONFIG_NAME)
            else:
                # flatten nested file references so the snapshot is portable
                flat = dc_replace(cfg, sites_file=sites_name, population_file=pop_name)
                (bundle_dir / CONFIG_NAME).write_text(render_config(flat))
            shutil.copy(src_base / cfg.sites_file, bundle_dir / sites_name)
            shutil.copy(src_base / cfg.population_file, bundle_dir / pop_name)
        else:
            cfg = parse_config(req.scenario_cfg, CONFIG_NAME)
            for name in (cfg.sites_file, cfg.population_file):
                # uploaded bundles may not point the [files] keys outside
                # their own directory
                if Path(name).name != name:
                    raise ApiError(400, f"[files] entries must be plain file names, got {name!r}")
            (bundle_dir / CONFIG_NAME).write_text(req.scenario_cfg)
            (bundle_dir / cfg.sites_file).write_text(req.sites_csv)
            (bundle_dir / cfg.population_file).write_text(req.population_csv)
        return root / sid

    def _restore_sessions() -> None:
        if not root.is_dir():
            return
        for entry in sorted(root.iterdir()):
            bundle = entry / "bundle"
            if not (bundle / CONFIG_NAME).is_file():
                continue
            try:
                scenario = load_scenario(bundle)
                baseline = _compute_map(scenario, n_workers)
                session = _Session(
                    id=entry.name,
                    scenario=scenario,
                    baseline_map=baseline,
                    current_map=baseline,
                    store_dir=entry,
                )
                log_path = entry / "edit_log.json"
                if log_path.is_file():
                    for op in json.loads(log_path.read_text()):
                        _replay_op(session, op)
                        session.edit_log.append(op)
                        session.revision += 1
                sessions[entry.name] = session
            except (ConfigError, GeodataError, ValueError, OSError) as e:
                print(f"warning: could not restore session {entry.name}: {e}")

    # ---- mutation core ---------------------------------------------------

    def _apply_add(session: _Session, payload: dict, full: bool) -> SiteRecord:
        scenario = session.scenario
        point = GeoPoint(payload["lat"], payload["lon"])
        if scenario.aoi.cell_index(point) is None:
            raise ApiError(422, "position outside the area of interest")
        sid = payload.get("id")
        if sid is None:
            n = 1 + sum(1 for s in scenario.sites if s.id.startswith("user-"))
            sid = f"user-{n}"
            while any(s.id == sid for s in scenario.sites):
                n += 1
                sid = f"user-{n}"
        elif any(s.id == sid for s in scenario.sites):
            raise ApiError(409, f"site id {sid!r} already exists")
        try:
            record = SiteRecord(
                id=sid,
                point=point,
                structure=Structure.WIND_TURBINE,
                tech=Tech.G4,
                height_m=payload.get("height_m") or WT_HEIGHT_M,
                power_w=payload.get("power_w") or WT_POWER_W,
                farm_id=payload.get("farm_id"),
            )
        except GeodataError as e:
            raise ApiError(422, str(e)) from None
        new_sites, demoted = dedupe_farms(scenario.sites + [record])
        new_scenario = scenario.with_sites(new_sites)
        changed = [record] + [scenario.site_by_id(d) for d in demoted if d != record.id]
        session.current_map = _recompute(
            session.current_map, new_scenario, changed, n_workers, full
        )
        session.scenario = new_scenario
        return record

    def _apply_equip(session: _Session, sid: str, full: bool) -> None:
        scenario = session.scenario
        try:
            site = scenario.site_by_id(sid)
        except KeyError:
            raise ApiError(404, f"unknown site id {sid!r}") from None
        if site.tech is not Tech.NONE:
            raise ApiError(409, f"site {sid!r} is already equipped")
        new_scenario = scenario.with_equipped([sid])
        before = {s.id: s.tech for s in scenario.sites}
        # the equipped site, plus anything the farm rule demoted; an equip
        # that the farm rule immediately undoes leaves this empty (no-op map)
        changed = [s for s in new_scenario.sites if s.tech is not before[s.id]]
        session.current_map = _recompute(
            session.current_map, new_scenario, changed, n_workers, full
        )
        session.scenario = new_scenario

    def _apply_remove(session: _Session, sid: str, full: bool) -> None:
        scenario = session.scenario
        try:
            site = scenario.site_by_id(sid)
        except KeyError:
            raise ApiError(404, f"unknown site id {sid!r}") from None
        new_scenario = scenario.with_sites([s for s in scenario.sites if s.id != sid])
        changed = [site] if site.active else []
        session.current_map = _recompute(
            session.current_map, new_scenario, changed, n_workers, full
        )
        session.scenario = new_scenario

    def _apply_confirm(session: _Session, selected: list[str]) -> None:
        scenario = session.scenario
        new_scenario = scenario.with_equipped(selected)
        session.current_map = _compute_map(new_scenario, n_workers)
        session.scenario = new_scenario

    def _replay_op(session: _Session, op: dict) -> None:
        kind = op["op"]
        if kind == "add":
            _apply_add(session, op["site"], op.get("full", False))
        elif kind == "equip":
            _apply_equip(session, op["id"], op.get("full", False))
        elif kind == "remove":
            _apply_remove(session, op["id"], op.get("full", False))
        elif kind == "confirm_plan":
            _apply_confirm(session, op["selected"])
        else:
            raise ValueError(f"unknown edit-log op {kind!r}")

    def _get_session(sid: str) -> _Session:
        with sessions_lock:
            session = sessions.get(sid)
        if session is None:
            raise ApiError(404, f"unknown session {sid!r}")
        return session

    def _mutation_response(session: _Session, old_map: RateMap, extra: dict | None = None) -> dict:
        body = {
            "revision": session.revision,
            "metrics": _metrics(session),
            "delta": _delta_summary(old_map, session.current_map, session.scenario.population),
        }
        if extra:
            body.update(extra)
        return body

    # ---- routes ----------------------------------------------------------

    @app.get("/healthz")
    def healthz():
        with sessions_lock:
            n = len(sessions)
        return {"status": "ok", "sessions": n}

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateSessionRequest):
        inline = (req.scenario_cfg, req.sites_csv, req.population_csv)
        if req.path is not None:
            if any(v is not None for v in inline):
                raise ApiError(400, "pass either a server-side path or inline bundle texts")
        elif not all(v is not None for v in inline):
            raise ApiError(400, "inline bundles need scenario_cfg, sites_csv and population_csv")

        try:
            if req.path is not None:
                scenario = load_scenario(req.path)
            else:
                scenario = load_scenario_texts(req.scenario_cfg, req.sites_csv, req.population_csv)
        except (ConfigError, GeodataError) as e:
            raise ApiError(400, str(e)) from None
        except OSError as e:
            raise ApiError(400, f"cannot read bundle: {e}") from None

        rows, cols = scenario.aoi.shape
        if rows > cap or cols > cap:
            raise ApiError(413, f"grid {rows}x{cols} exceeds the {cap}x{cap} session cap")

        sid = secrets.token_hex(8)
        baseline = _compute_map(scenario, n_workers)
        try:
            store = _store_bundle(sid, req)
        except OSError as e:
            raise ApiError(400, f"cannot persist bundle: {e}") from None
        session = _Session(
            id=sid,
            scenario=scenario,
            baseline_map=baseline,
            current_map=baseline,
            store_dir=store,
        )
        _persist_log(session)
        with sessions_lock:
            sessions[sid] = session
        return {
            "id": sid,
            "revision": 0,
            "metrics": _metrics(session),
            "grid": _grid_payload(session),
            "sites": [_site_payload(s) for s in scenario.sites],
        }

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        session = _get_session(sid)
        with session.lock:
            base_metrics = export.metrics_dict(session.baseline_map, session.scenario.population)
            return {
                "id": session.id,
                "revision": session.revision,
                "metrics": _metrics(session),
                "baseline_metrics": base_metrics,
                "grid": _grid_payload(session),
                "sites": [_site_payload(s) for s in session.scenario.sites],
                "edit_log_length": len(session.edit_log),
                "plan_pending": session.last_plan is not None,
                "plan_running": session.plan_running,
            }

    @app.post("/sessions/{sid}/sites")
    def add_site(sid: str, req: AddSiteRequest):
        session = _get_session(sid)
        with session.lock:
            old_map = session.current_map
            record = _apply_add(session, req.model_dump(), req.full_recompute)
            session.revision += 1
            session.edit_log.append(
                {
                    "op": "add",
                    "site": {
                        "lat": record.point.lat,
                        "lon": record.point.lon,
                        "id": record.id,
                        "height_m": record.height_m,
                        "power_w": record.power_w,
                        "farm_id": record.farm_id,
                    },
                    "full": req.full_recompute,
                }
            )
            _persist_log(session)
            return _mutation_response(session, old_map, {"id": record.id})

    @app.post("/sessions/{sid}/sites/{site_id}/equip")
    def equip_site(sid: str, site_id: str, full_recompute: bool = Query(False)):
        session = _get_session(sid)
        with session.lock:
            old_map = session.current_map
            _apply_equip(session, site_id, full_recompute)
            session.revision += 1
            session.edit_log.append({"op": "equip", "id": site_id, "full": full_recompute})
            _persist_log(session)
            return _mutation_response(session, old_map)

    @app.delete("/sessions/{sid}/sites/{site_id}")
    def remove_site(sid: str, site_id: str, full_recompute: bool = Query(False)):
        session = _get_session(sid)
        with session.lock:
            old_map = session.current_map
            _apply_remove(session, site_id, full_recompute)
            session.revision += 1
            session.edit_log.append({"op": "remove", "id": site_id, "full": full_recompute})
            _persist_log(session)
            return _mutation_response(session, old_map)

    @app.get("/sessions/{sid}/ratemap")
    def get_ratemap(sid: str, layer: str = Query("rate")):
        session = _get_session(sid)
        name = "delta_vs_baseline" if layer == "delta" else layer
        if name not in _LAYERS:
            raise ApiError(400, f"unknown layer {layer!r}; known: {list(_LAYERS)} (alias: delta)")
        # maps are replaced wholesale by mutations, never edited in place, so
        # a reference grabbed under the lock is a consistent snapshot
        with session.lock:
            cur = session.current_map
            base = session.baseline_map
            revision = session.revision
        if name == "rate":
            values = cur.rate_mbps
            bands, colors = export.RATE_BANDS_MBPS, export.RATE_BAND_COLORS
        elif name == "p_cov":
            values = cur.p_cov
            bands, colors = export.FRACTION_BANDS, export.RATE_BAND_COLORS
        elif name == "share4":
            values = cur.share4
            bands, colors = export.FRACTION_BANDS, export.RATE_BAND_COLORS
        else:
            values = cur.rate_mbps - base.rate_mbps
            bands, colors = export.DELTA_BANDS_MBPS, export.DELTA_BAND_COLORS
        payload = {
            "layer": name,
            "revision": revision,
            "values": values.ravel().tolist(),
            "bands": {"breakpoints": list(bands), "colors": list(colors)},
        }
        payload.update(_grid_payload(session))
        return payload

    @app.post("/sessions/{sid}/plan")
    def run_plan(sid: str, req: PlanRequest):
        session = _get_session(sid)
        with session.lock:
            if session.plan_running:
                raise ApiError(409, "a plan is already running for this session")
            session.plan_running = True
            scenario = session.scenario
            base_revision = session.revision
        try:
            cands = planner.candidate_set(scenario)
            if req.k < 0 or req.k > len(cands):
                raise ApiError(422, f"k must be within [0, {len(cands)}], got {req.k}")
            try:
                if req.k == 0:
                    plan = planner.empty_plan(scenario, workers=n_workers)
                elif req.exhaustive:
                    plan = planner.exhaustive_select(scenario, cands, req.k, workers=n_workers)
                else:
                    plan = planner.greedy_select(scenario, cands, req.k, workers=n_workers)
            except ValueError as e:
                # subset guard, zero population, and similar objective failures
                raise ApiError(422, str(e)) from None
        finally:
            with session.lock:
                session.plan_running = False
        with session.lock:
            doc = plan.to_dict()
            doc["base_revision"] = base_revision
            doc["candidate_ids"] = cands.ids
            session.last_plan = doc
            return doc

    @app.post("/sessions/{sid}/plan/confirm")
    def confirm_plan(sid: str):
        session = _get_session(sid)
        with session.lock:
            if session.last_plan is None:
                raise ApiError(409, "no plan to confirm")
            if session.last_plan["base_revision"] != session.revision:
                raise ApiError(409, "scenario changed since the plan was computed; re-run the plan")
            old_map = session.current_map
            selected = session.last_plan["selected"]
            _apply_confirm(session, selected)
            session.revision += 1
            session.edit_log.append({"op": "confirm_plan", "selected": selected})
            session.last_plan = None
            _persist_log(session)
            return _mutation_response(session, old_map, {"selected": selected})

    _restore_sessions()
    return app


app = create_app()


def main(argv=None) -> int:
    import argparse

    import uvicorn

    p = argparse.ArgumentParser(prog="wtbs-service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--session-dir", default=None)
    p.add_argument("--grid-cap", type=int, default=None)
    p.add_argument("--workers", type=int, default=None, help="simulation workers per map")
    args = p.parse_args(argv)
    uvicorn.run(
        create_app(session_root=args.session_dir, grid_cap=args.grid_cap, workers=args.workers),
        host=args.host,
        port=args.port,
        log_level="warning",
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
