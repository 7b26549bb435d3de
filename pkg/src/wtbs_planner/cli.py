"""Batch command line: simulate a scenario, plan placements, sweep the bias.

Exit codes: 0 success, 1 input or config error, 2 simulation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import export, planner
from .geodata import GeodataError, Structure, Tech, parse_sites
from .netsim import NoActiveBsError, simulate_map
from .scenario import ConfigError, Scenario, load_scenario

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_SIM = 2


class _InputError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="wtbs",
        description="Coverage simulation and placement planning for turbine-mounted base stations",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="scenario bundle directory or scenario.cfg path")
        sp.add_argument("--out", default="out", help="output directory (default: ./out)")
        sp.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        sp.add_argument("--iterations", type=int, default=None, help="override Monte Carlo iterations")
        sp.add_argument(
            "--workers",
            type=int,
            default=None,
            help="worker processes for map simulation (default: $WTBS_WORKERS or 1)",
        )

    sp = sub.add_parser("simulate", help="simulate the scenario and export the rate map")
    common(sp)

    sp = sub.add_parser("plan", help="select turbine sites to equip")
    common(sp)
    sp.add_argument("--k", type=int, required=True, help="number of sites to pick")
    sp.add_argument("--exhaustive", action="store_true", help="try every subset instead of greedy")
    sp.add_argument("--candidates", default=None, help="extra candidate sites CSV (new builds)")

    sp = sub.add_parser("sweep-bias", help="evaluate the metric across association bias values")
    common(sp)
    sp.add_argument("--bias-list", required=True, help="comma-separated bias values, e.g. 1,10,29")

    return p


def _workers(args) -> int:
    if args.workers is not None:
        return max(1, args.workers)
    env = os.environ.get("WTBS_WORKERS", "")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise _InputError(f"WTBS_WORKERS is not an integer: {env!r}") from None
    return 1


def _load(args) -> Scenario:
    try:
        scenario = load_scenario(args.config)
    except (ConfigError, GeodataError, OSError) as e:
        raise _InputError(str(e)) from None
    sim = scenario.sim
    if args.seed is not None:
        sim = replace(sim, seed=args.seed)
    if args.iterations is not None:
        try:
            sim = replace(sim, iterations=args.iterations)
        except ValueError as e:
            raise _InputError(str(e)) from None
    scenario.sim = sim
    return scenario


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    scenario = _load(args)
    out = _outdir(args)
    rate_map = simulate_map(scenario, workers=_workers(args))
    (out / "ratemap.csv").write_text(export.ratemap_csv(rate_map))
    (out / "ratemap.png").write_bytes(export.ratemap_png(rate_map))
    (out / "metrics.json").write_text(export.metrics_json(rate_map, scenario.population))
    metrics = export.metrics_dict(rate_map, scenario.population)
    print(f"avg_rate_mbps={metrics['avg_rate_mbps']:.6f} share4={metrics['share4']:.4f}")
    print(f"wrote {out / 'ratemap.csv'}, {out / 'ratemap.png'}, {out / 'metrics.json'}")
    return EXIT_OK


def _load_candidates(args, scenario: Scenario) -> planner.CandidateSet:
    extra = []
    if args.candidates:
        path = Path(args.candidates)
        if not path.is_file():
            raise _InputError(f"candidates file not found: {path}")
        try:
            extra = parse_sites(path.read_text())
        except GeodataError as e:
            raise _InputError(f"{path}: {e}") from None
        bad = [s.id for s in extra if s.structure is not Structure.WIND_TURBINE or s.tech is not Tech.NONE]
        if bad:
            raise _InputError(f"{path}: candidates must be unequipped wind turbines: {bad}")
    try:
        return planner.candidate_set(scenario, extra)
    except ValueError as e:
        raise _InputError(str(e)) from None


def cmd_plan(args) -> int:
    scenario = _load(args)
    out = _outdir(args)
    cands = _load_candidates(args, scenario)
    if args.k < 0 or args.k > len(cands):
        raise _InputError(f"--k must be within [0, {len(cands)}], got {args.k}")
    workers = _workers(args)

    if args.k == 0:
        plan = planner.empty_plan(scenario, workers=workers,
                                  method="exhaustive" if args.exhaustive else "greedy")
    elif args.exhaustive:
        plan = planner.exhaustive_select(scenario, cands, args.k, workers=workers)
    else:
        plan = planner.greedy_select(scenario, cands, args.k, workers=workers)

    before_map = _map_or_zero(scenario, workers)
    after_scenario = planner.apply_equipment(scenario, cands, plan.selected)
    after_map = _map_or_zero(after_scenario, workers)
    delta = None
    if before_map is not None:
        (out / "before.png").write_bytes(export.ratemap_png(before_map))
    if after_map is not None:
        (out / "after.png").write_bytes(export.ratemap_png(after_map))
    if before_map is not None and after_map is not None:
        from .netsim import diff_maps

        delta = diff_maps(before_map, after_map)
        (out / "delta.png").write_bytes(export.delta_png(delta))

    doc = plan.to_dict()
    doc["k"] = args.k
    doc["candidate_ids"] = cands.ids
    doc["heatmaps"] = {"before": "before.png", "after": "after.png", "delta": "delta.png"}
    if delta is not None:
        doc["delta_summary"] = {
            "max_gain_mbps": delta.max_gain_mbps,
            "max_loss_mbps": delta.max_loss_mbps,
            "frac_degraded": delta.frac_degraded,
        }
    (out / "plan.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"selected={','.join(plan.selected) or '(none)'}")
    print(f"metric_before={plan.metric_before:.6f} metric_after={plan.metric_after:.6f}")
    print(f"wrote {out / 'plan.json'}")
    return EXIT_OK


def _map_or_zero(scenario: Scenario, workers: int):
    """Rate map for heatmap export; None when nothing is equipped."""
    try:
        return simulate_map(scenario, workers=workers)
    except NoActiveBsError:
        return None


def cmd_sweep_bias(args) -> int:
    scenario = _load(args)
    out = _outdir(args)
    tokens = [t for t in args.bias_list.split(",") if t.strip()]
    if not tokens:
        raise _InputError("--bias-list must contain at least one value")
    try:
        values = [float(t) for t in tokens]
    except ValueError:
        raise _InputError(f"--bias-list contains a non-number: {args.bias_list!r}") from None
    try:
        best, curve = planner.bias_sweep(scenario, bias_values=values, workers=_workers(args))
    except ValueError as e:
        raise _InputError(str(e)) from None
    lines = ["bias,avg_rate_mbps"]
    for b, m in curve:
        lines.append(f"{b!r},{m!r}")
    (out / "bias_curve.csv").write_text("\n".join(lines) + "\n")
    print(f"best_bias={best!r}")
    print(f"wrote {out / 'bias_curve.csv'}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse uses exit code 2 for usage errors; those are input errors here
        return EXIT_OK if e.code == 0 else EXIT_INPUT

    handlers = {"simulate": cmd_simulate, "plan": cmd_plan, "sweep-bias": cmd_sweep_bias}
    try:
        return handlers[args.command](args)
    except _InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (NoActiveBsError, ValueError, ArithmeticError) as e:
        print(f"simulation error: {e}", file=sys.stderr)
        return EXIT_SIM


if __name__ == "__main__":
    sys.exit(main())
