"""Equipage planning: score turbine subsets, pick k sites, sweep the bias.

All evaluations inside one planning run share the scenario seed, so Monte
Carlo noise cancels out of comparisons (common random numbers); exact metric
ties are then meaningful and resolve by candidate id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import combinations

from .geodata import SiteRecord, Structure, Tech
from .netsim import NoActiveBsError, SimConfig, population_weighted_average, simulate_map
from .scenario import Scenario


@dataclass(frozen=True)
class Candidate:
    """A turbine that could be equipped: an existing unequipped one, or a
    hypothetical new build."""

    site: SiteRecord
    existing: bool

    def __post_init__(self):
        if self.site.structure is not Structure.WIND_TURBINE:
            raise ValueError(f"candidate {self.site.id} must be a wind turbine")
        if self.site.tech is not Tech.NONE:
            raise ValueError(f"candidate {self.site.id} must start unequipped")


@dataclass
class CandidateSet:
    candidates: list[Candidate]

    def __post_init__(self):
        ids = [c.site.id for c in self.candidates]
        if len(set(ids)) != len(ids):
            raise ValueError("candidate ids must be unique")

    @property
    def ids(self) -> list[str]:
        return [c.site.id for c in self.candidates]

    def __len__(self) -> int:
        return len(self.candidates)


@dataclass
class PlacementPlan:
    selected: list[str]
    metric_before: float
    metric_after: float
    per_step_metrics: list[float]
    method: str = "greedy"
    evaluations: int = 0
    baseline_no_bs: bool = False

    def to_dict(self) -> dict:
        return {
            "selected": list(self.selected),
            "metric_before": self.metric_before,
            "metric_after": self.metric_after,
            "per_step_metrics": list(self.per_step_metrics),
            "method": self.method,
            "evaluations": self.evaluations,
            "baseline_no_bs": self.baseline_no_bs,
        }


def candidate_set(scenario: Scenario, extra_sites: list[SiteRecord] = ()) -> CandidateSet:
    """Candidates = existing unequipped turbines plus any proposed new sites.

    New site ids must not collide with ids already present in the scenario.
    """
    cands = [
        Candidate(site=s, existing=True)
        for s in scenario.sites
        if s.structure is Structure.WIND_TURBINE and not s.active
    ]
    known = {s.id for s in scenario.sites}
    for s in extra_sites:
        if s.id in known:
            raise ValueError(f"new candidate id {s.id!r} collides with an existing site")
        cands.append(Candidate(site=s, existing=False))
    return CandidateSet(cands)


def _as_candidate_set(scenario: Scenario, candidates) -> CandidateSet:
    if candidates is None:
        return candidate_set(scenario)
    if isinstance(candidates, CandidateSet):
        return candidates
    return CandidateSet(list(candidates))


def apply_equipment(scenario: Scenario, cands: CandidateSet, equip_ids) -> Scenario:
    """Scenario with the chosen candidates carrying 4G (farm rule re-applied).

    Unselected new-build candidates do not exist in the result.
    """
    ids = set(equip_ids)
    unknown = ids - set(cands.ids)
    if unknown:
        raise ValueError(f"unknown candidate ids: {sorted(unknown)}")
    existing = [c.site.id for c in cands.candidates if c.existing and c.site.id in ids]
    new_sites = [
        replace(c.site, tech=Tech.G4)
        for c in cands.candidates
        if not c.existing and c.site.id in ids
    ]
    out = scenario.with_sites(scenario.sites + new_sites)
    # with_equipped also re-applies the farm rule, covering new builds that
    # share a farm with an already-equipped turbine
    return out.with_equipped(existing)


def evaluate_detailed(
    scenario: Scenario,
    equip_ids,
    cfg: SimConfig | None = None,
    candidates: CandidateSet | None = None,
    workers: int = 1,
) -> tuple[float, bool]:
    """Population-weighted average rate with the given candidates equipped.

    Returns (metric, no_active_bs).  A scenario with no equipped site at
    all cannot be simulated; it scores 0 with the flag set.
    """
    cfg = cfg or scenario.sim
    cands = _as_candidate_set(scenario, candidates)
    modified = apply_equipment(scenario, cands, equip_ids)
    try:
        rate_map = simulate_map(modified, cfg, workers=workers)
    except NoActiveBsError:
        return 0.0, True
    return population_weighted_average(rate_map, modified.population), False


def evaluate(
    scenario: Scenario,
    equip_ids,
    cfg: SimConfig | None = None,
    candidates: CandidateSet | None = None,
    workers: int = 1,
) -> float:
    return evaluate_detailed(scenario, equip_ids, cfg, candidates, workers)[0]


def empty_plan(
    scenario: Scenario, cfg: SimConfig | None = None, workers: int = 1, method: str = "greedy"
) -> PlacementPlan:
    base, no_bs = evaluate_detailed(scenario, [], cfg, workers=workers)
    return PlacementPlan(
        selected=[],
        metric_before=base,
        metric_after=base,
        per_step_metrics=[],
        method=method,
        evaluations=1,
        baseline_no_bs=no_bs,
    )


def greedy_select(
    scenario: Scenario,
    candidates: CandidateSet | None,
    k: int,
    cfg: SimConfig | None = None,
    workers: int = 1,
) -> PlacementPlan:
    """Forward selection: k rounds, each keeping the candidate with the best
    metric (exact ties go to the lowest id)."""
    cands = _as_candidate_set(scenario, candidates)
    if not 1 <= k <= len(cands):
        raise ValueError(f"k must be within [1, {len(cands)}], got {k}")
    cfg = cfg or scenario.sim

    base, no_bs = evaluate_detailed(scenario, [], cfg, candidates=cands, workers=workers)
    evaluations = 1
    chosen: list[str] = []
    per_step: list[float] = []
    remaining = sorted(cands.ids)
    for _ in range(k):
        best_id = None
        best_metric = -math.inf
        for cid in remaining:  # ascending id order makes ties pick the lowest id
            metric = evaluate(scenario, chosen + [cid], cfg, candidates=cands, workers=workers)
            evaluations += 1
            if metric > best_metric:
                best_metric = metric
                best_id = cid
        chosen.append(best_id)
        remaining.remove(best_id)
        per_step.append(best_metric)

    return PlacementPlan(
        selected=chosen,
        metric_before=base,
        metric_after=per_step[-1],
        per_step_metrics=per_step,
        method="greedy",
        evaluations=evaluations,
        baseline_no_bs=no_bs,
    )


EXHAUSTIVE_GUARD = 10_000


def exhaustive_select(
    scenario: Scenario,
    candidates: CandidateSet | None,
    k: int,
    cfg: SimConfig | None = None,
    workers: int = 1,
) -> PlacementPlan:
    """Evaluate every k-subset and keep the best (ties: lexicographically
    smallest id set).  Guarded to C(n, k) <= 10^4 subsets."""
    cands = _as_candidate_set(scenario, candidates)
    if not 0 <= k <= len(cands):
        raise ValueError(f"k must be within [0, {len(cands)}], got {k}")
    n_subsets = math.comb(len(cands), k)
    if n_subsets > EXHAUSTIVE_GUARD:
        raise ValueError(
            f"C({len(cands)}, {k}) = {n_subsets} subsets exceeds the exhaustive "
            f"guard of {EXHAUSTIVE_GUARD}; use greedy_select"
        )
    cfg = cfg or scenario.sim

    base, no_bs = evaluate_detailed(scenario, [], cfg, candidates=cands, workers=workers)
    evaluations = 1
    if k == 0:
        return PlacementPlan(
            selected=[],
            metric_before=base,
            metric_after=base,
            per_step_metrics=[],
            method="exhaustive",
            evaluations=evaluations,
            baseline_no_bs=no_bs,
        )

    best_ids = None
    best_metric = -math.inf
    # combinations of the sorted id list come out in lexicographic order, so
    # a strict improvement test leaves the smallest id-set in place on ties
    for subset in combinations(sorted(cands.ids), k):
        metric = evaluate(scenario, subset, cfg, candidates=cands, workers=workers)
        evaluations += 1
        if metric > best_metric:
            best_metric = metric
            best_ids = list(subset)

    return PlacementPlan(
        selected=best_ids,
        metric_before=base,
        metric_after=best_metric,
        per_step_metrics=[best_metric],
        method="exhaustive",
        evaluations=evaluations,
        baseline_no_bs=no_bs,
    )


def bias_sweep(
    scenario: Scenario,
    cfg: SimConfig | None = None,
    bias_values: list[float] = (),
    workers: int = 1,
) -> tuple[float, list[tuple[float, float]]]:
    """Metric per association bias, common seed.  Returns (best bias, curve);
    the curve is ascending in bias and ties resolve to the smallest bias."""
    values = sorted(set(float(b) for b in bias_values))
    if not values:
        raise ValueError("bias_values must be non-empty")
    if values[0] < 1.0:
        raise ValueError("bias values must be at least 1")
    cfg = cfg or scenario.sim

    curve: list[tuple[float, float]] = []
    best_bias = None
    best_metric = -math.inf
    for b in values:
        metric = evaluate(scenario, [], replace(cfg, bias=b), workers=workers)
        curve.append((b, metric))
        if metric > best_metric:  # strict: ties keep the smaller bias
            best_metric = metric
            best_bias = b
    return best_bias, curve
