"""Comparison policies layered on the exact planner.

ms_plus restricts the planner to configurations holding exactly one
variant, scored with the same objective and tie-breaking. vpa_plus pins a
single variant and only rescales its cores to the smallest allocation
covering the predicted load, accuracy-unaware, capped at the budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import InfeasibleError
from .planner import (
    Assignment,
    Plan,
    PlannerParams,
    VariantModel,
    _beats,
    _ordered,
    _score_config,
    average_accuracy,
    loading_cost,
    objective,
)


@dataclass
class BaselineSpec:
    kind: str  # "ms_plus" or "vpa_plus"
    fixed_variant_id: str | None = None

    def __post_init__(self):
        if self.kind not in ("ms_plus", "vpa_plus"):
            raise ValueError(f"unknown baseline kind {self.kind!r}")
        if self.kind == "vpa_plus" and not self.fixed_variant_id:
            raise ValueError("vpa_plus requires fixed_variant_id")


def solve_ms_plus(
    variants: Sequence[VariantModel],
    params: PlannerParams,
    prev_config: Mapping[str, int] | None = None,
) -> Plan:
    """Best single-variant plan under the shared objective."""
    ordered = _ordered(variants)
    best: Plan | None = None
    for v in ordered:
        for cores in range(params.min_cores_per_variant, params.budget_cores + 1):
            if v.latency_ms(cores) > params.slo_ms:
                continue
            if v.throughput(cores) < params.predicted_load_rps:
                continue
            plan = _score_config({v.variant_id: cores}, ordered, params, prev_config)
            if best is None or _beats(plan, best):
                best = plan
    if best is None:
        raise InfeasibleError(
            f"no single variant serves {params.predicted_load_rps:.3f} rps "
            f"within {params.budget_cores} cores under {params.slo_ms} ms"
        )
    return best


def solve_vpa_plus(
    fixed_variant: VariantModel,
    params: PlannerParams,
    prev_config: Mapping[str, int] | None = None,
) -> Plan:
    """Rescale one pinned variant to the smallest covering allocation.

    When even the full budget cannot cover the load (or meet the SLO) the
    plan is still returned with the budget allocation, flagged
    under_provisioned, mirroring a saturated vertical autoscaler.
    """
    lam = params.predicted_load_rps
    cores = None
    for n in range(1, params.budget_cores + 1):
        if fixed_variant.latency_ms(n) <= params.slo_ms and fixed_variant.throughput(n) >= lam:
            cores = n
            break
    flagged = cores is None
    if flagged:
        cores = params.budget_cores
    config = {fixed_variant.variant_id: cores}
    assignments = [Assignment(fixed_variant.variant_id, cores, lam)]
    aa = average_accuracy(assignments, [fixed_variant])
    rc = cores / params.budget_cores
    lc = loading_cost(config, prev_config, [fixed_variant])
    return Plan(
        assignments=assignments,
        avg_accuracy=aa,
        resource_cost_norm=rc,
        loading_cost_norm=lc,
        objective=objective(aa, rc, lc, params),
        under_provisioned=flagged,
    )
