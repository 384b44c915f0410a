"""Exact solver for the variant-set selection problem.

Given fitted per-variant performance models, a CPU budget B, a latency
target and a predicted request rate, enumerate every feasible assignment
of cores to a subset of variants, split the load across each candidate set
by accuracy-greedy quotas, and return the assignment maximizing

    alpha * avg_accuracy - (beta * resource_cost + gamma * loading_cost)

where resource cost is total cores normalized by B and loading cost is the
largest readiness time among variants that must be (re)loaded, normalized
by the largest readiness time overall.

Enumeration is exhaustive over the feasible space, so optimality is exact;
`brute_force_solve` re-derives the same answer by a raw scan of the whole
allocation lattice and serves as the test oracle. The number of candidate
configurations grows like C(B + |variants|, |variants|); instances are
capped at MAX_VARIANTS variants and a MAX_BUDGET-core budget, which keeps
a solve well under a second on current hardware.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

from .errors import (
    InfeasibleError,
    InstanceTooLargeError,
    InsufficientCapacityError,
    UndefinedAccuracyError,
)
from .profiles import PerfModel, VariantProfile, fit_perf_model, predict_latency, predict_throughput

MAX_VARIANTS = 8
MAX_BUDGET = 64

ORACLE_MAX_VARIANTS = 5
ORACLE_MAX_BUDGET = 16


@dataclass
class VariantModel:
    """Planner-facing bundle: identity, accuracy, readiness and perf model."""

    variant_id: str
    accuracy: float
    readiness_time_s: float
    perf: PerfModel

    @classmethod
    def from_profile(cls, profile: VariantProfile) -> "VariantModel":
        return cls(
            variant_id=profile.variant_id,
            accuracy=profile.accuracy,
            readiness_time_s=profile.readiness_time_s,
            perf=fit_perf_model(profile),
        )

    def throughput(self, cores: int) -> float:
        return predict_throughput(self.perf, cores)

    def latency_ms(self, cores: int) -> float:
        return predict_latency(self.perf, cores)


def variant_models(profiles: Sequence[VariantProfile]) -> list[VariantModel]:
    return [VariantModel.from_profile(p) for p in profiles]


@dataclass
class PlannerParams:
    """Inputs of one solve: budget, SLO, objective weights and the load."""

    budget_cores: int
    slo_ms: float = 750.0
    alpha: float = 1.0
    beta: float = 0.05
    gamma: float = 0.05
    min_cores_per_variant: int = 1
    predicted_load_rps: float = 1.0

    def __post_init__(self):
        if not isinstance(self.budget_cores, int) or self.budget_cores < 1:
            raise ValueError("budget_cores must be a positive integer")
        if not isinstance(self.min_cores_per_variant, int) or self.min_cores_per_variant < 1:
            raise ValueError("min_cores_per_variant must be a positive integer")
        if self.budget_cores < self.min_cores_per_variant:
            raise ValueError("budget_cores must be >= min_cores_per_variant")
        if self.slo_ms <= 0:
            raise ValueError("slo_ms must be positive")
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("objective weights must be non-negative")
        if self.alpha + self.beta + self.gamma <= 0:
            raise ValueError("at least one objective weight must be positive")
        # Zero load makes the average accuracy undefined; clamp to 1 rps.
        self.predicted_load_rps = max(1.0, float(self.predicted_load_rps))


@dataclass
class Assignment:
    variant_id: str
    cores: int
    quota_rps: float


@dataclass
class Plan:
    """Solver output: per-variant cores and quotas plus the score breakdown."""

    assignments: list[Assignment]
    avg_accuracy: float
    resource_cost_norm: float
    loading_cost_norm: float
    objective: float
    under_provisioned: bool = False

    @property
    def total_cores(self) -> int:
        return sum(a.cores for a in self.assignments)

    def config(self) -> dict[str, int]:
        return {a.variant_id: a.cores for a in self.assignments}

    def sorted_items(self) -> list[tuple[str, int]]:
        return sorted((a.variant_id, a.cores) for a in self.assignments)

    def to_dict(self) -> dict:
        out = {
            "assignments": [
                {"variant": a.variant_id, "cores": a.cores, "quota_rps": a.quota_rps}
                for a in self.assignments
            ],
            "aa": self.avg_accuracy,
            "rc": self.resource_cost_norm,
            "lc": self.loading_cost_norm,
            "objective": self.objective,
        }
        if self.under_provisioned:
            out["under_provisioned"] = True
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "Plan":
        return cls(
            assignments=[
                Assignment(str(a["variant"]), int(a["cores"]), float(a["quota_rps"]))
                for a in obj["assignments"]
            ],
            avg_accuracy=float(obj["aa"]),
            resource_cost_norm=float(obj["rc"]),
            loading_cost_norm=float(obj["lc"]),
            objective=float(obj["objective"]),
            under_provisioned=bool(obj.get("under_provisioned", False)),
        )


def _ordered(variants: Sequence[VariantModel]) -> list[VariantModel]:
    """Canonical planner order: accuracy descending, id ascending on ties."""
    seen = set()
    for v in variants:
        if v.variant_id in seen:
            raise ValueError(f"duplicate variant_id {v.variant_id!r}")
        seen.add(v.variant_id)
    return sorted(variants, key=lambda v: (-v.accuracy, v.variant_id))


def _check_size(variants: Sequence[VariantModel], params: PlannerParams) -> None:
    if len(variants) > MAX_VARIANTS:
        raise InstanceTooLargeError(
            f"{len(variants)} variants exceeds the cap of {MAX_VARIANTS}"
        )
    if params.budget_cores > MAX_BUDGET:
        raise InstanceTooLargeError(
            f"budget {params.budget_cores} exceeds the cap of {MAX_BUDGET}"
        )


def _walk_feasible(
    ordered: Sequence[VariantModel],
    params: PlannerParams,
    prev_config: Mapping[str, int] | None,
    visit,
) -> None:
    """Visit every feasible core-allocation map exactly once.

    Feasible means: cores per included variant within
    [min_cores_per_variant, budget], total cores within budget, every
    included variant meeting the SLO at its allocation, and total predicted
    throughput at least the predicted load. Subtrees that cannot reach the
    remaining load even at full budget are skipped; that bound never
    removes a feasible map.

    The walk adds variants in accuracy order, which is also the greedy
    quota order, so quota, accuracy and cost accumulate incrementally with
    float operations identical to assign_quotas / average_accuracy /
    loading_cost on the finished map. visit(config, total_cores, quota_sum,
    weighted_quota_sum, raw_loading) is called on the live config dict.
    """
    budget = params.budget_cores
    lam = params.predicted_load_rps
    prev = prev_config or {}
    allowed: list[list[int]] = []
    rates: list[dict[int, float]] = []
    for v in ordered:
        cores_ok = [
            n
            for n in range(params.min_cores_per_variant, budget + 1)
            if v.latency_ms(n) <= params.slo_ms
        ]
        allowed.append(cores_ok)
        rates.append({n: v.throughput(n) for n in cores_ok})
    best_rate = [max(r.values(), default=0.0) for r in rates]
    suffix_cap = [0.0] * (len(ordered) + 1)
    for i in range(len(ordered) - 1, -1, -1):
        suffix_cap[i] = suffix_cap[i + 1] + best_rate[i]
    accuracies = [v.accuracy for v in ordered]
    readiness = [v.readiness_time_s for v in ordered]
    ids = [v.variant_id for v in ordered]

    config: dict[str, int] = {}

    def rec(
        start: int,
        budget_left: int,
        remaining: float,
        cores_sum: int,
        quota_sum: float,
        weighted_sum: float,
        raw_loading: float,
    ) -> None:
        if remaining <= 0:
            visit(config, cores_sum, quota_sum, weighted_sum, raw_loading)
        for j in range(start, len(ordered)):
            if remaining > 0 and suffix_cap[j] < remaining:
                break  # suffix_cap is non-increasing in j
            vid = ids[j]
            rate = rates[j]
            acc = accuracies[j]
            prev_cores = prev.get(vid, 0)
            for cores in allowed[j]:
                if cores > budget_left:
                    break
                cap = rate[cores]
                if remaining <= 0:
                    quota = 0.0
                elif cap <= remaining:
                    quota = cap
                else:
                    quota = remaining
                loading = raw_loading
                if prev_cores != cores and readiness[j] > loading:
                    loading = readiness[j]
                config[vid] = cores
                rec(
                    j + 1,
                    budget_left - cores,
                    remaining - cap,
                    cores_sum + cores,
                    quota_sum + quota,
                    weighted_sum + quota * acc,
                    loading,
                )
                del config[vid]

    rec(0, budget, lam, 0, 0.0, 0.0, 0.0)


def enumerate_configs(
    variants: Sequence[VariantModel], params: PlannerParams
) -> list[dict[str, int]]:
    """All core-allocation maps that can serve the predicted load.

    Returns the empty list when the instance is infeasible.
    """
    ordered = _ordered(variants)
    _check_size(ordered, params)
    out: list[dict[str, int]] = []
    _walk_feasible(ordered, params, None, lambda config, *rest: out.append(dict(config)))
    return out


def assign_quotas(
    config: Mapping[str, int], load_rps: float, variants: Sequence[VariantModel]
) -> list[Assignment]:
    """Split the load greedily by accuracy.

    Variants are visited in descending accuracy (ties by id ascending);
    each receives the smaller of its predicted capacity and the remaining
    load. Every configured variant gets an assignment, so trailing entries
    may carry a zero quota.
    """
    by_id = {v.variant_id: v for v in variants}
    included = [by_id[vid] for vid in config]
    included.sort(key=lambda v: (-v.accuracy, v.variant_id))
    out: list[Assignment] = []
    remaining = load_rps
    for v in included:
        cap = v.throughput(config[v.variant_id])
        quota = cap if cap <= remaining else remaining
        out.append(Assignment(v.variant_id, config[v.variant_id], quota))
        remaining -= quota
    # The chained subtraction is the one feasibility test everywhere, so it
    # agrees bit for bit with the configuration enumerator.
    if remaining > 0:
        raise InsufficientCapacityError(
            f"capacity short of load {load_rps:.3f} rps by {remaining:.3g} rps"
        )
    return out


def average_accuracy(
    assignments: Sequence[Assignment], variants: Sequence[VariantModel]
) -> float:
    """Quota-weighted mean accuracy of the served traffic."""
    total = sum(a.quota_rps for a in assignments)
    if total <= 0:
        raise UndefinedAccuracyError("total quota is zero")
    acc = {v.variant_id: v.accuracy for v in variants}
    return sum(a.quota_rps * acc[a.variant_id] for a in assignments) / total


def loading_cost(
    new_config: Mapping[str, int],
    prev_config: Mapping[str, int] | None,
    variants: Sequence[VariantModel],
) -> float:
    """Normalized cost of the (re)loads the new configuration triggers.

    A variant transitions when it appears in the new configuration with a
    core count different from before (newly added included). The cost is
    the largest readiness time among transitioning variants, divided by
    the largest readiness time across all known variants. Removals are
    free.
    """
    prev = prev_config or {}
    rt = {v.variant_id: v.readiness_time_s for v in variants}
    max_rt = max(rt.values(), default=0.0)
    if max_rt <= 0:
        return 0.0
    raw = 0.0
    for vid, cores in new_config.items():
        if prev.get(vid, 0) != cores:
            raw = max(raw, rt[vid])
    return raw / max_rt


def objective(
    avg_accuracy: float,
    resource_cost_norm: float,
    loading_cost_norm: float,
    params: PlannerParams,
) -> float:
    return (
        params.alpha * avg_accuracy
        - params.beta * resource_cost_norm
        - params.gamma * loading_cost_norm
    )


def _score_config(
    config: Mapping[str, int],
    ordered: Sequence[VariantModel],
    params: PlannerParams,
    prev_config: Mapping[str, int] | None,
) -> Plan:
    assignments = assign_quotas(config, params.predicted_load_rps, ordered)
    aa = average_accuracy(assignments, ordered)
    rc = sum(config.values()) / params.budget_cores
    lc = loading_cost(config, prev_config, ordered)
    return Plan(
        assignments=assignments,
        avg_accuracy=aa,
        resource_cost_norm=rc,
        loading_cost_norm=lc,
        objective=objective(aa, rc, lc, params),
    )


def _beats(candidate: Plan, incumbent: Plan) -> bool:
    """Strict total order: objective, then accuracy, then fewer cores,
    then the lexicographically smallest sorted (variant, cores) list."""
    if candidate.objective != incumbent.objective:
        return candidate.objective > incumbent.objective
    if candidate.avg_accuracy != incumbent.avg_accuracy:
        return candidate.avg_accuracy > incumbent.avg_accuracy
    if candidate.total_cores != incumbent.total_cores:
        return candidate.total_cores < incumbent.total_cores
    return candidate.sorted_items() < incumbent.sorted_items()


def solve(
    variants: Sequence[VariantModel],
    params: PlannerParams,
    prev_config: Mapping[str, int] | None = None,
) -> Plan:
    """Return the feasible plan maximizing the objective.

    Raises InfeasibleError when no configuration within the budget can
    serve the predicted load under the SLO.
    """
    ordered = _ordered(variants)
    _check_size(ordered, params)
    max_rt = max((v.readiness_time_s for v in ordered), default=0.0)
    best: dict | None = None  # keeps the argmax pieces, plan built once at the end

    def visit(config, cores_sum, quota_sum, weighted_sum, raw_loading):
        nonlocal best
        aa = weighted_sum / quota_sum
        rc = cores_sum / params.budget_cores
        lc = raw_loading / max_rt if max_rt > 0 else 0.0
        obj = objective(aa, rc, lc, params)
        if best is not None:
            if obj < best["objective"]:
                return
            if obj == best["objective"]:
                if aa < best["aa"]:
                    return
                if aa == best["aa"]:
                    if cores_sum > best["cores"]:
                        return
                    if cores_sum == best["cores"] and not (
                        sorted(config.items()) < sorted(best["config"].items())
                    ):
                        return
        best = {
            "objective": obj,
            "aa": aa,
            "cores": cores_sum,
            "config": dict(config),
        }

    _walk_feasible(ordered, params, prev_config, visit)
    if best is None:
        raise InfeasibleError(
            f"no configuration within {params.budget_cores} cores serves "
            f"{params.predicted_load_rps:.3f} rps under {params.slo_ms} ms"
        )
    return _score_config(best["config"], ordered, params, prev_config)


def _iter_all_allocations(
    ordered: Sequence[VariantModel], params: PlannerParams
) -> Iterator[dict[str, int]]:
    """Every allocation map within the budget, feasible or not."""
    budget = params.budget_cores
    config: dict[str, int] = {}

    def rec(start: int, budget_left: int) -> Iterator[dict[str, int]]:
        yield dict(config)
        for j in range(start, len(ordered)):
            vid = ordered[j].variant_id
            for cores in range(params.min_cores_per_variant, budget_left + 1):
                config[vid] = cores
                yield from rec(j + 1, budget_left - cores)
                del config[vid]

    yield from rec(0, budget)


def _is_feasible(
    config: Mapping[str, int], ordered: Sequence[VariantModel], params: PlannerParams
) -> bool:
    # Same chained subtraction as the enumerator so the feasible sets agree
    # bit for bit at exact-capacity boundaries.
    remaining = params.predicted_load_rps
    for v in ordered:
        if v.variant_id not in config:
            continue
        cores = config[v.variant_id]
        if v.latency_ms(cores) > params.slo_ms:
            return False
        remaining -= v.throughput(cores)
    return remaining <= 0


def brute_force_solve(
    variants: Sequence[VariantModel],
    params: PlannerParams,
    prev_config: Mapping[str, int] | None = None,
) -> Plan:
    """Oracle twin of `solve`: scan every allocation map within the budget,
    drop the infeasible ones, score the rest and take the argmax under the
    same tie-breaking. Guarded to small instances."""
    if not variants:
        raise InfeasibleError("no variants")
    if len(variants) > ORACLE_MAX_VARIANTS or params.budget_cores > ORACLE_MAX_BUDGET:
        raise InstanceTooLargeError(
            f"oracle limited to {ORACLE_MAX_VARIANTS} variants and budget "
            f"{ORACLE_MAX_BUDGET}"
        )
    ordered = _ordered(variants)
    best: Plan | None = None
    for config in _iter_all_allocations(ordered, params):
        if not config or not _is_feasible(config, ordered, params):
            continue
        plan = _score_config(config, ordered, params, prev_config)
        if best is None or _beats(plan, best):
            best = plan
    if best is None:
        raise InfeasibleError("no feasible configuration")
    return best
