"""Trace-driven discrete-event simulation of the full adaptation loop.

Arrivals from a per-second trace flow through the weighted round-robin
dispatcher into per-variant FCFS stations. A variant allocated n cores is
modeled as n parallel servers with a deterministic per-request service
time of n / predicted_throughput(n) seconds, so station capacity equals
the profiled throughput exactly; this is the minimal queueing assumption
consistent with aggregate profiles and is a deliberate modeling choice.

Every adaptation interval the controller records history, forecasts the
next-window peak, re-solves the plan for the active policy and swaps
make-before-break: new or resized variants become usable only after their
readiness time, the old assignment keeps serving until the new plan is
fully ready, then quotas swap atomically. Core-seconds account for both
old and new cores during such transitions, which makes loading cost
observable in the resource metric.

Within each second, arrival instants are spread uniformly with a
deterministic per-second phase offset drawn from the run seed, so a run is
bit-reproducible and a feasible steady state shows no queueing noise.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import os
import random
from collections import deque
from dataclasses import dataclass, field, replace
from heapq import heapify, heappop, heappush
from typing import Sequence

from .baselines import solve_ms_plus, solve_vpa_plus
from .dispatcher import Dispatcher
from .errors import InfeasibleError, OrderingError, ParseError, TraceMismatchError
from .forecaster import (
    DEFAULT_HEADROOM,
    DEFAULT_HORIZON_S,
    DEFAULT_WINDOW_S,
    LoadHistory,
    TrendForecaster,
)
from .planner import (
    Assignment,
    Plan,
    PlannerParams,
    loading_cost,
    objective,
    solve,
    variant_models,
)
from .profiles import VariantProfile

POLICIES = ("infadapter", "ms_plus", "vpa_plus")

_EV_COMPLETE, _EV_SWAP, _EV_DECIDE, _EV_ARRIVE = 0, 1, 2, 3


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass
class WorkloadTrace:
    """Per-second request counts, second index implicit from zero."""

    counts: list[int]

    def __post_init__(self):
        if any(c < 0 for c in self.counts):
            raise ValueError("request counts must be >= 0")
        self.counts = [int(c) for c in self.counts]

    @property
    def duration_s(self) -> int:
        return len(self.counts)

    @property
    def total_requests(self) -> int:
        return sum(self.counts)

    def samples(self) -> list[tuple[int, int]]:
        return list(enumerate(self.counts))


def load_trace(path: str) -> WorkloadTrace:
    """Read a `second,count` CSV (header optional); gaps filled with zeros."""
    counts: dict[int, int] = {}
    last_second = -1
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 2:
                raise ParseError(f"expected 'second,count', got {line!r}", line=line_no)
            try:
                second, count = int(fields[0]), int(fields[1])
            except ValueError:
                if line_no == 1:
                    continue  # header row
                raise ParseError(f"non-integer fields in {line!r}", line=line_no) from None
            if second < 0 or count < 0:
                raise ParseError(f"negative value in {line!r}", line=line_no)
            if second <= last_second:
                raise OrderingError(
                    f"line {line_no}: second {second} not after {last_second}"
                )
            counts[second] = count
            last_second = second
    if not counts:
        raise ParseError("trace file contains no samples")
    return WorkloadTrace([counts.get(s, 0) for s in range(last_second + 1)])


def _segment_counts(rate: float, seconds: int) -> list[int]:
    # Cumulative rounding keeps the segment total at rate * seconds.
    return [
        _round_half_up(rate * (k + 1)) - _round_half_up(rate * k) for k in range(seconds)
    ]


def synth_trace(kind: str, duration_s: int, seed: int = 0, **params) -> WorkloadTrace:
    """Deterministic synthetic trace of the given shape.

    Kinds: steady(rate), spike(base, peak, start_s, end_s) with step
    transitions, ramp(rate_from, rate_to) hitting both endpoints. The seed
    argument is accepted for interface stability; the shapes are exact
    counts, and within-second arrival offsets come from the simulation
    seed instead.
    """
    if duration_s < 1:
        raise ValueError("duration_s must be >= 1")
    if kind == "steady":
        rate = float(params["rate"])
        if rate < 0:
            raise ValueError("rate must be >= 0")
        return WorkloadTrace(_segment_counts(rate, duration_s))
    if kind == "spike":
        base, peak = float(params["base"]), float(params["peak"])
        start_s, end_s = int(params["start_s"]), int(params["end_s"])
        if base < 0 or peak < 0:
            raise ValueError("rates must be >= 0")
        if not 0 <= start_s <= end_s <= duration_s:
            raise ValueError("invalid spike bounds")
        counts = (
            _segment_counts(base, start_s)
            + _segment_counts(peak, end_s - start_s)
            + _segment_counts(base, duration_s - end_s)
        )
        return WorkloadTrace(counts)
    if kind == "ramp":
        rate_from, rate_to = float(params["rate_from"]), float(params["rate_to"])
        if rate_from < 0 or rate_to < 0:
            raise ValueError("rates must be >= 0")
        if duration_s == 1:
            return WorkloadTrace([_round_half_up(rate_from)])
        step = (rate_to - rate_from) / (duration_s - 1)
        return WorkloadTrace(
            [_round_half_up(rate_from + k * step) for k in range(duration_s)]
        )
    raise ValueError(f"unknown trace kind {kind!r}")


def bursty_trace(
    base: float = 40,
    peak: float = 90,
    duration_s: int = 1200,
    spike_start_s: int = 600,
    spike_end_s: int = 800,
    recovery_end_s: int = 1000,
) -> WorkloadTrace:
    """Steady load, a step spike, a gradual decrease, back to the start."""
    if not 0 < spike_start_s < spike_end_s < recovery_end_s <= duration_s:
        raise ValueError("invalid bursty boundaries")
    counts = (
        _segment_counts(base, spike_start_s)
        + _segment_counts(peak, spike_end_s - spike_start_s)
        + synth_trace("ramp", recovery_end_s - spike_end_s, rate_from=peak, rate_to=base).counts
        + _segment_counts(base, duration_s - recovery_end_s)
    )
    return WorkloadTrace(counts)


def nonbursty_trace(low: float = 35, high: float = 55, duration_s: int = 1200) -> WorkloadTrace:
    """Gentle rise and fall with no step change."""
    half = duration_s // 2
    counts = (
        synth_trace("ramp", half, rate_from=low, rate_to=high).counts
        + synth_trace("ramp", duration_s - half, rate_from=high, rate_to=low).counts
    )
    return WorkloadTrace(counts)


@dataclass
class ForecastSettings:
    horizon_s: int = DEFAULT_HORIZON_S
    headroom: float = DEFAULT_HEADROOM
    window_s: int = DEFAULT_WINDOW_S


@dataclass
class SimConfig:
    """One simulation run: trace, profiles, planner knobs, policy, seed.

    planner.predicted_load_rps is ignored; the forecaster supplies the
    load for every adaptation interval.
    """

    trace: WorkloadTrace
    profiles: list[VariantProfile]
    planner: PlannerParams
    policy: str = "infadapter"
    fixed_variant_id: str | None = None
    adaptation_interval_s: int = 30
    seed: int = 0
    forecast: ForecastSettings = field(default_factory=ForecastSettings)

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        if not self.profiles:
            raise ValueError("profiles must be non-empty")
        if self.policy == "vpa_plus":
            ids = {p.variant_id for p in self.profiles}
            if self.fixed_variant_id not in ids:
                raise ValueError("vpa_plus requires fixed_variant_id present in profiles")
        if self.adaptation_interval_s < 1:
            raise ValueError("adaptation_interval_s must be >= 1")
        if self.trace.duration_s < 1:
            raise ValueError("trace must cover at least one second")

    @property
    def policy_label(self) -> str:
        if self.policy == "vpa_plus":
            return f"vpa_plus:{self.fixed_variant_id}"
        return self.policy


@dataclass
class RequestRecord:
    arrival_s: float
    variant_id: str
    latency_ms: float
    accuracy: float
    violated: bool


@dataclass
class IntervalRecord:
    decision_s: int
    predicted_rps: float
    prev_config: dict[str, int]
    plan: Plan
    fallback: bool
    ready_s: float


@dataclass
class SimReport:
    meta: dict
    records: list[RequestRecord]
    intervals: list[IntervalRecord]
    arrivals: int
    completed: int
    in_queue_at_end: int
    p99_latency_ms: float
    slo_violation_fraction: float
    mean_accuracy: float
    accuracy_loss: float
    core_seconds: float
    fallback_used: bool

    def summary(self) -> dict:
        return {
            **self.meta,
            "arrivals": self.arrivals,
            "completed": self.completed,
            "in_queue_at_end": self.in_queue_at_end,
            "p99_latency_ms": self.p99_latency_ms,
            "slo_violation_fraction": self.slo_violation_fraction,
            "mean_accuracy": self.mean_accuracy,
            "accuracy_loss": self.accuracy_loss,
            "core_seconds": self.core_seconds,
            "fallback_used": self.fallback_used,
            "intervals": len(self.intervals),
        }

    def write(self, out_dir: str) -> dict[str, str]:
        """Emit summary.json, requests.csv and plans.csv into out_dir."""
        os.makedirs(out_dir, exist_ok=True)
        paths = {
            "summary": os.path.join(out_dir, "summary.json"),
            "requests": os.path.join(out_dir, "requests.csv"),
            "plans": os.path.join(out_dir, "plans.csv"),
        }
        with open(paths["summary"], "w", encoding="utf-8") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(paths["requests"], "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["arrival_s", "variant", "latency_ms", "accuracy", "violated"])
            for r in self.records:
                writer.writerow(
                    [r.arrival_s, r.variant_id, r.latency_ms, r.accuracy, int(r.violated)]
                )
        with open(paths["plans"], "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "decision_s",
                    "predicted_rps",
                    "ready_s",
                    "fallback",
                    "objective",
                    "aa",
                    "rc",
                    "lc",
                    "total_cores",
                    "assignments",
                ]
            )
            for iv in self.intervals:
                assignments = ";".join(
                    f"{a.variant_id}:{a.cores}:{a.quota_rps}" for a in iv.plan.assignments
                )
                writer.writerow(
                    [
                        iv.decision_s,
                        iv.predicted_rps,
                        iv.ready_s,
                        int(iv.fallback),
                        iv.plan.objective,
                        iv.plan.avg_accuracy,
                        iv.plan.resource_cost_norm,
                        iv.plan.loading_cost_norm,
                        iv.plan.total_cores,
                        assignments,
                    ]
                )
        return paths


class _Station:
    """FCFS station with n parallel servers and deterministic service."""

    __slots__ = ("variant_id", "servers", "service_s", "busy", "backlog")

    def __init__(self, variant_id: str, servers: int, service_s: float):
        self.variant_id = variant_id
        self.servers = servers
        self.service_s = service_s
        self.busy = 0
        self.backlog: deque = deque()


class _Engine:
    def __init__(self, config: SimConfig):
        self.config = config
        self.counts = config.trace.counts
        self.duration = config.trace.duration_s
        self.variants = variant_models(config.profiles)
        self.by_id = {v.variant_id: v for v in self.variants}
        self.rt = {v.variant_id: v.readiness_time_s for v in self.variants}
        self.accuracy = {v.variant_id: v.accuracy for v in self.variants}
        self.base_params = config.planner
        self.forecaster = TrendForecaster(
            headroom=config.forecast.headroom, window_s=config.forecast.window_s
        )
        self.history = LoadHistory()
        self.recorded_upto = -1
        self.dispatcher = Dispatcher()
        self.stations: dict[str, _Station] = {}
        self.active_config: dict[str, int] = {}
        self.swap_token = 0
        self.pending_cores = 0.0
        self.core_rate = 0.0
        self.core_clock = 0.0
        self.core_seconds = 0.0
        self.records: list[RequestRecord] = []
        self.intervals: list[IntervalRecord] = []
        self.latencies: list[float] = []
        self.completed = 0
        self.violations = 0
        self.accuracy_sum = 0.0
        self.fallback_used = False
        self.heap: list = []
        self.seq = itertools.count()

        # One phase offset for the whole run keeps arrivals evenly spaced
        # across second boundaries, so a feasible steady state shows zero
        # queueing rather than boundary bunching artifacts.
        phase = random.Random(config.seed).random()
        self.arrival_times: list[float] = []
        for second, count in enumerate(self.counts):
            if count <= 0:
                continue
            self.arrival_times.extend(
                second + (i + phase) / count for i in range(count)
            )

    # -- control plane ---------------------------------------------------

    def _advance_cores(self, t: float) -> None:
        self.core_seconds += (t - self.core_clock) * self.core_rate
        self.core_clock = t

    def _policy_solve(self, params: PlannerParams, prev: dict[str, int]) -> Plan:
        policy = self.config.policy
        if policy == "infadapter":
            return solve(self.variants, params, prev)
        if policy == "ms_plus":
            return solve_ms_plus(self.variants, params, prev)
        return solve_vpa_plus(self.by_id[self.config.fixed_variant_id], params, prev)

    def _fallback_plan(self, params: PlannerParams, prev: dict[str, int]) -> Plan:
        # Emergency plan: the whole budget on the highest-capacity variant.
        budget = params.budget_cores
        best = None
        best_th = -1.0
        for v in sorted(self.variants, key=lambda v: v.variant_id):
            th = v.throughput(budget)
            if th > best_th:
                best, best_th = v, th
        lam = params.predicted_load_rps
        config = {best.variant_id: budget}
        aa = best.accuracy
        lc = loading_cost(config, prev, self.variants)
        return Plan(
            assignments=[Assignment(best.variant_id, budget, lam)],
            avg_accuracy=aa,
            resource_cost_norm=1.0,
            loading_cost_norm=lc,
            objective=objective(aa, 1.0, lc, params),
            under_provisioned=best_th < lam,
        )

    def _decide(self, t_d: int) -> None:
        for s in range(self.recorded_upto + 1, t_d):
            self.history.record(s, float(self.counts[s]))
        self.recorded_upto = max(self.recorded_upto, t_d - 1)
        if len(self.history) == 0:
            # Startup: no observed traffic yet. Use the first second of the
            # trace as the operator-provided initial load estimate.
            lam = max(1.0, float(self.counts[0]))
        else:
            lam = self.forecaster.predict_next_max(
                self.history, self.config.forecast.horizon_s
            )
        params = replace(self.base_params, predicted_load_rps=lam)
        prev = dict(self.active_config)
        fallback = False
        try:
            plan = self._policy_solve(params, prev)
        except InfeasibleError:
            plan = self._fallback_plan(params, prev)
            fallback = True
            self.fallback_used = True
        loading = {
            vid: cores
            for vid, cores in plan.config().items()
            if prev.get(vid, 0) != cores
        }
        # The initial configuration counts as pre-deployed.
        ready_delay = 0.0 if t_d == 0 else max(
            (self.rt[vid] for vid in loading), default=0.0
        )
        t_swap = t_d + ready_delay
        self.intervals.append(
            IntervalRecord(t_d, lam, prev, plan, fallback, t_swap)
        )
        self._advance_cores(float(t_d))
        if self.pending_cores:
            # A newer decision supersedes a not-yet-ready plan.
            self.core_rate -= self.pending_cores
            self.pending_cores = 0.0
        self.swap_token += 1
        if ready_delay <= 0:
            self._apply_plan(float(t_d), plan)
        else:
            self.pending_cores = float(sum(loading.values()))
            self.core_rate += self.pending_cores
            heappush(
                self.heap,
                (t_swap, _EV_SWAP, next(self.seq), (self.swap_token, plan)),
            )

    def _apply_plan(self, t: float, plan: Plan) -> None:
        self._advance_cores(t)
        self.pending_cores = 0.0
        self.core_rate = float(plan.total_cores)
        for a in plan.assignments:
            th = self.by_id[a.variant_id].throughput(a.cores)
            service = a.cores / th if th > 0 else math.inf
            station = self.stations.get(a.variant_id)
            if station is None:
                self.stations[a.variant_id] = _Station(a.variant_id, a.cores, service)
            else:
                station.servers = a.cores
                station.service_s = service
        self.dispatcher.set_quotas({a.variant_id: a.quota_rps for a in plan.assignments})
        self.active_config = plan.config()
        for station in self.stations.values():
            while station.backlog and station.busy < station.servers:
                arrived = station.backlog.popleft()
                station.busy += 1
                self._schedule_completion(t, station, arrived)

    # -- data plane ------------------------------------------------------

    def _schedule_completion(self, t: float, station: _Station, arrived: float) -> None:
        if math.isinf(station.service_s):
            return  # zero-capacity station never completes work
        heappush(
            self.heap,
            (
                t + station.service_s,
                _EV_COMPLETE,
                next(self.seq),
                (station.variant_id, arrived),
            ),
        )

    def _arrive(self, t: float) -> None:
        vid = self.dispatcher.next_target()
        station = self.stations[vid]
        if station.busy < station.servers:
            station.busy += 1
            self._schedule_completion(t, station, t)
        else:
            station.backlog.append(t)

    def _complete(self, t: float, vid: str, arrived: float) -> None:
        latency_ms = (t - arrived) * 1000.0
        violated = latency_ms > self.base_params.slo_ms
        self.records.append(
            RequestRecord(arrived, vid, latency_ms, self.accuracy[vid], violated)
        )
        self.latencies.append(latency_ms)
        self.completed += 1
        self.violations += int(violated)
        self.accuracy_sum += self.accuracy[vid]
        station = self.stations[vid]
        station.busy -= 1
        if station.backlog and station.busy < station.servers:
            arrived_next = station.backlog.popleft()
            station.busy += 1
            self._schedule_completion(t, station, arrived_next)

    # -- main loop -------------------------------------------------------

    def run(self) -> SimReport:
        events = [
            (float(t_d), _EV_DECIDE, next(self.seq), None)
            for t_d in range(0, self.duration, self.config.adaptation_interval_s)
        ]
        events.extend(
            (at, _EV_ARRIVE, next(self.seq), None) for at in self.arrival_times
        )
        self.heap = events
        heapify(self.heap)
        while self.heap:
            t, rank, _, payload = heappop(self.heap)
            if t > self.duration:
                break
            if rank == _EV_COMPLETE:
                vid, arrived = payload
                self._complete(t, vid, arrived)
            elif rank == _EV_SWAP:
                token, plan = payload
                if token == self.swap_token:
                    self._apply_plan(t, plan)
            elif rank == _EV_DECIDE:
                self._decide(int(t))
            else:
                self._arrive(t)
        self._advance_cores(float(self.duration))

        arrivals = len(self.arrival_times)
        if self.latencies:
            ordered = sorted(self.latencies)
            idx = max(0, math.ceil(0.99 * len(ordered)) - 1)
            p99 = ordered[idx]
        else:
            p99 = 0.0
        mean_acc = self.accuracy_sum / self.completed if self.completed else 0.0
        best_acc = max(self.accuracy.values())
        meta = {
            "policy": self.config.policy_label,
            "seed": self.config.seed,
            "budget_cores": self.base_params.budget_cores,
            "slo_ms": self.base_params.slo_ms,
            "alpha": self.base_params.alpha,
            "beta": self.base_params.beta,
            "gamma": self.base_params.gamma,
            "adaptation_interval_s": self.config.adaptation_interval_s,
            "headroom": self.config.forecast.headroom,
            "trace_duration_s": self.duration,
        }
        return SimReport(
            meta=meta,
            records=self.records,
            intervals=self.intervals,
            arrivals=arrivals,
            completed=self.completed,
            in_queue_at_end=arrivals - self.completed,
            p99_latency_ms=p99,
            slo_violation_fraction=(
                self.violations / self.completed if self.completed else 0.0
            ),
            mean_accuracy=mean_acc,
            accuracy_loss=max(0.0, best_acc - mean_acc) if self.completed else 0.0,
            core_seconds=self.core_seconds,
            fallback_used=self.fallback_used,
        )


def run(config: SimConfig) -> SimReport:
    """Simulate one policy over the trace. Deterministic given the seed."""
    return _Engine(config).run()


def compare(configs: Sequence[SimConfig]) -> list[dict]:
    """Run several policies on one trace and tabulate their aggregates."""
    if not configs:
        raise ValueError("compare needs at least one config")
    base = configs[0]
    for other in configs[1:]:
        if other.trace.counts != base.trace.counts:
            raise TraceMismatchError("compared configs must share the trace")
        if other.profiles != base.profiles:
            raise TraceMismatchError("compared configs must share the profiles")
    rows = []
    for cfg in configs:
        report = run(cfg)
        rows.append(
            {
                "policy": cfg.policy_label,
                "beta": cfg.planner.beta,
                "arrivals": report.arrivals,
                "completed": report.completed,
                "p99_latency_ms": report.p99_latency_ms,
                "slo_violation_fraction": report.slo_violation_fraction,
                "mean_accuracy": report.mean_accuracy,
                "accuracy_loss": report.accuracy_loss,
                "core_seconds": report.core_seconds,
                "fallback_used": report.fallback_used,
            }
        )
    return rows


def write_comparison(rows: list[dict], out_dir: str) -> dict[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "csv": os.path.join(out_dir, "comparison.csv"),
        "json": os.path.join(out_dir, "comparison.json"),
    }
    columns = [
        "policy",
        "beta",
        "arrivals",
        "completed",
        "p99_latency_ms",
        "slo_violation_fraction",
        "mean_accuracy",
        "accuracy_loss",
        "core_seconds",
        "fallback_used",
    ]
    with open(paths["csv"], "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row[c] for c in columns])
    with open(paths["json"], "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths
