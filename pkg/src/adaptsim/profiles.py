"""Model-variant performance profiles and fitted performance estimators.

Each variant is profiled offline at a handful of CPU allocations. A linear
regression over those points predicts the sustainable request rate at any
allocation, while p99 latency is answered by a conservative step lookup
over the profiled points (never more optimistic than the nearest measured
allocation below).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

from .errors import ParseError, ProfileTooSmallError


@dataclass
class ProfilePoint:
    """One measured operating point: sustained rps and p99 at saturation."""

    cores: int
    throughput_rps: float
    p99_latency_ms: float

    def __post_init__(self):
        if not isinstance(self.cores, int) or self.cores < 1:
            raise ValueError(f"cores must be a positive integer, got {self.cores!r}")
        if self.throughput_rps < 0:
            raise ValueError("throughput_rps must be non-negative")
        if self.p99_latency_ms <= 0:
            raise ValueError("p99_latency_ms must be positive")


@dataclass
class ParallelismMeta:
    """Server knobs recorded with the profile. Informational only."""

    batch_size: int = 1
    inter_op: int = 1
    intra_op: int = 1


@dataclass
class VariantProfile:
    variant_id: str
    accuracy: float
    readiness_time_s: float
    points: list[ProfilePoint]
    parallelism_meta: ParallelismMeta = field(default_factory=ParallelismMeta)

    def __post_init__(self):
        if not self.variant_id:
            raise ValueError("variant_id must be non-empty")
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy must be in [0, 1], got {self.accuracy}")
        if self.readiness_time_s < 0:
            raise ValueError("readiness_time_s must be >= 0")
        if not self.points:
            raise ValueError("points must be non-empty")
        cores = [p.cores for p in self.points]
        if any(b <= a for a, b in zip(cores, cores[1:])):
            raise ValueError("profile cores must be strictly increasing")
        rps = [p.throughput_rps for p in self.points]
        if any(b < a for a, b in zip(rps, rps[1:])):
            raise ValueError("profile throughput must be non-decreasing in cores")


@dataclass
class PerfModel:
    """Fitted performance estimators for one variant.

    Throughput is linear in cores with the slope clamped at zero so more
    cores never predict less capacity. Latency keeps the raw profiled
    points for pessimistic lookup.
    """

    variant_id: str
    slope: float
    intercept: float
    latency_points: list[tuple[int, float]]
    r_squared: float


def fit_perf_model(profile: VariantProfile) -> PerfModel:
    """Ordinary least squares of throughput on cores.

    A negative fitted slope is clamped to zero (intercept reset to the mean
    throughput) with a warning; r_squared is then computed against the
    clamped model. Raises ProfileTooSmallError below two points.
    """
    pts = profile.points
    if len(pts) < 2:
        raise ProfileTooSmallError(
            f"variant {profile.variant_id!r}: need >= 2 profile points, got {len(pts)}"
        )
    xs = [float(p.cores) for p in pts]
    ys = [p.throughput_rps for p in pts]
    n = len(pts)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    sxx = sum((x - mean_x) ** 2 for x in xs)
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = mean_y - slope * mean_x
    if slope < 0:
        warnings.warn(
            f"variant {profile.variant_id!r}: negative throughput slope "
            f"{slope:.4g} clamped to 0",
            stacklevel=2,
        )
        slope = 0.0
        intercept = mean_y
    ss_res = sum((y - (slope * x + intercept)) ** 2 for x, y in zip(xs, ys))
    ss_tot = sum((y - mean_y) ** 2 for y in ys)
    if ss_tot == 0.0:
        r_squared = 1.0 if ss_res == 0.0 else 0.0
    else:
        r_squared = 1.0 - ss_res / ss_tot
    return PerfModel(
        variant_id=profile.variant_id,
        slope=slope,
        intercept=intercept,
        latency_points=[(p.cores, p.p99_latency_ms) for p in pts],
        r_squared=r_squared,
    )


def predict_throughput(model: PerfModel, cores: int) -> float:
    """Predicted sustainable rps at the given allocation.

    Zero cores means the variant is not deployed and serves nothing;
    otherwise the linear prediction clamped at zero.
    """
    if cores < 0:
        raise ValueError("cores must be >= 0")
    if cores == 0:
        return 0.0
    return max(0.0, model.slope * cores + model.intercept)


def predict_latency(model: PerfModel, cores: int) -> float:
    """Conservative p99 estimate: step lookup over profiled points.

    Returns the p99 of the largest profiled allocation not exceeding
    `cores`; below the smallest profiled point the smallest point's p99 is
    used (the most pessimistic value available).
    """
    if cores < 1:
        raise ValueError("cores must be >= 1")
    chosen = None
    for c, p99 in model.latency_points:
        if c <= cores:
            chosen = p99
        else:
            break
    if chosen is None:
        return model.latency_points[0][1]
    return chosen


def profile_to_dict(profile: VariantProfile) -> dict:
    return {
        "variant_id": profile.variant_id,
        "accuracy": profile.accuracy,
        "readiness_time_s": profile.readiness_time_s,
        "points": [
            {
                "cores": p.cores,
                "throughput_rps": p.throughput_rps,
                "p99_latency_ms": p.p99_latency_ms,
            }
            for p in profile.points
        ],
        "parallelism": {
            "batch": profile.parallelism_meta.batch_size,
            "inter_op": profile.parallelism_meta.inter_op,
            "intra_op": profile.parallelism_meta.intra_op,
        },
    }


def _profile_from_dict(obj: dict, index: int) -> VariantProfile:
    try:
        par = obj.get("parallelism", {})
        meta = ParallelismMeta(
            batch_size=int(par.get("batch", 1)),
            inter_op=int(par.get("inter_op", 1)),
            intra_op=int(par.get("intra_op", 1)),
        )
        return VariantProfile(
            variant_id=str(obj["variant_id"]),
            accuracy=float(obj["accuracy"]),
            readiness_time_s=float(obj["readiness_time_s"]),
            points=[
                ProfilePoint(
                    cores=int(p["cores"]),
                    throughput_rps=float(p["throughput_rps"]),
                    p99_latency_ms=float(p["p99_latency_ms"]),
                )
                for p in obj["points"]
            ],
            parallelism_meta=meta,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"profile entry {index}: {exc}") from exc


def load_profiles(path: str) -> list[VariantProfile]:
    """Read a profile file: a JSON array with one object per variant."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(data, list) or not data:
        raise ParseError("profile file must be a non-empty JSON array")
    profiles = [_profile_from_dict(obj, i) for i, obj in enumerate(data)]
    seen = set()
    for p in profiles:
        if p.variant_id in seen:
            raise ParseError(f"duplicate variant_id {p.variant_id!r}")
        seen.add(p.variant_id)
    return profiles


def dump_profiles(profiles: list[VariantProfile], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([profile_to_dict(p) for p in profiles], fh, indent=2)
        fh.write("\n")
