"""Synthetic experiment fixture: four image-classifier variants.

All numbers here are synthetic, not measurements. Throughput is linear in
cores with slopes calibrated so resnet50 on 8 cores sustains about the
load of resnet152 on 20, and resnet18 on 8 about that of resnet50 on 20.
Accuracies follow the familiar ImageNet top-1 figures for the family; p99
points sit below a 750 ms target at every profiled allocation.
"""

from __future__ import annotations

from .planner import PlannerParams
from .profiles import ParallelismMeta, ProfilePoint, VariantProfile, dump_profiles

PROFILE_CORES = (1, 2, 4, 8, 16)

# variant_id, accuracy, readiness_s, rps_per_core, p99_ms at each profiled allocation
_SPECS = [
    ("resnet18", 0.6976, 5.0, 12.5, (140.0, 130.0, 120.0, 110.0, 100.0)),
    ("resnet50", 0.7613, 8.0, 5.0, (320.0, 305.0, 290.0, 275.0, 260.0)),
    ("resnet101", 0.7737, 12.0, 3.0, (520.0, 500.0, 480.0, 460.0, 440.0)),
    ("resnet152", 0.7831, 15.0, 2.0, (725.0, 700.0, 675.0, 650.0, 625.0)),
]


def synthetic_profiles() -> list[VariantProfile]:
    profiles = []
    for variant_id, accuracy, readiness_s, slope, p99s in _SPECS:
        points = [
            ProfilePoint(cores=c, throughput_rps=slope * c, p99_latency_ms=p99)
            for c, p99 in zip(PROFILE_CORES, p99s)
        ]
        profiles.append(
            VariantProfile(
                variant_id=variant_id,
                accuracy=accuracy,
                readiness_time_s=readiness_s,
                points=points,
                parallelism_meta=ParallelismMeta(batch_size=1, inter_op=16, intra_op=1),
            )
        )
    return profiles


def default_planner_params(**overrides) -> PlannerParams:
    defaults = dict(budget_cores=24, slo_ms=750.0, alpha=1.0, beta=0.05, gamma=0.05)
    defaults.update(overrides)
    return PlannerParams(**defaults)


def dump_default_profiles(path: str) -> None:
    dump_profiles(synthetic_profiles(), path)


if __name__ == "__main__":
    import sys

    dump_default_profiles(sys.argv[1] if len(sys.argv) > 1 else "profiles.synthetic.json")
