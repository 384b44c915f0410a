import pytest

from adaptsim.fixtures import synthetic_profiles
from adaptsim.planner import VariantModel, variant_models
from adaptsim.profiles import PerfModel


def linear_variant(
    variant_id: str,
    accuracy: float,
    readiness_s: float,
    slope: float,
    intercept: float = 0.0,
    latency_points=None,
) -> VariantModel:
    """Planner variant with a hand-written linear model, bypassing fitting."""
    points = latency_points or [(1, 100.0)]
    return VariantModel(
        variant_id=variant_id,
        accuracy=accuracy,
        readiness_time_s=readiness_s,
        perf=PerfModel(variant_id, slope, intercept, list(points), 1.0),
    )


@pytest.fixture
def profiles():
    return synthetic_profiles()


@pytest.fixture
def variants(profiles):
    return variant_models(profiles)


@pytest.fixture
def f1_variants():
    # Three variants with well-separated accuracy/cost trade-offs.
    return [
        linear_variant("A", 0.70, 5.0, 10.0),
        linear_variant("B", 0.76, 10.0, 5.0),
        linear_variant("C", 0.78, 15.0, 2.0),
    ]
