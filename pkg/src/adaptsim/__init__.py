"""Planner and trace-driven simulator for accuracy/cost-aware autoscaling
of ML inference serving with model variants."""

from .baselines import BaselineSpec, solve_ms_plus, solve_vpa_plus
from .dispatcher import Dispatcher, QuotaTable
from .errors import (
    AdaptsimError,
    InfeasibleError,
    InstanceTooLargeError,
    InsufficientCapacityError,
    InvalidTableError,
    NoDataError,
    NotConfiguredError,
    OrderingError,
    ParseError,
    ProfileTooSmallError,
    TraceMismatchError,
    UndefinedAccuracyError,
)
from .forecaster import LoadHistory, TrendForecaster, predict_next_max
from .planner import (
    Assignment,
    Plan,
    PlannerParams,
    VariantModel,
    assign_quotas,
    average_accuracy,
    brute_force_solve,
    enumerate_configs,
    loading_cost,
    objective,
    solve,
    variant_models,
)
from .profiles import (
    ParallelismMeta,
    PerfModel,
    ProfilePoint,
    VariantProfile,
    dump_profiles,
    fit_perf_model,
    load_profiles,
    predict_latency,
    predict_throughput,
)
from .simulator import (
    ForecastSettings,
    SimConfig,
    SimReport,
    WorkloadTrace,
    bursty_trace,
    compare,
    load_trace,
    nonbursty_trace,
    run,
    synth_trace,
    write_comparison,
)

__version__ = "0.1.0"
