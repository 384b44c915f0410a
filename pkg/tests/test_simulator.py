import json

import pytest

from adaptsim.errors import OrderingError, ParseError, TraceMismatchError
from adaptsim.planner import PlannerParams
from adaptsim.profiles import ProfilePoint, VariantProfile
from adaptsim.simulator import (
    SimConfig,
    WorkloadTrace,
    bursty_trace,
    compare,
    load_trace,
    nonbursty_trace,
    run,
    synth_trace,
)


def single_variant_profile(slope=2.5, readiness=3.0, variant_id="v", accuracy=0.9):
    points = [ProfilePoint(c, slope * c, 600.0 - 10 * i) for i, c in enumerate((1, 2, 4, 8, 16))]
    return VariantProfile(variant_id, accuracy, readiness, points)


class TestLoadTrace:
    def test_two_samples(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("0,5\n1,7\n")
        assert load_trace(str(path)).counts == [5, 7]

    def test_gap_filled(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("0,5\n2,7\n")
        assert load_trace(str(path)).counts == [5, 0, 7]

    def test_leading_gap_filled_from_zero(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("2,7\n")
        assert load_trace(str(path)).counts == [0, 0, 7]

    def test_header_skipped(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("second,count\n0,5\n1,7\n")
        assert load_trace(str(path)).counts == [5, 7]

    def test_malformed_line_reports_number(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("0,5\n1,oops\n")
        with pytest.raises(ParseError) as err:
            load_trace(str(path))
        assert err.value.line == 2

    def test_non_contiguous_seconds(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("2,7\n1,5\n")
        with pytest.raises(OrderingError):
            load_trace(str(path))

    def test_empty_file(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("")
        with pytest.raises(ParseError):
            load_trace(str(path))


class TestSynthTrace:
    def test_steady_total(self):
        trace = synth_trace("steady", 10, rate=50)
        assert trace.counts == [50] * 10
        assert trace.total_requests == 500

    def test_steady_fractional_rate_preserves_total(self):
        trace = synth_trace("steady", 10, rate=0.5)
        assert trace.total_requests == 5

    def test_spike_steps(self):
        trace = synth_trace("spike", 1200, base=50, peak=150, start_s=600, end_s=800)
        assert trace.counts[599] == 50
        assert trace.counts[600] == 150
        assert trace.counts[799] == 150
        assert trace.counts[800] == 50
        assert trace.duration_s == 1200

    def test_ramp_endpoints_and_rule(self):
        trace = synth_trace("ramp", 100, rate_from=0, rate_to=100)
        assert trace.counts[0] == 0
        assert trace.counts[99] == 100
        for k in (1, 33, 66, 98):
            assert trace.counts[k] == int((k * 100 / 99) + 0.5)

    def test_invalid_bounds(self):
        with pytest.raises(ValueError):
            synth_trace("spike", 100, base=5, peak=10, start_s=80, end_s=50)
        with pytest.raises(ValueError):
            synth_trace("steady", 0, rate=5)
        with pytest.raises(ValueError):
            synth_trace("steady", 10, rate=-1)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            synth_trace("sawtooth", 10, rate=5)

    def test_bursty_shape(self):
        trace = bursty_trace(40, 90)
        assert trace.duration_s == 1200
        assert trace.counts[0] == 40
        assert trace.counts[599] == 40
        assert trace.counts[600] == 90
        assert trace.counts[799] == 90
        assert trace.counts[999] in (40, 41)
        assert trace.counts[1100] == 40

    def test_nonbursty_shape(self):
        trace = nonbursty_trace(35, 55, 1200)
        assert trace.duration_s == 1200
        assert max(trace.counts) == 55
        assert trace.counts[0] == 35
        assert abs(trace.counts[-1] - 35) <= 1


class TestConfigValidation:
    def test_unknown_policy(self):
        trace = synth_trace("steady", 10, rate=5)
        with pytest.raises(ValueError):
            SimConfig(
                trace=trace,
                profiles=[single_variant_profile()],
                planner=PlannerParams(budget_cores=4),
                policy="other",
            )

    def test_vpa_requires_known_fixed_variant(self):
        trace = synth_trace("steady", 10, rate=5)
        with pytest.raises(ValueError):
            SimConfig(
                trace=trace,
                profiles=[single_variant_profile()],
                planner=PlannerParams(budget_cores=4),
                policy="vpa_plus",
                fixed_variant_id="missing",
            )


class TestRun:
    def test_feasible_steady_state_has_no_queueing(self):
        # Capacity model: service time is cores / throughput = 0.4 s at any
        # allocation of this profile, so an uncongested run shows latencies
        # of exactly one service time.
        cfg = SimConfig(
            trace=synth_trace("steady", 60, rate=5),
            profiles=[single_variant_profile(slope=2.5)],
            planner=PlannerParams(budget_cores=4, slo_ms=750.0),
            seed=3,
        )
        report = run(cfg)
        assert report.p99_latency_ms == pytest.approx(400.0, abs=1e-6)
        assert report.slo_violation_fraction == 0.0
        assert report.arrivals == 300
        assert report.arrivals == report.completed + report.in_queue_at_end

    def test_zero_request_trace(self):
        cfg = SimConfig(
            trace=WorkloadTrace([0] * 30),
            profiles=[single_variant_profile()],
            planner=PlannerParams(budget_cores=4),
        )
        report = run(cfg)
        assert report.arrivals == 0
        assert report.records == []
        assert report.completed == 0
        assert report.in_queue_at_end == 0
        assert report.p99_latency_ms == 0.0
        assert report.accuracy_loss == 0.0
        assert len(report.intervals) == 1

    def test_overloaded_station_grows_queue(self):
        # 15 rps into a station capped at 10 rps: the queue grows by about
        # five requests per second and almost every completion violates.
        cfg = SimConfig(
            trace=synth_trace("steady", 300, rate=15),
            profiles=[single_variant_profile(slope=2.5)],
            planner=PlannerParams(budget_cores=4, slo_ms=750.0),
            policy="vpa_plus",
            fixed_variant_id="v",
            seed=1,
        )
        report = run(cfg)
        assert report.arrivals == 4500
        assert report.arrivals == report.completed + report.in_queue_at_end
        assert report.in_queue_at_end >= 1400
        assert report.slo_violation_fraction >= 0.95
        assert report.intervals[0].plan.under_provisioned

    def test_conservation_on_bursty_run(self, profiles):
        cfg = SimConfig(
            trace=bursty_trace(20, 45, duration_s=600, spike_start_s=300,
                               spike_end_s=400, recovery_end_s=500),
            profiles=profiles,
            planner=PlannerParams(budget_cores=16, beta=0.0125),
            seed=11,
        )
        report = run(cfg)
        assert report.arrivals == cfg.trace.total_requests
        assert report.arrivals == report.completed + report.in_queue_at_end

    def test_determinism_same_seed(self, profiles, tmp_path):
        cfg = dict(
            trace=bursty_trace(10, 30, duration_s=300, spike_start_s=120,
                               spike_end_s=180, recovery_end_s=240),
            profiles=profiles,
            planner=PlannerParams(budget_cores=12, beta=0.05),
            seed=9,
        )
        r1 = run(SimConfig(**cfg))
        r2 = run(SimConfig(**cfg))
        d1 = r1.write(str(tmp_path / "a"))
        d2 = r2.write(str(tmp_path / "b"))
        for key in d1:
            with open(d1[key], "rb") as f1, open(d2[key], "rb") as f2:
                assert f1.read() == f2.read()

    def test_different_seed_changes_arrival_phase(self, profiles):
        base = dict(
            trace=synth_trace("steady", 60, rate=7),
            profiles=profiles,
            planner=PlannerParams(budget_cores=12),
        )
        r1 = run(SimConfig(seed=1, **base))
        r2 = run(SimConfig(seed=2, **base))
        assert [r.arrival_s for r in r1.records] != [r.arrival_s for r in r2.records]

    def test_make_before_break_core_accounting(self):
        # Hand-computed: bootstrap at 5 cores for lambda 10, the 30 s
        # decision raises to 6 cores (headroom 1.1) with a 10 s readiness
        # delay, so both allocations count during [30, 40), then 6 cores to
        # the end: 30*5 + 10*11 + 50*6 = 560 core-seconds.
        profile = VariantProfile(
            "V", 0.9, 10.0,
            [ProfilePoint(c, 2.0 * c, 600.0 - 10 * i) for i, c in enumerate((1, 2, 4, 8, 16))],
        )
        cfg = SimConfig(
            trace=synth_trace("steady", 90, rate=10),
            profiles=[profile],
            planner=PlannerParams(budget_cores=32, slo_ms=750.0),
            policy="vpa_plus",
            fixed_variant_id="V",
            seed=0,
        )
        report = run(cfg)
        assert report.core_seconds == 560.0
        assert report.slo_violation_fraction == 0.0
        assert [iv.plan.config() for iv in report.intervals] == [
            {"V": 5}, {"V": 6}, {"V": 6}
        ]
        assert report.intervals[1].prev_config == {"V": 5}
        assert report.intervals[1].ready_s == 40.0
        assert report.intervals[2].ready_s == 60.0  # no reload, applies at once

    def test_fallback_engages_when_infeasible(self):
        cfg = SimConfig(
            trace=synth_trace("steady", 60, rate=500),
            profiles=[single_variant_profile(slope=2.5)],
            planner=PlannerParams(budget_cores=4, slo_ms=750.0),
            seed=0,
        )
        report = run(cfg)
        assert report.fallback_used
        assert report.intervals[0].fallback
        # the fallback throws the whole budget at the fastest variant
        assert report.intervals[0].plan.config() == {"v": 4}
        assert report.intervals[0].plan.under_provisioned

    def test_report_files(self, profiles, tmp_path):
        cfg = SimConfig(
            trace=synth_trace("steady", 60, rate=20),
            profiles=profiles,
            planner=PlannerParams(budget_cores=12),
            seed=4,
        )
        report = run(cfg)
        paths = report.write(str(tmp_path / "out"))
        summary = json.loads(open(paths["summary"]).read())
        assert summary["arrivals"] == report.arrivals
        assert summary["policy"] == "infadapter"
        with open(paths["requests"]) as fh:
            assert len(fh.readlines()) == report.completed + 1
        with open(paths["plans"]) as fh:
            assert len(fh.readlines()) == len(report.intervals) + 1


class TestCompare:
    def test_rows_per_config(self, profiles):
        trace = synth_trace("steady", 60, rate=20)
        params = PlannerParams(budget_cores=12)
        configs = [
            SimConfig(trace=trace, profiles=profiles, planner=params, policy="infadapter"),
            SimConfig(trace=trace, profiles=profiles, planner=params, policy="ms_plus"),
            SimConfig(trace=trace, profiles=profiles, planner=params,
                      policy="vpa_plus", fixed_variant_id="resnet152"),
        ]
        rows = compare(configs)
        assert [r["policy"] for r in rows] == [
            "infadapter", "ms_plus", "vpa_plus:resnet152"
        ]

    def test_single_config(self, profiles):
        trace = synth_trace("steady", 30, rate=10)
        rows = compare(
            [SimConfig(trace=trace, profiles=profiles, planner=PlannerParams(budget_cores=12))]
        )
        assert len(rows) == 1

    def test_mismatched_traces_rejected(self, profiles):
        params = PlannerParams(budget_cores=12)
        c1 = SimConfig(trace=synth_trace("steady", 30, rate=10), profiles=profiles, planner=params)
        c2 = SimConfig(trace=synth_trace("steady", 30, rate=11), profiles=profiles, planner=params)
        with pytest.raises(TraceMismatchError):
            compare([c1, c2])
