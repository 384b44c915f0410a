import json
import random

import pytest

from adaptsim.cli import main
from adaptsim.fixtures import synthetic_profiles
from adaptsim.planner import Plan, PlannerParams, solve, variant_models
from adaptsim.profiles import ProfilePoint, VariantProfile, dump_profiles


@pytest.fixture
def profile_path(tmp_path):
    path = tmp_path / "profiles.json"
    dump_profiles(synthetic_profiles(), str(path))
    return str(path)


@pytest.fixture
def noisy_profile_path(tmp_path):
    rng = random.Random(12)
    profiles = []
    for vid, slope in [("a", 10.0), ("b", 4.0)]:
        points = [
            ProfilePoint(c, slope * c * (1 + rng.uniform(-0.02, 0.02)), 500.0)
            for c in (1, 2, 4, 8, 16)
        ]
        profiles.append(VariantProfile(vid, 0.8, 5.0, points))
    path = tmp_path / "noisy.json"
    dump_profiles(profiles, str(path))
    return str(path)


class TestProfileFit:
    def test_fixture_passes_threshold(self, profile_path, capsys):
        assert main(["profile-fit", profile_path]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert len(out) == 4
        for line in out:
            r2 = float(line.rsplit("r2=", 1)[1])
            assert r2 >= 0.99

    def test_threshold_one_fails_noisy_data(self, noisy_profile_path):
        assert main(["profile-fit", noisy_profile_path, "--r2-threshold", "1.0"]) == 1

    def test_empty_file_is_usage_error(self, tmp_path):
        path = tmp_path / "empty.json"
        path.write_text("")
        assert main(["profile-fit", str(path)]) == 2

    def test_missing_file_is_usage_error(self, tmp_path):
        assert main(["profile-fit", str(tmp_path / "nope.json")]) == 2


class TestSolve:
    def test_plan_matches_library(self, profile_path, capsys):
        code = main([
            "solve", profile_path, "--lambda", "30", "--budget", "10",
            "--slo-ms", "750", "--alpha", "1", "--beta", "0.05", "--gamma", "0.01",
        ])
        assert code == 0
        printed = json.loads(capsys.readouterr().out)
        params = PlannerParams(
            budget_cores=10, slo_ms=750, alpha=1, beta=0.05, gamma=0.01,
            predicted_load_rps=30,
        )
        expected = solve(variant_models(synthetic_profiles()), params, None)
        assert printed == expected.to_dict()

    def test_zero_budget_is_argument_error(self, profile_path):
        assert main(["solve", profile_path, "--lambda", "30", "--budget", "0"]) == 2

    def test_missing_lambda_is_usage_error(self, profile_path):
        assert main(["solve", profile_path, "--budget", "10"]) == 2

    def test_infeasible_exits_one(self, profile_path):
        assert main(["solve", profile_path, "--lambda", "5000", "--budget", "4"]) == 1

    def test_beta_monotone_cores(self, profile_path, capsys):
        cores = []
        for beta in ("0.2", "0.0125"):
            assert main([
                "solve", profile_path, "--lambda", "60", "--budget", "16",
                "--beta", beta,
            ]) == 0
            plan = json.loads(capsys.readouterr().out)
            cores.append(sum(a["cores"] for a in plan["assignments"]))
        assert cores[0] <= cores[1]

    def test_prev_plan_roundtrip(self, profile_path, tmp_path, capsys):
        out = tmp_path / "plan.json"
        assert main([
            "solve", profile_path, "--lambda", "40", "--budget", "16",
            "--out", str(out),
        ]) == 0
        capsys.readouterr()
        assert main([
            "solve", profile_path, "--lambda", "40", "--budget", "16",
            "--prev", str(out),
        ]) == 0
        replayed = Plan.from_dict(json.loads(capsys.readouterr().out))
        assert replayed.loading_cost_norm == 0.0  # same config, nothing reloads


class TestSimulate:
    def test_steady_feasible_run(self, profile_path, tmp_path, capsys):
        out_dir = tmp_path / "out"
        code = main([
            "simulate", profile_path, "--synth", "steady:20", "--duration", "90",
            "--budget", "16", "--seed", "5", "--out-dir", str(out_dir),
        ])
        assert code == 0
        summary = json.loads((out_dir / "summary.json").read_text())
        assert summary["slo_violation_fraction"] == 0.0
        assert summary["arrivals"] == 1800
        assert "policy=infadapter" in capsys.readouterr().out

    def test_missing_trace_file(self, profile_path, tmp_path):
        code = main([
            "simulate", profile_path, "--trace", str(tmp_path / "nope.csv"),
            "--out-dir", str(tmp_path / "out"),
        ])
        assert code == 2

    def test_trace_or_synth_required(self, profile_path, tmp_path):
        assert main([
            "simulate", profile_path, "--out-dir", str(tmp_path / "out"),
        ]) == 2

    def test_byte_identical_reports_same_seed(self, profile_path, tmp_path):
        dirs = [tmp_path / "r1", tmp_path / "r2"]
        for d in dirs:
            assert main([
                "simulate", profile_path, "--synth", "steady:20", "--duration", "90",
                "--budget", "16", "--seed", "5", "--out-dir", str(d),
            ]) == 0
        for name in ("summary.json", "requests.csv", "plans.csv"):
            assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()

    def test_vpa_policy_spec(self, profile_path, tmp_path, capsys):
        code = main([
            "simulate", profile_path, "--synth", "steady:20", "--duration", "60",
            "--policy", "vpa_plus:resnet18", "--out-dir", str(tmp_path / "out"),
        ])
        assert code == 0
        assert "policy=vpa_plus:resnet18" in capsys.readouterr().out


class TestCompare:
    def test_policy_beta_grid(self, profile_path, tmp_path):
        out_dir = tmp_path / "cmp"
        code = main([
            "compare", profile_path, "--synth", "steady:20", "--duration", "90",
            "--budget", "16",
            "--policies",
            "infadapter,ms_plus,vpa_plus:resnet18,vpa_plus:resnet50,vpa_plus:resnet152",
            "--betas", "0.0125,0.05,0.2",
            "--out-dir", str(out_dir),
        ])
        assert code == 0
        rows = json.loads((out_dir / "comparison.json").read_text())
        assert len(rows) == 15
        with open(out_dir / "comparison.csv") as fh:
            assert len(fh.readlines()) == 16

    def test_single_policy_single_row(self, profile_path, tmp_path):
        out_dir = tmp_path / "cmp"
        assert main([
            "compare", profile_path, "--synth", "steady:15", "--duration", "60",
            "--policies", "infadapter", "--out-dir", str(out_dir),
        ]) == 0
        rows = json.loads((out_dir / "comparison.json").read_text())
        assert len(rows) == 1

    def test_unknown_policy_rejected(self, profile_path, tmp_path):
        assert main([
            "compare", profile_path, "--synth", "steady:15", "--duration", "60",
            "--policies", "nonsense", "--out-dir", str(tmp_path / "cmp"),
        ]) == 2


class TestConfigResolution:
    def test_env_override(self, profile_path, capsys, monkeypatch):
        monkeypatch.setenv("ADAPTSIM_BUDGET", "10")
        monkeypatch.setenv("ADAPTSIM_BETA", "0.05")
        assert main(["solve", profile_path, "--lambda", "30"]) == 0
        plan = json.loads(capsys.readouterr().out)
        # budget 10 visible through the normalized resource cost
        total = sum(a["cores"] for a in plan["assignments"])
        assert plan["rc"] == pytest.approx(total / 10)

    def test_config_file_defaults_and_cli_wins(self, profile_path, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"budget": 8, "lam": 30}))
        assert main(["solve", profile_path, "--config", str(cfg)]) == 0
        plan = json.loads(capsys.readouterr().out)
        total = sum(a["cores"] for a in plan["assignments"])
        assert plan["rc"] == pytest.approx(total / 8)
        # explicit flag beats the config file
        assert main([
            "solve", profile_path, "--config", str(cfg), "--budget", "12",
        ]) == 0
        plan = json.loads(capsys.readouterr().out)
        total = sum(a["cores"] for a in plan["assignments"])
        assert plan["rc"] == pytest.approx(total / 12)
