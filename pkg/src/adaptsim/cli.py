"""Command-line front end.

Subcommands: profile-fit, solve, simulate, compare. Every experiment flows
through files (profiles JSON, trace CSV, report directory); there is no
daemon mode. Flag values resolve in the order command line, environment
(ADAPTSIM_<FLAG>), optional --config JSON, built-in default. Exit codes:
0 success, 1 domain failure (infeasible plan, regression below threshold),
2 usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import (
    AdaptsimError,
    InfeasibleError,
    OrderingError,
    ParseError,
    TraceMismatchError,
)
from .planner import Plan, PlannerParams, solve, variant_models
from .profiles import fit_perf_model, load_profiles
from .simulator import (
    ForecastSettings,
    SimConfig,
    bursty_trace,
    compare,
    load_trace,
    nonbursty_trace,
    run,
    synth_trace,
    write_comparison,
)

ENV_PREFIX = "ADAPTSIM_"

_DEFAULTS = {
    "budget": 16,
    "slo_ms": 750.0,
    "alpha": 1.0,
    "beta": 0.05,
    "gamma": 0.05,
    "min_cores": 1,
    "seed": 0,
    "duration": None,
    "interval": 30,
    "headroom": 1.1,
    "horizon": 60,
    "r2_threshold": 0.95,
}

_CASTS = {
    "budget": int,
    "slo_ms": float,
    "alpha": float,
    "beta": float,
    "gamma": float,
    "min_cores": int,
    "lam": float,
    "seed": int,
    "duration": int,
    "interval": int,
    "headroom": float,
    "horizon": int,
    "r2_threshold": float,
}


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"config file: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(obj, dict):
        raise ParseError("config file must hold a JSON object")
    return obj


def _resolve(args: argparse.Namespace, config: dict, key: str):
    value = getattr(args, key, None)
    if value is not None:
        return value
    cast = _CASTS.get(key, str)
    env = os.environ.get(ENV_PREFIX + key.upper())
    if env is not None:
        return cast(env)
    if key in config:
        return cast(config[key])
    return _DEFAULTS.get(key)


def _planner_params(args, config, lam: float = 1.0) -> PlannerParams:
    return PlannerParams(
        budget_cores=_resolve(args, config, "budget"),
        slo_ms=_resolve(args, config, "slo_ms"),
        alpha=_resolve(args, config, "alpha"),
        beta=_resolve(args, config, "beta"),
        gamma=_resolve(args, config, "gamma"),
        min_cores_per_variant=_resolve(args, config, "min_cores"),
        predicted_load_rps=lam,
    )


def _add_planner_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--budget", type=_positive_int, help="CPU core budget")
    parser.add_argument("--slo-ms", dest="slo_ms", type=float, help="p99 latency target")
    parser.add_argument("--alpha", type=float, help="accuracy weight")
    parser.add_argument("--beta", type=float, help="resource cost weight")
    parser.add_argument("--gamma", type=float, help="loading cost weight")
    parser.add_argument(
        "--min-cores", dest="min_cores", type=_positive_int,
        help="smallest allocation considered per variant",
    )


def _add_trace_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--trace", help="trace CSV path (second,count)")
    parser.add_argument(
        "--synth",
        help=(
            "synthetic trace spec: steady:RATE | spike:BASE:PEAK:START:END | "
            "ramp:FROM:TO | bursty:BASE:PEAK | nonbursty:LOW:HIGH"
        ),
    )
    parser.add_argument("--duration", type=_positive_int, help="synthetic trace seconds")


def _trace_from_args(args, config):
    if args.trace and args.synth:
        raise ValueError("--trace and --synth are mutually exclusive")
    if args.trace:
        return load_trace(args.trace)
    if not args.synth:
        raise ValueError("one of --trace or --synth is required")
    parts = args.synth.split(":")
    kind = parts[0]
    vals = [float(p) for p in parts[1:]]
    duration = _resolve(args, config, "duration")
    seed = _resolve(args, config, "seed")
    if kind == "steady" and len(vals) == 1:
        if duration is None:
            raise ValueError("--duration is required with --synth steady")
        return synth_trace("steady", duration, seed, rate=vals[0])
    if kind == "spike" and len(vals) == 4:
        if duration is None:
            raise ValueError("--duration is required with --synth spike")
        return synth_trace(
            "spike", duration, seed,
            base=vals[0], peak=vals[1], start_s=int(vals[2]), end_s=int(vals[3]),
        )
    if kind == "ramp" and len(vals) == 2:
        if duration is None:
            raise ValueError("--duration is required with --synth ramp")
        return synth_trace("ramp", duration, seed, rate_from=vals[0], rate_to=vals[1])
    if kind == "bursty" and len(vals) == 2:
        return bursty_trace(vals[0], vals[1], duration_s=duration or 1200)
    if kind == "nonbursty" and len(vals) == 2:
        return nonbursty_trace(vals[0], vals[1], duration_s=duration or 1200)
    raise ValueError(f"bad --synth spec {args.synth!r}")


def _parse_policy(text: str) -> tuple[str, str | None]:
    if text.startswith("vpa_plus:"):
        return "vpa_plus", text.split(":", 1)[1]
    if text in ("infadapter", "ms_plus"):
        return text, None
    raise ValueError(f"unknown policy {text!r}")


def _sim_config(args, config, trace, profiles, policy, fixed, beta=None) -> SimConfig:
    params = _planner_params(args, config)
    if beta is not None:
        params = PlannerParams(
            budget_cores=params.budget_cores,
            slo_ms=params.slo_ms,
            alpha=params.alpha,
            beta=beta,
            gamma=params.gamma,
            min_cores_per_variant=params.min_cores_per_variant,
        )
    return SimConfig(
        trace=trace,
        profiles=profiles,
        planner=params,
        policy=policy,
        fixed_variant_id=fixed,
        adaptation_interval_s=_resolve(args, config, "interval"),
        seed=_resolve(args, config, "seed"),
        forecast=ForecastSettings(
            horizon_s=_resolve(args, config, "horizon"),
            headroom=_resolve(args, config, "headroom"),
        ),
    )


def _cmd_profile_fit(args) -> int:
    config = _load_config_file(args.config)
    profiles = load_profiles(args.profiles)
    threshold = _resolve(args, config, "r2_threshold")
    worst = 1.0
    for profile in profiles:
        model = fit_perf_model(profile)
        worst = min(worst, model.r_squared)
        print(
            f"{model.variant_id} slope={model.slope:.6g} "
            f"intercept={model.intercept:.6g} r2={model.r_squared:.6f}"
        )
    if worst < threshold:
        print(f"error: worst r2 {worst:.6f} below threshold {threshold}", file=sys.stderr)
        return 1
    return 0


def _cmd_solve(args) -> int:
    config = _load_config_file(args.config)
    profiles = load_profiles(args.profiles)
    variants = variant_models(profiles)
    lam = _resolve(args, config, "lam")
    if lam is None:
        raise ValueError("--lambda is required")
    params = _planner_params(args, config, lam=lam)
    prev = None
    if args.prev:
        with open(args.prev, encoding="utf-8") as fh:
            prev = Plan.from_dict(json.load(fh)).config()
    plan = solve(variants, params, prev)
    text = json.dumps(plan.to_dict(), indent=2, sort_keys=True)
    print(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return 0


def _report_line(label: str, report) -> str:
    return (
        f"policy={label} arrivals={report.arrivals} completed={report.completed} "
        f"p99_ms={report.p99_latency_ms:.1f} "
        f"violation_fraction={report.slo_violation_fraction:.4f} "
        f"accuracy_loss={report.accuracy_loss:.4f} "
        f"core_seconds={report.core_seconds:.0f} "
        f"fallback={'yes' if report.fallback_used else 'no'}"
    )


def _cmd_simulate(args) -> int:
    config = _load_config_file(args.config)
    profiles = load_profiles(args.profiles)
    trace = _trace_from_args(args, config)
    policy, fixed = _parse_policy(args.policy)
    if policy == "vpa_plus" and args.fixed_variant:
        fixed = args.fixed_variant
    cfg = _sim_config(args, config, trace, profiles, policy, fixed)
    report = run(cfg)
    report.write(args.out_dir)
    print(_report_line(cfg.policy_label, report))
    return 0


def _cmd_compare(args) -> int:
    config = _load_config_file(args.config)
    profiles = load_profiles(args.profiles)
    trace = _trace_from_args(args, config)
    policies = [_parse_policy(p) for p in args.policies.split(",") if p]
    if not policies:
        raise ValueError("--policies must list at least one policy")
    betas = (
        [float(b) for b in args.betas.split(",") if b]
        if args.betas
        else [_resolve(args, config, "beta")]
    )
    configs = [
        _sim_config(args, config, trace, profiles, policy, fixed, beta=beta)
        for beta in betas
        for policy, fixed in policies
    ]
    rows = compare(configs)
    paths = write_comparison(rows, args.out_dir)
    for row in rows:
        print(
            f"policy={row['policy']} beta={row['beta']} "
            f"accuracy_loss={row['accuracy_loss']:.4f} "
            f"core_seconds={row['core_seconds']:.0f} "
            f"p99_ms={row['p99_latency_ms']:.1f} "
            f"violation_fraction={row['slo_violation_fraction']:.4f}"
        )
    print(f"wrote {paths['csv']} and {paths['json']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaptsim",
        description="Plan and simulate accuracy/cost-aware serving of model variants.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("profile-fit", help="fit throughput regressions per variant")
    p_fit.add_argument("profiles", help="profile JSON path")
    p_fit.add_argument("--r2-threshold", dest="r2_threshold", type=float)
    p_fit.add_argument("--config")
    p_fit.set_defaults(func=_cmd_profile_fit)

    p_solve = sub.add_parser("solve", help="one-shot plan for a given load")
    p_solve.add_argument("profiles")
    p_solve.add_argument("--lambda", dest="lam", type=float, help="predicted load rps")
    _add_planner_flags(p_solve)
    p_solve.add_argument("--prev", help="previous plan JSON, for loading cost")
    p_solve.add_argument("--out", help="also write the plan JSON here")
    p_solve.add_argument("--config")
    p_solve.set_defaults(func=_cmd_solve)

    p_sim = sub.add_parser("simulate", help="run one policy over a trace")
    p_sim.add_argument("profiles")
    _add_trace_flags(p_sim)
    _add_planner_flags(p_sim)
    p_sim.add_argument("--policy", default="infadapter")
    p_sim.add_argument("--fixed-variant", dest="fixed_variant")
    p_sim.add_argument("--seed", type=int)
    p_sim.add_argument("--interval", type=_positive_int)
    p_sim.add_argument("--headroom", type=float)
    p_sim.add_argument("--horizon", type=_positive_int)
    p_sim.add_argument("--out-dir", dest="out_dir", default="adaptsim-out")
    p_sim.add_argument("--config")
    p_sim.set_defaults(func=_cmd_simulate)

    p_cmp = sub.add_parser("compare", help="run several policies on one trace")
    p_cmp.add_argument("profiles")
    _add_trace_flags(p_cmp)
    _add_planner_flags(p_cmp)
    p_cmp.add_argument(
        "--policies",
        default="infadapter,ms_plus",
        help="comma list, e.g. infadapter,ms_plus,vpa_plus:resnet152",
    )
    p_cmp.add_argument("--betas", help="comma list of beta values to sweep")
    p_cmp.add_argument("--seed", type=int)
    p_cmp.add_argument("--interval", type=_positive_int)
    p_cmp.add_argument("--headroom", type=float)
    p_cmp.add_argument("--horizon", type=_positive_int)
    p_cmp.add_argument("--out-dir", dest="out_dir", default="adaptsim-out")
    p_cmp.add_argument("--config")
    p_cmp.set_defaults(func=_cmd_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 1
    except (ParseError, TraceMismatchError, OrderingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AdaptsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    sys.exit(main())
