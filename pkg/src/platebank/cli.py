"""Command-line entry point.

Subcommands bind scenarios, policies, fitting, sweeps, replay and metrics
into reproducible runs: every command is deterministic under a fixed --seed
(an omitted seed is drawn from entropy and recorded), progress goes to
stderr, machine-readable results go to stdout and CSV/JSON files, and a
manifest is written alongside every output set.

Exit codes: 0 success, 1 usage error, 2 input-data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import secrets
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .core import InputError, SCENARIO_NAMES
from .engine import BACKEND
from .experiments import (
    SENSITIVITY_PRESETS,
    SweepPlan,
    read_trace_csv,
    replay_trace,
    run_grid_sweep,
    run_sensitivity_sweep,
)
from .fileio import (
    ga_config_from_dict,
    load_policy,
    load_scenario,
    save_fit_report,
    save_policy,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    write_manifest,
)
from .metrics import (
    compute_kpis,
    read_grid_csv,
    read_roc_csv,
    roc_analysis,
    select_threshold,
    write_grid_csv,
)
from .optimize import GAConfig, evaluate_policy, fit_ss_policy, fit_standing_order
from .policies import IssuingPolicy, yupr_policy


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we use 1
        raise UsageError(message)


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr)


def _resolve_seed(args) -> int:
    if args.seed is None:
        seed = secrets.randbits(63)
        _progress(f"no --seed given; drew {seed} from entropy (recorded in manifest)")
        return seed
    return args.seed


def _issuing_from_args(args) -> IssuingPolicy:
    if args.issuing == "yupr":
        return yupr_policy(args.alpha, args.beta)
    return IssuingPolicy(args.issuing).validate()


def _ga_from_args(args, seed: int) -> GAConfig:
    return GAConfig(
        population_size=args.population,
        max_generations=args.max_generations,
        patience=args.patience,
        fit_rollouts=args.fit_rollouts,
        fit_horizon=args.fit_horizon,
        fit_warmup=args.fit_warmup,
        seed=seed,
        workers=args.workers,
    ).validate()


def _add_budget_flags(p, patience_default=10):
    p.add_argument("--fit-rollouts", type=int, default=1000,
                   help="rollouts per candidate during fitting (default 1000)")
    p.add_argument("--fit-horizon", type=int, default=365)
    p.add_argument("--fit-warmup", type=int, default=100)
    p.add_argument("--max-generations", type=int, default=200)
    p.add_argument("--patience", type=int, default=patience_default)
    p.add_argument("--population", type=int, default=50)


def _add_eval_flags(p):
    p.add_argument("--eval-rollouts", type=int, default=10000)
    p.add_argument("--eval-horizon", type=int, default=365)
    p.add_argument("--eval-warmup", type=int, default=100)


def _write_kpi_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "n_rollouts", "daily_cost_mean", "daily_cost_std",
                         "service_mean", "service_std", "wastage_mean", "wastage_std"])
        for label, k in rows:
            writer.writerow([label, k.n_rollouts, repr(k.daily_cost_mean),
                             repr(k.daily_cost_std), repr(k.service_mean),
                             repr(k.service_std), repr(k.wastage_mean),
                             repr(k.wastage_std)])


def cmd_scenario(args) -> int:
    cfg = load_scenario(args.name)
    save_scenario(cfg, args.out)
    _progress(f"wrote {args.out}")
    return 0


def cmd_fit(args) -> int:
    t0 = time.perf_counter()
    seed = _resolve_seed(args)
    cfg = load_scenario(args.scenario)
    issuing = _issuing_from_args(args)
    ga = _ga_from_args(args, seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    _progress(f"fitting {args.family} policy on {args.scenario} "
              f"(issuing {issuing.mode}, backend {BACKEND})")
    if args.family == "standing":
        report = fit_standing_order(cfg, issuing, ga)
    else:
        report = fit_ss_policy(cfg, issuing, ga)
    _progress(f"best mean return {report.best_mean_return:.1f} "
              f"after {report.generations_run} generations ({report.stop_reason})")

    policy_path = out / "policy.json"
    report_path = out / "fit_report.json"
    save_policy(report.best_policy(), issuing, policy_path)
    save_fit_report(report, report_path)
    write_manifest(out, sys.argv[1:], {
        "command": "fit", "scenario": scenario_to_dict(cfg),
        "family": args.family, "issuing": issuing.mode,
        "alpha": issuing.sensitivity, "beta": issuing.specificity,
        "ga": ga.__dict__,
    }, seed, time.perf_counter() - t0, [policy_path, report_path], __version__)
    print(policy_path)
    return 0


def cmd_evaluate(args) -> int:
    t0 = time.perf_counter()
    seed = _resolve_seed(args)
    cfg = load_scenario(args.scenario)
    replenishment, issuing, trace_path = load_policy(args.policy, cfg.max_order)
    if issuing is None:
        raise InputError("policy file references trace predictions; use the replay command")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    day_log_path = None
    if args.day_log:
        day_log_path = out / "day_log.csv"
        from .engine import rollout_reference

        with open(day_log_path, "w", newline="") as fh:
            rollout_reference(cfg, replenishment, issuing,
                              args.eval_horizon + args.eval_warmup, args.eval_warmup,
                              0, seed, day_log=fh)

    results = evaluate_policy(cfg, replenishment, issuing, args.eval_rollouts,
                              args.eval_horizon, args.eval_warmup, seed, args.workers)
    kpis = compute_kpis(results)
    kpi_path = out / "kpis.csv"
    _write_kpi_csv(kpi_path, [("policy", kpis)])
    outputs = [kpi_path] + ([day_log_path] if day_log_path else [])
    write_manifest(out, sys.argv[1:], {
        "command": "evaluate", "scenario": scenario_to_dict(cfg),
        "policy": str(args.policy), "rollouts": args.eval_rollouts,
        "horizon": args.eval_horizon, "warmup": args.eval_warmup,
    }, seed, time.perf_counter() - t0, outputs, __version__)
    print(kpi_path)
    return 0


def _plan_from_file(path, args, seed: int) -> SweepPlan:
    import json

    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read plan {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"plan {path} is not valid JSON: {exc}") from exc

    scenario = data.get("scenario", "uclh-returns")
    if isinstance(scenario, dict):
        scenario = scenario_from_dict(scenario)
    ga_data = dict(data.get("ga", {}))
    ga_data.setdefault("seed", seed)
    ga = ga_config_from_dict(ga_data)
    if args.fit_rollouts is not None:
        ga = replace(ga, fit_rollouts=args.fit_rollouts)
    if args.max_generations is not None:
        ga = replace(ga, max_generations=args.max_generations)
    ga = replace(ga, workers=args.workers)
    plan = SweepPlan(
        scenario=scenario,
        family=data.get("family", "ss"),
        sensitivity_values=tuple(data.get("sensitivity_values",
                                          SweepPlan.sensitivity_values)),
        specificity_values=tuple(data.get("specificity_values",
                                          SweepPlan.specificity_values)),
        ga=ga,
        eval_rollouts=args.eval_rollouts or data.get("eval_rollouts", 10000),
        eval_horizon=data.get("eval_horizon", 365),
        eval_warmup=data.get("eval_warmup", 100),
        seed=data.get("seed", seed),
        workers=args.workers,
    )
    return plan.validate()


def cmd_sweep(args) -> int:
    t0 = time.perf_counter()
    seed = _resolve_seed(args)
    plan = _plan_from_file(args.plan, args, seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _progress(f"grid sweep: {len(plan.sensitivity_values)}x{len(plan.specificity_values)} "
              f"cells, family {plan.family}, backend {BACKEND}")
    result = run_grid_sweep(plan)

    paths = []
    for name, grid in (("cost", result.cost), ("service_level", result.service),
                       ("wastage", result.wastage)):
        path = out / f"{name}_grid.csv"
        write_grid_csv(grid, path)
        paths.append(path)
    cells_path = out / "cells.csv"
    with open(cells_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sensitivity", "specificity", "daily_cost_mean", "daily_cost_std",
                         "service_mean", "service_std", "wastage_mean", "wastage_std",
                         "fit_generations", "fit_stop_reason", "fit_params"])
        for cell in result.cells:
            k = cell.kpis
            writer.writerow([repr(cell.sensitivity), repr(cell.specificity),
                             repr(k.daily_cost_mean), repr(k.daily_cost_std),
                             repr(k.service_mean), repr(k.service_std),
                             repr(k.wastage_mean), repr(k.wastage_std),
                             cell.fit.generations_run, cell.fit.stop_reason,
                             str(cell.fit.best_params)])
    paths.append(cells_path)
    write_manifest(out, sys.argv[1:], {
        "command": "sweep", "plan": str(args.plan),
        "scenario": scenario_to_dict(plan.resolve_scenario()),
        "family": plan.family, "ga": plan.ga.__dict__,
        "eval_rollouts": plan.eval_rollouts,
    }, seed, time.perf_counter() - t0, paths, __version__)
    for p in paths:
        print(p)
    return 0


def cmd_sensitivity(args) -> int:
    t0 = time.perf_counter()
    seed = _resolve_seed(args)
    if args.preset:
        axis, values = SENSITIVITY_PRESETS[args.preset]
    else:
        if not args.axis or not args.values:
            raise UsageError("need either --preset or both --axis and --values")
        axis = args.axis
        values = tuple(float(v) for v in args.values.split(","))
    cfg = load_scenario(args.scenario)
    ga = _ga_from_args(args, seed)
    plan = SweepPlan(scenario=cfg, family=args.family, ga=ga,
                     eval_rollouts=args.eval_rollouts, eval_horizon=args.eval_horizon,
                     eval_warmup=args.eval_warmup, seed=seed, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _progress(f"sensitivity sweep on {axis}: values {list(values)}, backend {BACKEND}")
    points = run_sensitivity_sweep(axis, values, plan)

    table_path = out / "sensitivity.csv"
    with open(table_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value", "issuing", "n_rollouts",
                         "daily_cost_mean", "daily_cost_std",
                         "service_mean", "service_std", "wastage_mean", "wastage_std"])
        for pt in points:
            for label, k in (("oufo", pt.oufo_kpis), ("yupr-ppm", pt.ppm_kpis)):
                writer.writerow([repr(pt.value), label, k.n_rollouts,
                                 repr(k.daily_cost_mean), repr(k.daily_cost_std),
                                 repr(k.service_mean), repr(k.service_std),
                                 repr(k.wastage_mean), repr(k.wastage_std)])
    paired_path = out / "paired.csv"
    with open(paired_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value", "daily_cost_diff", "daily_cost_sem",
                         "service_diff", "service_sem", "wastage_diff", "wastage_sem"])
        for pt in points:
            d = pt.paired
            writer.writerow([repr(pt.value), repr(d.daily_cost_diff), repr(d.daily_cost_sem),
                             repr(d.service_diff), repr(d.service_sem),
                             repr(d.wastage_diff), repr(d.wastage_sem)])
    write_manifest(out, sys.argv[1:], {
        "command": "sensitivity", "axis": axis, "values": list(values),
        "scenario": scenario_to_dict(cfg), "family": args.family,
        "ga": ga.__dict__, "eval_rollouts": args.eval_rollouts,
    }, seed, time.perf_counter() - t0, [table_path, paired_path], __version__)
    print(table_path)
    print(paired_path)
    return 0


def cmd_replay(args) -> int:
    t0 = time.perf_counter()
    seed = _resolve_seed(args)
    cfg = load_scenario(args.scenario)
    trace = read_trace_csv(args.trace)
    replenishment, issuing, _trace_path = load_policy(args.policy, cfg.max_order)
    if issuing is not None and issuing.mode == "oufo":
        mode = "oufo"
    else:
        mode = "trace"  # predicted labels come from the trace file itself
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    kpis, result = replay_trace(trace, cfg, replenishment, mode, seed)
    kpi_path = out / "replay_kpis.csv"
    _write_kpi_csv(kpi_path, [(f"replay-{mode}", kpis)])
    write_manifest(out, sys.argv[1:], {
        "command": "replay", "scenario": scenario_to_dict(cfg),
        "trace": str(args.trace), "policy": str(args.policy), "mode": mode,
        "days": result.days_counted,
    }, seed, time.perf_counter() - t0, [kpi_path], __version__)
    print(kpi_path)
    return 0


def cmd_threshold(args) -> int:
    t0 = time.perf_counter()
    scores, labels = read_roc_csv(args.roc)
    grid = read_grid_csv(args.grid)
    curve = roc_analysis(scores, labels)
    threshold, sens, spec, wastage = select_threshold(curve, grid)
    print(f"{threshold!r},{sens!r},{spec!r},{wastage!r}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "threshold.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["threshold", "sensitivity", "specificity", "predicted_wastage"])
            writer.writerow([repr(threshold), repr(sens), repr(spec), repr(wastage)])
        write_manifest(out, sys.argv[1:], {
            "command": "threshold", "roc": str(args.roc), "grid": str(args.grid),
            "auroc": curve.auroc, "partial_auroc": curve.partial_auroc,
        }, 0, time.perf_counter() - t0, [path], __version__)
    return 0


def cmd_benchmark(args) -> int:
    from .benchmark import run_benchmark

    report = run_benchmark(args.scenario, args.rollouts, args.workers)
    for line in report:
        print(line)
    return 0


def build_parser() -> Parser:
    parser = Parser(prog="platebank", description=__doc__)
    parser.add_argument("--version", action="version", version=f"platebank {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scenario", help="export a built-in scenario to a file")
    p.add_argument("--name", required=True, choices=SCENARIO_NAMES)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("fit", help="fit a replenishment policy by simulation optimization")
    p.add_argument("--scenario", required=True,
                   help="built-in scenario name or scenario JSON path")
    p.add_argument("--family", required=True, choices=("ss", "standing"))
    p.add_argument("--issuing", default="oufo", choices=("oufo", "yufo", "yupr"))
    p.add_argument("--alpha", type=float, default=0.0, help="yupr sensitivity")
    p.add_argument("--beta", type=float, default=1.0, help="yupr specificity")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    _add_budget_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("evaluate", help="evaluate a policy file on common-seeded rollouts")
    p.add_argument("--scenario", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--day-log", action="store_true",
                   help="also write a per-day trace of rollout 0")
    _add_eval_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="grid sweep over predictor sensitivity/specificity")
    p.add_argument("--plan", required=True, help="sweep plan JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--fit-rollouts", type=int, default=None,
                   help="override the plan's fit budget")
    p.add_argument("--max-generations", type=int, default=None)
    p.add_argument("--eval-rollouts", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("sensitivity", help="sweep one scenario input, comparing "
                                           "oldest-first against the perfect predictor")
    p.add_argument("--axis", choices=("rho", "phi", "age-profile-p"))
    p.add_argument("--values", help="comma-separated values")
    p.add_argument("--preset", choices=sorted(SENSITIVITY_PRESETS))
    p.add_argument("--scenario", default="uclh-returns")
    p.add_argument("--family", default="ss", choices=("ss", "standing"))
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    _add_budget_flags(p, patience_default=50)
    _add_eval_flags(p)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("replay", help="replay a real demand trace through the workflow")
    p.add_argument("--trace", required=True)
    p.add_argument("--scenario", default="uclh-2017")
    p.add_argument("--policy", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("threshold", help="select the wastage-minimizing ROC threshold")
    p.add_argument("--roc", required=True, help="CSV of score,label")
    p.add_argument("--grid", required=True, help="wastage MetricGrid CSV")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("benchmark", help="compare the compiled and pure-Python backends")
    p.add_argument("--scenario", default="uclh-returns")
    p.add_argument("--rollouts", type=int, default=20)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_benchmark)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
