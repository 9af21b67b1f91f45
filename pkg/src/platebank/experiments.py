"""Experiment families: predictor-quality grid sweeps, input sensitivity
sweeps, no-returns baselines (plain runs of the no-returns scenarios), and
single-pass replay of a real demand trace.

Grid sweeps refit the replenishment policy per (sensitivity, specificity)
cell, warm-started from the policy fitted at the oldest-first-equivalent
corner (0, 1); that corner itself reuses the base fit, so the corner cell is
bit-identical to running the named policy directly.  Sensitivity sweeps refit
along the axis, warm-starting each value's oldest-first fit from the previous
value's, and each perfect-predictor fit from the same value's oldest-first
fit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

from .core import (
    DEMAND_TRANSFUSED,
    DEMAND_WITH_RETURNS,
    InputError,
    RolloutResult,
    ScenarioConfig,
    builtin_scenario,
    validate_scenario,
)
from .core import AgeProfile
from .engine import age_stock, compute_reward, process_returns, sample_arrivals
from .metrics import KPIReport, MetricGrid, PairedComparison, compute_kpis, paired_difference
from .optimize import FitReport, GAConfig, evaluate_policy, fit_ss_policy, fit_standing_order
from .policies import (
    IssuingPolicy,
    ReplenishmentPolicy,
    WeeklySSPolicy,
    choose_issue_index,
    replenishment_action,
    yupr_policy,
)
from .streams import ARRIVAL_AGES, EMERGENCY_AGE, NS_EVAL, RngStreams, derive_seed

OUFO_CORNER = (0.0, 1.0)
PPM_CORNER = (1.0, 1.0)

EXP5_RHO_VALUES = tuple(round(0.05 * i, 2) for i in range(11))  # 0.0 .. 0.5
EXP6_PHI_VALUES = tuple(round(0.1 * i, 1) for i in range(11))  # 0.0 .. 1.0
EXP7_P_VALUES = tuple(round(0.1 * i, 1) for i in range(11))  # 0.0 .. 1.0

SENSITIVITY_PRESETS = {
    "exp5": ("rho", EXP5_RHO_VALUES),
    "exp6": ("phi", EXP6_PHI_VALUES),
    "exp7": ("age-profile-p", EXP7_P_VALUES),
}


def binomial_age_profile(p: float, max_life: int = 5) -> AgeProfile:
    """Remaining-life distribution from a binomial with max_life - 1 trials:
    the chance of arriving with r days left is the mass at r - 1 successes.
    p = 1 means everything arrives fresh; p = 0 means everything arrives on
    its expiry day."""
    if not 0.0 <= p <= 1.0:
        raise InputError("binomial age profile needs p in [0, 1]")
    n = max_life - 1
    probs = []
    for index in range(max_life):  # index 0 holds the freshest class
        k = n - index
        probs.append(math.comb(n, k) * p ** k * (1.0 - p) ** (n - k))
    return AgeProfile(tuple(probs))


@dataclass(frozen=True)
class SweepPlan:
    scenario: str | ScenarioConfig = "uclh-returns"
    family: str = "ss"  # ss | standing
    sensitivity_values: tuple[float, ...] = tuple(round(0.1 * i, 1) for i in range(11))
    specificity_values: tuple[float, ...] = tuple(round(0.1 * i, 1) for i in range(11))
    ga: GAConfig = field(default_factory=GAConfig)
    eval_rollouts: int = 10000
    eval_horizon: int = 365
    eval_warmup: int = 100
    seed: int = 0
    workers: int = 1

    def resolve_scenario(self) -> ScenarioConfig:
        if isinstance(self.scenario, str):
            return builtin_scenario(self.scenario)
        return validate_scenario(self.scenario)

    def validate(self) -> "SweepPlan":
        if self.family not in ("ss", "standing"):
            raise InputError(f"unknown replenishment family {self.family!r}")
        for v in (*self.sensitivity_values, *self.specificity_values):
            if not 0.0 <= v <= 1.0:
                raise InputError("grid values must lie in [0, 1]")
        self.resolve_scenario()
        return self


def _fit_family(cfg: ScenarioConfig, family: str, issuing: IssuingPolicy,
                ga: GAConfig, warm_start=None) -> FitReport:
    if family == "standing":
        return fit_standing_order(cfg, issuing, ga)
    warm = None
    if warm_start is not None and isinstance(warm_start, WeeklySSPolicy):
        warm = warm_start
    return fit_ss_policy(cfg, issuing, ga, warm_start=warm)


@dataclass
class SweepCell:
    sensitivity: float
    specificity: float
    fit: FitReport
    kpis: KPIReport


@dataclass
class GridSweepResult:
    cost: MetricGrid
    service: MetricGrid
    wastage: MetricGrid
    cells: list[SweepCell]
    base_fit: FitReport


def run_grid_sweep(plan: SweepPlan) -> GridSweepResult:
    plan.validate()
    cfg = plan.resolve_scenario()
    eval_seed = derive_seed(plan.seed, NS_EVAL)

    base_fit = _fit_family(cfg, plan.family, yupr_policy(*OUFO_CORNER), plan.ga)
    base_policy = base_fit.best_policy()

    cells: list[SweepCell] = []
    cost_rows, service_rows, wastage_rows = [], [], []
    for sens in plan.sensitivity_values:
        cost_row, service_row, wastage_row = [], [], []
        for spec in plan.specificity_values:
            try:
                issuing = yupr_policy(sens, spec)
                if (sens, spec) == OUFO_CORNER:
                    fit = base_fit
                else:
                    fit = _fit_family(cfg, plan.family, issuing, plan.ga,
                                      warm_start=base_policy)
                results = evaluate_policy(cfg, fit.best_policy(), issuing,
                                          plan.eval_rollouts, plan.eval_horizon,
                                          plan.eval_warmup, eval_seed, plan.workers)
                kpis = compute_kpis(results)
            except Exception as exc:
                raise RuntimeError(
                    f"grid cell (sensitivity={sens}, specificity={spec}) failed: {exc}"
                ) from exc
            cells.append(SweepCell(sens, spec, fit, kpis))
            cost_row.append(kpis.daily_cost_mean)
            service_row.append(kpis.service_mean)
            wastage_row.append(kpis.wastage_mean)
        cost_rows.append(tuple(cost_row))
        service_rows.append(tuple(service_row))
        wastage_rows.append(tuple(wastage_row))

    def grid(rows) -> MetricGrid:
        return MetricGrid(tuple(plan.sensitivity_values),
                          tuple(plan.specificity_values), tuple(rows))

    return GridSweepResult(grid(cost_rows), grid(service_rows), grid(wastage_rows),
                           cells, base_fit)


@dataclass
class SensitivityPoint:
    value: float
    oufo_fit: FitReport
    ppm_fit: FitReport
    oufo_kpis: KPIReport
    ppm_kpis: KPIReport
    paired: PairedComparison


def scenario_for_axis(base: ScenarioConfig, axis: str, value: float,
                      tx_means=None) -> ScenarioConfig:
    """The scenario at one sensitivity-sweep point.

    On the return-rate axis the demand means are rescaled so the expected
    number of transfused units stays constant: means = transfused means
    divided by (1 - rho)."""
    if axis == "rho":
        if not 0.0 <= value < 1.0:
            raise InputError("return rate must be in [0, 1); demand is undefined at 1")
        if tx_means is None:
            if tuple(base.demand_means) == DEMAND_WITH_RETURNS:
                tx_means = DEMAND_TRANSFUSED
            else:
                tx_means = tuple(mu * (1.0 - base.return_rate) for mu in base.demand_means)
        demand = tuple(mu / (1.0 - value) for mu in tx_means)
        return validate_scenario(replace(base, return_rate=value, demand_means=demand))
    if axis == "phi":
        if not 0.0 <= value <= 1.0:
            raise InputError("slippage rate must be in [0, 1]")
        return validate_scenario(replace(base, slippage_rate=value))
    if axis == "age-profile-p":
        profile = binomial_age_profile(value, base.max_life)
        return validate_scenario(replace(base, age_profiles=(profile,) * 7))
    raise InputError(f"unknown sensitivity axis {axis!r}; expected rho, phi or age-profile-p")


def run_sensitivity_sweep(axis: str, values, base_plan: SweepPlan,
                          tx_means=None) -> list[SensitivityPoint]:
    base_plan.validate()
    base = base_plan.resolve_scenario()
    eval_seed = derive_seed(base_plan.seed, NS_EVAL)
    points: list[SensitivityPoint] = []
    prev_oufo_policy = None
    for value in values:
        cfg = scenario_for_axis(base, axis, float(value), tx_means)
        oufo_fit = _fit_family(cfg, base_plan.family, yupr_policy(*OUFO_CORNER),
                               base_plan.ga, warm_start=prev_oufo_policy)
        oufo_policy = oufo_fit.best_policy()
        ppm_fit = _fit_family(cfg, base_plan.family, yupr_policy(*PPM_CORNER),
                              base_plan.ga, warm_start=oufo_policy)
        oufo_results = evaluate_policy(cfg, oufo_policy, IssuingPolicy("oufo"),
                                       base_plan.eval_rollouts, base_plan.eval_horizon,
                                       base_plan.eval_warmup, eval_seed, base_plan.workers)
        ppm_results = evaluate_policy(cfg, ppm_fit.best_policy(), yupr_policy(*PPM_CORNER),
                                      base_plan.eval_rollouts, base_plan.eval_horizon,
                                      base_plan.eval_warmup, eval_seed, base_plan.workers)
        points.append(SensitivityPoint(
            value=float(value),
            oufo_fit=oufo_fit,
            ppm_fit=ppm_fit,
            oufo_kpis=compute_kpis(oufo_results),
            ppm_kpis=compute_kpis(ppm_results),
            paired=paired_difference(oufo_results, ppm_results),
        ))
        prev_oufo_policy = oufo_policy
    return points


# --- Trace replay ---------------------------------------------------------------


@dataclass(frozen=True)
class TraceRecord:
    day: int
    half: str  # am | pm
    qty: int
    true_label: int
    predicted: int

    def validate(self) -> "TraceRecord":
        if self.day < 0:
            raise InputError("trace day index must be >= 0")
        if self.half not in ("am", "pm"):
            raise InputError(f"trace half must be am or pm, got {self.half!r}")
        if self.qty < 1:
            raise InputError("trace quantity must be >= 1")
        if self.true_label not in (0, 1) or self.predicted not in (0, 1):
            raise InputError("trace labels must be 0 or 1")
        return self


def read_trace_csv(path) -> list[TraceRecord]:
    records: list[TraceRecord] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        needed = {"day", "half", "qty", "true_label", "predicted"}
        if reader.fieldnames is None or needed - set(reader.fieldnames):
            raise InputError(f"trace file {path}: header must include {sorted(needed)}")
        for line, row in enumerate(reader, start=2):
            try:
                rec = TraceRecord(int(row["day"]), row["half"].strip(), int(row["qty"]),
                                  int(row["true_label"]), int(row["predicted"]))
            except (TypeError, ValueError) as exc:
                raise InputError(f"trace file {path} line {line}: {exc}") from exc
            records.append(rec.validate())
    _check_trace_order(records)
    return records


def write_trace_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["day", "half", "qty", "true_label", "predicted"])
        for r in records:
            writer.writerow([r.day, r.half, r.qty, r.true_label, r.predicted])


def _check_trace_order(records) -> None:
    last_day = -1
    for r in records:
        r.validate()
        if r.day < last_day:
            raise InputError("trace day indices must be non-decreasing")
        last_day = r.day


def replay_trace(trace, cfg: ScenarioConfig, replenishment: ReplenishmentPolicy,
                 issuing_mode: str = "trace", master_seed: int = 0,
                 ) -> tuple[KPIReport, RolloutResult]:
    """One deterministic-demand pass over the trace calendar.

    Demand, true labels and (for issuing_mode="trace") predictions come from
    the trace; arrival ages, slippage and emergency ages are still sampled
    from the scenario under `master_seed`.  Multi-unit requests issue all
    units freshest-first on a positive prediction, oldest-first otherwise,
    and a returned request sends every unit to pending returns.  Days missing
    from the trace are simulated with zero demand.  Day 0 is a Monday.
    """
    validate_scenario(cfg)
    if issuing_mode not in ("trace", "oufo"):
        raise InputError("replay issuing must be 'trace' (predicted yupr) or 'oufo'")
    records = list(trace)
    _check_trace_order(records)
    m = cfg.max_life
    horizon = (max(r.day for r in records) + 1) if records else 0

    by_day: dict[int, list[TraceRecord]] = {}
    for r in records:
        by_day.setdefault(r.day, []).append(r)

    rng = RngStreams(master_seed, 0)
    stock = [0] * m
    pending = [0] * m
    reward_sum = 0.0
    acc = dict(demand=0, emergency=0, received_routine=0, wasted_expiry=0,
               wasted_slippage=0, wasted_z0=0, order_units=0, returned=0)

    for day in range(horizon):
        weekday = day % 7
        profile = cfg.age_profiles[weekday]
        order = max(0, min(replenishment_action(weekday, sum(stock), replenishment),
                           cfg.max_order))
        if order > 0:
            for i, extra in enumerate(sample_arrivals(order, profile,
                                                      rng.stream(day, ARRIVAL_AGES, 0))):
                stock[i] += extra

        day_records = by_day.get(day, [])
        am_records = [r for r in day_records if r.half == "am"]
        pm_records = [r for r in day_records if r.half == "pm"]
        u_today = [0] * m
        emergency = 0
        req_ordinal = 0

        def serve(requests):
            nonlocal emergency, req_ordinal
            for rec in requests:
                pred = rec.predicted if issuing_mode == "trace" else 0
                emergency_stream = None
                for _ in range(rec.qty):
                    if sum(stock) > 0:
                        idx = choose_issue_index(stock, pred)
                        stock[idx] -= 1
                    else:
                        emergency += 1
                        if emergency_stream is None:
                            emergency_stream = rng.stream(day, EMERGENCY_AGE, req_ordinal)
                        idx = emergency_stream.categorical(profile.cdf())
                    if rec.true_label:
                        u_today[idx] += 1
                req_ordinal += 1

        serve(am_records)
        new_stock, slippage, expired_after_issue = process_returns(
            stock, pending, cfg.slippage_rate, rng, day)
        stock[:] = new_stock
        serve(pm_records)
        aged, expired_in_stock = age_stock(stock)
        stock[:] = aged

        reward = compute_reward(order, sum(stock), emergency,
                                expired_in_stock + slippage, expired_after_issue,
                                cfg.costs)
        reward_sum += reward
        pending = list(u_today)

        acc["demand"] += sum(r.qty for r in day_records)
        acc["emergency"] += emergency
        acc["received_routine"] += order
        acc["wasted_expiry"] += expired_in_stock
        acc["wasted_slippage"] += slippage
        acc["wasted_z0"] += expired_after_issue
        acc["order_units"] += order
        acc["returned"] += sum(u_today)

    result = RolloutResult(
        reward_sum=reward_sum,
        demand=acc["demand"],
        emergency_units=acc["emergency"],
        received_routine=acc["received_routine"],
        received_emergency=acc["emergency"],
        wasted_expiry_in_stock=acc["wasted_expiry"],
        wasted_slippage=acc["wasted_slippage"],
        wasted_expired_after_issue=acc["wasted_z0"],
        order_units=acc["order_units"],
        returned_units=acc["returned"],
        days_counted=horizon,
        lifetime_demand=acc["demand"],
        lifetime_emergency=acc["emergency"],
        lifetime_received_routine=acc["received_routine"],
        lifetime_wasted_expiry=acc["wasted_expiry"],
        lifetime_wasted_slippage=acc["wasted_slippage"],
        lifetime_wasted_expired_after_issue=acc["wasted_z0"],
        lifetime_returned=acc["returned"],
        final_stock=sum(stock),
        final_pending=sum(pending),
    )
    if result.conservation_gap() != 0:
        raise RuntimeError(f"unit conservation violated in replay (gap {result.conservation_gap()})")
    kpis = compute_kpis([result]) if horizon else KPIReport(0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1)
    return kpis, result
