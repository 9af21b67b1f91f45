"""One simulated day (six stages) and full rollouts.

The day proceeds: routine order arrives (stage 1), morning demand is met
(stage 2), yesterday's unused issues come back at midday minus slippage and
post-issue expiries (stage 3), afternoon demand is met (stage 4), stock ages
and in-stock expiries are discarded (stage 5), and the reward and next state
are computed (stage 6).

This module holds the readable reference implementation plus the dispatch to
the compiled kernel.  `rollout` / `run_batch` use the fastest available
backend; `rollout_reference` always runs the pure-Python path and accepts an
injectable stream source so tests can script every draw.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _fields as F
from .core import (
    AgeProfile,
    CostParams,
    DayRecord,
    RolloutResult,
    ScenarioConfig,
    SimState,
    empty_state,
)
from .policies import (
    OUFO,
    YUFO,
    YUPR,
    IssuingPolicy,
    ReplenishmentPolicy,
    SimulatedPredictor,
    choose_issue_index,
    predict,
    replenishment_action,
)
from .streams import (
    ARRIVAL_AGES,
    DEMAND_AM,
    DEMAND_PM,
    EMERGENCY_AGE,
    REQUEST_LABEL,
    REQUEST_PRED,
    SLIPPAGE,
    RngStreams,
)

try:
    from . import _kernel_cy

    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on build environment
    _kernel_cy = None
    BACKEND = "python"


def available_backends() -> tuple[str, ...]:
    return ("cython", "python") if _kernel_cy is not None else ("python",)


# --- Single-stage operations -------------------------------------------------


def sample_arrivals(order: int, profile: AgeProfile, stream) -> list[int]:
    """Age-class counts for an order: Multinomial(order, profile)."""
    counts = [0] * len(profile.probabilities)
    if order > 0:
        for idx in stream.categorical_many(profile.cdf(), order):
            counts[idx] += 1
    return counts


@dataclass
class IssueOutcome:
    stock: list[int]
    issued_today: list[int]
    emergency_count: int
    request_log: list[tuple[int, int | None, int | None, bool]]
    # request_log rows: (true_label, predicted_label, issue_index, emergency)


def meet_demand(stock, issued_today, emergency_count: int, demand: int,
                issuing: IssuingPolicy, return_rate: float, profile: AgeProfile,
                rng, day: int, first_request_index: int = 0) -> IssueOutcome:
    """Process `demand` single-unit requests one at a time.

    Each request draws its true label (will the unit come back?) and, under
    yupr, a prediction from the simulated classifier; predicted returns are
    issued freshest-first, the rest oldest-first.  An empty stock triggers an
    emergency order whose age class is sampled from the arrival profile.
    """
    stock = list(stock)
    issued_today = list(issued_today)
    log: list[tuple[int, int | None, int | None, bool]] = []
    cdf = profile.cdf()
    predictor = SimulatedPredictor(issuing.sensitivity, issuing.specificity)
    for k in range(demand):
        req = first_request_index + k
        label = int(rng.bernoulli(day, REQUEST_LABEL, req, return_rate))
        if sum(stock) > 0:
            if issuing.mode == YUPR:
                pred = predict(label, predictor, rng.stream(day, REQUEST_PRED, req))
            elif issuing.mode == OUFO:
                pred = 0
            else:
                pred = 1
            idx = choose_issue_index(stock, pred)
            stock[idx] -= 1
            if label:
                issued_today[idx] += 1
            log.append((label, pred, idx, False))
        else:
            emergency_count += 1
            idx = rng.categorical(day, EMERGENCY_AGE, req, cdf)
            if label:
                issued_today[idx] += 1
            log.append((label, None, idx, True))
    return IssueOutcome(stock, issued_today, emergency_count, log)


def process_returns(stock, pending, slippage_rate: float, rng, day: int):
    """Midday returns: units issued yesterday and not transfused re-enter
    stock unless they expired after issue (last pending entry) or are lost to
    slippage (Binomial per remaining-life class)."""
    m = len(stock)
    stock = list(stock)
    slippage_count = 0
    expired_after_issue = pending[m - 1]
    for life in range(1, m):
        n_pending = pending[m - 1 - life]
        if n_pending > 0:
            n_slip = rng.binomial(day, SLIPPAGE, life, n_pending, slippage_rate)
            stock[m - life] += n_pending - n_slip
            slippage_count += n_slip
    return stock, slippage_count, expired_after_issue


def age_stock(stock):
    """End of day: decrement every unit's remaining life; units that were on
    their last day expire.  The freshest bin is empty afterwards."""
    m = len(stock)
    expired = stock[m - 1]
    aged = [0] * m
    for i in range(m - 1, 0, -1):
        aged[i] = stock[i - 1]
    return aged, expired


def compute_reward(order: int, end_stock_sum: int, emergency: int,
                   wasted: int, expired_after_issue: int, costs: CostParams) -> float:
    """Negative cost of one day.  Emergency units incur only the shortage
    cost; units that expired after issue are charged the wastage cost divided
    by the discount because they register one step late."""
    reward = 0.0
    if order > 0:
        reward -= costs.fixed_order_cost
    reward -= costs.variable_order_cost * order
    reward -= costs.holding_cost * end_stock_sum
    reward -= costs.shortage_cost * emergency
    reward -= costs.wastage_cost * ((wasted + expired_after_issue / costs.discount))
    return reward


def step(state: SimState, action: int, cfg: ScenarioConfig, issuing: IssuingPolicy,
         rng, day: int) -> tuple[SimState, float, DayRecord]:
    """Run the six stages for one day and return the next state."""
    tau = state.weekday
    profile = cfg.age_profiles[tau]
    order = max(0, min(int(action), cfg.max_order))

    # stage 1: routine order arrives immediately
    stock = list(state.stock)
    if order > 0:
        for i, extra in enumerate(sample_arrivals(order, profile, rng.stream(day, ARRIVAL_AGES, 0))):
            stock[i] += extra

    # stage 2: morning demand
    half_mean = cfg.demand_means[tau] / 2.0
    demand_am = rng.poisson(day, DEMAND_AM, 0, half_mean)
    out_am = meet_demand(stock, [0] * cfg.max_life, 0, demand_am, issuing,
                         cfg.return_rate, profile, rng, day, first_request_index=0)

    # stage 3: returns at midday
    stock, slippage, expired_after_issue = process_returns(
        out_am.stock, state.pending, cfg.slippage_rate, rng, day)

    # stage 4: afternoon demand
    demand_pm = rng.poisson(day, DEMAND_PM, 0, half_mean)
    out_pm = meet_demand(stock, out_am.issued_today, out_am.emergency_count,
                         demand_pm, issuing, cfg.return_rate, profile, rng, day,
                         first_request_index=demand_am)

    # stage 5: age stock, discard in-stock expiries
    aged, expired_in_stock = age_stock(out_pm.stock)
    assert aged[0] == 0, "freshest bin must be empty after aging"

    # stage 6: reward and next state
    end_stock = sum(aged)
    emergency = out_pm.emergency_count
    reward = compute_reward(order, end_stock, emergency,
                            expired_in_stock + slippage, expired_after_issue, cfg.costs)
    returned = sum(out_pm.issued_today)
    record = DayRecord(
        reward=reward,
        demand_total=demand_am + demand_pm,
        emergency_units=emergency,
        received_routine=order,
        received_emergency=emergency,
        wasted_expiry_in_stock=expired_in_stock,
        wasted_slippage=slippage,
        wasted_expired_after_issue=expired_after_issue,
        order_placed=order,
        returned_units=returned,
    )
    next_state = SimState((tau + 1) % 7, tuple(aged), tuple(out_pm.issued_today))
    return next_state, reward, record


def rollout_reference(cfg: ScenarioConfig, replenishment: ReplenishmentPolicy,
                      issuing: IssuingPolicy, horizon: int, warmup: int,
                      rollout_index: int, master_seed: int,
                      rng=None, day_log=None,
                      initial_state: SimState | None = None) -> RolloutResult:
    """Pure-Python rollout: a loop of `step`s from an empty Monday state.

    `rng` may be any object with the RngStreams draw interface, which lets
    tests drive the engine with scripted draws.
    """
    if not horizon > warmup >= 0:
        raise ValueError("need horizon > warmup >= 0")
    if rng is None:
        rng = RngStreams(master_seed, rollout_index)
    state = initial_state if initial_state is not None else empty_state(cfg.max_life)

    acc = {k: 0 for k in ("demand", "emergency", "received_routine", "wasted_expiry",
                          "wasted_slippage", "wasted_z0", "order_units", "returned",
                          "days_counted")}
    lt = {k: 0 for k in ("demand", "emergency", "received_routine", "wasted_expiry",
                         "wasted_slippage", "wasted_z0", "returned")}
    reward_sum = 0.0
    writer = csv.writer(day_log) if day_log is not None else None
    if writer is not None:
        writer.writerow(["day", "weekday", "order", "am_demand", "pm_demand",
                         "emergency", "wasted_expiry", "slippage", "z0", "reward"])

    for day in range(horizon):
        weekday = state.weekday
        action = replenishment_action(weekday, sum(state.stock), replenishment)
        demand_am_probe = None
        if writer is not None:
            demand_am_probe = rng.poisson(day, DEMAND_AM, 0, cfg.demand_means[weekday] / 2.0)
        state, reward, rec = step(state, action, cfg, issuing, rng, day)
        lt["demand"] += rec.demand_total
        lt["emergency"] += rec.emergency_units
        lt["received_routine"] += rec.received_routine
        lt["wasted_expiry"] += rec.wasted_expiry_in_stock
        lt["wasted_slippage"] += rec.wasted_slippage
        lt["wasted_z0"] += rec.wasted_expired_after_issue
        lt["returned"] += rec.returned_units
        if day >= warmup:
            reward_sum += rec.reward
            acc["demand"] += rec.demand_total
            acc["emergency"] += rec.emergency_units
            acc["received_routine"] += rec.received_routine
            acc["wasted_expiry"] += rec.wasted_expiry_in_stock
            acc["wasted_slippage"] += rec.wasted_slippage
            acc["wasted_z0"] += rec.wasted_expired_after_issue
            acc["order_units"] += rec.order_placed
            acc["returned"] += rec.returned_units
            acc["days_counted"] += 1
        if writer is not None:
            writer.writerow([day, weekday, rec.order_placed, demand_am_probe,
                             rec.demand_total - demand_am_probe, rec.emergency_units,
                             rec.wasted_expiry_in_stock, rec.wasted_slippage,
                             rec.wasted_expired_after_issue, repr(rec.reward)])

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
        days_counted=acc["days_counted"],
        lifetime_demand=lt["demand"],
        lifetime_emergency=lt["emergency"],
        lifetime_received_routine=lt["received_routine"],
        lifetime_wasted_expiry=lt["wasted_expiry"],
        lifetime_wasted_slippage=lt["wasted_slippage"],
        lifetime_wasted_expired_after_issue=lt["wasted_z0"],
        lifetime_returned=lt["returned"],
        final_stock=sum(state.stock),
        final_pending=sum(state.pending),
    )
    if result.conservation_gap() != 0:
        raise RuntimeError(f"unit conservation violated (gap {result.conservation_gap()})")
    return result


# --- Batch execution over the selected backend -------------------------------


def _pack_scenario(cfg: ScenarioConfig):
    mu_half = np.array([m / 2.0 for m in cfg.demand_means], dtype=np.float64)
    cdf7 = np.empty((7, cfg.max_life), dtype=np.float64)
    for tau in range(7):
        cdf7[tau, :] = cfg.age_profiles[tau].cdf()
    return mu_half, cdf7


def _pack_replenishment(policy: ReplenishmentPolicy):
    from .policies import StandingOrderPolicy, WeeklySSPolicy

    if isinstance(policy, StandingOrderPolicy):
        return 0, int(policy.q), np.zeros(7, dtype=np.int64), np.zeros(7, dtype=np.int64), False
    if isinstance(policy, WeeklySSPolicy):
        return (1, 0, np.array(policy.s, dtype=np.int64),
                np.array(policy.big_s, dtype=np.int64), policy.violates_order())
    raise TypeError(f"unknown replenishment policy {policy!r}")


_MODE_CODES = {OUFO: 0, YUFO: 1, YUPR: 2}


def results_from_rows(rows: np.ndarray) -> list[RolloutResult]:
    out = []
    for row in rows:
        out.append(RolloutResult(
            reward_sum=float(row[F.REWARD_SUM]),
            demand=int(row[F.DEMAND]),
            emergency_units=int(row[F.EMERGENCY]),
            received_routine=int(row[F.RECEIVED_ROUTINE]),
            received_emergency=int(row[F.EMERGENCY]),
            wasted_expiry_in_stock=int(row[F.WASTED_EXPIRY]),
            wasted_slippage=int(row[F.WASTED_SLIPPAGE]),
            wasted_expired_after_issue=int(row[F.WASTED_Z0]),
            order_units=int(row[F.ORDER_UNITS]),
            returned_units=int(row[F.RETURNED]),
            days_counted=int(row[F.DAYS_COUNTED]),
            lifetime_demand=int(row[F.LT_DEMAND]),
            lifetime_emergency=int(row[F.LT_EMERGENCY]),
            lifetime_received_routine=int(row[F.LT_RECEIVED_ROUTINE]),
            lifetime_wasted_expiry=int(row[F.LT_WASTED_EXPIRY]),
            lifetime_wasted_slippage=int(row[F.LT_WASTED_SLIPPAGE]),
            lifetime_wasted_expired_after_issue=int(row[F.LT_WASTED_Z0]),
            lifetime_returned=int(row[F.LT_RETURNED]),
            final_stock=int(row[F.FINAL_STOCK]),
            final_pending=int(row[F.FINAL_PENDING]),
        ))
    return out


def result_to_row(res: RolloutResult) -> np.ndarray:
    row = np.zeros(F.N_FIELDS, dtype=np.float64)
    row[F.REWARD_SUM] = res.reward_sum
    row[F.DEMAND] = res.demand
    row[F.EMERGENCY] = res.emergency_units
    row[F.RECEIVED_ROUTINE] = res.received_routine
    row[F.WASTED_EXPIRY] = res.wasted_expiry_in_stock
    row[F.WASTED_SLIPPAGE] = res.wasted_slippage
    row[F.WASTED_Z0] = res.wasted_expired_after_issue
    row[F.ORDER_UNITS] = res.order_units
    row[F.RETURNED] = res.returned_units
    row[F.DAYS_COUNTED] = res.days_counted
    row[F.LT_DEMAND] = res.lifetime_demand
    row[F.LT_EMERGENCY] = res.lifetime_emergency
    row[F.LT_RECEIVED_ROUTINE] = res.lifetime_received_routine
    row[F.LT_WASTED_EXPIRY] = res.lifetime_wasted_expiry
    row[F.LT_WASTED_SLIPPAGE] = res.lifetime_wasted_slippage
    row[F.LT_WASTED_Z0] = res.lifetime_wasted_expired_after_issue
    row[F.LT_RETURNED] = res.lifetime_returned
    row[F.FINAL_STOCK] = res.final_stock
    row[F.FINAL_PENDING] = res.final_pending
    return row


def run_batch_rows(cfg: ScenarioConfig, replenishment: ReplenishmentPolicy,
                   issuing: IssuingPolicy, horizon: int, warmup: int,
                   indices, master_seed: int, workers: int = 1,
                   backend: str | None = None) -> np.ndarray:
    """Rollout result rows for the given rollout indices.

    Results depend only on (cfg, policies, horizon, warmup, master_seed,
    index), never on worker count or execution order.
    """
    if not horizon > warmup >= 0:
        raise ValueError("need horizon > warmup >= 0")
    indices = np.asarray(list(indices), dtype=np.int64)
    use = backend or BACKEND
    out = np.zeros((len(indices), F.N_FIELDS), dtype=np.float64)
    if len(indices) == 0:
        return out

    if use == "cython":
        if _kernel_cy is None:
            raise RuntimeError("compiled kernel not available")
        mu_half, cdf7 = _pack_scenario(cfg)
        rep_kind, q, s_small, s_big, violated = _pack_replenishment(replenishment)
        mode = _MODE_CODES[issuing.mode]

        def run_chunk(lo: int, hi: int) -> None:
            _kernel_cy.run_rollouts(
                mu_half, cdf7, cfg.return_rate, cfg.slippage_rate,
                cfg.costs.fixed_order_cost, cfg.costs.variable_order_cost,
                cfg.costs.holding_cost, cfg.costs.shortage_cost,
                cfg.costs.wastage_cost, cfg.costs.discount,
                cfg.max_life, cfg.max_order,
                rep_kind, q, s_small, s_big, violated,
                mode, issuing.sensitivity, issuing.specificity,
                horizon, warmup, indices[lo:hi], master_seed & ((1 << 64) - 1),
                out[lo:hi])
    elif use == "python":
        def run_chunk(lo: int, hi: int) -> None:
            for pos in range(lo, hi):
                res = rollout_reference(cfg, replenishment, issuing, horizon,
                                        warmup, int(indices[pos]), master_seed)
                out[pos, :] = result_to_row(res)
    else:
        raise ValueError(f"unknown backend {use!r}")

    workers = max(1, int(workers))
    if workers == 1 or len(indices) < 2:
        run_chunk(0, len(indices))
    else:
        n = len(indices)
        chunk = (n + workers - 1) // workers
        bounds = [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda b: run_chunk(*b), bounds))

    gaps = (out[:, F.LT_RECEIVED_ROUTINE] + out[:, F.LT_EMERGENCY]) - (
        (out[:, F.LT_DEMAND] - out[:, F.LT_RETURNED])
        + out[:, F.LT_WASTED_EXPIRY] + out[:, F.LT_WASTED_SLIPPAGE]
        + out[:, F.LT_WASTED_Z0] + out[:, F.FINAL_STOCK] + out[:, F.FINAL_PENDING])
    if np.any(gaps != 0):
        raise RuntimeError("unit conservation violated in batch rollout")
    return out


def rollout(cfg: ScenarioConfig, replenishment: ReplenishmentPolicy,
            issuing: IssuingPolicy, horizon: int = 465, warmup: int = 100,
            rollout_index: int = 0, master_seed: int = 0,
            backend: str | None = None) -> RolloutResult:
    """One rollout on the selected backend (bit-identical across backends)."""
    rows = run_batch_rows(cfg, replenishment, issuing, horizon, warmup,
                          [rollout_index], master_seed, backend=backend)
    return results_from_rows(rows)[0]
