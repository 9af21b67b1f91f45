"""Domain types shared across the simulator, plus built-in scenarios.

Conventions used everywhere:

* Weekdays are Monday-indexed: 0 = Monday ... 6 = Sunday.
* Stock vectors hold unit counts by remaining useful life, freshest first:
  index i holds units with (max_life - i) days left.  Index m-1 holds units
  that expire at the end of the current day.
* Pending-return vectors are indexed the same way shifted one day: index i
  holds units issued yesterday that now have (max_life - 1 - i) days left;
  the last entry holds units that expired after issue.
* Costs are abstract cost units, not currency.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

MAX_LIFE_LIMIT = 64  # compiled kernel uses fixed-size buffers
DEMAND_MEAN_LIMIT = 1000.0  # Poisson inversion sampler domain


class InputError(ValueError):
    """Invalid scenario, policy or input file content."""


@dataclass(frozen=True)
class CostParams:
    """Per-day reward components (all charged as negative reward)."""

    fixed_order_cost: float = 225.0
    variable_order_cost: float = 650.0
    holding_cost: float = 130.0
    shortage_cost: float = 3250.0
    wastage_cost: float = 650.0
    discount: float = 1.0

    def validate(self) -> "CostParams":
        for name in ("fixed_order_cost", "variable_order_cost", "holding_cost",
                     "shortage_cost", "wastage_cost"):
            if getattr(self, name) < 0:
                raise InputError(f"cost parameter {name} must be >= 0")
        if not 0.0 < self.discount <= 1.0:
            raise InputError("discount must be in (0, 1]")
        return self


@dataclass(frozen=True)
class AgeProfile:
    """Distribution of remaining useful life on arrival, freshest first."""

    probabilities: tuple[float, ...]

    @staticmethod
    def from_row(row, renormalize: bool = True) -> "AgeProfile":
        """Build from a published table row, re-normalizing away 2-decimal
        rounding so the probabilities sum to exactly 1."""
        vals = [float(v) for v in row]
        if not all(0.0 <= v < float("inf") for v in vals):
            raise InputError("age profile entries must be finite and >= 0")
        total = sum(vals)
        if total <= 0:
            raise InputError("age profile must have positive total mass")
        if renormalize:
            vals = [v / total for v in vals]
        return AgeProfile(tuple(vals))

    def validate(self, max_life: int) -> "AgeProfile":
        if len(self.probabilities) != max_life:
            raise InputError(
                f"age profile length {len(self.probabilities)} != max_life {max_life}")
        if any(p < 0 for p in self.probabilities):
            raise InputError("age profile entries must be >= 0")
        if abs(sum(self.probabilities) - 1.0) > 1e-9:
            raise InputError("age profile must sum to 1 (within 1e-9)")
        return self

    def cdf(self) -> list[float]:
        out: list[float] = []
        acc = 0.0
        for p in self.probabilities:
            acc += p
            out.append(acc)
        out[-1] = 1.0  # guard against rounding shortfall at the top
        return out


@dataclass(frozen=True)
class ScenarioConfig:
    """All stochastic inputs of the simulated workflow."""

    max_life: int
    demand_means: tuple[float, ...]
    return_rate: float
    slippage_rate: float
    age_profiles: tuple[AgeProfile, ...]
    costs: CostParams = field(default_factory=CostParams)
    max_order: int = 100
    lead_time: int = 0


def validate_scenario(cfg: ScenarioConfig) -> ScenarioConfig:
    """Check every invariant; raise InputError naming the first violation."""
    if cfg.max_life < 1:
        raise InputError("max_life must be >= 1")
    if cfg.max_life > MAX_LIFE_LIMIT:
        raise InputError(f"max_life must be <= {MAX_LIFE_LIMIT}")
    if cfg.lead_time != 0:
        raise InputError("lead_time must be 0 (orders arrive same day)")
    if cfg.max_order < 1:
        raise InputError("max_order must be >= 1")
    if len(cfg.demand_means) != 7:
        raise InputError("demand_means must have 7 entries (Mon..Sun)")
    for mu in cfg.demand_means:
        if not 0.0 <= mu <= DEMAND_MEAN_LIMIT:  # also rejects NaN
            raise InputError(
                f"demand mean {mu} outside [0, {DEMAND_MEAN_LIMIT}] (sampler limit)")
    if not 0.0 <= cfg.return_rate <= 1.0:
        raise InputError("return_rate: probability out of range")
    if not 0.0 <= cfg.slippage_rate <= 1.0:
        raise InputError("slippage_rate: probability out of range")
    if len(cfg.age_profiles) != 7:
        raise InputError("age_profiles must have 7 entries (Mon..Sun)")
    for profile in cfg.age_profiles:
        profile.validate(cfg.max_life)
    cfg.costs.validate()
    return cfg


@dataclass(frozen=True)
class SimState:
    """MDP state; the replenishment policy observes only (weekday, stock)."""

    weekday: int
    stock: tuple[int, ...]
    pending: tuple[int, ...]

    def validate(self, max_life: int) -> "SimState":
        if not 0 <= self.weekday <= 6:
            raise InputError("weekday out of range")
        if len(self.stock) != max_life or len(self.pending) != max_life:
            raise InputError("state vector length != max_life")
        if any(c < 0 for c in self.stock) or any(c < 0 for c in self.pending):
            raise InputError("state counts must be >= 0")
        return self


def empty_state(max_life: int) -> SimState:
    return SimState(0, (0,) * max_life, (0,) * max_life)


@dataclass(frozen=True)
class DayRecord:
    """Per-day accounting of one simulated step."""

    reward: float
    demand_total: int
    emergency_units: int
    received_routine: int
    received_emergency: int
    wasted_expiry_in_stock: int
    wasted_slippage: int
    wasted_expired_after_issue: int
    order_placed: int
    returned_units: int


@dataclass(frozen=True)
class RolloutResult:
    """Sums of DayRecord fields over the scored (post-warm-up) days, plus
    whole-horizon flow totals used by the unit-conservation check."""

    reward_sum: float
    demand: int
    emergency_units: int
    received_routine: int
    received_emergency: int
    wasted_expiry_in_stock: int
    wasted_slippage: int
    wasted_expired_after_issue: int
    order_units: int
    returned_units: int
    days_counted: int
    # whole-horizon totals (warm-up included)
    lifetime_demand: int
    lifetime_emergency: int
    lifetime_received_routine: int
    lifetime_wasted_expiry: int
    lifetime_wasted_slippage: int
    lifetime_wasted_expired_after_issue: int
    lifetime_returned: int
    final_stock: int
    final_pending: int

    def conservation_gap(self) -> int:
        """Received minus accounted units over the whole horizon; 0 if units
        are conserved (transfused = demand - returned)."""
        received = self.lifetime_received_routine + self.lifetime_emergency
        accounted = (
            (self.lifetime_demand - self.lifetime_returned)
            + self.lifetime_wasted_expiry
            + self.lifetime_wasted_slippage
            + self.lifetime_wasted_expired_after_issue
            + self.final_stock
            + self.final_pending
        )
        return received - accounted


# --- Built-in scenarios -----------------------------------------------------
#
# Constants for the scenario families used by the experiments: the partner
# hospital's observed inputs (with and without returns), the shorter
# remaining-useful-life distribution reported for a US hospital (R&R), and
# the hospital's 2017 arrivals used for trace replay.

DEMAND_WITH_RETURNS = (28.8, 33.4, 26.2, 28.4, 30.8, 18.6, 19.6)
DEMAND_TRANSFUSED = (26.4, 30.6, 24.2, 26.0, 28.4, 17.0, 18.0)
UCLH_RETURN_RATE = 0.08
UCLH_SLIPPAGE_RATE = 0.07

UCLH_AGE_ROWS = (
    (0.25, 0.33, 0.28, 0.11, 0.03),
    (0.20, 0.35, 0.27, 0.13, 0.05),
    (0.26, 0.18, 0.38, 0.14, 0.04),
    (0.76, 0.07, 0.05, 0.09, 0.03),
    (0.62, 0.29, 0.02, 0.03, 0.04),
    (0.61, 0.28, 0.11, 0.00, 0.00),
    (0.48, 0.27, 0.19, 0.05, 0.01),
)

UCLH_2017_AGE_ROWS = (
    (0.31, 0.32, 0.23, 0.12, 0.02),
    (0.18, 0.48, 0.21, 0.10, 0.03),
    (0.25, 0.19, 0.38, 0.15, 0.03),
    (0.87, 0.02, 0.03, 0.07, 0.01),
    (0.71, 0.24, 0.02, 0.01, 0.01),
    (0.62, 0.28, 0.10, 0.00, 0.00),
    (0.48, 0.28, 0.18, 0.06, 0.00),
)

RR_AGE_ROW = (0.50, 0.20, 0.30)

SCENARIO_NAMES = (
    "uclh-returns",
    "uclh-rr-returns",
    "uclh-no-returns",
    "rr-no-returns",
    "uclh-2017",
)


def _profiles(rows) -> tuple[AgeProfile, ...]:
    return tuple(AgeProfile.from_row(r) for r in rows)


def builtin_scenario(name: str) -> ScenarioConfig:
    """The constants of one named experiment family."""
    if name == "uclh-returns":
        cfg = ScenarioConfig(
            max_life=5,
            demand_means=DEMAND_WITH_RETURNS,
            return_rate=UCLH_RETURN_RATE,
            slippage_rate=UCLH_SLIPPAGE_RATE,
            age_profiles=_profiles(UCLH_AGE_ROWS),
        )
    elif name == "uclh-rr-returns":
        cfg = ScenarioConfig(
            max_life=3,
            demand_means=DEMAND_WITH_RETURNS,
            return_rate=UCLH_RETURN_RATE,
            slippage_rate=UCLH_SLIPPAGE_RATE,
            age_profiles=_profiles([RR_AGE_ROW] * 7),
        )
    elif name == "uclh-no-returns":
        cfg = ScenarioConfig(
            max_life=5,
            demand_means=DEMAND_TRANSFUSED,
            return_rate=0.0,
            slippage_rate=0.0,
            age_profiles=_profiles(UCLH_AGE_ROWS),
        )
    elif name == "rr-no-returns":
        cfg = ScenarioConfig(
            max_life=3,
            demand_means=DEMAND_TRANSFUSED,
            return_rate=0.0,
            slippage_rate=0.0,
            age_profiles=_profiles([RR_AGE_ROW] * 7),
        )
    elif name == "uclh-2017":
        cfg = ScenarioConfig(
            max_life=5,
            demand_means=DEMAND_WITH_RETURNS,
            return_rate=UCLH_RETURN_RATE,
            slippage_rate=UCLH_SLIPPAGE_RATE,
            age_profiles=_profiles(UCLH_2017_AGE_ROWS),
        )
    else:
        raise InputError(
            f"unknown scenario {name!r}; expected one of {', '.join(SCENARIO_NAMES)}")
    return validate_scenario(cfg)


def with_demand(cfg: ScenarioConfig, demand_means) -> ScenarioConfig:
    return replace(cfg, demand_means=tuple(float(m) for m in demand_means))
