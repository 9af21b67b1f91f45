"""Replenishment action rules and issuing predictors.

Replenishment policies map the observation (weekday, total stock on hand) to
a daily order quantity.  Issuing policies decide which age class to issue for
each request: oldest-first (oufo), youngest-first (yufo), or youngest-for-
predicted-returns (yupr), where a simulated predictor with given sensitivity
and specificity labels each request.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import InputError
from .streams import Stream

OUFO = "oufo"
YUFO = "yufo"
YUPR = "yupr"
ISSUING_MODES = (OUFO, YUFO, YUPR)


@dataclass(frozen=True)
class StandingOrderPolicy:
    """Order the same quantity every day, regardless of stock."""

    q: int

    def validate(self, max_order: int) -> "StandingOrderPolicy":
        if not 0 <= self.q <= max_order:
            raise InputError(f"standing order q={self.q} outside [0, {max_order}]")
        return self


@dataclass(frozen=True)
class WeeklySSPolicy:
    """Per-weekday (s, S): order up to S when stock <= s, review daily.

    s < S is not required at construction: a policy violating it on any
    weekday simply orders zero units on every day (the violation is handled
    behaviorally so optimizers can propose and score such candidates).
    """

    s: tuple[int, ...]
    big_s: tuple[int, ...]

    def validate(self, max_order: int) -> "WeeklySSPolicy":
        if len(self.s) != 7 or len(self.big_s) != 7:
            raise InputError("(s,S) policy needs 7 weekday pairs")
        for v in (*self.s, *self.big_s):
            if not 0 <= v <= max_order:
                raise InputError(f"(s,S) parameter {v} outside [0, {max_order}]")
        return self

    def violates_order(self) -> bool:
        """True if any weekday has s >= S (forces zero orders globally)."""
        return any(s >= b for s, b in zip(self.s, self.big_s))


ReplenishmentPolicy = StandingOrderPolicy | WeeklySSPolicy


def standing_order_action(weekday: int, total_stock: int, policy: StandingOrderPolicy) -> int:
    return policy.q


def ss_action(weekday: int, total_stock: int, policy: WeeklySSPolicy) -> int:
    if policy.violates_order():
        return 0
    if total_stock <= policy.s[weekday]:
        return max(policy.big_s[weekday] - total_stock, 0)
    return 0


def replenishment_action(weekday: int, total_stock: int, policy: ReplenishmentPolicy) -> int:
    if isinstance(policy, StandingOrderPolicy):
        return standing_order_action(weekday, total_stock, policy)
    return ss_action(weekday, total_stock, policy)


@dataclass(frozen=True)
class SimulatedPredictor:
    """A hypothetical classifier with fixed sensitivity/specificity."""

    sensitivity: float
    specificity: float

    def validate(self) -> "SimulatedPredictor":
        if not 0.0 <= self.sensitivity <= 1.0:
            raise InputError("sensitivity out of [0, 1]")
        if not 0.0 <= self.specificity <= 1.0:
            raise InputError("specificity out of [0, 1]")
        return self


class TracePredictor:
    """Replays stored per-request predictions in strict request order."""

    def __init__(self, labels):
        self._labels = list(labels)
        self._pos = 0

    def next_label(self) -> int:
        if self._pos >= len(self._labels):
            raise InputError(
                f"trace predictions exhausted at request {self._pos}: "
                f"only {len(self._labels)} labels supplied")
        label = self._labels[self._pos]
        self._pos += 1
        return label


def predict(true_label: int, spec: SimulatedPredictor | TracePredictor,
            stream: Stream | None = None) -> int:
    """Predicted label for one request.

    Simulated: a true return is flagged with probability sensitivity; a true
    transfusion is flagged (falsely) when the uniform exceeds specificity.
    """
    if isinstance(spec, TracePredictor):
        return spec.next_label()
    u = stream.uniform()
    if true_label:
        return 1 if u < spec.sensitivity else 0
    return 1 if u > spec.specificity else 0


@dataclass(frozen=True)
class IssuingPolicy:
    """Issuing rule: mode plus, for yupr, the simulated predictor quality."""

    mode: str = OUFO
    sensitivity: float = 0.0
    specificity: float = 1.0

    def validate(self) -> "IssuingPolicy":
        if self.mode not in ISSUING_MODES:
            raise InputError(f"unknown issuing mode {self.mode!r}")
        SimulatedPredictor(self.sensitivity, self.specificity).validate()
        return self


def yupr_policy(sensitivity: float, specificity: float) -> IssuingPolicy:
    return IssuingPolicy(YUPR, sensitivity, specificity).validate()


PPM = yupr_policy(1.0, 1.0)  # perfect predictive model


def choose_issue_index(stock, predicted_label: int) -> int:
    """Index to issue from: freshest in stock for a predicted return,
    oldest otherwise.  Caller must route empty stock to an emergency order."""
    m = len(stock)
    if predicted_label:
        for i in range(m):
            if stock[i] > 0:
                return i
    else:
        for i in range(m - 1, -1, -1):
            if stock[i] > 0:
                return i
    raise InputError("cannot issue from empty stock")
