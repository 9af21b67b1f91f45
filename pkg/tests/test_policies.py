"""Replenishment actions, predictor behavior and issue-index selection."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from platebank.core import InputError
from platebank.policies import (
    IssuingPolicy,
    SimulatedPredictor,
    StandingOrderPolicy,
    TracePredictor,
    WeeklySSPolicy,
    choose_issue_index,
    predict,
    ss_action,
    standing_order_action,
)
from platebank.streams import REQUEST_PRED, RngStreams


def test_standing_order_ignores_observation():
    pol = StandingOrderPolicy(30)
    assert standing_order_action(0, 0, pol) == 30
    assert standing_order_action(4, 99, pol) == 30
    assert standing_order_action(6, 0, StandingOrderPolicy(0)) == 0


def test_standing_order_bounds():
    with pytest.raises(InputError):
        StandingOrderPolicy(101).validate(100)
    with pytest.raises(InputError):
        StandingOrderPolicy(-1).validate(100)


def test_ss_action_order_up_to():
    pol = WeeklySSPolicy((15,) * 7, (40,) * 7)
    assert ss_action(0, 10, pol) == 30
    assert ss_action(0, 15, pol) == 25  # boundary: stock == reorder point
    assert ss_action(0, 16, pol) == 0


def test_ss_violation_forces_zero_everywhere():
    # one bad weekday pair zeroes orders on every day
    s = [15] * 7
    big = [40] * 7
    s[3], big[3] = 40, 15
    pol = WeeklySSPolicy(tuple(s), tuple(big))
    for tau in range(7):
        assert ss_action(tau, 0, pol) == 0


def test_ss_equal_pair_is_violation():
    pol = WeeklySSPolicy((20,) * 7, (20,) * 7)
    assert ss_action(0, 0, pol) == 0


@given(st.integers(0, 100), st.integers(0, 100), st.integers(0, 6),
       st.lists(st.integers(0, 200), min_size=2, max_size=2).map(sorted))
@settings(max_examples=200, deadline=None)
def test_ss_action_monotone_in_stock(s, big, tau, stocks):
    pol = WeeklySSPolicy((s,) * 7, (big,) * 7)
    lo, hi = stocks
    assert ss_action(tau, lo, pol) >= ss_action(tau, hi, pol)


@given(st.integers(0, 100), st.integers(0, 100), st.integers(0, 6), st.integers(0, 300))
@settings(max_examples=200, deadline=None)
def test_order_never_exceeds_max(s, big, tau, stock):
    pol = WeeklySSPolicy((s,) * 7, (big,) * 7).validate(100)
    assert 0 <= ss_action(tau, stock, pol) <= 100


def test_predict_degenerate():
    rng = RngStreams(1)
    assert predict(1, SimulatedPredictor(1.0, 0.0), rng.stream(0, REQUEST_PRED, 0)) == 1
    assert predict(0, SimulatedPredictor(0.0, 1.0), rng.stream(0, REQUEST_PRED, 1)) == 0


def test_predict_sensitivity_frequency():
    # over 1e5 true-return requests, positives within 3 sigma of alpha
    alpha = 0.7
    rng = RngStreams(2024)
    n = 100000
    hits = sum(
        predict(1, SimulatedPredictor(alpha, 0.5), rng.stream(0, REQUEST_PRED, k))
        for k in range(n))
    sigma = math.sqrt(alpha * (1 - alpha) / n)
    assert abs(hits / n - alpha) < 3 * sigma


def test_predict_specificity_frequency():
    beta = 0.8
    rng = RngStreams(7)
    n = 100000
    false_pos = sum(
        predict(0, SimulatedPredictor(0.5, beta), rng.stream(1, REQUEST_PRED, k))
        for k in range(n))
    sigma = math.sqrt(beta * (1 - beta) / n)
    assert abs(false_pos / n - (1 - beta)) < 3 * sigma


def test_trace_predictor_order_and_exhaustion():
    tp = TracePredictor([1, 0, 1])
    assert [predict(0, tp) for _ in range(3)] == [1, 0, 1]
    with pytest.raises(InputError, match="request 3"):
        predict(0, tp)


def test_choose_issue_index():
    assert choose_issue_index([0, 2, 0, 1, 0], 1) == 1
    assert choose_issue_index([0, 2, 0, 1, 0], 0) == 3
    assert choose_issue_index([5, 0, 0, 0, 0], 0) == 0
    assert choose_issue_index([5, 0, 0, 0, 0], 1) == 0
    with pytest.raises(InputError, match="empty stock"):
        choose_issue_index([0, 0, 0], 1)


def test_issuing_policy_validation():
    with pytest.raises(InputError):
        IssuingPolicy("fifo").validate()
    with pytest.raises(InputError):
        IssuingPolicy("yupr", -0.1, 0.5).validate()
    assert IssuingPolicy("yupr", 0.3, 0.9).validate().mode == "yupr"
