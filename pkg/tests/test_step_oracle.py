"""Full-day oracle: `step` against an independently hand-simulated day.

The fixture day below was worked through on paper from the six-stage rules
before being encoded here; every number in the expectations is from that hand
simulation, not from running the engine.
"""

import pytest

from platebank.core import SimState, empty_state
from platebank.engine import step
from platebank.policies import IssuingPolicy, yupr_policy
from platebank.streams import (
    ARRIVAL_AGES,
    DEMAND_AM,
    DEMAND_PM,
    EMERGENCY_AGE,
    REQUEST_LABEL,
    REQUEST_PRED,
    SLIPPAGE,
)

from helpers import FakeStreams, make_scenario


def test_hand_traced_day():
    """m=5, yupr(alpha=0.9, beta=0.8), order 4, scripted draws.

    Hand trace: start stock [2,0,1,0,3], pending [0,1,0,2,1] (lives 4..0).
    Arrivals at ages [0,2,2,4] -> stock [3,0,3,0,4].
    AM, 2 requests: k0 label 1, u=0.30<0.9 -> freshest (idx 0), U[0]=1;
    k1 label 0, u=0.95>0.8 -> false positive, freshest -> stock [1,0,3,0,4].
    Returns: z0 = 1 (pending life 0); life 1: 2 pending, 1 slips, 1 rejoins
    at idx 4; life 3: 1 pending, 0 slip, rejoins at idx 2 -> [1,0,4,0,5].
    PM, 3 requests: k2 label 0, u=0.50<=0.8 -> oldest idx 4; k3 label 1,
    u=0.95>=0.9 -> missed return, oldest idx 4, U[4]=1; k4 label 1,
    u=0.10<0.9 -> freshest idx 0, U[0]=2 -> stock [0,0,4,0,3].
    Aging: 3 expire, stock [0,0,0,4,0], end stock 4.
    Reward: -(225 + 4*650 + 4*130 + 0 + 650*(3+1+1)) = -6595.
    """
    cfg = make_scenario(max_life=5, demand=10.0, rho=0.5, phi=0.5,
                        profile=[0.2] * 5)
    issuing = yupr_policy(0.9, 0.8)
    script = {
        (0, ARRIVAL_AGES, 0): [0, 2, 2, 4],
        (0, DEMAND_AM, 0): 2,
        (0, DEMAND_PM, 0): 3,
        (0, REQUEST_LABEL, 0): True,
        (0, REQUEST_LABEL, 1): False,
        (0, REQUEST_LABEL, 2): False,
        (0, REQUEST_LABEL, 3): True,
        (0, REQUEST_LABEL, 4): True,
        (0, REQUEST_PRED, 0): 0.30,
        (0, REQUEST_PRED, 1): 0.95,
        (0, REQUEST_PRED, 2): 0.50,
        (0, REQUEST_PRED, 3): 0.95,
        (0, REQUEST_PRED, 4): 0.10,
        (0, SLIPPAGE, 1): 1,
        (0, SLIPPAGE, 3): 0,
    }
    state = SimState(0, (2, 0, 1, 0, 3), (0, 1, 0, 2, 1))
    next_state, reward, rec = step(state, 4, cfg, issuing, FakeStreams(script), day=0)

    assert reward == -6595.0
    assert next_state.weekday == 1
    assert next_state.stock == (0, 0, 0, 4, 0)
    assert next_state.pending == (2, 0, 0, 0, 1)
    assert rec.demand_total == 5
    assert rec.emergency_units == 0
    assert rec.received_routine == 4
    assert rec.received_emergency == 0
    assert rec.wasted_expiry_in_stock == 3
    assert rec.wasted_slippage == 1
    assert rec.wasted_expired_after_issue == 1
    assert rec.order_placed == 4
    assert rec.returned_units == 3


def test_hand_traced_shortage_day():
    """Empty stock, no order: the single request becomes an emergency order;
    reward is one shortage cost; a returned emergency unit enters pending at
    its sampled age."""
    cfg = make_scenario(max_life=5, demand=2.0, rho=1.0, phi=0.0,
                        profile=[0.2] * 5)
    script = {
        (0, DEMAND_AM, 0): 1,
        (0, DEMAND_PM, 0): 0,
        (0, REQUEST_LABEL, 0): True,
        (0, EMERGENCY_AGE, 0): 3,
    }
    state = empty_state(5)
    next_state, reward, rec = step(state, 0, cfg, IssuingPolicy("oufo"),
                                   FakeStreams(script), day=0)
    assert reward == -3250.0
    assert rec.demand_total == 1
    assert rec.emergency_units == 1
    assert rec.received_emergency == 1
    assert rec.received_routine == 0
    assert rec.returned_units == 1
    assert next_state.stock == (0,) * 5
    assert next_state.pending == (0, 0, 0, 1, 0)


def test_quiet_day_increments_weekday():
    cfg = make_scenario(max_life=3, demand=0.0)
    script = {(0, DEMAND_AM, 0): 0, (0, DEMAND_PM, 0): 0}
    state = empty_state(3)
    next_state, reward, rec = step(state, 0, cfg, IssuingPolicy("oufo"),
                                   FakeStreams(script), day=0)
    assert reward == 0.0
    assert rec.demand_total == 0
    assert next_state.weekday == 1


def test_sunday_wraps_to_monday():
    cfg = make_scenario(max_life=3, demand=0.0)
    script = {(6, DEMAND_AM, 0): 0, (6, DEMAND_PM, 0): 0}
    state = SimState(6, (0, 0, 0), (0, 0, 0))
    next_state, _, _ = step(state, 0, cfg, IssuingPolicy("oufo"),
                            FakeStreams(script), day=6)
    assert next_state.weekday == 0


def test_action_clipped_to_max_order():
    cfg = make_scenario(max_life=2, demand=0.0, max_order=5)
    script = {(0, ARRIVAL_AGES, 0): [0] * 5, (0, DEMAND_AM, 0): 0,
              (0, DEMAND_PM, 0): 0}
    state = empty_state(2)
    next_state, _, rec = step(state, 50, cfg, IssuingPolicy("oufo"),
                              FakeStreams(script), day=0)
    assert rec.order_placed == 5
    assert next_state.stock == (0, 5)  # fresh arrivals aged once


def test_post_aging_freshest_bin_empty():
    cfg = make_scenario(max_life=4, demand=0.0)
    script = {(0, ARRIVAL_AGES, 0): [0, 0, 1], (0, DEMAND_AM, 0): 0,
              (0, DEMAND_PM, 0): 0}
    next_state, _, _ = step(empty_state(4), 3, cfg, IssuingPolicy("oufo"),
                            FakeStreams(script), day=0)
    assert next_state.stock[0] == 0
