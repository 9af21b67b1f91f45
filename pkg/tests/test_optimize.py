"""Grid fitting, GA fitting and batch evaluation.

The standing-order oracle uses a fully deterministic world (fixed demand,
fresh arrivals, no returns) in which the optimal order quantity is provable
by hand: ordering exactly the daily demand avoids shortage, holding and
wastage costs entirely, and any deviation strictly adds cost.
"""

import numpy as np
import pytest

from platebank.engine import result_to_row, rollout, rollout_reference, run_batch_rows
from platebank.optimize import (
    GAConfig,
    evaluate_policy,
    fit_ss_policy,
    fit_standing_order,
)
from platebank.policies import IssuingPolicy, WeeklySSPolicy
from platebank.streams import NS_FIT, RngStreams, derive_seed

from helpers import make_scenario


class FixedDemandStreams(RngStreams):
    """Demand draws return their mean exactly; everything else is unchanged."""

    def poisson(self, day, purpose, idx, lam):
        return round(lam)


def fixed_demand_runner(cfg, policy, issuing, horizon, warmup, indices, seed, workers):
    rows = np.zeros((len(list(indices)), 19))
    for pos, idx in enumerate(indices):
        res = rollout_reference(cfg, policy, issuing, horizon, warmup, idx, seed,
                                rng=FixedDemandStreams(seed, idx))
        rows[pos, :] = result_to_row(res)
    return rows


OUFO = IssuingPolicy("oufo")


def test_grid_fit_dead_scenario_orders_nothing():
    cfg = make_scenario(max_life=3, demand=0.0, max_order=10)
    ga = GAConfig(fit_rollouts=2, fit_horizon=10, fit_warmup=2, seed=1)
    report = fit_standing_order(cfg, OUFO, ga)
    assert report.best_params == {"q": 0}
    assert report.best_mean_return == 0.0
    assert report.evaluation_count == 11
    assert report.stop_reason == "grid-exhausted"


def test_grid_fit_matches_deterministic_oracle():
    # demand 6/day (3 am + 3 pm), fresh arrivals, no returns: Q* = 6
    cfg = make_scenario(max_life=5, demand=6.0, max_order=12)
    ga = GAConfig(fit_rollouts=2, fit_horizon=8, fit_warmup=6, seed=3)
    report = fit_standing_order(cfg, OUFO, ga, batch_runner=fixed_demand_runner)
    assert report.best_params == {"q": 6}
    # daily cost at the optimum: fixed 225 + 6 * 650 variable
    assert report.best_mean_return == pytest.approx(-8 * (225 + 6 * 650) / 1)
    assert report.evaluation_count == 13


def test_grid_fit_reproducible():
    cfg = make_scenario(max_life=3, demand=4.0, rho=0.1, phi=0.2,
                        profile=[0.5, 0.3, 0.2], max_order=15)
    ga = GAConfig(fit_rollouts=8, fit_horizon=30, fit_warmup=5, seed=11)
    a = fit_standing_order(cfg, OUFO, ga)
    b = fit_standing_order(cfg, OUFO, ga)
    assert a.best_params == b.best_params
    assert a.best_mean_return == b.best_mean_return


def test_ga_dead_scenario_scores_zero():
    cfg = make_scenario(max_life=3, demand=0.0, max_order=8)
    ga = GAConfig(population_size=6, max_generations=3, patience=2,
                  fit_rollouts=2, fit_horizon=10, fit_warmup=2, seed=4)
    report = fit_ss_policy(cfg, OUFO, ga)
    assert report.best_mean_return == 0.0


def test_ga_elitism_warm_start_never_lost():
    cfg = make_scenario(max_life=4, demand=8.0, rho=0.1, phi=0.1,
                        profile=[0.4, 0.3, 0.2, 0.1], max_order=30)
    warm = WeeklySSPolicy((8,) * 7, (14,) * 7)
    ga = GAConfig(population_size=6, max_generations=2, patience=1,
                  fit_rollouts=6, fit_horizon=25, fit_warmup=5, seed=9)
    report = fit_ss_policy(cfg, OUFO, ga, warm_start=warm)
    warm_fitness = float(run_batch_rows(
        cfg, warm, OUFO, ga.fit_horizon + ga.fit_warmup, ga.fit_warmup,
        range(ga.fit_rollouts), derive_seed(ga.seed, NS_FIT),
    )[:, 0].mean())
    assert report.best_mean_return >= warm_fitness


def test_ga_history_monotone_and_counts():
    cfg = make_scenario(max_life=3, demand=5.0, rho=0.2, phi=0.1,
                        profile=[0.5, 0.3, 0.2], max_order=20)
    ga = GAConfig(population_size=8, max_generations=6, patience=3,
                  fit_rollouts=4, fit_horizon=20, fit_warmup=4, seed=6)
    report = fit_ss_policy(cfg, OUFO, ga)
    returns = [r for _, _, r in report.history]
    assert all(a <= b for a, b in zip(returns, returns[1:]))
    assert report.evaluation_count == report.generations_run * ga.population_size
    assert report.stop_reason in ("patience", "max-generations")
    assert len(report.best_params["s"]) == 7
    assert len(report.best_params["S"]) == 7


def test_ga_deterministic_given_seed():
    cfg = make_scenario(max_life=3, demand=5.0, rho=0.2, phi=0.1,
                        profile=[0.5, 0.3, 0.2], max_order=20)
    ga = GAConfig(population_size=6, max_generations=4, patience=2,
                  fit_rollouts=4, fit_horizon=20, fit_warmup=4, seed=13)
    a = fit_ss_policy(cfg, OUFO, ga)
    b = fit_ss_policy(cfg, OUFO, ga)
    assert a.best_params == b.best_params
    assert a.history == b.history


def test_evaluate_policy_single_rollout_matches_direct():
    cfg = make_scenario(max_life=4, demand=7.0, rho=0.1, phi=0.05,
                        profile=[0.4, 0.3, 0.2, 0.1])
    pol = WeeklySSPolicy((10,) * 7, (20,) * 7)
    results = evaluate_policy(cfg, pol, OUFO, n_rollouts=1, horizon=50,
                              warmup=10, seed=21)
    direct = rollout(cfg, pol, OUFO, horizon=60, warmup=10, rollout_index=0,
                     master_seed=21)
    assert results[0] == direct
    assert results[0].days_counted == 50


def test_evaluate_policy_worker_invariance():
    cfg = make_scenario(max_life=3, demand=5.0, rho=0.1, phi=0.1,
                        profile=[0.6, 0.3, 0.1])
    pol = WeeklySSPolicy((6,) * 7, (12,) * 7)
    a = evaluate_policy(cfg, pol, OUFO, n_rollouts=10, horizon=40, warmup=5,
                        seed=2, workers=1)
    b = evaluate_policy(cfg, pol, OUFO, n_rollouts=10, horizon=40, warmup=5,
                        seed=2, workers=3)
    assert a == b


def test_evaluate_policy_rejects_empty():
    cfg = make_scenario(max_life=3)
    with pytest.raises(ValueError):
        evaluate_policy(cfg, WeeklySSPolicy((1,) * 7, (2,) * 7), OUFO, n_rollouts=0)


def test_ga_config_validation():
    with pytest.raises(ValueError):
        GAConfig(population_size=1).validate()
    with pytest.raises(ValueError):
        GAConfig(patience=0).validate()
    with pytest.raises(ValueError):
        GAConfig(crossover_prob=1.5).validate()
