"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Reduced-budget reproduction settings, pinned here: GA population 50,
patience 10, at most 60 generations, 128 common-seeded fit rollouts per
candidate; evaluation on 2,000 common-seeded rollouts of 365 scored days
after a 100-day warm-up; master seed 7.  Exact-equivalence criteria carry no
tolerance.  Runtime is a few minutes with the compiled kernel (run
`pytest tests/test_acceptance.py -s` to watch the per-criterion lines).
"""

import random
from contextlib import contextmanager

import pytest

from conftest import ACCEPTANCE_LINES

from platebank.core import builtin_scenario
from platebank.engine import rollout
from platebank.experiments import SweepPlan, binomial_age_profile, run_sensitivity_sweep
from platebank.metrics import (
    DEFAULT_AXIS,
    MetricGrid,
    compute_kpis,
    interpolate_grid,
    pair_count_auroc,
    paired_difference,
    roc_analysis,
)
from platebank.optimize import GAConfig, evaluate_policy, fit_ss_policy
from platebank.policies import IssuingPolicy, WeeklySSPolicy, yupr_policy
from platebank.streams import NS_EVAL, derive_seed

from test_experiments import EXP7_TABLE
from test_experiments import test_replay_hand_simulated_fixture as _replay_fixture
from test_step_oracle import test_hand_traced_day as _hand_traced_day
from test_step_oracle import test_hand_traced_shortage_day as _shortage_day

MASTER_SEED = 7
EVAL_ROLLOUTS = 2000
EVAL_HORIZON = 365
EVAL_WARMUP = 100
WORKERS = 2

GA = GAConfig(population_size=50, max_generations=60, patience=10,
              fit_rollouts=128, fit_horizon=365, fit_warmup=100,
              seed=MASTER_SEED, workers=WORKERS)
EVAL_SEED = derive_seed(MASTER_SEED, NS_EVAL)

OUFO = IssuingPolicy("oufo")
YUFO = IssuingPolicy("yufo")
PPM = yupr_policy(1.0, 1.0)


def _report(line: str) -> None:
    # live when run with -s, and repeated in the end-of-run summary otherwise
    print(line, flush=True)
    ACCEPTANCE_LINES.append(line)


@contextmanager
def criterion(number: int, name: str):
    try:
        yield
    except BaseException:
        _report(f"ACCEPTANCE {number} ({name}): FAIL")
        raise
    _report(f"ACCEPTANCE {number} ({name}): PASS")


def fit_and_evaluate(scenario_name: str):
    """Fit (s,S) for oldest-first, refit for the perfect predictor warm-started
    from it, and evaluate both on the shared held-out seed set."""
    cfg = builtin_scenario(scenario_name)
    oufo_fit = fit_ss_policy(cfg, yupr_policy(0.0, 1.0), GA)
    ppm_fit = fit_ss_policy(cfg, PPM, GA, warm_start=oufo_fit.best_policy())
    oufo_results = evaluate_policy(cfg, oufo_fit.best_policy(), OUFO, EVAL_ROLLOUTS,
                                   EVAL_HORIZON, EVAL_WARMUP, EVAL_SEED, WORKERS)
    ppm_results = evaluate_policy(cfg, ppm_fit.best_policy(), PPM, EVAL_ROLLOUTS,
                                  EVAL_HORIZON, EVAL_WARMUP, EVAL_SEED, WORKERS)
    return {
        "oufo_fit": oufo_fit, "ppm_fit": ppm_fit,
        "oufo_results": oufo_results, "ppm_results": ppm_results,
        "oufo_kpis": compute_kpis(oufo_results), "ppm_kpis": compute_kpis(ppm_results),
        "paired": paired_difference(oufo_results, ppm_results),
    }


@pytest.fixture(scope="module")
def exp2():
    return fit_and_evaluate("uclh-returns")


@pytest.fixture(scope="module")
def exp4():
    return fit_and_evaluate("uclh-rr-returns")


@pytest.fixture(scope="module")
def no_returns():
    out = {}
    for name in ("uclh-no-returns", "rr-no-returns"):
        cfg = builtin_scenario(name)
        fit = fit_ss_policy(cfg, yupr_policy(0.0, 1.0), GA)
        results = evaluate_policy(cfg, fit.best_policy(), OUFO, EVAL_ROLLOUTS,
                                  EVAL_HORIZON, EVAL_WARMUP, EVAL_SEED, WORKERS)
        out[name] = {"fit": fit, "results": results, "kpis": compute_kpis(results)}
    return out


@pytest.fixture(scope="module")
def phi_endpoints():
    plan = SweepPlan(scenario="uclh-returns", family="ss", ga=GA,
                     eval_rollouts=EVAL_ROLLOUTS, eval_horizon=EVAL_HORIZON,
                     eval_warmup=EVAL_WARMUP, seed=MASTER_SEED, workers=WORKERS)
    points = run_sensitivity_sweep("phi", [0.0, 1.0], plan)
    return {p.value: p for p in points}


def test_criterion_1_degenerate_predictor_equivalence():
    with criterion(1, "degenerate-predictor equivalence over 100 seeds"):
        cfg = builtin_scenario("uclh-returns")
        policy = WeeklySSPolicy((35, 40, 32, 34, 37, 23, 25),
                                (36, 41, 33, 35, 38, 24, 26))
        for seed in range(100):
            oufo = rollout(cfg, policy, OUFO, 465, 100, 0, seed)
            assert rollout(cfg, policy, yupr_policy(0.0, 1.0), 465, 100, 0, seed) == oufo
            yufo = rollout(cfg, policy, YUFO, 465, 100, 0, seed)
            assert rollout(cfg, policy, yupr_policy(1.0, 0.0), 465, 100, 0, seed) == yufo


def test_criterion_2_hand_trace_oracles():
    with criterion(2, "hand-trace oracle fixtures match exactly"):
        _hand_traced_day()
        _shortage_day()
        _replay_fixture()


def test_criterion_3_experiment_2(exp2):
    with criterion(3, "experiment 2: (s,S) with returns, UCLH age profile"):
        k = exp2["oufo_kpis"]
        assert k.service_mean >= 0.990, f"service {k.service_mean:.4f} < 0.990"
        assert 0.006 <= k.wastage_mean <= 0.012, f"wastage {k.wastage_mean:.4f}"
        d = exp2["paired"]
        assert d.wastage_diff >= 0.002, f"paired wastage drop {d.wastage_diff:.4f} < 0.002"
        assert d.wastage_sem < 0.0005, f"paired SEM {d.wastage_sem:.6f} >= 0.0005"


def test_criterion_4_experiment_4(exp4):
    with criterion(4, "experiment 4: (s,S) with returns, R&R age profile"):
        ko, kp = exp4["oufo_kpis"], exp4["ppm_kpis"]
        assert 0.027 <= ko.wastage_mean <= 0.041, f"oldest-first wastage {ko.wastage_mean:.4f}"
        assert 0.003 <= kp.wastage_mean <= 0.011, f"perfect-predictor wastage {kp.wastage_mean:.4f}"
        assert exp4["paired"].wastage_diff >= 0.020, \
            f"paired wastage drop {exp4['paired'].wastage_diff:.4f} < 0.020"


def test_criterion_5_no_returns_baselines(no_returns):
    with criterion(5, "experiments II and IV: no returns"):
        for name, data in no_returns.items():
            k = data["kpis"]
            assert k.wastage_mean < 0.001, f"{name} wastage {k.wastage_mean:.5f}"
            assert k.service_mean >= 0.993, f"{name} service {k.service_mean:.4f}"


def test_criterion_6_slippage_endpoints(phi_endpoints):
    with criterion(6, "experiment 6 endpoints: slippage 0 and 1"):
        full = phi_endpoints[1.0]
        assert abs(full.oufo_kpis.wastage_mean - 0.080) <= 0.005
        assert abs(full.ppm_kpis.wastage_mean - 0.080) <= 0.005
        none = phi_endpoints[0.0]
        assert none.ppm_kpis.wastage_mean <= 0.001
        assert 0.001 <= none.oufo_kpis.wastage_mean <= 0.005


def test_criterion_7_cost_sanity(exp2, exp4):
    with criterion(7, "fitted-policy costs respect the replenishment lower bound"):
        for data in (exp2, exp4):
            for key in ("oufo_kpis", "ppm_kpis"):
                assert data[key].daily_cost_mean >= 16066, \
                    f"{key} cost {data[key].daily_cost_mean:.0f} below bound"
        cost = exp2["oufo_kpis"].daily_cost_mean
        assert 16066 <= cost <= 19000, f"experiment 2 cost {cost:.0f}"


def test_criterion_8_metrics_oracles():
    with criterion(8, "metric oracles: ROC, bilinear, binomial profile"):
        rng = random.Random(20250808)
        checked = 0
        while checked < 1000:
            n = rng.randint(2, 50)
            scores = [rng.choice([round(rng.random(), 2), rng.random()]) for _ in range(n)]
            labels = [rng.randint(0, 1) for _ in range(n)]
            if len(set(labels)) < 2:
                continue
            curve = roc_analysis(scores, labels)
            assert abs(curve.auroc - pair_count_auroc(scores, labels)) < 1e-12
            checked += 1

        values = tuple(tuple(rng.uniform(0, 5) for _ in DEFAULT_AXIS) for _ in DEFAULT_AXIS)
        grid = MetricGrid(DEFAULT_AXIS, DEFAULT_AXIS, values)
        for i, s in enumerate(DEFAULT_AXIS):
            for j, p in enumerate(DEFAULT_AXIS):
                assert abs(interpolate_grid(grid, s, p) - values[i][j]) < 1e-12

        # published rows are rounded to 2 decimals and nudged (largest
        # remainder) so each row sums to 1.00, hence the 0.0075 allowance
        for p, row in EXP7_TABLE.items():
            probs = binomial_age_profile(p).probabilities
            for computed, published in zip(probs, row):
                assert abs(computed - published) <= 0.0075


def test_criterion_9_conservation(exp2, exp4, no_returns, phi_endpoints):
    with criterion(9, "unit conservation on every evaluation rollout"):
        result_lists = [exp2["oufo_results"], exp2["ppm_results"],
                        exp4["oufo_results"], exp4["ppm_results"]]
        result_lists += [d["results"] for d in no_returns.values()]
        count = 0
        for results in result_lists:
            for res in results:
                assert res.conservation_gap() == 0
                count += 1
        assert count >= 6 * EVAL_ROLLOUTS
        # the engine additionally raises on any conservation gap, so every
        # rollout behind criteria 1-8 (including the sweep fixtures) was
        # checked at generation time


def test_criterion_10_out_of_scope_note():
    with criterion(10, "real-data results out of scope at desk scale"):
        # The trained classifier's AUROC (0.74) and the observed-data wastage
        # reductions (14% / 12%) need the partner hospital's records, which do
        # not ship here.  The replay machinery those results would run through
        # is exercised by criteria 1-2 and the synthetic trace fixtures.
        assert True
