"""Simulation-optimization of replenishment parameters, and batch evaluation.

The standing-order policy is fit by exhaustive grid search over the order
quantity.  The 14 integer parameters of the weekly (s, S) policy are fit by a
single-objective generational GA: tournament selection (size 2), uniform
crossover, per-gene uniform-resample mutation and one elite.  Candidates are
ranked by mean return over a fixed set of common-seeded rollouts, so fitness
comparisons are paired and elitism is never defeated by seed noise.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import _fields as F
from .core import RolloutResult, ScenarioConfig
from .engine import results_from_rows, run_batch_rows
from .policies import IssuingPolicy, StandingOrderPolicy, WeeklySSPolicy
from .streams import NS_FIT, derive_seed


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 50
    max_generations: int = 200
    patience: int = 10  # 50 for sensitivity sweeps
    crossover_prob: float = 0.9
    mutation_prob: float = 1.0 / 14.0
    fit_rollouts: int = 1000
    fit_horizon: int = 365  # scored days per rollout; warm-up is extra
    fit_warmup: int = 100
    seed: int = 0
    workers: int = 1

    def validate(self) -> "GAConfig":
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        for name in ("crossover_prob", "mutation_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.fit_rollouts < 1 or self.fit_horizon < 1 or self.fit_warmup < 0:
            raise ValueError("fit budget must be positive")
        return self


@dataclass
class FitReport:
    best_params: dict
    best_mean_return: float
    generations_run: int
    evaluation_count: int
    stop_reason: str  # patience | max-generations | grid-exhausted
    history: list = field(default_factory=list)  # (generation, params, mean_return)

    def best_policy(self):
        if "q" in self.best_params:
            return StandingOrderPolicy(self.best_params["q"])
        return WeeklySSPolicy(tuple(self.best_params["s"]), tuple(self.best_params["S"]))


def _fit_batch(batch_runner, cfg, policy, issuing, ga: GAConfig, fit_seed: int):
    rows = batch_runner(cfg, policy, issuing, ga.fit_horizon + ga.fit_warmup,
                        ga.fit_warmup, range(ga.fit_rollouts), fit_seed, ga.workers)
    return float(rows[:, F.REWARD_SUM].mean())


def fit_standing_order(cfg: ScenarioConfig, issuing: IssuingPolicy,
                       ga_cfg: GAConfig, batch_runner=None) -> FitReport:
    """Evaluate every order quantity 0..max_order on common-seeded rollouts
    and keep the best; ties go to the smaller quantity."""
    ga_cfg.validate()
    runner = batch_runner or run_batch_rows
    fit_seed = derive_seed(ga_cfg.seed, NS_FIT)
    best_q = 0
    best_g = None
    for q in range(cfg.max_order + 1):
        g = _fit_batch(runner, cfg, StandingOrderPolicy(q), issuing, ga_cfg, fit_seed)
        if best_g is None or g > best_g:
            best_q, best_g = q, g
    return FitReport(
        best_params={"q": best_q},
        best_mean_return=best_g,
        generations_run=1,
        evaluation_count=cfg.max_order + 1,
        stop_reason="grid-exhausted",
        history=[(1, {"q": best_q}, best_g)],
    )


def _ss_params_to_policy(params: tuple[int, ...]) -> WeeklySSPolicy:
    return WeeklySSPolicy(tuple(params[:7]), tuple(params[7:]))


def _ss_params_dict(params: tuple[int, ...]) -> dict:
    return {"s": list(params[:7]), "S": list(params[7:])}


def _seed_candidates(cfg: ScenarioConfig) -> list[tuple[int, ...]]:
    """Demand-scaled order-up-to starting points for generation 0: daily
    base-stock policies at several safety-stock levels, which uniform
    crossover can then mix per weekday."""
    out = []
    for factor in (0.9, 1.0, 1.1, 1.2):
        for offset in (1, 4, 7, 10):
            big = [min(cfg.max_order, max(1, round(factor * mu + offset)))
                   for mu in cfg.demand_means]
            small = [b - 1 for b in big]
            out.append(tuple(small + big))
    return out


def fit_ss_policy(cfg: ScenarioConfig, issuing: IssuingPolicy, ga_cfg: GAConfig,
                  warm_start: WeeklySSPolicy | None = None,
                  batch_runner=None) -> FitReport:
    """GA over the 14 weekly (s, S) integers in {0..max_order}.

    Candidates with s >= S on any weekday are evaluated like any other (they
    order zero units and score accordingly).  The warm start, when given, is
    injected into generation 0.  Search stops when the best-ever candidate is
    unchanged for `patience` generations or at `max_generations`.
    """
    ga = ga_cfg.validate()
    runner = batch_runner or run_batch_rows
    fit_seed = derive_seed(ga.seed, NS_FIT)
    rng = random.Random(derive_seed(ga.seed, 1) & 0xFFFFFFFF)
    a_max = cfg.max_order
    n_genes = 14

    cache: dict[tuple[int, ...], float] = {}

    def fitness(params: tuple[int, ...]) -> float:
        if params not in cache:
            cache[params] = _fit_batch(runner, cfg, _ss_params_to_policy(params),
                                       issuing, ga, fit_seed)
        return cache[params]

    def random_candidate() -> tuple[int, ...]:
        # sorted pairs per weekday, so random candidates start feasible
        small, big = [], []
        for _ in range(7):
            lo, hi = sorted((rng.randint(0, a_max), rng.randint(0, a_max)))
            small.append(lo)
            big.append(hi)
        return tuple(small + big)

    population: list[tuple[int, ...]] = []
    if warm_start is not None:
        warm_start.validate(a_max)
        population.append(tuple(warm_start.s) + tuple(warm_start.big_s))
    for cand in _seed_candidates(cfg):
        if len(population) < ga.population_size:
            population.append(cand)
    while len(population) < ga.population_size:
        population.append(random_candidate())
    population = population[: ga.population_size]

    def better(p1: tuple[int, ...], f1: float, p2: tuple[int, ...], f2: float) -> bool:
        """True if (p1, f1) outranks (p2, f2); equal scores favor the
        lexicographically smaller parameter vector."""
        return f1 > f2 or (f1 == f2 and p1 < p2)

    fits = [fitness(p) for p in population]
    best_params, best_fit = population[0], fits[0]
    for p, f in zip(population[1:], fits[1:]):
        if better(p, f, best_params, best_fit):
            best_params, best_fit = p, f

    history = [(1, _ss_params_dict(best_params), best_fit)]
    generations = 1
    stale = 0
    stop_reason = "max-generations"

    def tournament() -> tuple[int, ...]:
        i, j = rng.randrange(len(population)), rng.randrange(len(population))
        if better(population[i], fits[i], population[j], fits[j]):
            return population[i]
        return population[j]

    def crossover(p1: tuple[int, ...], p2: tuple[int, ...]):
        if rng.random() < ga.crossover_prob:
            c1, c2 = [], []
            for g1, g2 in zip(p1, p2):
                if rng.random() < 0.5:
                    c1.append(g1)
                    c2.append(g2)
                else:
                    c1.append(g2)
                    c2.append(g1)
            return tuple(c1), tuple(c2)
        return p1, p2

    def mutate(p: tuple[int, ...]) -> tuple[int, ...]:
        genes = list(p)
        for i in range(n_genes):
            if rng.random() < ga.mutation_prob:
                genes[i] = rng.randint(0, a_max)
        return tuple(genes)

    while generations < ga.max_generations:
        if stale >= ga.patience:
            stop_reason = "patience"
            break
        next_pop = [best_params]  # elite
        while len(next_pop) < ga.population_size:
            c1, c2 = crossover(tournament(), tournament())
            next_pop.append(mutate(c1))
            if len(next_pop) < ga.population_size:
                next_pop.append(mutate(c2))
        population = next_pop
        fits = [fitness(p) for p in population]
        generations += 1
        changed = False
        for p, f in zip(population, fits):
            if better(p, f, best_params, best_fit):
                best_params, best_fit = p, f
                changed = True
        stale = 0 if changed else stale + 1
        history.append((generations, _ss_params_dict(best_params), best_fit))

    return FitReport(
        best_params=_ss_params_dict(best_params),
        best_mean_return=best_fit,
        generations_run=generations,
        evaluation_count=generations * ga.population_size,
        stop_reason=stop_reason,
        history=history,
    )


def evaluate_policy(cfg: ScenarioConfig, replenishment, issuing: IssuingPolicy,
                    n_rollouts: int = 10000, horizon: int = 365, warmup: int = 100,
                    seed: int = 0, workers: int = 1,
                    batch_runner=None) -> list[RolloutResult]:
    """Common-seeded evaluation rollouts; `horizon` counts scored days, the
    warm-up is prepended.  Rollout i uses substream family i of `seed`, so
    results are independent of worker count and execution order."""
    if n_rollouts < 1:
        raise ValueError("n_rollouts must be >= 1")
    runner = batch_runner or run_batch_rows
    rows = runner(cfg, replenishment, issuing, horizon + warmup, warmup,
                  range(n_rollouts), seed, workers)
    return results_from_rows(rows)
