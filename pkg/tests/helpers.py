"""Shared test fixtures: scripted stream fakes and small scenario builders."""

from __future__ import annotations

from platebank.core import AgeProfile, CostParams, ScenarioConfig, validate_scenario


class FakeStream:
    """Stands in for one derived substream, returning a scripted value."""

    def __init__(self, value):
        self.value = value

    def uniform(self):
        return float(self.value)

    def categorical(self, cdf):
        return int(self.value)

    def categorical_many(self, cdf, n):
        assert len(self.value) == n, f"scripted {len(self.value)} ages, engine asked for {n}"
        return list(self.value)


class FakeStreams:
    """Scripted replacement for RngStreams: every draw is looked up by its
    (day, purpose, within-day index) key, so a test fully controls a day."""

    def __init__(self, script: dict):
        self.script = dict(script)

    def _get(self, day, purpose, idx):
        try:
            return self.script[(day, purpose, idx)]
        except KeyError:
            raise AssertionError(f"engine drew from unscripted stream {(day, purpose, idx)}")

    def stream(self, day, purpose, idx):
        return FakeStream(self._get(day, purpose, idx))

    def uniform(self, day, purpose, idx):
        return float(self._get(day, purpose, idx))

    def bernoulli(self, day, purpose, idx, p):
        return bool(self._get(day, purpose, idx))

    def poisson(self, day, purpose, idx, lam):
        return int(self._get(day, purpose, idx))

    def categorical(self, day, purpose, idx, cdf):
        return int(self._get(day, purpose, idx))

    def categorical_many(self, day, purpose, idx, cdf, n):
        return self.stream(day, purpose, idx).categorical_many(cdf, n)

    def binomial(self, day, purpose, idx, n, p):
        return int(self._get(day, purpose, idx))


def make_scenario(max_life=5, demand=10.0, rho=0.0, phi=0.0, profile=None,
                  max_order=100, costs=None) -> ScenarioConfig:
    """A compact scenario: uniform demand across weekdays, one age profile."""
    if profile is None:
        probs = [0.0] * max_life
        probs[0] = 1.0  # everything arrives fresh
        profile = probs
    cfg = ScenarioConfig(
        max_life=max_life,
        demand_means=(float(demand),) * 7,
        return_rate=rho,
        slippage_rate=phi,
        age_profiles=(AgeProfile.from_row(profile),) * 7,
        costs=costs or CostParams(),
        max_order=max_order,
    )
    return validate_scenario(cfg)
