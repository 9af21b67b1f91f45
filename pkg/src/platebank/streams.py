"""Deterministic named random substreams for paired-sample simulation.

Every random draw in a rollout comes from a substream addressed by
``(rollout_index, day, purpose, within_day_index)`` under one master seed.
Because a substream's state is a pure hash of its key, the draw sequence for a
key never depends on which other streams were consumed, or how often.  Two
policies evaluated under the same master seed therefore see identical demand,
true labels and prediction uniforms for request k of day d, which is what
makes paired comparisons between policies meaningful.

The generator is splitmix64: a counter stream finalized with a strong 64-bit
mixer.  It is implemented here in pure Python and re-implemented verbatim in
the compiled kernel; the two must stay bit-identical (see
tests/test_backend_equiv.py).
"""

from __future__ import annotations

import math

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Substream purposes, one per random element of a simulated day.
ARRIVAL_AGES = 0
DEMAND_AM = 1
DEMAND_PM = 2
REQUEST_LABEL = 3
REQUEST_PRED = 4
EMERGENCY_AGE = 5
SLIPPAGE = 6

# Namespaces for deriving independent master seeds (fit vs. held-out
# evaluation, GA internals).  Kept far from the day-level purposes above.
NS_FIT = 101
NS_EVAL = 102
NS_GA = 103


def mix64(z: int) -> int:
    """splitmix64 finalizer: a 64-bit bijective mixer."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def chain(state: int, component: int) -> int:
    """Fold one key component into a derived stream state."""
    return mix64(state ^ ((component * _GOLDEN + 1) & _MASK))


def stream_state(master_seed: int, rollout: int, day: int, purpose: int, idx: int) -> int:
    s = mix64(master_seed)
    s = chain(s, rollout)
    s = chain(s, day)
    s = chain(s, purpose)
    return chain(s, idx)


def derive_seed(master_seed: int, namespace: int) -> int:
    """A master seed for an independent family of streams (fit vs. eval)."""
    return chain(mix64(master_seed), namespace)


class Stream:
    """One substream: a splitmix64 sequence from a derived state."""

    __slots__ = ("state",)

    def __init__(self, state: int):
        self.state = state & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        return mix64(self.state)

    def uniform(self) -> float:
        # 53-bit mantissa in [0, 1)
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def bernoulli(self, p: float) -> bool:
        return self.uniform() < p

    def poisson(self, lam: float) -> int:
        """Poisson by sequential inversion; exact match with the compiled kernel.

        Suitable for the demand means used here (validated at lam <= 500);
        the iteration cap is a belt-and-braces guard, not a truncation that
        should ever bind.
        """
        u = self.uniform()
        p = math.exp(-lam)
        f = p
        k = 0
        while u > f and k < 100000:
            k += 1
            p *= lam / k
            f += p
        return k

    def categorical(self, cdf) -> int:
        """One draw from the distribution with the given cumulative weights."""
        u = self.uniform()
        m = len(cdf)
        for i in range(m):
            if u < cdf[i]:
                return i
        return m - 1

    def categorical_many(self, cdf, n: int) -> list[int]:
        return [self.categorical(cdf) for _ in range(n)]

    def binomial(self, n: int, p: float) -> int:
        count = 0
        for _ in range(n):
            if self.uniform() < p:
                count += 1
        return count


class RngStreams:
    """Named substreams for one rollout under one master seed.

    Each method derives the addressed substream afresh and consumes it for a
    single logical draw (or batch of draws), so the draw sequence of one
    stream can never leak into another.
    """

    __slots__ = ("master_seed", "rollout_index", "_prefix")

    def __init__(self, master_seed: int, rollout_index: int = 0):
        self.master_seed = master_seed & _MASK
        self.rollout_index = rollout_index
        self._prefix = chain(mix64(self.master_seed), rollout_index)

    def stream(self, day: int, purpose: int, idx: int) -> Stream:
        return Stream(chain(chain(chain(self._prefix, day), purpose), idx))

    def uniform(self, day: int, purpose: int, idx: int) -> float:
        return self.stream(day, purpose, idx).uniform()

    def bernoulli(self, day: int, purpose: int, idx: int, p: float) -> bool:
        return self.stream(day, purpose, idx).bernoulli(p)

    def poisson(self, day: int, purpose: int, idx: int, lam: float) -> int:
        return self.stream(day, purpose, idx).poisson(lam)

    def categorical(self, day: int, purpose: int, idx: int, cdf) -> int:
        return self.stream(day, purpose, idx).categorical(cdf)

    def categorical_many(self, day: int, purpose: int, idx: int, cdf, n: int) -> list[int]:
        return self.stream(day, purpose, idx).categorical_many(cdf, n)

    def binomial(self, day: int, purpose: int, idx: int, n: int, p: float) -> int:
        return self.stream(day, purpose, idx).binomial(n, p)
