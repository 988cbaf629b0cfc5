"""Market instances, outcomes, feasibility and exact profit accounting.

A mechanism here is a deterministic map (instance, profile, coin) -> Outcome
where the coin is an explicit, enumerable randomness record.  Keeping the
randomness external makes expectations exact and lets threshold payments be
computed per coin realization.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .dists import TOL, DiscreteDist

DEFAULT_MAX_PROFILES = 10_000_000
MAX_PROFILES_ENV = "BROKER_MAX_PROFILES"


class ProfileSpaceError(RuntimeError):
    """Profile space exceeds the enumeration cap; use Monte Carlo mode."""


def enumeration_cap(override: int | None = None) -> int:
    if override is not None:
        return override
    env = os.environ.get(MAX_PROFILES_ENV)
    return int(env) if env else DEFAULT_MAX_PROFILES


@dataclass(frozen=True)
class ProductionCostInstance:
    """Buyers with per-item value priors facing publicly known item costs."""

    buyers: tuple[tuple[DiscreteDist, ...], ...]
    costs: tuple[float, ...]

    def __init__(self, buyers, costs):
        buyers = tuple(tuple(row) for row in buyers)
        costs = tuple(float(c) for c in costs)
        if not buyers:
            raise ValueError("need at least one buyer")
        m = len(costs)
        for row in buyers:
            if len(row) != m:
                raise ValueError("every buyer needs one distribution per item")
        if any(c < 0.0 for c in costs):
            raise ValueError("costs must be non-negative")
        object.__setattr__(self, "buyers", buyers)
        object.__setattr__(self, "costs", costs)

    @property
    def n(self) -> int:
        return len(self.buyers)

    @property
    def m(self) -> int:
        return len(self.costs)


@dataclass(frozen=True)
class TwoSidedInstance:
    """Buyers with per-item value priors facing single-item sellers."""

    buyers: tuple[tuple[DiscreteDist, ...], ...]
    sellers: tuple[DiscreteDist, ...]

    def __init__(self, buyers, sellers):
        buyers = tuple(tuple(row) for row in buyers)
        sellers = tuple(sellers)
        if not buyers:
            raise ValueError("need at least one buyer")
        for row in buyers:
            if len(row) != len(sellers):
                raise ValueError("buyer item count must match seller count")
        object.__setattr__(self, "buyers", buyers)
        object.__setattr__(self, "sellers", sellers)

    @property
    def n(self) -> int:
        return len(self.buyers)

    @property
    def m(self) -> int:
        return len(self.sellers)


Instance = ProductionCostInstance | TwoSidedInstance


@dataclass(frozen=True)
class Profile:
    """One valuation draw: buyer value matrix, plus seller values if two-sided."""

    buyer_values: tuple[tuple[float, ...], ...]
    seller_values: tuple[float, ...] | None = None


@dataclass(frozen=True)
class Outcome:
    """Allocations and payments for a single profile.

    buyer_alloc[i][j] is the probability buyer i receives item j,
    seller_sold[j] the probability item j is bought by the broker.
    """

    buyer_alloc: tuple[tuple[float, ...], ...]
    seller_sold: tuple[float, ...]
    buyer_pay: tuple[float, ...]
    seller_pay: tuple[float, ...]


@dataclass(frozen=True)
class Coin:
    """Explicit randomness record; branch is None for deterministic mechanisms."""

    branch: str | None = None


class Mechanism:
    """Deterministic mechanism interface.

    Subclasses implement ``run``; mechanisms with internal randomness expose
    it through ``coin_space`` so that expectations can be taken exactly.
    """

    name = "?"

    def coin_space(self, instance: Instance) -> list[tuple[Coin, float]]:
        return [(Coin(), 1.0)]

    def run(self, instance: Instance, profile: Profile, coin: Coin = Coin()) -> Outcome:
        raise NotImplementedError


def buyer_type_space(instance: Instance, i: int) -> list[tuple[tuple[float, ...], float]]:
    """All value vectors of buyer i with their product probabilities."""
    dists = instance.buyers[i]
    out = []
    for combo in itertools.product(*[list(zip(d.values, d.probs)) for d in dists]):
        vec = tuple(v for v, _ in combo)
        pr = math.prod(p for _, p in combo)
        out.append((vec, pr))
    return out


def profile_space_size(instance: Instance) -> int:
    size = 1
    for row in instance.buyers:
        for d in row:
            size *= len(d)
    if isinstance(instance, TwoSidedInstance):
        for d in instance.sellers:
            size *= len(d)
    return size


def enumerate_profiles(
    instance: Instance, max_profiles: int | None = None
) -> Iterator[tuple[Profile, float]]:
    """Yield every profile in the product support with its probability.

    Raises ProfileSpaceError when the product support exceeds the cap
    (default 10^7, override via the BROKER_MAX_PROFILES environment
    variable); Monte Carlo mode remains available in that regime.
    """
    cap = enumeration_cap(max_profiles)
    size = profile_space_size(instance)
    if size > cap:
        raise ProfileSpaceError(
            f"profile space {size} exceeds cap {cap}; use Monte Carlo mode"
        )
    n, m = instance.n, instance.m
    axes = [list(zip(d.values, d.probs)) for row in instance.buyers for d in row]
    two_sided = isinstance(instance, TwoSidedInstance)
    if two_sided:
        axes += [list(zip(d.values, d.probs)) for d in instance.sellers]
    for combo in itertools.product(*axes):
        pr = math.prod(p for _, p in combo)
        flat = [v for v, _ in combo]
        buyer_values = tuple(tuple(flat[i * m : (i + 1) * m]) for i in range(n))
        seller_values = tuple(flat[n * m :]) if two_sided else None
        yield Profile(buyer_values, seller_values), pr


def profit_of(outcome: Outcome, instance: Instance) -> float:
    """Broker profit for one outcome: revenue minus seller payments or
    production costs, depending on the market kind."""
    revenue = math.fsum(outcome.buyer_pay)
    if isinstance(instance, TwoSidedInstance):
        return revenue - math.fsum(outcome.seller_pay)
    produced = (
        math.fsum(outcome.buyer_alloc[i][j] for i in range(instance.n)) * instance.costs[j]
        for j in range(instance.m)
    )
    return revenue - math.fsum(produced)


def check_feasible(outcome: Outcome, tol: float = TOL) -> bool:
    """Per item: total buyer allocation <= sold probability, all probs in [0, 1]."""
    m = len(outcome.seller_sold)
    for j in range(m):
        col = math.fsum(row[j] for row in outcome.buyer_alloc)
        if col > outcome.seller_sold[j] + tol:
            return False
    for row in outcome.buyer_alloc:
        if any(x < -tol or x > 1.0 + tol for x in row):
            return False
    if any(x < -tol or x > 1.0 + tol for x in outcome.seller_sold):
        return False
    return True


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    stderr: float
    trials: int
    seed: int


def expected_profit(
    mechanism: Mechanism,
    instance: Instance,
    mode: str = "exact",
    trials: int = 1_000_000,
    seed: int = 0,
    max_profiles: int | None = None,
) -> float | McEstimate:
    """Expected broker profit, exactly or by deterministic Monte Carlo.

    Exact mode enumerates profiles and the mechanism's coin space and sums
    in canonical order with compensated summation.  MC mode draws counter-
    seeded trials (Philox keyed by ``seed``) and reports the estimate with
    its standard error.
    """
    if mode == "exact":
        coins = mechanism.coin_space(instance)
        terms = []
        for profile, pr in enumerate_profiles(instance, max_profiles):
            for coin, w in coins:
                out = mechanism.run(instance, profile, coin)
                terms.append(pr * w * profit_of(out, instance))
        return math.fsum(terms)
    if mode != "mc":
        raise ValueError(f"unknown mode {mode!r}")
    return monte_carlo_profit(mechanism, instance, trials, seed)


def _sample_axis(values: tuple[float, ...], cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(cum, u, side="right")
    idx = np.minimum(idx, len(values) - 1)
    return idx


def monte_carlo_profit(
    mechanism: Mechanism, instance: Instance, trials: int, seed: int
) -> McEstimate:
    """Unbiased profit estimate over ``trials`` draws, deterministic in ``seed``.

    Trial t consumes row t of a single Philox-keyed uniform block, so results
    are a pure function of (seed, trials) regardless of scheduling.
    """
    n, m = instance.n, instance.m
    dists: list[DiscreteDist] = [d for row in instance.buyers for d in row]
    two_sided = isinstance(instance, TwoSidedInstance)
    if two_sided:
        dists += list(instance.sellers)
    coins = mechanism.coin_space(instance)
    rng = np.random.Generator(np.random.Philox(key=seed))
    u = rng.random((trials, len(dists) + 1))
    idx = np.column_stack(
        [
            _sample_axis(d.values, np.cumsum(np.asarray(d.probs)), u[:, a])
            for a, d in enumerate(dists)
        ]
    )
    coin_cum = np.cumsum([w for _, w in coins])
    coin_idx = np.minimum(
        np.searchsorted(coin_cum, u[:, -1], side="right"), len(coins) - 1
    )

    # Small product supports: tabulate profit per (coin, joint index) once and
    # evaluate trials by lookup; otherwise run the mechanism per trial.
    sizes = [len(d) for d in dists]
    space = math.prod(sizes)
    if space <= 4096:
        strides = np.ones(len(sizes), dtype=np.int64)
        for a in range(len(sizes) - 2, -1, -1):
            strides[a] = strides[a + 1] * sizes[a + 1]
        table = np.empty((len(coins), space))
        for flat, combo in enumerate(itertools.product(*[d.values for d in dists])):
            buyer_values = tuple(tuple(combo[i * m : (i + 1) * m]) for i in range(n))
            seller_values = tuple(combo[n * m :]) if two_sided else None
            profile = Profile(buyer_values, seller_values)
            for ci, (coin, _) in enumerate(coins):
                table[ci, flat] = profit_of(mechanism.run(instance, profile, coin), instance)
        flat_idx = idx @ strides
        samples = table[coin_idx, flat_idx]
    else:
        samples = np.empty(trials)
        for t in range(trials):
            combo = [dists[a].values[idx[t, a]] for a in range(len(dists))]
            buyer_values = tuple(tuple(combo[i * m : (i + 1) * m]) for i in range(n))
            seller_values = tuple(combo[n * m :]) if two_sided else None
            profile = Profile(buyer_values, seller_values)
            coin = coins[coin_idx[t]][0]
            samples[t] = profit_of(mechanism.run(instance, profile, coin), instance)
    est = float(samples.mean())
    stderr = float(samples.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return McEstimate(est, stderr, trials, seed)
