"""Production-cost market mechanisms.

Four mechanisms are shipped:

* ``it``   - per-item second-price auction on ironed buyer virtual values
           with the production cost as reserve, threshold payments.
* ``bvcg`` - VCG with per-(buyer, item) reserve prices and a per-buyer entry
           fee set to the upper median of the surplus distribution.
* ``1la``  - one-lookahead: the top bidder is offered the monopoly price of
           her own prior, floored at the opponents' highest bid and cost.
* ``mix``  - runs ``it`` with probability 3/4 and ``bvcg`` with 1/4.

All tie-breaks go to the lowest buyer index.  Payments are thresholds: the
smallest report that still wins, so truthfulness is pointwise.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

from .dists import DiscreteDist, buyer_virtual, monopoly_price, upper_median
from .model import (
    Coin,
    Mechanism,
    Outcome,
    Profile,
    ProductionCostInstance,
    ProfileSpaceError,
    enumeration_cap,
)

ENTRY_FEE_CAP = 10_000_000


def rival_bids(buyer_values, i: int, j: int) -> float:
    """Highest opposing bid for item j, 0 for a lone buyer."""
    best = 0.0
    for k, row in enumerate(buyer_values):
        if k != i and row[j] > best:
            best = row[j]
    return best


@dataclass(frozen=True)
class ReserveContext:
    """Per-(buyer, item) reserves and per-buyer entry fees for one profile."""

    P: tuple[tuple[float, ...], ...]
    beta: tuple[tuple[float, ...], ...]
    entry_fee: tuple[float, ...]


def _surplus(values_row, beta_row) -> float:
    return math.fsum(max(v - b, 0.0) for v, b in zip(values_row, beta_row))


@lru_cache(maxsize=None)
def entry_fee(dists: tuple[DiscreteDist, ...], beta_row: tuple[float, ...]) -> float:
    """Upper median of sum_j (t_j - beta_j)^+ under the buyer's own prior.

    Exact enumeration of the buyer's product support; acceptance probability
    is therefore at least one half by construction.
    """
    space = math.prod(len(d) for d in dists)
    if space > min(ENTRY_FEE_CAP, enumeration_cap()):
        raise ProfileSpaceError(
            f"entry-fee support product {space} exceeds cap"
        )
    pmf: dict[float, float] = {}
    for combo in itertools.product(*[list(zip(d.values, d.probs)) for d in dists]):
        s = _surplus([v for v, _ in combo], beta_row)
        pr = math.prod(p for _, p in combo)
        pmf[s] = pmf.get(s, 0.0) + pr
    return upper_median(list(pmf.keys()), list(pmf.values()))


def reserve_context(instance: ProductionCostInstance, buyer_values) -> ReserveContext:
    n, m = instance.n, instance.m
    P = tuple(tuple(rival_bids(buyer_values, i, j) for j in range(m)) for i in range(n))
    beta = tuple(
        tuple(max(P[i][j], instance.costs[j]) for j in range(m)) for i in range(n)
    )
    fees = tuple(entry_fee(instance.buyers[i], beta[i]) for i in range(n))
    return ReserveContext(P=P, beta=beta, entry_fee=fees)


def _zero_outcome(n: int, m: int):
    return [[0.0] * m for _ in range(n)], [0.0] * m, [0.0] * n, [0.0] * m


def run_it(instance: ProductionCostInstance, profile: Profile) -> Outcome:
    """Per-item auction on ironed virtual values with cost reserves.

    The winner pays the value of her cheapest report that still wins the
    item; on exact virtual-value ties the lowest index wins, so a
    higher-index buyer's threshold must strictly beat lower-index rivals.
    """
    n, m = instance.n, instance.m
    v = profile.buyer_values
    alloc, sold, pay, spay = _zero_outcome(n, m)
    for j in range(m):
        cost = instance.costs[j]
        tables = [buyer_virtual(instance.buyers[i][j]) for i in range(n)]
        virt = [tables[i].ironed(v[i][j]) for i in range(n)]
        win = max(range(n), key=lambda i: (virt[i], -i))
        if virt[win] < cost:
            continue
        above = max((virt[i] for i in range(n) if i > win), default=-math.inf)
        below = max((virt[i] for i in range(n) if i < win), default=-math.inf)
        need_ge = max(cost, above)
        threshold = None
        for val, _, bar in tables[win].points:
            if bar >= need_ge and bar > below:
                threshold = val
                break
        assert threshold is not None, "winner's own report must win"
        alloc[win][j] = 1.0
        sold[j] = 1.0
        pay[win] += threshold
    return Outcome(
        tuple(map(tuple, alloc)), tuple(sold), tuple(pay), tuple(spay)
    )


def run_bvcg(instance: ProductionCostInstance, profile: Profile) -> Outcome:
    """Reserve-price VCG with entry fees.

    A buyer accepting her fee takes every item priced at her reserve that
    she values at least that much; items claimed by several buyers (exact
    ties with the reserve) go to the lowest index and drop out of the
    others' bundles and payments.
    """
    n, m = instance.n, instance.m
    v = profile.buyer_values
    ctx = reserve_context(instance, v)
    alloc, sold, pay, spay = _zero_outcome(n, m)
    accepts = [
        _surplus(v[i], ctx.beta[i]) >= ctx.entry_fee[i] for i in range(n)
    ]
    taken = [False] * m
    for i in range(n):
        if not accepts[i]:
            continue
        pay[i] += ctx.entry_fee[i]
        for j in range(m):
            if not taken[j] and v[i][j] >= ctx.beta[i][j]:
                taken[j] = True
                alloc[i][j] = 1.0
                sold[j] = 1.0
                pay[i] += ctx.beta[i][j]
    return Outcome(
        tuple(map(tuple, alloc)), tuple(sold), tuple(pay), tuple(spay)
    )


def run_1la(instance: ProductionCostInstance, profile: Profile) -> Outcome:
    """One-lookahead pricing against the top bidder's own prior."""
    n, m = instance.n, instance.m
    v = profile.buyer_values
    alloc, sold, pay, spay = _zero_outcome(n, m)
    for j in range(m):
        cost = instance.costs[j]
        beta = [max(rival_bids(v, i, j), cost) for i in range(n)]
        if not any(v[i][j] > beta[i] for i in range(n)):
            continue
        win = max(range(n), key=lambda i: (v[i][j], -i))
        rho = monopoly_price(instance.buyers[win][j], floor=beta[win], cost=cost).price
        if v[win][j] >= rho:
            alloc[win][j] = 1.0
            sold[j] = 1.0
            pay[win] += rho
    return Outcome(
        tuple(map(tuple, alloc)), tuple(sold), tuple(pay), tuple(spay)
    )


MIX_WEIGHTS = ((Coin("it"), 0.75), (Coin("bvcg"), 0.25))


def run_mix(instance: ProductionCostInstance, profile: Profile, coin: Coin) -> Outcome:
    if coin.branch == "it":
        return run_it(instance, profile)
    if coin.branch == "bvcg":
        return run_bvcg(instance, profile)
    raise ValueError(f"mixture needs a coin branch, got {coin!r}")


class PerItemVirtualAuction(Mechanism):
    name = "it"

    def run(self, instance, profile, coin=Coin()):
        return run_it(instance, profile)


class EntryFeeVCG(Mechanism):
    name = "bvcg"

    def run(self, instance, profile, coin=Coin()):
        return run_bvcg(instance, profile)


class OneLookahead(Mechanism):
    name = "1la"

    def run(self, instance, profile, coin=Coin()):
        return run_1la(instance, profile)


class MixedAuction(Mechanism):
    name = "mix"

    def coin_space(self, instance):
        return list(MIX_WEIGHTS)

    def run(self, instance, profile, coin=Coin()):
        return run_mix(instance, profile, coin)


MECHANISMS: dict[str, Mechanism] = {
    m.name: m
    for m in (PerItemVirtualAuction(), EntryFeeVCG(), OneLookahead(), MixedAuction())
}
