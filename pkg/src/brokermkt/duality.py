"""Profit upper-bound machinery for production-cost markets.

Any truthful mechanism's expected profit decomposes, in interim form, into
five terms (single, under, over, tail, core) built from per-(buyer, item)
reserves beta and monopoly-profit rates r.  Each term is bounded by a shipped
mechanism's profit, which is what the acceptance suite verifies numerically.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .dists import DiscreteDist, buyer_virtual, monopoly_price, TOL
from .model import (
    Instance,
    Mechanism,
    Profile,
    ProductionCostInstance,
    buyer_type_space,
)


@dataclass(frozen=True)
class InterimForm:
    """Coin- and opponent-averaged allocations and payments per buyer type."""

    alloc: dict[tuple[int, tuple[float, ...]], tuple[float, ...]]
    pay: dict[tuple[int, tuple[float, ...]], float]

    def expected_profit(self, instance: ProductionCostInstance) -> float:
        terms = []
        for i in range(instance.n):
            for vec, pr in buyer_type_space(instance, i):
                x = self.alloc[(i, vec)]
                cost = sum(x[j] * instance.costs[j] for j in range(instance.m))
                terms.append(pr * (self.pay[(i, vec)] - cost))
        return math.fsum(terms)


def others_type_space(instance: Instance, i: int):
    """Value matrices of everyone but buyer i (in buyer order) with probs."""
    rows = [buyer_type_space(instance, k) for k in range(instance.n) if k != i]
    for combo in itertools.product(*rows):
        mats = tuple(vec for vec, _ in combo)
        pr = math.prod(p for _, p in combo)
        yield mats, pr


def _full_profile(i: int, vec, others) -> Profile:
    rows = list(others)
    rows.insert(i, vec)
    return Profile(tuple(rows))


def interim_form(mechanism: Mechanism, instance: ProductionCostInstance) -> InterimForm:
    """Exact interim allocations and payments, coin weights included."""
    coins = mechanism.coin_space(instance)
    memo: dict = {}

    def outcome(profile, coin):
        key = (profile, coin)
        if key not in memo:
            memo[key] = mechanism.run(instance, profile, coin)
        return memo[key]

    alloc: dict = {}
    pay: dict = {}
    for i in range(instance.n):
        for vec, _ in buyer_type_space(instance, i):
            acc = [0.0] * instance.m
            ap = 0.0
            for others, pr in others_type_space(instance, i):
                profile = _full_profile(i, vec, others)
                for coin, w in coins:
                    out = outcome(profile, coin)
                    for j in range(instance.m):
                        acc[j] += pr * w * out.buyer_alloc[i][j]
                    ap += pr * w * out.buyer_pay[i]
            alloc[(i, vec)] = tuple(acc)
            pay[(i, vec)] = ap
    return InterimForm(alloc=alloc, pay=pay)


def beta_matrix(profile_minus_i, costs) -> tuple[float, ...]:
    """Componentwise max of the opposing bids and the cost (bids empty => cost)."""
    m = len(costs)
    out = []
    for j in range(m):
        top = max((row[j] for row in profile_minus_i), default=0.0)
        out.append(max(top, costs[j]))
    return tuple(out)


@dataclass(frozen=True)
class Region:
    """Classification of a buyer type against reserves: idle or one item."""

    label: str          # "R0" or "Rj"
    item: int | None = None


def classify(v_i, beta) -> Region:
    """Idle when no item has positive surplus, else the smallest-index item
    among the largest surpluses."""
    best, arg = 0.0, None
    for j, (v, b) in enumerate(zip(v_i, beta)):
        s = v - b
        if s > best:
            best, arg = s, j
    if arg is None:
        return Region("R0")
    return Region("Rj", arg)


@dataclass(frozen=True)
class DualityTerms:
    single: float
    under: float
    over: float
    tail: float
    core: float
    r: float

    def upper_bound(self) -> float:
        return self.single + self.under + self.over + self.tail + self.core


def compute_r(instance: ProductionCostInstance):
    """Total monopoly-profit benchmark r and its per-(buyer, opponents, item)
    table; r equals the one-lookahead profit on atomless priors."""
    table: dict = {}
    total = []
    for i in range(instance.n):
        for others, pr in others_type_space(instance, i):
            beta = beta_matrix(others, instance.costs)
            for j in range(instance.m):
                rate = monopoly_price(
                    instance.buyers[i][j], floor=beta[j], cost=instance.costs[j]
                ).profit_rate
                table[(i, others, j)] = rate
                total.append(pr * rate)
    return math.fsum(total), table


def _r_i(instance, i, others, r_table) -> float:
    return math.fsum(r_table[(i, others, j)] for j in range(instance.m))


def compute_terms(interim: InterimForm, instance: ProductionCostInstance) -> DualityTerms:
    """Exact evaluation of the five bound components for an interim form.

    single uses ironed buyer virtuals; tail takes the strict inequality
    v > beta + r_i and core the closed range, so boundary mass lands in core.
    """
    n, m = instance.n, instance.m
    r, r_table = compute_r(instance)
    single_acc: list[float] = []
    under_acc: list[float] = []
    over_acc: list[float] = []
    tail_acc: list[float] = []
    core_acc: list[float] = []

    for i in range(n):
        types_i = buyer_type_space(instance, i)
        tables = [buyer_virtual(instance.buyers[i][j]) for j in range(m)]
        for others, w in others_type_space(instance, i):
            beta = beta_matrix(others, instance.costs)
            ri = _r_i(instance, i, others, r_table)
            for vec, d in types_i:
                x = interim.alloc[(i, vec)]
                region = classify(vec, beta)
                for j in range(m):
                    if region.item == j:
                        phi = tables[j].ironed(vec[j])
                        single_acc.append(
                            d * w * x[j] * (phi - instance.costs[j])
                        )
                    if vec[j] < beta[j]:
                        under_acc.append(
                            d * w * x[j] * (vec[j] - instance.costs[j])
                        )
                    else:
                        over_acc.append(
                            d * w * x[j] * (beta[j] - instance.costs[j])
                        )
            for j in range(m):
                dist = instance.buyers[i][j]
                split = beta[j] + ri
                rest = [instance.buyers[i][k] for k in range(m) if k != j]
                for v, p in zip(dist.values, dist.probs):
                    if v > split:
                        tail_acc.append(
                            w * p * (v - beta[j])
                            * _rival_surplus_prob(rest, [beta[k] for k in range(m) if k != j], v - beta[j])
                        )
                    elif v >= beta[j]:
                        core_acc.append(w * p * (v - beta[j]))
    return DualityTerms(
        single=math.fsum(single_acc),
        under=math.fsum(under_acc),
        over=math.fsum(over_acc),
        tail=math.fsum(tail_acc),
        core=math.fsum(core_acc),
        r=r,
    )


def _rival_surplus_prob(dists, betas, target: float) -> float:
    """Pr over the buyer's other items that some surplus reaches ``target``."""
    if not dists:
        return 0.0
    miss = 1.0
    hit_terms = []
    # P[exists k: v_k - beta_k >= target] via the complement product.
    for d, b in zip(dists, betas):
        p_hit = math.fsum(p for v, p in zip(d.values, d.probs) if v - b >= target)
        hit_terms.append(p_hit)
    for p_hit in hit_terms:
        miss *= 1.0 - p_hit
    return 1.0 - miss


def core_entry_quantities(instance: ProductionCostInstance, i: int, others, r_table=None):
    """Clipped-surplus distributions and the entry-fee floor for one buyer.

    Returns (per-item surplus dists b, their r_i-truncated versions d, and
    e_hat = sum_j E[d_j] - 2 r_i) at the opponents' profile ``others``.
    """
    m = instance.m
    if r_table is None:
        _, r_table = compute_r(instance)
    beta = beta_matrix(others, instance.costs)
    ri = _r_i(instance, i, others, r_table)
    b_dists, d_dists = [], []
    for j in range(m):
        dist = instance.buyers[i][j]
        b_vals = [max(v - beta[j], 0.0) for v in dist.values]
        d_vals = [b if b <= ri else 0.0 for b in b_vals]
        b_dists.append(DiscreteDist(b_vals, dist.probs))
        d_dists.append(DiscreteDist(d_vals, dist.probs))
    e_hat = math.fsum(d.mean() for d in d_dists) - 2.0 * ri
    return b_dists, d_dists, e_hat


def median_bound_holds(
    instance: ProductionCostInstance, i: int, others, tol: float = TOL, r_table=None
) -> bool:
    """Pr[sum_j clipped surplus >= e_hat] >= 1/2 at this opponents' profile."""
    beta = beta_matrix(others, instance.costs)
    _, _, e_hat = core_entry_quantities(instance, i, others, r_table)
    mass = []
    for vec, pr in buyer_type_space(instance, i):
        s = math.fsum(max(v - b, 0.0) for v, b in zip(vec, beta))
        if s >= e_hat - tol:
            mass.append(pr)
    return math.fsum(mass) >= 0.5 - tol


def median_bound_all(instance: ProductionCostInstance, tol: float = TOL) -> bool:
    """Median bound at every (buyer, opponents' profile) of the instance."""
    _, r_table = compute_r(instance)
    for i in range(instance.n):
        for others, _ in others_type_space(instance, i):
            if not median_bound_holds(instance, i, others, tol, r_table):
                return False
    return True
