"""Black-box conversion of cost-monotone mechanisms to two-sided markets.

Sellers report values; their ironed virtual values become production costs
for the base mechanism.  Buyers keep the base allocation and payments; each
seller whose item is bought receives her threshold payment, the highest
report at which the item would still be bought under the same buyer profile
and coin.
"""

from __future__ import annotations

from .dists import TOL, seller_virtual
from .model import (
    Coin,
    Mechanism,
    Outcome,
    Profile,
    ProductionCostInstance,
    TwoSidedInstance,
)


def virtual_costs(ts: TwoSidedInstance, seller_values) -> tuple[float, ...]:
    """Ironed seller virtuals at the reported values, clamped below at 0.

    The clamp only guards degenerate negative supports; non-negative seller
    values always give non-negative virtuals.
    """
    costs = []
    for j, v in enumerate(seller_values):
        table = seller_virtual(ts.sellers[j])
        costs.append(max(table.ironed(v), 0.0))
    return tuple(costs)


def to_cost_instance(ts: TwoSidedInstance, seller_values) -> ProductionCostInstance:
    """Production-cost instance with the sellers' virtual values as costs."""
    for j, v in enumerate(seller_values):
        if v not in ts.sellers[j].values:
            raise ValueError(f"seller {j} value {v} not in support")
    return ProductionCostInstance(ts.buyers, virtual_costs(ts, seller_values))


class ReducedMechanism(Mechanism):
    """Two-sided mechanism obtained from a cost-monotone base mechanism.

    Threshold payments are computed per coin realization by re-running the
    base with seller j's report swapped for each candidate support value;
    base outcomes are memoized per (instance, coin, costs, buyer profile).
    """

    def __init__(self, base: Mechanism):
        self.base = base
        self.name = "reduced-" + base.name
        self._memo: dict = {}

    def coin_space(self, instance):
        return self.base.coin_space(instance)

    def _base_outcome(self, ts, coin, costs, buyer_values) -> Outcome:
        key = (ts, coin, costs, buyer_values)
        out = self._memo.get(key)
        if out is None:
            inst = ProductionCostInstance(ts.buyers, costs)
            out = self.base.run(inst, Profile(buyer_values), coin)
            self._memo[key] = out
        return out

    def run(self, instance: TwoSidedInstance, profile: Profile, coin: Coin = Coin()) -> Outcome:
        return convert(self.base, instance, profile, coin, _runner=self._base_outcome)


def convert(
    base: Mechanism,
    ts: TwoSidedInstance,
    profile: Profile,
    coin: Coin = Coin(),
    _runner=None,
) -> Outcome:
    """Run ``base`` on the virtual-cost instance and pay sellers thresholds."""
    if profile.seller_values is None:
        raise ValueError("two-sided profile must carry seller values")
    if _runner is None:
        def _runner(ts_, coin_, costs_, buyer_values_):
            inst = ProductionCostInstance(ts_.buyers, costs_)
            return base.run(inst, Profile(buyer_values_), coin_)

    n, m = ts.n, ts.m
    buyer_values = profile.buyer_values
    costs = virtual_costs(ts, profile.seller_values)
    out = _runner(ts, coin, costs, buyer_values)
    sold = tuple(
        sum(out.buyer_alloc[i][j] for i in range(n)) for j in range(m)
    )
    seller_pay = []
    for j in range(m):
        if sold[j] <= TOL:
            seller_pay.append(0.0)
            continue
        threshold = None
        for t in reversed(ts.sellers[j].values):
            swapped = list(profile.seller_values)
            swapped[j] = t
            alt_costs = virtual_costs(ts, swapped)
            alt = _runner(ts, coin, alt_costs, buyer_values)
            alt_sold = sum(alt.buyer_alloc[i][j] for i in range(n))
            if abs(alt_sold - sold[j]) <= TOL:
                threshold = t
                break
        assert threshold is not None, "the reported value itself must match"
        seller_pay.append(sold[j] * threshold)
    return Outcome(out.buyer_alloc, sold, out.buyer_pay, tuple(seller_pay))
