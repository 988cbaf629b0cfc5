"""Shared fixtures: micro instances, seeded corpora, broken mechanisms."""

import pytest

from brokermkt.dists import DiscreteDist
from brokermkt.instances import generate_instance
from brokermkt.model import (
    Coin,
    Mechanism,
    Outcome,
    ProductionCostInstance,
    TwoSidedInstance,
)

PRODUCTION_CORPUS_SIZE = 200
TWO_SIDED_CORPUS_SIZE = 100
CORPUS_SEED = 20240801


def d(values, probs):
    return DiscreteDist(values, probs)


@pytest.fixture(scope="session")
def micro_pc_1x1():
    """One buyer, one item on {0, 2}, cost 1."""
    return ProductionCostInstance([[d([0, 2], [0.5, 0.5])]], [1.0])


@pytest.fixture(scope="session")
def micro_pc_2item():
    """One buyer, two iid {0, 2} items, costs (1, 1)."""
    dd = d([0, 2], [0.5, 0.5])
    return ProductionCostInstance([[dd, dd]], [1.0, 1.0])


@pytest.fixture(scope="session")
def micro_ts_1x1():
    """Buyer on {0, 4} against a seller on {1, 2}."""
    return TwoSidedInstance(
        [[d([0, 4], [0.5, 0.5])]], [d([1, 2], [0.5, 0.5])]
    )


@pytest.fixture(scope="session")
def micro_pc_2buyers():
    """Two buyers with overlapping supports, one item at cost 1."""
    return ProductionCostInstance(
        [[d([1, 3], [0.5, 0.5])], [d([2, 3], [0.6, 0.4])]], [1.0]
    )


def _corpus_dims(idx):
    return 1 + idx % 2, 1 + (idx // 2) % 2


@pytest.fixture(scope="session")
def production_corpus():
    out = []
    for idx in range(PRODUCTION_CORPUS_SIZE):
        n, m = _corpus_dims(idx)
        out.append(
            generate_instance("production-cost", n, m, 3, 10, CORPUS_SEED, idx)
        )
    return out


@pytest.fixture(scope="session")
def two_sided_corpus():
    out = []
    for idx in range(TWO_SIDED_CORPUS_SIZE):
        n, m = _corpus_dims(idx)
        out.append(generate_instance("two-sided", n, m, 3, 10, CORPUS_SEED + 1, idx))
    return out


# --------------------------------------------------------------------------
# Deliberately broken mechanisms used to prove the checkers catch violations.
# --------------------------------------------------------------------------

class FirstPriceItem(Mechanism):
    """Highest bidder wins each item above cost and pays her own bid."""

    name = "broken-first-price"

    def run(self, instance, profile, coin=Coin()):
        n, m = instance.n, instance.m
        v = profile.buyer_values
        alloc = [[0.0] * m for _ in range(n)]
        pay = [0.0] * n
        sold = [0.0] * m
        for j in range(m):
            win = max(range(n), key=lambda i: (v[i][j], -i))
            if v[win][j] >= instance.costs[j] and v[win][j] > 0:
                alloc[win][j] = 1.0
                sold[j] = 1.0
                pay[win] += v[win][j]
        return Outcome(tuple(map(tuple, alloc)), tuple(sold), tuple(pay), (0.0,) * m)


class LoserFee(Mechanism):
    """Charges a unit fee to buyers who receive nothing."""

    name = "broken-loser-fee"

    def run(self, instance, profile, coin=Coin()):
        n, m = instance.n, instance.m
        pay = tuple(1.0 for _ in range(n))
        alloc = tuple(tuple(0.0 for _ in range(m)) for _ in range(n))
        return Outcome(alloc, (0.0,) * m, pay, (0.0,) * m)


class SellsWhenExpensive(Mechanism):
    """Sells item j to buyer 0 only when its cost is at least 1."""

    name = "broken-cost-loving"

    def run(self, instance, profile, coin=Coin()):
        n, m = instance.n, instance.m
        alloc = [[0.0] * m for _ in range(n)]
        sold = [0.0] * m
        for j in range(m):
            if instance.costs[j] >= 1.0:
                alloc[0][j] = 1.0
                sold[j] = 1.0
        return Outcome(tuple(map(tuple, alloc)), tuple(sold), (0.0,) * n, (0.0,) * m)


class Oversupply(Mechanism):
    """Grants every buyer 0.6 of each item while buying none."""

    name = "broken-oversupply"

    def run(self, instance, profile, coin=Coin()):
        n, m = instance.n, instance.m
        alloc = tuple(tuple(0.6 for _ in range(m)) for _ in range(n))
        return Outcome(alloc, (0.0,) * m, (0.0,) * n, (0.0,) * m)
