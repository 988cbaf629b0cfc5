"""Finite discrete value distributions and their derived pricing quantities.

Everything downstream (mechanisms, reductions, bounds) works over
:class:`DiscreteDist` supports.  Virtual values come in a buyer flavor
(marginal revenue, ironed via the concave hull of the revenue curve in
quantile space) and a seller flavor (marginal procurement cost, ironed via
the convex hull of the cumulative-payment curve).
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import NamedTuple, Sequence

# Absolute tolerance for currency/probability comparisons in checkers and
# validation.  Mechanism logic itself uses exact float comparisons so that
# allocation rules and their threshold payments stay mutually consistent.
TOL = 1e-9

# Constructor tolerance for probability normalization.
PROB_SUM_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteDist:
    """A finite distribution over real values (currency units).

    Values are strictly increasing and every point carries positive mass.
    Construction canonicalizes: values are sorted, equal values merged,
    zero-probability points dropped.
    """

    values: tuple[float, ...]
    probs: tuple[float, ...]

    def __init__(self, values: Sequence[float], probs: Sequence[float]):
        if len(values) != len(probs):
            raise ValueError("values and probs must have equal length")
        if len(values) == 0:
            raise ValueError("distribution needs at least one support point")
        if any(p < -PROB_SUM_TOL for p in probs):
            raise ValueError("negative probability")
        merged: dict[float, float] = {}
        for v, p in sorted(zip(values, probs)):
            if p <= 0.0:
                continue
            v = float(v)
            merged[v] = merged.get(v, 0.0) + float(p)
        if not merged:
            raise ValueError("all probability mass is zero")
        total = math.fsum(merged.values())
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "values", tuple(merged.keys()))
        object.__setattr__(self, "probs", tuple(merged.values()))

    @cached_property
    def _cum(self) -> tuple[float, ...]:
        acc, out = 0.0, []
        for p in self.probs:
            acc += p
            out.append(acc)
        return tuple(out)

    def __len__(self) -> int:
        return len(self.values)

    def mean(self) -> float:
        return math.fsum(v * p for v, p in zip(self.values, self.probs))


def cdf(dist: DiscreteDist, v: float) -> float:
    """Pr[X <= v], right-continuous."""
    k = bisect_right(dist.values, v)
    return dist._cum[k - 1] if k > 0 else 0.0


def tail(dist: DiscreteDist, v: float) -> float:
    """Pr[X >= v]."""
    k = bisect_left(dist.values, v)
    return 1.0 - (dist._cum[k - 1] if k > 0 else 0.0)


@dataclass(frozen=True)
class VirtualTable:
    """Per-support-point raw and ironed virtual values.

    ``side`` is "buyer" or "seller"; ``points`` mirrors the source support
    as (value, raw_virtual, ironed_virtual) triples with ironed_virtual
    non-decreasing in value.
    """

    side: str
    points: tuple[tuple[float, float, float], ...]

    @cached_property
    def _ironed_by_value(self) -> dict[float, float]:
        return {v: bar for v, _, bar in self.points}

    def ironed(self, value: float) -> float:
        return self._ironed_by_value[value]

    def raw(self, value: float) -> float:
        for v, raw, _ in self.points:
            if v == value:
                return raw
        raise KeyError(value)


def _hull(points: list[tuple[float, float]], upper: bool) -> list[tuple[float, float]]:
    """Monotone-chain hull of points already sorted by x.

    ``upper`` keeps slopes non-increasing (concave majorant), otherwise
    non-decreasing (convex minorant).  Collinear middles are dropped.
    """
    hull: list[tuple[float, float]] = []
    for p in points:
        hull.append(p)
        while len(hull) >= 3:
            (x1, y1), (x2, y2), (x3, y3) = hull[-3:]
            turn = (y2 - y1) * (x3 - x2) - (y3 - y2) * (x2 - x1)
            if (upper and turn <= 0.0) or (not upper and turn >= 0.0):
                del hull[-2]
            else:
                break
    return hull


def _segment_slope(hull: list[tuple[float, float]], x: float) -> float:
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        if x1 <= x <= x2:
            return (y2 - y1) / (x2 - x1)
    raise AssertionError(f"x={x} outside hull range")


def buyer_revenue_points(dist: DiscreteDist) -> list[tuple[float, float]]:
    """Revenue curve in quantile space: (Pr[X >= v], v * Pr[X >= v]) plus (0, 0)."""
    qs = [tail(dist, v) for v in dist.values]
    pts = [(0.0, 0.0)]
    pts += [(qs[k], qs[k] * dist.values[k]) for k in reversed(range(len(dist)))]
    return pts


def buyer_revenue_hull(dist: DiscreteDist) -> list[tuple[float, float]]:
    """Least concave majorant of the revenue curve; vertices in quantile space."""
    return _hull(buyer_revenue_points(dist), upper=True)


@lru_cache(maxsize=None)
def buyer_virtual(dist: DiscreteDist) -> VirtualTable:
    """Buyer-side virtual values with ironing.

    Raw virtual at v_k is v_k - (v_{k+1} - v_k) * Pr[X > v_k] / Pr[X = v_k]
    with the top point's raw virtual equal to its value.  Ironed virtuals
    are the slopes of the concave revenue-curve hull over each point's
    quantile interval, which makes them non-decreasing in value.
    """
    K = len(dist)
    vals, probs = dist.values, dist.probs
    qs = [tail(dist, v) for v in vals]
    raw = []
    for k in range(K):
        if k == K - 1:
            raw.append(vals[k])
        else:
            raw.append(vals[k] - (vals[k + 1] - vals[k]) * qs[k + 1] / probs[k])
    hull = buyer_revenue_hull(dist)
    ironed = []
    for k in range(K):
        lo = qs[k + 1] if k + 1 < K else 0.0
        ironed.append(_segment_slope(hull, 0.5 * (lo + qs[k])))
    pts = tuple((vals[k], raw[k], ironed[k]) for k in range(K))
    return VirtualTable(side="buyer", points=pts)


def seller_cost_points(dist: DiscreteDist) -> list[tuple[float, float]]:
    """Cumulative payment curve: (F(v), v * F(v)) plus (0, 0).

    v * F(v) is the expected payout of posting price v to the seller and
    buying from every type at or below it.
    """
    pts = [(0.0, 0.0)]
    pts += [(dist._cum[k], dist.values[k] * dist._cum[k]) for k in range(len(dist))]
    return pts


def seller_cost_hull(dist: DiscreteDist) -> list[tuple[float, float]]:
    """Greatest convex minorant of the cumulative payment curve."""
    return _hull(seller_cost_points(dist), upper=False)


@lru_cache(maxsize=None)
def seller_virtual(dist: DiscreteDist) -> VirtualTable:
    """Seller-side virtual values with ironing.

    Raw virtual at v_k is v_k + (v_k - v_{k-1}) * F(v_{k-1}) / Pr[X = v_k],
    bottom point's raw virtual equal to its value.  Ironed virtuals are the
    slopes of the convex payment-curve hull, non-decreasing in value.
    """
    K = len(dist)
    vals, probs, F = dist.values, dist.probs, dist._cum
    raw = [vals[0]]
    for k in range(1, K):
        raw.append(vals[k] + (vals[k] - vals[k - 1]) * F[k - 1] / probs[k])
    hull = seller_cost_hull(dist)
    ironed = []
    for k in range(K):
        lo = F[k - 1] if k > 0 else 0.0
        ironed.append(_segment_slope(hull, 0.5 * (lo + F[k])))
    pts = tuple((vals[k], raw[k], ironed[k]) for k in range(K))
    return VirtualTable(side="seller", points=pts)


def upper_median(values: Sequence[float], probs: Sequence[float]) -> float:
    """Largest support point e with Pr[X >= e] >= 1/2.

    This is the revenue-maximal choice keeping acceptance probability at
    least one half on a discrete support.
    """
    if len(values) == 0:
        raise ValueError("upper_median of empty support")
    pairs = sorted(zip(values, probs), reverse=True)
    acc = 0.0
    for v, p in pairs:
        acc += p
        if acc >= 0.5 - TOL:
            return v
    # Mass sums to 1, so the loop always returns by the smallest value.
    raise AssertionError("probabilities do not sum to 1")


class MonopolyPrice(NamedTuple):
    price: float
    profit_rate: float


def monopoly_price(dist: DiscreteDist, floor: float, cost: float) -> MonopolyPrice:
    """Best posted price at or above ``floor`` against ``dist``.

    Maximizes (p - cost) * Pr[y >= p] over p in support-union-{floor},
    p >= floor.  Ties break toward the smallest maximizing price.
    """
    floor = float(floor)
    candidates = sorted({floor} | {v for v in dist.values if v >= floor})
    best_p, best_rate = floor, -math.inf
    for p in candidates:
        rate = (p - cost) * tail(dist, p)
        if rate > best_rate:
            best_p, best_rate = p, rate
    return MonopolyPrice(best_p, best_rate)
