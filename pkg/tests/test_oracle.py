"""LP benchmark values, checker correctness, two-sided bound pair."""

import itertools
import math

import pytest

from conftest import FirstPriceItem, LoserFee, Oversupply, SellsWhenExpensive

from brokermkt.dists import DiscreteDist
from brokermkt.instances import generate_instance
from brokermkt.mechanisms import MECHANISMS
from brokermkt.model import ProductionCostInstance, TwoSidedInstance, expected_profit
from brokermkt.oracle import (
    SizeGuardError,
    build_lp,
    check_cost_monotone,
    check_dsic,
    check_feasibility,
    check_ir,
    copies_opt,
    lp_mechanism,
    opt_lp,
    two_sided_opt_bounds,
)


def menu_revenue(instance: ProductionCostInstance) -> float:
    """Best deterministic bundle-price menu for a single buyer.

    Candidate prices are the bundle values across types (buyers break
    utility ties toward the priciest option, the limit of tiny discounts).
    Independent of the LP machinery on purpose.
    """
    assert instance.n == 1
    m = instance.m
    bundles = [
        s for r in range(1, m + 1) for s in itertools.combinations(range(m), r)
    ]
    types = []
    for combo in itertools.product(
        *[list(zip(d.values, d.probs)) for d in instance.buyers[0]]
    ):
        types.append(([v for v, _ in combo], math.prod(p for _, p in combo)))
    candidates = sorted(
        {sum(vals[j] for j in A) for vals, _ in types for A in bundles} | {math.inf}
    )
    best = 0.0
    for prices in itertools.product(candidates, repeat=len(bundles)):
        revenue = 0.0
        for vals, pr in types:
            options = [(0.0, 0.0, ())]
            for A, p in zip(bundles, prices):
                if p < math.inf:
                    options.append((sum(vals[j] for j in A) - p, p, A))
            top = max(u for u, _, _ in options)
            if top < -1e-12:
                continue
            pay, bundle = max(
                (p, A) for u, p, A in options if u >= top - 1e-12
            )
            revenue += pr * (pay - sum(instance.costs[j] for j in bundle))
        best = max(best, revenue)
    return best


def test_opt_lp_micro_value(micro_pc_1x1):
    assert opt_lp(micro_pc_1x1) == pytest.approx(0.5, abs=1e-7)


def test_opt_lp_prohibitive_costs():
    dd = DiscreteDist([0, 2], [0.5, 0.5])
    inst = ProductionCostInstance([[dd, dd]], [5.0, 7.0])
    assert opt_lp(inst) == pytest.approx(0.0, abs=1e-7)


def test_opt_lp_two_items_matches_menu_oracle():
    # Full welfare (2.0) is extractable with per-item prices, so both the
    # menu search and the LP land exactly there.
    dd = DiscreteDist([0, 2], [0.5, 0.5])
    inst = ProductionCostInstance([[dd, dd]], [0.0, 0.0])
    menu = menu_revenue(inst)
    lp = opt_lp(inst)
    assert menu == pytest.approx(2.0, abs=1e-9)
    assert lp == pytest.approx(menu, abs=1e-7)


def test_opt_lp_menu_oracle_random_single_buyer():
    # Deterministic menus lower-bound the randomized LP optimum.
    for idx in range(8):
        inst = generate_instance("production-cost", 1, 2, 2, 6, seed=41, index=idx)
        assert opt_lp(inst) >= menu_revenue(inst) - 1e-7


def test_opt_lp_size_guard():
    dd = DiscreteDist([0, 1], [0.5, 0.5])
    inst = ProductionCostInstance([[dd] * 4], [0.0] * 4)
    with pytest.raises(SizeGuardError):
        opt_lp(inst)


def test_lp_solution_replays_as_truthful_mechanism(micro_pc_2item):
    for idx in (0, 1, 5):
        inst = generate_instance("production-cost", 2, 2, 2, 8, seed=59, index=idx)
        mech = lp_mechanism(inst)
        assert check_dsic(mech, inst, tol=1e-6).passed
        assert check_ir(mech, inst, tol=1e-6).passed
        assert check_feasibility(mech, inst, tol=1e-6).passed
        assert expected_profit(mech, inst) == pytest.approx(
            mech.solution.value, abs=1e-6
        )


def test_opt_dominates_shipped_mechanisms(micro_pc_1x1, micro_pc_2item):
    for inst in (micro_pc_1x1, micro_pc_2item):
        lp = opt_lp(inst)
        for mech in MECHANISMS.values():
            assert lp >= expected_profit(mech, inst) - 1e-6


def test_checkers_pass_on_shipped_mechanisms(micro_pc_2buyers):
    for mech in MECHANISMS.values():
        assert check_dsic(mech, micro_pc_2buyers).passed
        assert check_ir(mech, micro_pc_2buyers).passed
        assert check_feasibility(mech, micro_pc_2buyers).passed


def test_checker_catches_first_price_misreport():
    dd = DiscreteDist([1, 2], [0.5, 0.5])
    inst = ProductionCostInstance([[dd], [dd]], [0.0])
    report = check_dsic(FirstPriceItem(), inst)
    assert not report.passed
    assert report.witnesses


def test_checker_catches_loser_fee(micro_pc_1x1):
    report = check_ir(LoserFee(), micro_pc_1x1)
    assert not report.passed


def test_checker_catches_oversupply(micro_pc_2buyers):
    report = check_feasibility(Oversupply(), micro_pc_2buyers)
    assert not report.passed


def test_checker_catches_cost_loving(micro_pc_1x1):
    report = check_cost_monotone(SellsWhenExpensive(), micro_pc_1x1, [0, 1, 2, 3])
    assert not report.passed
    assert "cost" in report.witnesses[0].deviation


def test_cost_monotone_shipped(micro_pc_2buyers):
    grid = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
    for name in ("it", "bvcg"):
        assert check_cost_monotone(MECHANISMS[name], micro_pc_2buyers, grid).passed


def test_copies_opt_micro(micro_pc_1x1):
    assert copies_opt(micro_pc_1x1) == pytest.approx(0.5, abs=1e-12)
    dd = DiscreteDist([0, 2], [0.5, 0.5])
    assert copies_opt(ProductionCostInstance([[dd]], [9.0])) == 0.0
    two = ProductionCostInstance([[dd, dd]], [1.0, 1.0])
    assert copies_opt(two) == pytest.approx(2 * 0.5, abs=1e-12)


def test_two_sided_bounds_micro(micro_ts_1x1):
    lhs, rhs = two_sided_opt_bounds(micro_ts_1x1)
    assert lhs == pytest.approx(1.0, abs=1e-7)
    assert rhs == pytest.approx(1.0, abs=1e-7)
    assert lhs <= rhs + 1e-7


def test_two_sided_bounds_zero_value_buyers():
    ts = TwoSidedInstance(
        [[DiscreteDist([0], [1.0])]], [DiscreteDist([1, 2], [0.5, 0.5])]
    )
    lhs, rhs = two_sided_opt_bounds(ts)
    assert lhs == pytest.approx(0.0, abs=1e-9)
    assert rhs == pytest.approx(0.0, abs=1e-7)


def test_two_sided_bounds_single_point_seller():
    buyer = DiscreteDist([0, 4], [0.5, 0.5])
    ts = TwoSidedInstance([[buyer]], [DiscreteDist([2], [1.0])])
    _, rhs = two_sided_opt_bounds(ts)
    from brokermkt.reduction import to_cost_instance

    assert rhs == pytest.approx(opt_lp(to_cost_instance(ts, (2.0,))), abs=1e-9)


def test_lp_program_shape(micro_pc_2item):
    prog = build_lp(micro_pc_2item)
    # 4 profiles x (3 bundle vars + 1 payment) for the single buyer.
    assert prog.A.shape[1] == 16
