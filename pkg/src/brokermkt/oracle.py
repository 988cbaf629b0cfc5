"""Ground-truth machinery: optimal-profit LP, exhaustive checkers, benchmarks.

The LP maximizes expected broker profit over randomized allocations with
pointwise (per opponent profile) truthfulness and participation constraints,
exactly the benchmark the shipped mechanisms are measured against.  The
checkers enumerate every profile, coin and deviation and report witnesses.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import linprog

from . import simplex
from .dists import TOL
from .mechanisms import MECHANISMS
from .model import (
    Coin,
    Mechanism,
    Outcome,
    Profile,
    ProductionCostInstance,
    TwoSidedInstance,
    buyer_type_space,
    enumerate_profiles,
    expected_profit,
    check_feasible,
    profile_space_size,
)
from .reduction import ReducedMechanism, to_cost_instance

LP_MAX_BUYERS = 3
LP_MAX_ITEMS = 3
LP_MAX_PROFILES = 10_000
LP_RESIDUAL_CAP = 1e-7


class SizeGuardError(RuntimeError):
    """Instance too large for the exact LP benchmark."""


# ---------------------------------------------------------------------------
# Optimal-profit LP
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LpProgram:
    """Dense LP: maximize c.x with rows A x <= b, x >= 0.

    Column layout per profile: for each buyer, one variable per nonempty
    bundle (the empty bundle is the slack of the sum-to-one row) followed by
    the buyer's payment.
    """

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    bundles: tuple[tuple[int, ...], ...]
    types: tuple[tuple[tuple[tuple[float, ...], float], ...], ...]
    profiles: tuple[tuple[int, ...], ...]
    probs: tuple[float, ...]

    def x_col(self, pv: int, i: int, a: int) -> int:
        nb = len(self.bundles)
        return pv * len(self.types) * (nb + 1) + i * (nb + 1) + a

    def p_col(self, pv: int, i: int) -> int:
        nb = len(self.bundles)
        return pv * len(self.types) * (nb + 1) + i * (nb + 1) + nb


def build_lp(instance: ProductionCostInstance) -> LpProgram:
    n, m = instance.n, instance.m
    if n > LP_MAX_BUYERS or m > LP_MAX_ITEMS:
        raise SizeGuardError(f"LP guard: n={n}, m={m} exceeds {LP_MAX_BUYERS}x{LP_MAX_ITEMS}")
    if profile_space_size(instance) > LP_MAX_PROFILES:
        raise SizeGuardError(
            f"LP guard: profile space {profile_space_size(instance)} > {LP_MAX_PROFILES}"
        )
    bundles = tuple(
        tuple(s)
        for r in range(1, m + 1)
        for s in itertools.combinations(range(m), r)
    )
    nb = len(bundles)
    types = tuple(tuple(buyer_type_space(instance, i)) for i in range(n))
    profiles = tuple(itertools.product(*[range(len(t)) for t in types]))
    probs = tuple(
        math.prod(types[i][ti][1] for i, ti in enumerate(combo)) for combo in profiles
    )
    prof_index = {combo: pv for pv, combo in enumerate(profiles)}
    ncols = len(profiles) * n * (nb + 1)

    prog = LpProgram(
        c=np.zeros(ncols), A=np.zeros((0, 0)), b=np.zeros(0),
        bundles=bundles, types=types, profiles=profiles, probs=probs,
    )
    c = prog.c
    bundle_cost = [sum(instance.costs[j] for j in A) for A in bundles]
    for pv, pr in enumerate(probs):
        for i in range(n):
            c[prog.p_col(pv, i)] += pr
            for a in range(nb):
                c[prog.x_col(pv, i, a)] -= pr * bundle_cost[a]

    rows: list[dict[int, float]] = []
    rhs: list[float] = []
    # Bundle mass at most one per buyer and profile (empty bundle is slack).
    for pv in range(len(profiles)):
        for i in range(n):
            rows.append({prog.x_col(pv, i, a): 1.0 for a in range(nb)})
            rhs.append(1.0)
    # Per-item supply.
    for pv in range(len(profiles)):
        for j in range(m):
            row = {}
            for i in range(n):
                for a, A in enumerate(bundles):
                    if j in A:
                        row[prog.x_col(pv, i, a)] = row.get(prog.x_col(pv, i, a), 0.0) + 1.0
            rows.append(row)
            rhs.append(1.0)
    # Truthfulness pointwise in the opponents' profile, participation included
    # as the null report.
    for i in range(n):
        for combo in profiles:
            ti = combo[i]
            true_vals = types[i][ti][0]

            def util(report_ti: int | None, sign: float, row: dict[int, float]):
                if report_ti is None:
                    return
                alt = list(combo)
                alt[i] = report_ti
                pv = prof_index[tuple(alt)]
                for a, A in enumerate(bundles):
                    col = prog.x_col(pv, i, a)
                    row[col] = row.get(col, 0.0) + sign * sum(true_vals[j] for j in A)
                col = prog.p_col(pv, i)
                row[col] = row.get(col, 0.0) - sign

            for rep in list(range(len(types[i]))) + [None]:
                if rep == ti:
                    continue
                row: dict[int, float] = {}
                util(rep, 1.0, row)     # deviation utility (0 for null report)
                util(ti, -1.0, row)     # minus truthful utility
                rows.append(row)
                rhs.append(0.0)

    A_mat = np.zeros((len(rows), ncols))
    for r, row in enumerate(rows):
        for col, val in row.items():
            A_mat[r, col] = val
    return replace(prog, A=A_mat, b=np.asarray(rhs))


@dataclass(frozen=True)
class LpSolution:
    value: float
    x: np.ndarray
    residual: float
    program: LpProgram


def solve_lp(program: LpProgram, engine: str = "highs") -> LpSolution:
    if engine == "highs":
        res = linprog(
            -program.c, A_ub=program.A, b_ub=program.b,
            bounds=[(0, None)] * len(program.c), method="highs",
        )
        if res.status != 0:
            raise RuntimeError(f"LP solve failed: {res.message}")
        x = res.x
        y = res.ineqlin.marginals  # <= 0 in scipy's minimize convention
        primal = max(0.0, float(np.max(program.A @ x - program.b, initial=0.0)),
                     float(-x.min(initial=0.0)))
        # lam = -y >= 0 is dual-feasible for the max form when A^T lam >= c;
        # then c.x <= opt <= b.lam and the gap certifies optimality.
        red = program.A.T @ (-y) - program.c
        dual = max(0.0, float(-red.min(initial=0.0)))
        value = float(program.c @ x)
        gap = abs(float(program.b @ (-y)) - value)
        residual = max(primal, dual, gap)
    elif engine == "simplex":
        res = simplex.solve_max(program.c, program.A, program.b)
        x, value, residual = res.x, res.value, res.residual
    else:
        raise ValueError(f"unknown LP engine {engine!r}")
    if residual > LP_RESIDUAL_CAP:
        raise RuntimeError(f"LP optimality residual {residual:.3e} above cap")
    return LpSolution(value=value, x=x, residual=residual, program=program)


def opt_lp(instance: ProductionCostInstance, engine: str = "highs") -> float:
    """Maximum expected profit over randomized truthful participation-safe
    mechanisms, solved exactly as a dense LP."""
    return solve_lp(build_lp(instance), engine).value


class TableMechanism(Mechanism):
    """Plays a solved LP's allocation and payment tables."""

    name = "lp-opt"

    def __init__(self, solution: LpSolution):
        self.solution = solution
        prog = solution.program
        self._index: dict[tuple, int] = {}
        for pv, combo in enumerate(prog.profiles):
            key = tuple(prog.types[i][ti][0] for i, ti in enumerate(combo))
            self._index[key] = pv

    def run(self, instance, profile, coin=Coin()):
        prog = self.solution.program
        x = self.solution.x
        pv = self._index[profile.buyer_values]
        n = len(prog.types)
        m = max(max(A) for A in prog.bundles) + 1
        alloc = [[0.0] * m for _ in range(n)]
        for i in range(n):
            for a, A in enumerate(prog.bundles):
                w = x[prog.x_col(pv, i, a)]
                for j in A:
                    alloc[i][j] += w
        pay = tuple(x[prog.p_col(pv, i)] for i in range(n))
        sold = tuple(min(1.0, sum(alloc[i][j] for i in range(n))) for j in range(m))
        return Outcome(tuple(map(tuple, alloc)), sold, pay, (0.0,) * m)


def lp_mechanism(instance: ProductionCostInstance, engine: str = "highs") -> TableMechanism:
    return TableMechanism(solve_lp(build_lp(instance), engine))


# ---------------------------------------------------------------------------
# Exhaustive checkers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Witness:
    profile: Profile
    coin: Coin
    deviation: str
    gap: float


@dataclass
class CheckReport:
    prop: str
    passed: bool = True
    witnesses: list[Witness] = field(default_factory=list)

    def record(self, profile, coin, deviation, gap):
        self.passed = False
        self.witnesses.append(Witness(profile, coin, deviation, gap))


def _buyer_utility(out: Outcome, i: int, true_vals) -> float:
    return math.fsum(
        out.buyer_alloc[i][j] * true_vals[j] for j in range(len(true_vals))
    ) - out.buyer_pay[i]


class _OutcomeCache:
    def __init__(self, mechanism, instance):
        self.mechanism = mechanism
        self.instance = instance
        self._memo: dict = {}

    def get(self, profile: Profile, coin: Coin) -> Outcome:
        key = (profile, coin)
        out = self._memo.get(key)
        if out is None:
            out = self.mechanism.run(self.instance, profile, coin)
            self._memo[key] = out
        return out


def check_dsic(
    mechanism: Mechanism,
    instance,
    side: str = "buyer",
    tol: float = TOL,
    max_profiles: int | None = None,
) -> CheckReport:
    """Pointwise truthfulness over every profile, coin and in-support deviation."""
    report = CheckReport(prop=f"dsic_{side}")
    cache = _OutcomeCache(mechanism, instance)
    coins = mechanism.coin_space(instance)
    profiles = [p for p, _ in enumerate_profiles(instance, max_profiles)]
    if side == "buyer":
        type_spaces = [
            [vec for vec, _ in buyer_type_space(instance, i)] for i in range(instance.n)
        ]
        for coin, _ in coins:
            for profile in profiles:
                for i in range(instance.n):
                    truth = _buyer_utility(cache.get(profile, coin), i, profile.buyer_values[i])
                    for alt in type_spaces[i]:
                        if alt == profile.buyer_values[i]:
                            continue
                        rows = list(profile.buyer_values)
                        rows[i] = alt
                        dev_profile = Profile(tuple(rows), profile.seller_values)
                        dev = _buyer_utility(
                            cache.get(dev_profile, coin), i, profile.buyer_values[i]
                        )
                        if dev > truth + tol:
                            report.record(
                                profile, coin, f"buyer {i} reports {alt}", dev - truth
                            )
        return report
    if side != "seller":
        raise ValueError("side must be 'buyer' or 'seller'")
    if not isinstance(instance, TwoSidedInstance):
        raise ValueError("seller-side check needs a two-sided instance")
    for coin, _ in coins:
        for profile in profiles:
            for j in range(instance.m):
                true_v = profile.seller_values[j]
                out = cache.get(profile, coin)
                truth = out.seller_pay[j] - true_v * out.seller_sold[j]
                for alt in instance.sellers[j].values:
                    if alt == true_v:
                        continue
                    sv = list(profile.seller_values)
                    sv[j] = alt
                    dev_profile = Profile(profile.buyer_values, tuple(sv))
                    alt_out = cache.get(dev_profile, coin)
                    dev = alt_out.seller_pay[j] - true_v * alt_out.seller_sold[j]
                    if dev > truth + tol:
                        report.record(
                            profile, coin, f"seller {j} reports {alt}", dev - truth
                        )
    return report


def check_ir(
    mechanism: Mechanism, instance, tol: float = TOL, max_profiles: int | None = None
) -> CheckReport:
    """Pointwise non-negative utility for buyers and (if present) sellers."""
    report = CheckReport(prop="ir")
    cache = _OutcomeCache(mechanism, instance)
    two_sided = isinstance(instance, TwoSidedInstance)
    for profile, _ in enumerate_profiles(instance, max_profiles):
        for coin, _w in mechanism.coin_space(instance):
            out = cache.get(profile, coin)
            for i in range(instance.n):
                u = _buyer_utility(out, i, profile.buyer_values[i])
                if u < -tol:
                    report.record(profile, coin, f"buyer {i}", -u)
            if two_sided:
                for j in range(instance.m):
                    u = out.seller_pay[j] - profile.seller_values[j] * out.seller_sold[j]
                    if u < -tol:
                        report.record(profile, coin, f"seller {j}", -u)
    return report


def check_feasibility(
    mechanism: Mechanism, instance, tol: float = TOL, max_profiles: int | None = None
) -> CheckReport:
    report = CheckReport(prop="feasible")
    for profile, _ in enumerate_profiles(instance, max_profiles):
        for coin, _w in mechanism.coin_space(instance):
            out = mechanism.run(instance, profile, coin)
            if not check_feasible(out, tol):
                report.record(profile, coin, "supply", 0.0)
    return report


def check_cost_monotone(
    mechanism: Mechanism,
    instance: ProductionCostInstance,
    cost_grid,
    tol: float = TOL,
    max_profiles: int | None = None,
) -> CheckReport:
    """Raising one item's cost never raises its sold probability.

    Checks every ordered grid pair per item, holding other costs at the
    instance values, profile by profile with the coin averaged out.
    """
    report = CheckReport(prop="cost_monotone")
    grid = sorted(cost_grid)
    profiles = [p for p, _ in enumerate_profiles(instance, max_profiles)]
    for j in range(instance.m):
        sold: dict[float, list[float]] = {}
        for g in grid:
            costs = list(instance.costs)
            costs[j] = g
            inst_g = ProductionCostInstance(instance.buyers, costs)
            coins = mechanism.coin_space(inst_g)
            sold[g] = [
                math.fsum(w * mechanism.run(inst_g, p, coin).seller_sold[j] for coin, w in coins)
                for p in profiles
            ]
        for lo_i, lo in enumerate(grid):
            for hi in grid[lo_i + 1 :]:
                for pi, p in enumerate(profiles):
                    if sold[lo][pi] < sold[hi][pi] - tol:
                        report.record(
                            p, Coin(), f"item {j}: cost {lo} -> {hi}",
                            sold[hi][pi] - sold[lo][pi],
                        )
    return report


# ---------------------------------------------------------------------------
# Benchmarks
# ---------------------------------------------------------------------------

def copies_opt(instance: ProductionCostInstance) -> float:
    """Optimal profit of the single-parameter copies relaxation.

    For additive buyers this equals the per-item virtual auction's profit,
    since that auction maximizes ironed virtual surplus item by item.
    """
    return expected_profit(MECHANISMS["it"], instance)


def seller_profile_space(ts: TwoSidedInstance):
    axes = [list(zip(d.values, d.probs)) for d in ts.sellers]
    for combo in itertools.product(*axes):
        yield tuple(v for v, _ in combo), math.prod(p for _, p in combo)


def two_sided_opt_bounds(
    ts: TwoSidedInstance, engine: str = "highs"
) -> tuple[float, float]:
    """(best shipped converted profit, expected cost-market LP optimum).

    The second component upper-bounds the optimal two-sided profit, the
    first lower-bounds it; callers assert lhs <= rhs.
    """
    rhs = math.fsum(
        pr * opt_lp(to_cost_instance(ts, sv), engine)
        for sv, pr in seller_profile_space(ts)
    )
    lhs = max(
        expected_profit(ReducedMechanism(base), ts) for base in MECHANISMS.values()
    )
    return lhs, rhs
