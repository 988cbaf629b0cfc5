"""Broker-profit mechanisms for two-sided markets over finite discrete priors."""

from .dists import (
    DiscreteDist,
    VirtualTable,
    buyer_virtual,
    cdf,
    monopoly_price,
    seller_virtual,
    tail,
    upper_median,
)
from .mechanisms import MECHANISMS, run_1la, run_bvcg, run_it, run_mix
from .model import (
    Coin,
    Mechanism,
    Outcome,
    Profile,
    ProductionCostInstance,
    TwoSidedInstance,
    check_feasible,
    enumerate_profiles,
    expected_profit,
)
from .oracle import (
    check_cost_monotone,
    check_dsic,
    check_ir,
    copies_opt,
    opt_lp,
    two_sided_opt_bounds,
)
from .reduction import ReducedMechanism, convert, to_cost_instance

__all__ = [
    "DiscreteDist",
    "VirtualTable",
    "buyer_virtual",
    "cdf",
    "monopoly_price",
    "seller_virtual",
    "tail",
    "upper_median",
    "MECHANISMS",
    "run_it",
    "run_bvcg",
    "run_1la",
    "run_mix",
    "Coin",
    "Mechanism",
    "Outcome",
    "Profile",
    "ProductionCostInstance",
    "TwoSidedInstance",
    "check_feasible",
    "enumerate_profiles",
    "expected_profit",
    "check_cost_monotone",
    "check_dsic",
    "check_ir",
    "copies_opt",
    "opt_lp",
    "two_sided_opt_bounds",
    "ReducedMechanism",
    "convert",
    "to_cost_instance",
]

__version__ = "0.1.0"
