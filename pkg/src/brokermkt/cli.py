"""Command-line interface: profit evaluation, benchmarks, checks, generation.

Reports go to stdout and are byte-deterministic given (instance, command,
seed); wall-clock timing goes to stderr.  Exit codes: 0 success, 1 property
failure, 2 input error, 3 size guard, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .dists import TOL
from .duality import compute_terms, interim_form, median_bound_all
from .instances import InstanceFormatError, digest, generate_files, load_instance
from .mechanisms import MECHANISMS
from .model import (
    McEstimate,
    ProductionCostInstance,
    ProfileSpaceError,
    TwoSidedInstance,
    expected_profit,
)
from .oracle import (
    SizeGuardError,
    check_cost_monotone,
    check_dsic,
    check_feasibility,
    check_ir,
    copies_opt,
    opt_lp,
    two_sided_opt_bounds,
)
from .reduction import ReducedMechanism

EXIT_OK = 0
EXIT_PROPERTY = 1
EXIT_INPUT = 2
EXIT_GUARD = 3
EXIT_IO = 4

MECHANISM_CHOICES = list(MECHANISMS) + ["reduced-" + n for n in MECHANISMS]


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _resolve_mechanism(name: str, instance):
    if name.startswith("reduced-"):
        if not isinstance(instance, TwoSidedInstance):
            raise CliError(f"{name} requires a two-sided instance", EXIT_INPUT)
        return ReducedMechanism(MECHANISMS[name.removeprefix("reduced-")])
    if not isinstance(instance, ProductionCostInstance):
        raise CliError(f"{name} requires a production-cost instance", EXIT_INPUT)
    return MECHANISMS[name]


def _load(path: str):
    try:
        return load_instance(path)
    except FileNotFoundError as exc:
        raise CliError(str(exc), EXIT_INPUT) from exc
    except (InstanceFormatError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot parse {path}: {exc}", EXIT_INPUT) from exc


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _emit(report: dict, fmt: str):
    if fmt == "json":
        print(json.dumps(report, indent=2))
        return

    def walk(prefix: str, obj):
        if isinstance(obj, dict):
            pairs = obj.items()
        elif isinstance(obj, list):
            pairs = enumerate(obj)
        else:
            print(f"{prefix}\t{_fmt(obj)}")
            return
        for k, v in pairs:
            walk(f"{prefix}.{k}" if prefix else str(k), v)

    walk("", report)


def _witness_doc(w) -> dict:
    doc = {
        "buyer_values": [list(r) for r in w.profile.buyer_values],
        "deviation": w.deviation,
        "gap": w.gap,
    }
    if w.profile.seller_values is not None:
        doc["seller_values"] = list(w.profile.seller_values)
    if w.coin.branch is not None:
        doc["coin"] = w.coin.branch
    return doc


def _report_header(command: str, args: argparse.Namespace, instance) -> dict:
    echo = {
        k: v for k, v in sorted(vars(args).items()) if k != "func" and v is not None
    }
    return {"command": command, "args": echo, "instance_digest": digest(instance)}


def cmd_profit(args) -> int:
    instance = _load(args.instance)
    mech = _resolve_mechanism(args.mechanism, instance)
    report = _report_header("profit", args, instance)
    if args.mode == "exact":
        value = expected_profit(mech, instance)
        report["results"] = {"profit": value}
    else:
        est = expected_profit(mech, instance, mode="mc", trials=args.trials, seed=args.seed)
        assert isinstance(est, McEstimate)
        report["results"] = {
            "estimate": est.estimate,
            "stderr": est.stderr,
            "trials": est.trials,
            "seed": est.seed,
        }
    _emit(report, args.format)
    return EXIT_OK


def cmd_opt(args) -> int:
    instance = _load(args.instance)
    report = _report_header("opt", args, instance)
    if isinstance(instance, ProductionCostInstance):
        report["results"] = {"opt_lp": opt_lp(instance, engine=args.engine)}
    else:
        lhs, rhs = two_sided_opt_bounds(instance, engine=args.engine)
        mix_profit = expected_profit(ReducedMechanism(MECHANISMS["mix"]), instance)
        verdict = "PASS" if 8.0 * mix_profit >= rhs - 1e-6 else "FAIL"
        report["results"] = {
            "best_reduced_profit": lhs,
            "expected_cost_market_opt": rhs,
            "reduced_mix_profit": mix_profit,
            "eight_approx": verdict,
        }
    _emit(report, args.format)
    return EXIT_OK


def _default_grid(instance) -> list[float]:
    top = max(v for row in instance.buyers for d in row for v in d.values)
    return [k * top / 6.0 for k in range(7)] if top > 0 else [float(k) for k in range(7)]


def cmd_check(args) -> int:
    instance = _load(args.instance)
    mech = _resolve_mechanism(args.mechanism, instance)
    two_sided = isinstance(instance, TwoSidedInstance)
    props = (
        ["dsic", "ir", "feasible", "cost-monotone"]
        if args.property == "all"
        else [args.property]
    )
    reports = []
    for prop in props:
        if prop == "dsic":
            reports.append(check_dsic(mech, instance, side="buyer"))
            if two_sided:
                reports.append(check_dsic(mech, instance, side="seller"))
        elif prop == "ir":
            reports.append(check_ir(mech, instance))
        elif prop == "feasible":
            reports.append(check_feasibility(mech, instance))
        elif prop == "cost-monotone":
            if two_sided:
                if args.property != "all":
                    raise CliError(
                        "cost-monotone applies to production-cost instances", EXIT_INPUT
                    )
                continue
            grid = (
                [float(x) for x in args.grid.split(",")]
                if args.grid
                else _default_grid(instance)
            )
            reports.append(check_cost_monotone(mech, instance, grid))
    report = _report_header("check", args, instance)
    report["checks"] = [
        {
            "property": r.prop,
            "passed": r.passed,
            "witnesses": [_witness_doc(w) for w in r.witnesses[:10]],
            "violations": len(r.witnesses),
        }
        for r in reports
    ]
    _emit(report, args.format)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_PROPERTY


def cmd_bound(args) -> int:
    instance = _load(args.instance)
    if not isinstance(instance, ProductionCostInstance):
        raise CliError("bound requires a production-cost instance", EXIT_INPUT)
    mech = _resolve_mechanism(args.mechanism, instance)
    terms = compute_terms(interim_form(mech, instance), instance)
    pft = expected_profit(mech, instance)
    pft_it = expected_profit(MECHANISMS["it"], instance)
    pft_bvcg = expected_profit(MECHANISMS["bvcg"], instance)
    pft_1la = expected_profit(MECHANISMS["1la"], instance)
    copies = copies_opt(instance)
    checks = {
        "profit_within_bound": pft <= terms.upper_bound() + TOL,
        "single_vs_copies": terms.single <= copies + TOL,
        "under_vs_copies": terms.under <= copies + TOL,
        "over_vs_copies": terms.over <= copies + TOL,
        "tail_vs_r": terms.tail <= terms.r + TOL,
        "core_bound": terms.core <= 2.0 * terms.r + 2.0 * pft_bvcg + TOL,
        "r_identity": abs(terms.r - pft_1la) <= TOL,
        "median_bound": median_bound_all(instance),
    }
    report = _report_header("bound", args, instance)
    report["results"] = {
        "single": terms.single,
        "under": terms.under,
        "over": terms.over,
        "tail": terms.tail,
        "core": terms.core,
        "upper_bound": terms.upper_bound(),
        "r": terms.r,
        "copies_opt": copies,
        "profit": pft,
        "profit_it": pft_it,
        "profit_bvcg": pft_bvcg,
        "profit_1la": pft_1la,
    }
    report["checks"] = [
        {"property": name, "passed": ok, "verdict": "PASS" if ok else "FAIL"}
        for name, ok in checks.items()
    ]
    _emit(report, args.format)
    return EXIT_OK if all(checks.values()) else EXIT_PROPERTY


def cmd_gen(args) -> int:
    try:
        paths = generate_files(
            kind=args.kind, buyers=args.buyers, items=args.items,
            support=args.support, value_max=args.value_max,
            count=args.count, seed=args.seed, out_dir=args.out,
        )
    except OSError as exc:
        raise CliError(f"cannot write instances: {exc}", EXIT_IO) from exc
    report = {
        "command": "gen",
        "args": {
            k: v for k, v in sorted(vars(args).items()) if k != "func" and v is not None
        },
        "results": {"files": [p.name for p in paths], "count": len(paths)},
    }
    _emit(report, args.format)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brokermkt",
        description="Broker-profit mechanisms over finite priors: evaluate, benchmark, check.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--instance", required=True, help="instance JSON file")
        p.add_argument("--format", choices=["json", "tsv"], default="json")

    p = sub.add_parser("profit", help="expected broker profit of a mechanism")
    common(p)
    p.add_argument("--mechanism", choices=MECHANISM_CHOICES, required=True)
    p.add_argument("--mode", choices=["exact", "mc"], default="exact")
    p.add_argument("--trials", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_profit)

    p = sub.add_parser("opt", help="optimal-profit benchmark (LP)")
    common(p)
    p.add_argument("--engine", choices=["highs", "simplex"], default="highs")
    p.set_defaults(func=cmd_opt)

    p = sub.add_parser("check", help="exhaustive incentive and feasibility checks")
    common(p)
    p.add_argument("--mechanism", choices=MECHANISM_CHOICES, required=True)
    p.add_argument(
        "--property",
        choices=["dsic", "ir", "feasible", "cost-monotone", "all"],
        default="all",
    )
    p.add_argument("--grid", help="comma-separated cost grid for cost-monotone")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bound", help="profit upper-bound decomposition and checks")
    common(p)
    p.add_argument("--mechanism", choices=list(MECHANISMS), required=True)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("gen", help="write seeded random instance files")
    p.add_argument("--kind", choices=["production-cost", "two-sided"], required=True)
    p.add_argument("--buyers", type=int, default=1)
    p.add_argument("--items", type=int, default=1)
    p.add_argument("--support", type=int, default=2)
    p.add_argument("--value-max", type=int, default=10)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=["json", "tsv"], default="json")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        code = args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ProfileSpaceError, SizeGuardError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    finally:
        elapsed = time.perf_counter() - start
        print(f"wall_clock_s={elapsed:.3f}", file=sys.stderr)
    return code


def console_main():  # pragma: no cover
    sys.exit(main())
