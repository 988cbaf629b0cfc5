"""End-to-end CLI behavior: values, exit codes, determinism, formats."""

import json

import pytest

from conftest import FirstPriceItem

from brokermkt import cli
from brokermkt.instances import instance_to_json
from brokermkt.mechanisms import MECHANISMS


@pytest.fixture()
def pc_file(tmp_path, micro_pc_2item):
    path = tmp_path / "pc.json"
    path.write_text(instance_to_json(micro_pc_2item), encoding="utf-8")
    return str(path)


@pytest.fixture()
def ts_file(tmp_path, micro_ts_1x1):
    path = tmp_path / "ts.json"
    path.write_text(instance_to_json(micro_ts_1x1), encoding="utf-8")
    return str(path)


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_profit_exact(capsys, pc_file):
    code, out, err = run_cli(
        capsys, "profit", "--instance", pc_file, "--mechanism", "mix"
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["results"]["profit"] == pytest.approx(0.9375, abs=1e-9)
    assert "instance_digest" in doc
    assert "wall_clock_s=" in err


def test_profit_mc_close_to_exact(capsys, pc_file):
    code, out, _ = run_cli(
        capsys, "profit", "--instance", pc_file, "--mechanism", "1la",
        "--mode", "mc", "--trials", "200000", "--seed", "1",
    )
    assert code == 0
    doc = json.loads(out)["results"]
    assert abs(doc["estimate"] - 1.0) <= 4 * doc["stderr"] + 1e-9


def test_profit_kind_mismatch(capsys, pc_file, ts_file):
    code, _, err = run_cli(
        capsys, "profit", "--instance", pc_file, "--mechanism", "reduced-it"
    )
    assert code == 2 and "two-sided" in err
    code, _, err = run_cli(
        capsys, "profit", "--instance", ts_file, "--mechanism", "it"
    )
    assert code == 2 and "production-cost" in err


def test_profit_parse_error(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    code, _, err = run_cli(
        capsys, "profit", "--instance", str(bad), "--mechanism", "it"
    )
    assert code == 2


def test_size_guard_exit_code(capsys, pc_file, monkeypatch):
    monkeypatch.setenv("BROKER_MAX_PROFILES", "2")
    code, _, err = run_cli(
        capsys, "profit", "--instance", pc_file, "--mechanism", "it"
    )
    assert code == 3 and "Monte Carlo" in err


def test_opt_production(capsys, pc_file):
    # Per-item prices at 2 extract the full surplus E[(2-1) * #high-value items].
    code, out, _ = run_cli(capsys, "opt", "--instance", pc_file)
    assert code == 0
    doc = json.loads(out)
    assert doc["results"]["opt_lp"] == pytest.approx(1.0, abs=1e-6)


def test_opt_two_sided(capsys, ts_file):
    code, out, _ = run_cli(capsys, "opt", "--instance", ts_file)
    assert code == 0
    res = json.loads(out)["results"]
    assert res["best_reduced_profit"] == pytest.approx(1.0, abs=1e-6)
    assert res["expected_cost_market_opt"] == pytest.approx(1.0, abs=1e-6)
    assert res["eight_approx"] == "PASS"


def test_check_all_passes(capsys, pc_file):
    code, out, _ = run_cli(
        capsys, "check", "--instance", pc_file, "--mechanism", "bvcg",
        "--property", "all",
    )
    assert code == 0
    doc = json.loads(out)
    assert all(c["passed"] for c in doc["checks"])
    props = {c["property"] for c in doc["checks"]}
    assert {"dsic_buyer", "ir", "feasible", "cost_monotone"} <= props


def test_check_cost_monotone_grid(capsys, pc_file):
    code, out, _ = run_cli(
        capsys, "check", "--instance", pc_file, "--mechanism", "it",
        "--property", "cost-monotone", "--grid", "0,1,2,3",
    )
    assert code == 0


def test_check_two_sided_seller_side(capsys, ts_file):
    code, out, _ = run_cli(
        capsys, "check", "--instance", ts_file, "--mechanism", "reduced-mix",
        "--property", "dsic",
    )
    assert code == 0
    props = {c["property"] for c in json.loads(out)["checks"]}
    assert props == {"dsic_buyer", "dsic_seller"}


def test_check_broken_mechanism_exits_one(capsys, tmp_path, monkeypatch):
    # First-price misreporting pays whenever two support points can win.
    from brokermkt.dists import DiscreteDist
    from brokermkt.model import ProductionCostInstance

    inst = ProductionCostInstance([[DiscreteDist([1, 2], [0.5, 0.5])]], [0.0])
    path = tmp_path / "fp.json"
    path.write_text(instance_to_json(inst), encoding="utf-8")
    monkeypatch.setitem(MECHANISMS, "it", FirstPriceItem())
    code, out, _ = run_cli(
        capsys, "check", "--instance", str(path), "--mechanism", "it",
        "--property", "dsic",
    )
    assert code == 1
    doc = json.loads(out)
    failed = [c for c in doc["checks"] if not c["passed"]]
    assert failed and failed[0]["witnesses"]


def test_bound_micro(capsys, pc_file):
    code, out, _ = run_cli(
        capsys, "bound", "--instance", pc_file, "--mechanism", "it"
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["results"]["r"] == pytest.approx(1.0, abs=1e-9)
    verdicts = {c["property"]: c["verdict"] for c in doc["checks"]}
    assert verdicts["profit_within_bound"] == "PASS"
    assert verdicts["r_identity"] == "PASS"


def test_bound_single_item_tail_zero(capsys, tmp_path, micro_pc_1x1):
    path = tmp_path / "one.json"
    path.write_text(instance_to_json(micro_pc_1x1), encoding="utf-8")
    code, out, _ = run_cli(
        capsys, "bound", "--instance", str(path), "--mechanism", "mix"
    )
    assert code == 0
    assert json.loads(out)["results"]["tail"] == 0.0


def test_gen_deterministic_bytes(capsys, tmp_path):
    for sub in ("x", "y"):
        code, _, _ = run_cli(
            capsys, "gen", "--kind", "two-sided", "--buyers", "1", "--items", "1",
            "--support", "2", "--value-max", "5", "--count", "2", "--seed", "7",
            "--out", str(tmp_path / sub),
        )
        assert code == 0
    for name in ("ts_s7_0000.json", "ts_s7_0001.json"):
        assert (tmp_path / "x" / name).read_bytes() == (tmp_path / "y" / name).read_bytes()


def test_report_byte_determinism(capsys, pc_file):
    _, out1, _ = run_cli(capsys, "profit", "--instance", pc_file, "--mechanism", "mix")
    _, out2, _ = run_cli(capsys, "profit", "--instance", pc_file, "--mechanism", "mix")
    assert out1 == out2
    _, mc1, _ = run_cli(
        capsys, "profit", "--instance", pc_file, "--mechanism", "mix",
        "--mode", "mc", "--trials", "10000", "--seed", "3",
    )
    _, mc2, _ = run_cli(
        capsys, "profit", "--instance", pc_file, "--mechanism", "mix",
        "--mode", "mc", "--trials", "10000", "--seed", "3",
    )
    assert mc1 == mc2


def test_tsv_format(capsys, pc_file):
    code, out, _ = run_cli(
        capsys, "profit", "--instance", pc_file, "--mechanism", "it",
        "--format", "tsv",
    )
    assert code == 0
    lines = dict(
        line.split("\t") for line in out.strip().splitlines() if "\t" in line
    )
    assert lines["results.profit"] == "1"
    assert lines["command"] == "profit"


def test_gen_io_error(capsys, tmp_path):
    blocker = tmp_path / "blocked"
    blocker.write_text("file, not a directory", encoding="utf-8")
    code, _, err = run_cli(
        capsys, "gen", "--kind", "production-cost", "--count", "1", "--seed", "1",
        "--out", str(blocker),
    )
    assert code == 4
