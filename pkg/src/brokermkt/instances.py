"""Instance file schema, content digests, and seeded instance generation.

Files are UTF-8 JSON documents::

    {"kind": "production-cost",
     "buyers": [[{"values": [...], "probs": [...]}, ...], ...],
     "costs": [...]}

    {"kind": "two-sided",
     "buyers": [...as above...],
     "sellers": [{"values": [...], "probs": [...]}, ...]}

Unknown keys are rejected; numbers round-trip exactly (shortest repr).
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .dists import DiscreteDist
from .model import Instance, ProductionCostInstance, TwoSidedInstance


class InstanceFormatError(ValueError):
    pass


def _expect_keys(obj: dict, allowed: set[str], where: str):
    unknown = set(obj) - allowed
    if unknown:
        raise InstanceFormatError(f"unknown keys {sorted(unknown)} in {where}")
    missing = allowed - set(obj)
    if missing:
        raise InstanceFormatError(f"missing keys {sorted(missing)} in {where}")


def _parse_dist(obj, where: str) -> DiscreteDist:
    if not isinstance(obj, dict):
        raise InstanceFormatError(f"{where} must be an object")
    _expect_keys(obj, {"values", "probs"}, where)
    try:
        return DiscreteDist(obj["values"], obj["probs"])
    except ValueError as exc:
        raise InstanceFormatError(f"{where}: {exc}") from exc


def parse_instance(doc: dict) -> Instance:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise InstanceFormatError("instance document must be an object with a 'kind'")
    kind = doc["kind"]
    if kind == "production-cost":
        _expect_keys(doc, {"kind", "buyers", "costs"}, "instance")
    elif kind == "two-sided":
        _expect_keys(doc, {"kind", "buyers", "sellers"}, "instance")
    else:
        raise InstanceFormatError(f"unknown kind {kind!r}")
    buyers = [
        [_parse_dist(d, f"buyers[{i}][{j}]") for j, d in enumerate(row)]
        for i, row in enumerate(doc["buyers"])
    ]
    try:
        if kind == "production-cost":
            return ProductionCostInstance(buyers, doc["costs"])
        sellers = [_parse_dist(d, f"sellers[{j}]") for j, d in enumerate(doc["sellers"])]
        return TwoSidedInstance(buyers, sellers)
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from exc


def serialize_instance(instance: Instance) -> dict:
    def dist_doc(d: DiscreteDist) -> dict:
        return {"values": list(d.values), "probs": list(d.probs)}

    doc: dict = {
        "kind": "two-sided" if isinstance(instance, TwoSidedInstance) else "production-cost",
        "buyers": [[dist_doc(d) for d in row] for row in instance.buyers],
    }
    if isinstance(instance, TwoSidedInstance):
        doc["sellers"] = [dist_doc(d) for d in instance.sellers]
    else:
        doc["costs"] = list(instance.costs)
    return doc


def instance_to_json(instance: Instance) -> str:
    return json.dumps(serialize_instance(instance), indent=2) + "\n"


def load_instance(path: str | Path) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_instance(json.load(fh))


def digest(instance: Instance) -> str:
    """Content hash over the canonical serialization."""
    canon = json.dumps(serialize_instance(instance), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _random_dist(rng: np.random.Generator, support: int, value_max: int) -> DiscreteDist:
    values = sorted(set(int(v) for v in rng.integers(0, value_max + 1, size=support)))
    probs = rng.dirichlet(np.ones(len(values)))
    # Renormalize the float dust so the constructor's 1e-12 check is safe.
    probs = probs / probs.sum()
    return DiscreteDist([float(v) for v in values], [float(p) for p in probs])


def generate_instance(
    kind: str, buyers: int, items: int, support: int, value_max: int,
    seed: int, index: int,
) -> Instance:
    """One seeded instance; (seed, index) fully determines the result."""
    rng = np.random.Generator(np.random.Philox(key=(seed << 32) + index))
    rows = [
        [_random_dist(rng, support, value_max) for _ in range(items)]
        for _ in range(buyers)
    ]
    if kind == "production-cost":
        costs = [float(v) for v in rng.integers(0, value_max + 1, size=items)]
        return ProductionCostInstance(rows, costs)
    if kind == "two-sided":
        sellers = [_random_dist(rng, support, value_max) for _ in range(items)]
        return TwoSidedInstance(rows, sellers)
    raise ValueError(f"unknown kind {kind!r}")


def generate_files(
    kind: str, buyers: int, items: int, support: int, value_max: int,
    count: int, seed: int, out_dir: str | Path,
) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    short = "pc" if kind == "production-cost" else "ts"
    paths = []
    for index in range(count):
        inst = generate_instance(kind, buyers, items, support, value_max, seed, index)
        path = out / f"{short}_s{seed}_{index:04d}.json"
        path.write_text(instance_to_json(inst), encoding="utf-8")
        paths.append(path)
    return paths
