"""Localized entity catalogs: loading, deterministic sampling, train/eval splits.

All randomness takes explicit seeds; there is no global RNG state. Seeds are
mixed with param-type names through ``random.Random(str)``, which is stable
across platforms and Python versions.
"""

from __future__ import annotations

import json
import logging
import math
import random
import warnings
from dataclasses import dataclass, field

from .core import nfc

log = logging.getLogger(__name__)


class OntologyError(Exception):
    pass


class EmptyParamType(OntologyError):
    pass


class UnknownParamType(OntologyError):
    pass


class ShortSample(Warning):
    """Fewer distinct values exist than were requested."""


@dataclass(frozen=True, slots=True)
class EntityValue:
    text: str
    weight: float = 1.0

    def __post_init__(self):
        if not self.text:
            raise OntologyError("entity value text is empty")
        if not (self.weight >= 0 and math.isfinite(self.weight)):
            raise OntologyError(f"bad weight {self.weight!r} for {self.text!r}")


@dataclass(frozen=True)
class Ontology:
    lang: str
    entries: dict[str, tuple[EntityValue, ...]] = field(default_factory=dict)

    def __post_init__(self):
        for param_type, values in self.entries.items():
            if not values:
                raise EmptyParamType(param_type)

    def param_types(self) -> list[str]:
        return list(self.entries)

    def values(self, param_type: str) -> tuple[EntityValue, ...]:
        try:
            return self.entries[param_type]
        except KeyError:
            raise UnknownParamType(param_type) from None

    def size(self, param_type: str) -> int:
        return len(self.values(param_type))


@dataclass(frozen=True)
class OntologySplit:
    train: Ontology
    eval: Ontology
    overlap_fraction: float


def _fold(text: str) -> str:
    return nfc(text).casefold()


def _dedup(param_type: str, values: list[EntityValue]) -> tuple[EntityValue, ...]:
    seen: set[str] = set()
    out = []
    for v in values:
        key = _fold(v.text)
        if key in seen:
            log.warning("ontology %s: duplicate value %r after case folding, keeping first", param_type, v.text)
            continue
        seen.add(key)
        out.append(v)
    if not out:
        raise EmptyParamType(param_type)
    return tuple(out)


def load_ontology(path, lang: str) -> Ontology:
    """Load a TSV (param_type \\t value \\t weight?) or JSON catalog.

    Values are deduplicated after NFC + case folding, keeping the first
    occurrence and preserving insertion order.
    """
    text = open(path, encoding="utf-8").read()
    raw: dict[str, list[EntityValue]] = {}
    if str(path).endswith(".json") or text.lstrip().startswith("{"):
        doc = json.loads(text)
        lang = doc.get("lang", lang)
        for param_type, values in doc.get("entries", {}).items():
            raw[param_type] = [
                EntityValue(nfc(v["text"]), float(v.get("weight", 1.0))) for v in values
            ]
    else:
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) not in (2, 3) or not parts[0].strip():
                raise OntologyError(f"line {line_no}: expected param_type\\tvalue[\\tweight]")
            param_type, value = parts[0].strip(), nfc(parts[1].strip())
            if not value:
                raise EmptyParamType(param_type)
            weight = float(parts[2]) if len(parts) == 3 else 1.0
            raw.setdefault(param_type, []).append(EntityValue(value, weight))
    return Ontology(lang=lang, entries={pt: _dedup(pt, vs) for pt, vs in raw.items()})


def write_ontology(o: Ontology, path) -> None:
    doc = {
        "lang": o.lang,
        "entries": {
            pt: [{"text": v.text, "weight": v.weight} for v in vs]
            for pt, vs in o.entries.items()
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def split_ontology(o: Ontology, overlap: float, seed: int) -> OntologySplit:
    """Split each param type into train and eval catalogs with controlled overlap.

    Per type with n values, ceil(overlap * n) values are shared; the remainder
    is partitioned half and half with the extra value going to train. A side
    left with zero values for a type omits that type entirely.
    """
    if not 0.0 <= overlap <= 1.0:
        raise OntologyError(f"overlap {overlap} outside [0, 1]")
    train_entries: dict[str, tuple[EntityValue, ...]] = {}
    eval_entries: dict[str, tuple[EntityValue, ...]] = {}
    for param_type, values in o.entries.items():
        n = len(values)
        # Epsilon guard: 0.07 * 100 == 7.000000000000001 must still share 7.
        shared = math.ceil(overlap * n - 1e-9)
        shared = max(0, min(n, shared))
        rng = random.Random(f"{seed}:{param_type}")
        order = list(values)
        rng.shuffle(order)
        shared_vals = order[:shared]
        rest = order[shared:]
        train_extra = rest[: (len(rest) + 1) // 2]
        eval_extra = rest[(len(rest) + 1) // 2 :]
        index = {v.text: i for i, v in enumerate(values)}
        train_side = sorted(shared_vals + train_extra, key=lambda v: index[v.text])
        eval_side = sorted(shared_vals + eval_extra, key=lambda v: index[v.text])
        if train_side:
            train_entries[param_type] = tuple(train_side)
        if eval_side:
            eval_entries[param_type] = tuple(eval_side)
    return OntologySplit(
        train=Ontology(o.lang, train_entries),
        eval=Ontology(o.lang, eval_entries),
        overlap_fraction=overlap,
    )


def sample_values(o: Ontology, param_type: str, k: int, seed: int | str,
                  distinct: bool = True) -> list[EntityValue]:
    """Draw k values with probability proportional to weight.

    Distinct sampling uses sequential draws with renormalization. When
    distinct=True and k exceeds the catalog size n, all n values are returned
    and a ShortSample warning is issued.
    """
    values = o.values(param_type)
    rng = random.Random(f"{seed}:{param_type}")
    if k <= 0:
        return []
    if not distinct:
        weights = [v.weight for v in values]
        if sum(weights) <= 0:
            weights = None
        return rng.choices(list(values), weights=weights, k=k)

    pool = list(values)
    if k > len(pool):
        warnings.warn(ShortSample(f"{param_type}: requested {k} distinct values, only {len(pool)} exist"))
        k = len(pool)
    picked = []
    for _ in range(k):
        total = sum(v.weight for v in pool)
        if total <= 0:
            idx = rng.randrange(len(pool))
        else:
            r = rng.random() * total
            acc = 0.0
            idx = len(pool) - 1
            for i, v in enumerate(pool):
                acc += v.weight
                if r < acc:
                    idx = i
                    break
        picked.append(pool.pop(idx))
    return picked
