"""Finite universes and store enumeration for the bounded checker."""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Iterator

from lore.crdt import AWSet, LWWRegister, PNCounter
from lore.errors import BoundsTooLarge, NotEncodable
from lore.eval import Store
from lore.syntax.ast import Type
from lore.syntax.checker import CheckedProgram
from lore.values import Record, appointment, from_json, to_json, value_key

# Replica id used for dots/increments of enumerated starting states; device
# replicas are >= 1 and initial values use 0, so these never collide.
BACKGROUND = -1


@dataclass(frozen=True)
class BoundConfig:
    """Bounds for exhaustive checking (a deliberate approximation of unbounded proofs)."""

    points: tuple[int, ...] = (0, 1, 2, 3)  # appointment start/end for short appointments
    long_days: tuple[int, ...] = (12, 20, 31)  # extra appointments (0, d)
    days_bound: int = 40
    ints: tuple[int, ...] = (0, 1, 2)
    strings: tuple[str, ...] = ("a", "b")
    counter_values: tuple[int, ...] = (0, 1, 2, 3)
    max_set_size: int = 2
    max_store_elements: int = 2
    max_arguments: int = 256
    max_cases: int = 5_000_000
    universes: dict[str, tuple] = field(default_factory=dict, hash=False, compare=True)

    def __post_init__(self):
        for name in ("max_set_size", "max_store_elements", "max_arguments", "max_cases", "days_bound"):
            if getattr(self, name) < 1:
                raise ValueError(f"bound {name} must be >= 1")
        if not self.points or not self.ints:
            raise ValueError("universes must be non-empty")

    def to_json(self) -> dict:
        d = asdict(self)
        d["universes"] = {k: [to_json(v) for v in vs] for k, vs in self.universes.items()}
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "BoundConfig":
        obj = dict(obj)
        universes = {k: tuple(from_json(v) for v in vs) for k, vs in obj.pop("universes", {}).items()}
        tuples = {k: tuple(v) for k, v in obj.items() if isinstance(v, list)}
        return cls(**{**obj, **tuples}, universes=universes)

    @classmethod
    def load(cls, path) -> "BoundConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    def override(self, **changes) -> "BoundConfig":
        return replace(self, **changes)


def appointment_universe(cfg: BoundConfig) -> list[Record]:
    pairs = sorted({(s, e) for s in cfg.points for e in cfg.points} | {(0, d) for d in cfg.long_days if d < cfg.days_bound})
    return [appointment(k + 1, s, e) for k, (s, e) in enumerate(pairs)]


def universe(t: Type, p: CheckedProgram, cfg: BoundConfig) -> list[Any]:
    """Finite candidate values of type ``t`` in enumeration order."""
    key = str(t)
    if key in cfg.universes:
        return sorted(cfg.universes[key], key=value_key)
    n = t.name
    if n == "Int":
        return sorted(cfg.ints)
    if n == "Bool":
        return [False, True]
    if n == "String":
        return sorted(cfg.strings)
    if n == "Unit":
        return [()]
    if n == "Appointment":
        return appointment_universe(cfg)
    if n in p.records:
        fields = p.records[n]
        per_field = [universe(ft, p, cfg) for _, ft in fields]
        names = [f for f, _ in fields]
        out = [Record(n, tuple(zip(names, combo))) for combo in itertools.product(*per_field)]
        return sorted(out, key=value_key)
    if n == "Tuple":
        return [tuple(c) for c in itertools.product(*(universe(a, p, cfg) for a in t.args))]
    if n == "Set":
        elems = universe(t.args[0], p, cfg)
        return [frozenset(c) for c in _subsets(elems, cfg.max_set_size)]
    raise NotEncodable(f"no finite universe for type {t}")


def _subsets(elems: list[Any], k: int) -> Iterator[tuple]:
    for size in range(min(k, len(elems)) + 1):
        yield from itertools.combinations(elems, size)


def source_candidates(t: Type, p: CheckedProgram, cfg: BoundConfig) -> list[tuple[int, Any]]:
    """(element count, value) candidates for one source, smallest first."""
    if t.name == "AWSet":
        elems = universe(t.args[0], p, cfg)
        index = {e: k + 1 for k, e in enumerate(elems)}
        out = []
        for combo in _subsets(elems, cfg.max_set_size):
            entries = frozenset((e, frozenset({(BACKGROUND, index[e])})) for e in combo)
            ctx = frozenset({(BACKGROUND, index[e]) for e in combo})
            out.append((len(combo), AWSet(entries, ctx)))
        return out
    if t.name == "PNCounter":
        return [(0, PNCounter.of(v, BACKGROUND)) for v in sorted(cfg.counter_values, key=abs)]
    if t.name == "LWWRegister":
        return [(0, LWWRegister(v, (1, BACKGROUND))) for v in universe(t.args[0], p, cfg)]
    raise NotEncodable(f"cannot enumerate source of type {t}")


def enumerate_stores(
    p: CheckedProgram, cfg: BoundConfig, relevant: list[str], base: Store
) -> list[Store]:
    """Stores varying the ``relevant`` sources (others fixed to ``base``),
    ordered by ascending total element count, then lexicographically."""
    relevant = sorted(relevant)
    cands = [source_candidates(p.source_types[r], p, cfg) for r in relevant]
    total = 1
    for c in cands:
        total *= len(c)
    if total > cfg.max_cases:
        raise BoundsTooLarge(f"{total} candidate stores exceed the cap of {cfg.max_cases}")
    combos = []
    for idx in itertools.product(*(range(len(c)) for c in cands)):
        size = sum(cands[k][i][0] for k, i in enumerate(idx))
        if size <= cfg.max_store_elements:
            combos.append((size, idx))
    combos.sort()
    table = dict(base.table)
    stores = []
    for _, idx in combos:
        for k, i in enumerate(idx):
            table[relevant[k]] = cands[k][i][1]
        stores.append(Store.of(table))
    return stores
