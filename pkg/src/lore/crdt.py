"""State-based CRDTs: add-wins set, PN-counter and last-writer-wins register.

Every value is immutable and kept in a canonical form, so structural equality
(``==``) is the lattice equality: ``leq(a, b)`` iff ``merge(a, b) == b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable

from lore.errors import KindMismatch, StaleDot
from lore.values import from_json, show, to_json, value_key

Dot = tuple[int, int]  # (replica id, counter)


def _dots(ds: Iterable[Dot]) -> str:
    return "[" + ",".join(f"({r},{c})" for r, c in sorted(ds)) + "]"


@dataclass(frozen=True)
class AWSet:
    """Add-wins observed-remove set with dotted causal context.

    ``entries`` maps each visible element to the dots that witness it; the
    context holds every dot this replica has seen, so a dot that is in the
    context but in no entry has been removed.
    """

    entries: frozenset = frozenset()  # of (element, frozenset[Dot])
    context: frozenset = frozenset()  # of Dot

    kind = "AWSet"

    @cached_property
    def table(self) -> dict[Any, frozenset]:
        return dict(self.entries)

    def elements(self) -> frozenset:
        return frozenset(self.table)

    observe = elements

    def __contains__(self, e: Any) -> bool:
        return e in self.table

    def __len__(self) -> int:
        return len(self.entries)

    def next_dot(self, replica: int) -> Dot:
        counter = max((c for r, c in self.context if r == replica), default=0)
        return (replica, counter + 1)

    def add(self, e: Any, dot: Dot) -> "AWSet":
        if dot in self.context:
            raise StaleDot(f"dot {dot} already used")
        table = dict(self.table)
        table[e] = frozenset((dot,))
        return AWSet(frozenset(table.items()), self.context | {dot})

    def add_from(self, e: Any, replica: int) -> "AWSet":
        return self.add(e, self.next_dot(replica))

    def remove(self, e: Any) -> "AWSet":
        if e not in self.table:
            return self
        table = dict(self.table)
        del table[e]
        return AWSet(frozenset(table.items()), self.context)

    def merge(self, other: "AWSet") -> "AWSet":
        if not isinstance(other, AWSet):
            raise KindMismatch(f"cannot merge AWSet with {type(other).__name__}")
        if self == other:
            return self
        mine, theirs = self.table, other.table
        out = {}
        for e in mine.keys() | theirs.keys():
            da = mine.get(e, frozenset())
            db = theirs.get(e, frozenset())
            keep = (da & db) | {d for d in da if d not in other.context} | {
                d for d in db if d not in self.context
            }
            if keep:
                out[e] = frozenset(keep)
        return AWSet(frozenset(out.items()), self.context | other.context)

    def canonical(self) -> str:
        items = sorted(self.entries, key=lambda kv: value_key(kv[0]))
        body = "; ".join(f"{show(e)}@{_dots(ds)}" for e, ds in items)
        return f"AWSet{{{body} | ctx={_dots(self.context)}}}"

    def to_json(self) -> dict:
        items = sorted(self.entries, key=lambda kv: value_key(kv[0]))
        return {
            "crdt": "AWSet",
            "entries": [{"element": to_json(e), "dots": sorted(map(list, ds))} for e, ds in items],
            "context": sorted(map(list, self.context)),
        }

    def __repr__(self) -> str:
        return self.canonical()

    @classmethod
    def of(cls, elements: Iterable[Any], replica: int = 0) -> "AWSet":
        s = cls()
        for e in sorted(set(elements), key=value_key):
            s = s.add_from(e, replica)
        return s


def _vector(items: dict[int, int]) -> tuple[tuple[int, int], ...]:
    return tuple(sorted((r, n) for r, n in items.items() if n))


@dataclass(frozen=True)
class PNCounter:
    """Counter as two grow-only vectors of per-replica totals."""

    incs: tuple[tuple[int, int], ...] = ()
    decs: tuple[tuple[int, int], ...] = ()

    kind = "PNCounter"

    @property
    def value(self) -> int:
        return sum(n for _, n in self.incs) - sum(n for _, n in self.decs)

    def observe(self) -> int:
        return self.value

    def increment(self, n: int, replica: int) -> "PNCounter":
        if n < 0:
            return self.decrement(-n, replica)
        p = dict(self.incs)
        p[replica] = p.get(replica, 0) + n
        return PNCounter(_vector(p), self.decs)

    def decrement(self, n: int, replica: int) -> "PNCounter":
        if n < 0:
            return self.increment(-n, replica)
        d = dict(self.decs)
        d[replica] = d.get(replica, 0) + n
        return PNCounter(self.incs, _vector(d))

    def merge(self, other: "PNCounter") -> "PNCounter":
        if not isinstance(other, PNCounter):
            raise KindMismatch(f"cannot merge PNCounter with {type(other).__name__}")
        p, d = dict(self.incs), dict(self.decs)
        for r, n in other.incs:
            p[r] = max(p.get(r, 0), n)
        for r, n in other.decs:
            d[r] = max(d.get(r, 0), n)
        return PNCounter(_vector(p), _vector(d))

    def canonical(self) -> str:
        inc = ",".join(f"{r}:{n}" for r, n in self.incs)
        dec = ",".join(f"{r}:{n}" for r, n in self.decs)
        return f"PNCounter{{+[{inc}] -[{dec}]}}"

    def to_json(self) -> dict:
        return {"crdt": "PNCounter", "incs": [list(x) for x in self.incs], "decs": [list(x) for x in self.decs]}

    def __repr__(self) -> str:
        return self.canonical()

    @classmethod
    def of(cls, value: int, replica: int = 0) -> "PNCounter":
        return cls().increment(value, replica)


@dataclass(frozen=True)
class LWWRegister:
    """Last-writer-wins register; timestamps are (logical clock, replica id)."""

    value: Any = None
    timestamp: tuple[int, int] = (0, 0)

    kind = "LWWRegister"

    def observe(self) -> Any:
        return self.value

    def write(self, v: Any, replica: int) -> "LWWRegister":
        return LWWRegister(v, (self.timestamp[0] + 1, replica))

    def merge(self, other: "LWWRegister") -> "LWWRegister":
        if not isinstance(other, LWWRegister):
            raise KindMismatch(f"cannot merge LWWRegister with {type(other).__name__}")
        mine = (self.timestamp, value_key(self.value))
        theirs = (other.timestamp, value_key(other.value))
        return self if mine >= theirs else other

    def canonical(self) -> str:
        return f"LWWRegister{{{show(self.value)} @({self.timestamp[0]},{self.timestamp[1]})}}"

    def to_json(self) -> dict:
        return {"crdt": "LWWRegister", "value": to_json(self.value), "timestamp": list(self.timestamp)}

    def __repr__(self) -> str:
        return self.canonical()


MergeValue = AWSet | PNCounter | LWWRegister
CRDT_KINDS = {"AWSet": AWSet, "PNCounter": PNCounter, "LWWRegister": LWWRegister}


def is_merge_value(v: Any) -> bool:
    return isinstance(v, (AWSet, PNCounter, LWWRegister))


def merge_value(a: MergeValue, b: MergeValue) -> MergeValue:
    if type(a) is not type(b):
        raise KindMismatch(f"cannot merge {type(a).__name__} with {type(b).__name__}")
    return a.merge(b)


def leq_value(a: MergeValue, b: MergeValue) -> bool:
    return merge_value(a, b) == b


def awset_add(s: AWSet, e: Any, dot: Dot) -> AWSet:
    return s.add(e, dot)


def awset_remove(s: AWSet, e: Any) -> AWSet:
    return s.remove(e)


def awset_elements(s: AWSet) -> frozenset:
    return s.elements()


def crdt_from_json(obj: dict) -> MergeValue:
    kind = obj["crdt"]
    if kind == "AWSet":
        entries = frozenset(
            (from_json(item["element"]), frozenset(tuple(d) for d in item["dots"])) for item in obj["entries"]
        )
        return AWSet(entries, frozenset(tuple(d) for d in obj["context"]))
    if kind == "PNCounter":
        return PNCounter(tuple(tuple(x) for x in obj["incs"]), tuple(tuple(x) for x in obj["decs"]))
    if kind == "LWWRegister":
        return LWWRegister(from_json(obj["value"]), tuple(obj["timestamp"]))
    raise KindMismatch(f"unknown CRDT kind {kind!r}")
