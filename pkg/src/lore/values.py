"""Runtime values of the term language and their canonical ordering/serialization.

Plain Python objects are used where they fit: ``int``, ``bool``, ``str``,
``tuple`` and ``frozenset``. Records and closures get small frozen classes.
Mergeable values (CRDTs) live in :mod:`lore.crdt`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1


@dataclass(frozen=True)
class Record:
    type_name: str
    fields: tuple[tuple[str, Any], ...]

    def get(self, name: str) -> Any:
        for key, value in self.fields:
            if key == name:
                return value
        if self.type_name == "Appointment" and name == "days":
            return self.get("end") - self.get("start")
        raise KeyError(name)

    def __repr__(self) -> str:
        return show(self)


def make_record(type_name: str, names: list[str] | tuple[str, ...], values) -> Record:
    return Record(type_name, tuple(zip(names, values)))


APPOINTMENT_FIELDS = ("id", "start", "end")


def appointment(id: int, start: int, end: int) -> Record:
    return Record("Appointment", (("id", id), ("start", start), ("end", end)))


@dataclass(frozen=True)
class Closure:
    param: str
    body: Any
    env: tuple[tuple[str, Any], ...]

    def __repr__(self) -> str:
        return f"<closure {self.param}>"


def value_key(v: Any) -> tuple:
    """Total order over values: used for canonical forms and enumeration order."""
    if isinstance(v, bool):
        return (0, int(v))
    if isinstance(v, int):
        return (1, v)
    if isinstance(v, str):
        return (2, v)
    if isinstance(v, tuple):
        return (3, len(v), tuple(value_key(x) for x in v))
    if isinstance(v, Record):
        return (4, v.type_name, tuple(value_key(x) for _, x in v.fields))
    if isinstance(v, frozenset):
        return (5, len(v), tuple(sorted(value_key(x) for x in v)))
    if isinstance(v, Closure):
        return (7, v.param, repr(v.body))
    if v is None:
        return (-1,)
    # mergeable values
    return (6, v.canonical())


def show(v: Any) -> str:
    """Deterministic text rendering of a value."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, tuple):
        return "(" + ", ".join(show(x) for x in v) + ")"
    if isinstance(v, Record):
        return v.type_name + "(" + ", ".join(f"{k}={show(x)}" for k, x in v.fields) + ")"
    if isinstance(v, frozenset):
        return "{" + ", ".join(show(x) for x in sorted(v, key=value_key)) + "}"
    if isinstance(v, Closure):
        return repr(v)
    if v is None:
        return "()"
    return v.canonical()


def to_json(v: Any) -> Any:
    if isinstance(v, (bool, int, str)):
        return v
    if isinstance(v, tuple):
        return {"tuple": [to_json(x) for x in v]}
    if isinstance(v, Record):
        out: dict[str, Any] = {"type": v.type_name}
        out.update((k, to_json(x)) for k, x in v.fields)
        return out
    if isinstance(v, frozenset):
        return {"set": [to_json(x) for x in sorted(v, key=value_key)]}
    if v is None:
        return None
    if hasattr(v, "to_json"):
        return v.to_json()
    raise TypeError(f"value not serializable: {v!r}")


def from_json(obj: Any) -> Any:
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, list):
        return tuple(from_json(x) for x in obj)
    if isinstance(obj, dict):
        if "tuple" in obj:
            return tuple(from_json(x) for x in obj["tuple"])
        if "set" in obj:
            return frozenset(from_json(x) for x in obj["set"])
        if "crdt" in obj:
            from lore.crdt import crdt_from_json

            return crdt_from_json(obj)
        if "type" in obj:
            name = obj["type"]
            items = [(k, from_json(x)) for k, x in obj.items() if k != "type"]
            if name == "Appointment":
                return conform(Record(name, tuple(items)), {"Appointment": APPOINTMENT_FIELDS})
            return Record(name, tuple(items))
    raise ValueError(f"cannot decode value from {obj!r}")


def conform(v: Any, records: dict) -> Any:
    """Reorder record fields (recursively) to their declaration order.

    ``records`` maps a record name to its field names, or to (name, type) pairs.
    """
    if isinstance(v, Record) and v.type_name in records:
        names = [f if isinstance(f, str) else f[0] for f in records[v.type_name]]
        table = dict(v.fields)
        if set(table) != set(names):
            raise ValueError(f"{v.type_name} expects fields {names}, got {sorted(table)}")
        return Record(v.type_name, tuple((n, conform(table[n], records)) for n in names))
    if isinstance(v, tuple):
        return tuple(conform(x, records) for x in v)
    if isinstance(v, frozenset):
        return frozenset(conform(x, records) for x in v)
    return v


def atoms(v: Any):
    """Yield ``v`` and every value nested inside it (used for active domains)."""
    yield v
    if isinstance(v, tuple):
        for x in v:
            yield from atoms(x)
    elif isinstance(v, Record):
        for _, x in v.fields:
            yield from atoms(x)
    elif isinstance(v, frozenset):
        for x in v:
            yield from atoms(x)
    elif hasattr(v, "observe") and not isinstance(v, Closure):
        yield from atoms(v.observe())
