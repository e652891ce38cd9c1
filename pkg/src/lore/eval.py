"""Big-step evaluation of terms and formulas against a source store, plus the
``update``/``merge`` store algebra.

Reading a source yields its current value in the store; reading a derived
reactive evaluates its body under the same store. Derived values may be
memoized per store because stores are immutable.
"""

from __future__ import annotations

import hashlib
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from functools import cached_property
from typing import Any

from lore.crdt import AWSet, LWWRegister, MergeValue, PNCounter, crdt_from_json, is_merge_value, merge_value
from lore.errors import DomainMismatch, EvalError, KindMismatch, Stuck, UniverseMissing, UnknownReactive
from lore.syntax.ast import (
    App,
    Binary,
    Call,
    Construct,
    Field,
    If,
    InteractionDecl,
    Lam,
    Lit,
    Node,
    Quant,
    Read,
    TupleExpr,
    Type,
    Unary,
    Var,
)
from lore.syntax.checker import CheckedProgram
from lore.values import INT_MAX, INT_MIN, Closure, Record, atoms, show


@dataclass(frozen=True)
class Store:
    """Immutable assignment of source reactives to mergeable values."""

    items: tuple[tuple[str, MergeValue], ...]

    @classmethod
    def of(cls, mapping: Mapping[str, MergeValue]) -> "Store":
        return cls(tuple(sorted(mapping.items())))

    @cached_property
    def table(self) -> dict[str, MergeValue]:
        return dict(self.items)

    @cached_property
    def _hash(self) -> int:
        return hash(self.items)

    def __hash__(self) -> int:
        return self._hash

    def __getitem__(self, name: str) -> MergeValue:
        try:
            return self.table[name]
        except KeyError:
            raise UnknownReactive(f"no source reactive {name!r} in store") from None

    def __contains__(self, name: str) -> bool:
        return name in self.table

    def keys(self):
        return self.table.keys()

    def set(self, name: str, value: MergeValue) -> "Store":
        t = dict(self.table)
        t[name] = value
        return Store.of(t)

    def canonical(self) -> str:
        return "; ".join(f"{k}={v.canonical()}" for k, v in self.items)

    def observe(self) -> tuple:
        """Observable contents (element sets, counter values, register values)."""
        return tuple((k, v.observe()) for k, v in self.items)

    def to_json(self) -> dict:
        return {k: v.to_json() for k, v in self.items}

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "Store":
        return cls.of({k: crdt_from_json(v) for k, v in obj.items()})

    def digest(self) -> str:
        """Short canonical fingerprint used in trace logs and goldens."""
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()[:12]

    def __repr__(self) -> str:
        return f"Store({self.canonical()})"


def update_store(store: Store, targets: Iterable[str], values: Iterable[MergeValue]) -> Store:
    """Pointwise merge of ``values`` into ``targets``; identity elsewhere."""
    targets, values = list(targets), list(values)
    if len(targets) != len(values):
        raise KindMismatch(f"{len(targets)} targets but {len(values)} values")
    if not targets:
        return store
    table = dict(store.table)
    for r, v in zip(targets, values):
        if r not in table:
            raise UnknownReactive(f"no source reactive {r!r} in store")
        table[r] = merge_value(table[r], v)
    return Store.of(table)


def merge_store(a: Store, b: Store) -> Store:
    if a.keys() != b.keys():
        raise DomainMismatch(f"stores over different sources: {sorted(a.keys())} vs {sorted(b.keys())}")
    if a == b:
        return a
    return Store.of({k: merge_value(v, b[k]) for k, v in a.items})


def leq_store(a: Store, b: Store) -> bool:
    return merge_store(a, b) == b


def has_type(v: Any, t: Type) -> bool:
    n = t.name
    if n == "Int":
        return type(v) is int
    if n == "Bool":
        return type(v) is bool
    if n == "String":
        return type(v) is str
    if n == "Unit":
        return v == ()
    if n == "Set":
        return isinstance(v, frozenset) and all(has_type(x, t.args[0]) for x in v)
    if n == "Tuple":
        return isinstance(v, tuple) and len(v) == len(t.args) and all(has_type(x, a) for x, a in zip(v, t.args))
    if n == "AWSet":
        return isinstance(v, AWSet)
    if n == "PNCounter":
        return isinstance(v, PNCounter)
    if n == "LWWRegister":
        return isinstance(v, LWWRegister)
    if n == "Fun":
        return isinstance(v, Closure)
    return isinstance(v, Record) and v.type_name == n


def active_domain(store: Store, env: Mapping[str, Any] | None = None) -> list[Any]:
    """Every value occurring in the store or in ``env`` (sorted, deduplicated)."""
    from lore.values import value_key

    seen: dict[Any, None] = {}
    for _, v in store.items:
        for x in atoms(v):
            if not is_merge_value(x):
                seen.setdefault(x, None)
    for v in (env or {}).values():
        for x in atoms(v):
            if not is_merge_value(x) and not isinstance(x, Closure):
                seen.setdefault(x, None)
    return sorted(seen, key=value_key)


def _int(v: int) -> int:
    if not INT_MIN <= v <= INT_MAX:
        raise EvalError(f"integer overflow: {v}")
    return v


class Evaluator:
    """Evaluates terms of one checked program.

    ``universe`` maps a type (its string form) to the values a quantifier over
    that type ranges over; when absent, quantifiers range over the active
    domain of the store and environment.
    """

    def __init__(self, program: CheckedProgram, memoize: bool = True):
        self.program = program
        self.sources = set(program.source_types)
        self.derived_bodies = {d.name: d.body for d in program.program.deriveds}
        self.record_fields = {name: tuple(f for f, _ in fields) for name, fields in program.records.items()}
        self.memoize = memoize
        self._derived_cache: dict[tuple[Store, str], Any] = {}

    # -- public API ----------------------------------------------------------

    def value_of(self, reactive: str, store: Store) -> Any:
        if reactive in self.sources:
            return store[reactive]
        body = self.derived_bodies.get(reactive)
        if body is None:
            raise UnknownReactive(f"unknown reactive {reactive!r}")
        if not self.memoize:
            return self.eval(body, store, {})
        key = (store, reactive)
        try:
            return self._derived_cache[key]
        except KeyError:
            pass
        if len(self._derived_cache) > 200_000:
            self._derived_cache.clear()
        v = self._derived_cache[key] = self.eval(body, store, {})
        return v

    def eval(self, t: Node, store: Store, env: Mapping[str, Any], replica: int = 0, universe=None) -> Any:
        return _Run(self, store, replica, universe).ev(t, dict(env))

    def holds(self, l: Node, store: Store, env: Mapping[str, Any] | None = None, universe=None) -> bool:
        v = self.eval(l, store, env or {}, 0, universe)
        if type(v) is not bool:
            raise Stuck(f"formula evaluated to non-boolean {show(v)}")
        return v

    # -- interactions ----------------------------------------------------------

    def _apply_clause(self, run: "_Run", clause: Node, a: InteractionDecl, store: Store, arg: Any) -> Any:
        f = run.ev(clause, {})
        for r in a.modifies:
            f = run.apply(f, store[r])
        return run.apply(f, arg)

    def precondition(self, a: InteractionDecl, store: Store, arg: Any) -> bool:
        run = _Run(self, store, 0, None, arg)
        return all(self._apply_clause(run, c, a, store, arg) is True for c in a.requires)

    def failing_precondition(self, a: InteractionDecl, store: Store, arg: Any) -> int | None:
        run = _Run(self, store, 0, None, arg)
        for k, c in enumerate(a.requires):
            if self._apply_clause(run, c, a, store, arg) is not True:
                return k
        return None

    def postcondition(self, a: InteractionDecl, store: Store, arg: Any) -> bool:
        run = _Run(self, store, 0, None, arg)
        return all(self._apply_clause(run, c, a, store, arg) is True for c in a.ensures)

    def execute(self, a: InteractionDecl, store: Store, arg: Any, replica: int) -> tuple[MergeValue, ...]:
        run = _Run(self, store, replica, None, arg)
        result = self._apply_clause(run, a.executes[0], a, store, arg)
        values = result if len(a.modifies) > 1 else (result,)
        if len(values) != len(a.modifies):
            raise Stuck(f"{a.name} produced {len(values)} values for {len(a.modifies)} reactives")
        return tuple(values)

    def invariant_holds(self, inv, store: Store, env: Mapping[str, Any] | None = None) -> bool:
        return self.holds(inv.formula, store, env)

    def valid(self, store: Store, invariants=None) -> bool:
        invs = self.program.invariants if invariants is None else invariants
        return all(self.holds(i.formula, store) for i in invs)

    def violated(self, store: Store, invariants=None) -> list[int]:
        invs = self.program.invariants if invariants is None else invariants
        return [i.id for i in invs if not self.holds(i.formula, store)]


class _Run:
    """One evaluation: fixes the store, executing replica and quantifier universe."""

    __slots__ = ("ev_", "store", "replica", "universe", "arg", "_domain")

    def __init__(self, evaluator: Evaluator, store: Store, replica: int, universe, arg: Any = None):
        self.ev_ = evaluator
        self.store = store
        self.replica = replica
        self.universe = universe
        self.arg = arg
        self._domain = None

    def apply(self, f: Any, arg: Any) -> Any:
        if not isinstance(f, Closure):
            raise Stuck(f"cannot apply non-function {show(f)}")
        env = dict(f.env)
        env[f.param] = arg
        return self.ev(f.body, env)

    def domain(self, t: Type, env: dict[str, Any]) -> list[Any]:
        if self.universe is not None:
            key = str(t)
            if key not in self.universe:
                raise UniverseMissing(f"no universe supplied for type {key}")
            return list(self.universe[key])
        if self._domain is None:
            extra = dict(env)
            if self.arg is not None:
                extra["$arg"] = self.arg
            self._domain = active_domain(self.store, extra)
        return [v for v in self._domain if has_type(v, t)]

    def ev(self, t: Node, env: dict[str, Any]) -> Any:
        cls = type(t)
        if cls is Read:
            return self.ev_.value_of(t.reactive, self.store)
        if cls is Var:
            try:
                return env[t.name]
            except KeyError:
                raise Stuck(f"unbound variable {t.name!r}") from None
        if cls is Lit:
            return t.value
        if cls is Call:
            return self.call(t, env)
        if cls is Binary:
            return self.binary(t, env)
        if cls is Field:
            target = self.ev(t.target, env)
            if not isinstance(target, Record):
                raise Stuck(f"field {t.name} of non-record {show(target)}")
            return target.get(t.name)
        if cls is Lam:
            return Closure(t.param, t.body, tuple(env.items()))
        if cls is App:
            return self.apply(self.ev(t.fn, env), self.ev(t.arg, env))
        if cls is Unary:
            v = self.ev(t.operand, env)
            if t.op == "!":
                if type(v) is not bool:
                    raise Stuck(f"negation of non-boolean {show(v)}")
                return not v
            return _int(-v)
        if cls is If:
            c = self.ev(t.cond, env)
            return self.ev(t.then if c else t.other, env)
        if cls is TupleExpr:
            return tuple(self.ev(x, env) for x in t.items)
        if cls is Construct:
            names = self.ev_.record_fields[t.type_name]
            return Record(t.type_name, tuple(zip(names, (self.ev(a, env) for a in t.args))))
        if cls is Quant:
            return self.quant(t, env)
        raise Stuck(f"cannot evaluate {cls.__name__}")

    def quant(self, t: Quant, env: dict[str, Any]) -> bool:
        want = t.kind == "exists"
        for v in self.domain(t.type, env):
            inner = dict(env)
            inner[t.var] = v
            if self.ev(t.body, inner) is want:
                return want
        return not want

    def binary(self, t: Binary, env: dict[str, Any]) -> Any:
        op = t.op
        if op == "&&":
            return self.ev(t.left, env) is True and self.ev(t.right, env) is True
        if op == "||":
            return self.ev(t.left, env) is True or self.ev(t.right, env) is True
        if op == "==>":
            return self.ev(t.left, env) is not True or self.ev(t.right, env) is True
        left = self.ev(t.left, env)
        right = self.ev(t.right, env)
        if op == "<==>":
            return left is right
        if op == "==":
            return left == right
        if op == "!=":
            return left != right
        if type(left) is not int or type(right) is not int:
            raise Stuck(f"arithmetic on non-integers {show(left)} {op} {show(right)}")
        if op == "+":
            return _int(left + right)
        if op == "-":
            return _int(left - right)
        if op == "*":
            return _int(left * right)
        if op == "<":
            return left < right
        if op == "<=":
            return left <= right
        if op == ">":
            return left > right
        if op == ">=":
            return left >= right
        if right == 0:
            raise Stuck("division by zero")
        if op == "/":
            return _int(int(left / right))
        return _int(left - right * int(left / right))

    def call(self, t: Call, env: dict[str, Any]) -> Any:
        name = t.name
        args = [self.ev(a, env) for a in t.args]
        try:
            return _BUILTINS[name](self, *args)
        except (KeyError, TypeError, AttributeError) as exc:
            if name not in _BUILTINS:
                raise Stuck(f"unknown builtin {name!r}") from None
            raise Stuck(f"{name}({', '.join(show(a) for a in args)}): {exc}") from None


def _elements(c: Any) -> frozenset:
    if isinstance(c, AWSet):
        return c.elements()
    if isinstance(c, frozenset):
        return c
    raise TypeError(f"not a set: {show(c)}")


def _add(run: _Run, c: Any, e: Any) -> Any:
    if isinstance(c, AWSet):
        return c.add_from(e, run.replica)
    return c | {e}


def _remove(run: _Run, c: Any, e: Any) -> Any:
    if isinstance(c, AWSet):
        return c.remove(e)
    return c - {e}


def _remove_all(run: _Run, c: Any, es: frozenset) -> Any:
    if isinstance(c, AWSet):
        for e in es:
            c = c.remove(e)
        return c
    return c - es


_BUILTINS = {
    "toSet": lambda run, c: _elements(c),
    "union": lambda run, a, b: a | b,
    "intersect": lambda run, a, b: a & b,
    "diff": lambda run, a, b: a - b,
    "add": _add,
    "remove": _remove,
    "removeAll": _remove_all,
    "in": lambda run, e, c: e in c,
    "size": lambda run, c: len(_elements(c)),
    "isEmpty": lambda run, c: not _elements(c),
    "sumDays": lambda run, c: _int(sum(a.get("days") for a in _elements(c))),
    "get_start": lambda run, a: a.get("start"),
    "get_end": lambda run, a: a.get("end"),
    "filter": lambda run, c, f: frozenset(x for x in _elements(c) if run.apply(f, x) is True),
    "map": lambda run, c, f: frozenset(run.apply(f, x) for x in _elements(c)),
    "sumBy": lambda run, c, f: _int(sum(run.apply(f, x) for x in _elements(c))),
    "inc": lambda run, c, n: c.increment(n, run.replica),
    "dec": lambda run, c, n: c.decrement(n, run.replica),
    "count": lambda run, c: c.value,
    "write": lambda run, r, v: r.write(v, run.replica),
    "read": lambda run, r: r.value,
    "min": lambda run, a, b: min(a, b),
    "max": lambda run, a, b: max(a, b),
}


def initial_store(program: CheckedProgram) -> Store:
    """Initial values of all sources (constant initialisers, replica 0)."""
    ev = Evaluator(program, memoize=False)
    empty = Store(())
    values: dict[str, MergeValue] = {}
    for s in program.program.sources:
        args = [ev.eval(a, empty, {}) for a in s.init_args]
        if s.crdt_kind == "AWSet":
            values[s.name] = AWSet.of(args)
        elif s.crdt_kind == "PNCounter":
            values[s.name] = PNCounter.of(args[0] if args else 0)
        else:
            values[s.name] = LWWRegister(args[0] if args else None)
    return Store.of(values)


def eval_term(t: Node, store: Store, env: Mapping[str, Any], program: CheckedProgram, replica: int = 0) -> Any:
    """Evaluate ``t`` under ``store``; ``program`` supplies derived bodies."""
    return Evaluator(program, memoize=False).eval(t, store, env, replica)


def eval_logic(l: Node, store: Store, env: Mapping[str, Any], program: CheckedProgram, universe=None) -> bool:
    """Evaluate a formula; ``universe`` (type string -> values) bounds quantifiers."""
    return Evaluator(program, memoize=False).holds(l, store, env, universe)
