"""Abstract syntax: type descriptors, terms/logic terms and declarations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

# -- types -----------------------------------------------------------------


@dataclass(frozen=True)
class Type:
    """A monomorphic type: ``name`` plus type arguments.

    Base names: Int, Bool, String, Unit, Set, AWSet, PNCounter, LWWRegister,
    Tuple, Fun, and record names (Appointment, user records).
    """

    name: str
    args: tuple["Type", ...] = ()

    def __str__(self) -> str:
        if self.name == "Tuple":
            return "(" + ", ".join(map(str, self.args)) + ")"
        if self.name == "Fun":
            return f"{self.args[0]} => {self.args[1]}"
        if self.args:
            return f"{self.name}[{', '.join(map(str, self.args))}]"
        return self.name


INT = Type("Int")
BOOL = Type("Bool")
STRING = Type("String")
UNIT = Type("Unit")
APPOINTMENT = Type("Appointment")


def set_of(t: Type) -> Type:
    return Type("Set", (t,))


def fun(a: Type, b: Type) -> Type:
    return Type("Fun", (a, b))


CRDT_TYPE_NAMES = ("AWSet", "PNCounter", "LWWRegister")


# -- terms -----------------------------------------------------------------
# ``pos`` is (line, col) of the node's first token. It is excluded from
# equality so that printed-and-reparsed programs compare equal.


@dataclass(frozen=True)
class Node:
    pass


def _pos():
    return field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Lit(Node):
    value: Any
    pos: tuple = _pos()


@dataclass(frozen=True)
class Ref(Node):
    """Unresolved identifier; replaced by Var or Read during resolution."""

    name: str
    pos: tuple = _pos()


@dataclass(frozen=True)
class Var(Node):
    name: str
    pos: tuple = _pos()


@dataclass(frozen=True)
class Read(Node):
    """``r.value``: read of a source or derived reactive."""

    reactive: str
    pos: tuple = _pos()


@dataclass(frozen=True)
class Lam(Node):
    param: str
    body: Node
    pos: tuple = _pos()


@dataclass(frozen=True)
class App(Node):
    fn: Node
    arg: Node
    pos: tuple = _pos()


@dataclass(frozen=True)
class Call(Node):
    """Application of a built-in function (method syntax is sugar for it)."""

    name: str
    args: tuple[Node, ...]
    pos: tuple = _pos()


@dataclass(frozen=True)
class Field(Node):
    target: Node
    name: str
    pos: tuple = _pos()


@dataclass(frozen=True)
class Construct(Node):
    type_name: str
    args: tuple[Node, ...]
    pos: tuple = _pos()


@dataclass(frozen=True)
class TupleExpr(Node):
    items: tuple[Node, ...]
    pos: tuple = _pos()


@dataclass(frozen=True)
class Unary(Node):
    op: str  # "!" or "-"
    operand: Node
    pos: tuple = _pos()


@dataclass(frozen=True)
class Binary(Node):
    op: str
    left: Node
    right: Node
    pos: tuple = _pos()


@dataclass(frozen=True)
class If(Node):
    cond: Node
    then: Node
    other: Node
    pos: tuple = _pos()


@dataclass(frozen=True)
class Quant(Node):
    kind: str  # "forall" | "exists"
    var: str
    type: Type
    body: Node
    pos: tuple = _pos()


ARITH_OPS = ("+", "-", "*", "/", "%")
CMP_OPS = ("<", "<=", ">", ">=")
EQ_OPS = ("==", "!=")
LOGIC_OPS = ("&&", "||", "==>", "<==>")


def children(t: Node) -> tuple[Node, ...]:
    if isinstance(t, Lam):
        return (t.body,)
    if isinstance(t, App):
        return (t.fn, t.arg)
    if isinstance(t, (Call, Construct)):
        return t.args
    if isinstance(t, Field):
        return (t.target,)
    if isinstance(t, TupleExpr):
        return t.items
    if isinstance(t, Unary):
        return (t.operand,)
    if isinstance(t, Binary):
        return (t.left, t.right)
    if isinstance(t, If):
        return (t.cond, t.then, t.other)
    if isinstance(t, Quant):
        return (t.body,)
    return ()


def walk(t: Node):
    yield t
    for c in children(t):
        yield from walk(c)


def reads(t: Node) -> frozenset[str]:
    """Reactives syntactically read by ``t``."""
    return frozenset(n.reactive for n in walk(t) if isinstance(n, Read))


def strip_lambdas(t: Node, n: int) -> tuple[list[str], Node]:
    params = []
    for _ in range(n):
        if not isinstance(t, Lam):
            break
        params.append(t.param)
        t = t.body
    return params, t


# -- declarations ------------------------------------------------------------


@dataclass(frozen=True)
class TypeDecl:
    name: str
    type: Type | None = None  # alias target
    fields: tuple[tuple[str, Type], ...] | None = None  # record fields
    pos: tuple = _pos()


@dataclass(frozen=True)
class SourceDecl:
    name: str
    declared: Type  # the T in Source[T], alias-expanded by the checker
    crdt_kind: str
    init_args: tuple[Node, ...]
    pos: tuple = _pos()


@dataclass(frozen=True)
class DerivedDecl:
    name: str
    declared: Type
    body: Node
    pos: tuple = _pos()


@dataclass(frozen=True)
class InteractionDecl:
    name: str
    modifies_types: tuple[Type, ...]
    arg_type: Type
    modifies: tuple[str, ...] = ()
    requires: tuple[Node, ...] = ()
    executes: tuple[Node, ...] = ()
    ensures: tuple[Node, ...] = ()
    base: str | None = field(default=None, compare=False)
    pos: tuple = _pos()

    @property
    def complete(self) -> bool:
        return bool(self.modifies) and len(self.executes) == 1


@dataclass(frozen=True)
class InvariantDecl:
    id: int
    formula: Node
    pos: tuple = _pos()


@dataclass(frozen=True)
class GlueStmt:
    """Outside-world glue (``UI.display(...)``); kept verbatim, ignored by the checker."""

    text: str
    pos: tuple = _pos()


@dataclass(frozen=True)
class Program:
    types: tuple[TypeDecl, ...] = ()
    sources: tuple[SourceDecl, ...] = ()
    deriveds: tuple[DerivedDecl, ...] = ()
    interactions: tuple[InteractionDecl, ...] = ()
    invariants: tuple[InvariantDecl, ...] = ()
    glue: tuple[GlueStmt, ...] = ()
    file: str = field(default="<input>", compare=False)


# Built-in functions. Method syntax ``x.f(y)`` is sugar for ``f(x, y)``.
BUILTINS = frozenset({
    "toSet", "union", "intersect", "diff", "add", "remove", "removeAll", "in",
    "size", "isEmpty", "sumDays", "get_start", "get_end", "filter", "map",
    "sumBy", "inc", "dec", "count", "write", "read", "min", "max",
})
