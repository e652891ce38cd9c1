"""Semantic checks: alias expansion, derived-graph acyclicity and a
monomorphic typing pass over every term."""

from __future__ import annotations

from dataclasses import dataclass, field
from graphlib import CycleError as _GraphCycle
from graphlib import TopologicalSorter

from lore.errors import ArityError, CycleError, TypingError
from lore.syntax.ast import (
    APPOINTMENT,
    ARITH_OPS,
    BOOL,
    CMP_OPS,
    EQ_OPS,
    INT,
    STRING,
    UNIT,
    App,
    Binary,
    Call,
    Construct,
    DerivedDecl,
    Field,
    If,
    InteractionDecl,
    Lam,
    Lit,
    Node,
    Program,
    Quant,
    Read,
    SourceDecl,
    TupleExpr,
    Type,
    Unary,
    Var,
    fun,
    reads,
    set_of,
)

APPOINTMENT_RECORD = (("id", INT), ("start", INT), ("end", INT))
_ATOMIC = {"Int", "Bool", "String", "Unit"}


@dataclass
class CheckedProgram:
    """A resolved, type-checked program with convenient lookup tables."""

    program: Program
    records: dict[str, tuple[tuple[str, Type], ...]]
    source_types: dict[str, Type]
    derived_types: dict[str, Type]
    derived_order: list[str]
    executable: dict[str, InteractionDecl]
    templates: dict[str, InteractionDecl]
    aliases: dict[str, Type] = field(default_factory=dict)

    @property
    def name(self) -> str:
        import os

        return os.path.splitext(os.path.basename(self.program.file))[0]

    @property
    def sources(self) -> dict[str, SourceDecl]:
        return {s.name: s for s in self.program.sources}

    @property
    def deriveds(self) -> dict[str, DerivedDecl]:
        return {d.name: d for d in self.program.deriveds}

    @property
    def invariants(self):
        return self.program.invariants

    def interaction(self, name: str) -> InteractionDecl:
        return self.executable[name]

    def expand(self, t: Type) -> Type:
        return _expand(t, self.aliases)


def _expand(t: Type, aliases: dict[str, Type], seen: tuple = ()) -> Type:
    if t.name in aliases and not t.args:
        if t.name in seen:
            raise TypingError(f"recursive type alias {t.name!r}")
        return _expand(aliases[t.name], aliases, seen + (t.name,))
    return Type(t.name, tuple(_expand(a, aliases, seen) for a in t.args))


class _Typer:
    def __init__(self, file: str, records, aliases, reactive_types):
        self.file = file
        self.records = records
        self.aliases = aliases
        self.reactive_types = reactive_types

    def fail(self, msg: str, node: Node | None = None, cls=TypingError):
        line, col = node.pos if node is not None else (0, 0)
        return cls(msg, line, col, self.file)

    def known(self, t: Type, node: Node | None = None) -> Type:
        t = _expand(t, self.aliases)
        arity = {"Set": 1, "AWSet": 1, "LWWRegister": 1, "PNCounter": 0}
        if t.name in _ATOMIC or t.name in self.records:
            if t.args:
                raise self.fail(f"type {t.name} takes no arguments", node)
        elif t.name in arity:
            if len(t.args) != arity[t.name]:
                raise self.fail(f"type {t.name} expects {arity[t.name]} argument(s)", node)
        elif t.name not in ("Tuple", "Fun"):
            raise self.fail(f"unknown type {t.name!r}", node)
        for a in t.args:
            self.known(a, node)
        return t

    def expect(self, got: Type, want: Type, node: Node, what: str = "expression"):
        if got != want:
            raise self.fail(f"{what} has type {got}, expected {want}", node)

    def check(self, t: Node, want: Type, env: dict[str, Type]) -> None:
        if isinstance(t, Lam):
            if want.name != "Fun":
                raise self.fail(f"lambda where {want} was expected", t)
            self.check(t.body, want.args[1], {**env, t.param: want.args[0]})
            return
        self.expect(self.infer(t, env), want, t)

    def infer(self, t: Node, env: dict[str, Type]) -> Type:
        if isinstance(t, Lit):
            if isinstance(t.value, bool):
                return BOOL
            if isinstance(t.value, int):
                return INT
            return STRING
        if isinstance(t, Var):
            if t.name not in env:
                raise self.fail(f"unbound variable {t.name!r}", t)
            return env[t.name]
        if isinstance(t, Read):
            return self.reactive_types[t.reactive]
        if isinstance(t, Lam):
            raise self.fail("cannot infer the parameter type of a lambda here", t)
        if isinstance(t, App):
            ft = self.infer(t.fn, env)
            if ft.name != "Fun":
                raise self.fail(f"applying a non-function of type {ft}", t)
            self.check(t.arg, ft.args[0], env)
            return ft.args[1]
        if isinstance(t, TupleExpr):
            if not t.items:
                return UNIT
            return Type("Tuple", tuple(self.infer(x, env) for x in t.items))
        if isinstance(t, Unary):
            if t.op == "!":
                self.check(t.operand, BOOL, env)
                return BOOL
            self.check(t.operand, INT, env)
            return INT
        if isinstance(t, Binary):
            if t.op in ARITH_OPS:
                self.check(t.left, INT, env)
                self.check(t.right, INT, env)
                return INT
            if t.op in CMP_OPS:
                self.check(t.left, INT, env)
                self.check(t.right, INT, env)
                return BOOL
            if t.op in EQ_OPS:
                self.check(t.right, self.infer(t.left, env), env)
                return BOOL
            self.check(t.left, BOOL, env)
            self.check(t.right, BOOL, env)
            return BOOL
        if isinstance(t, If):
            self.check(t.cond, BOOL, env)
            tt = self.infer(t.then, env)
            self.check(t.other, tt, env)
            return tt
        if isinstance(t, Quant):
            qt = self.known(t.type, t)
            self.check(t.body, BOOL, {**env, t.var: qt})
            return BOOL
        if isinstance(t, Field):
            target = self.infer(t.target, env)
            if target.name not in self.records:
                raise self.fail(f"field {t.name!r} on non-record type {target}", t)
            if target == APPOINTMENT and t.name == "days":
                return INT
            for fname, ftype in self.records[target.name]:
                if fname == t.name:
                    return ftype
            raise self.fail(f"record {target} has no field {t.name!r}", t)
        if isinstance(t, Construct):
            fields = self.records[t.type_name]
            if len(t.args) != len(fields):
                raise self.fail(f"{t.type_name} expects {len(fields)} field(s), got {len(t.args)}", t, ArityError)
            for a, (_, ft) in zip(t.args, fields):
                self.check(a, ft, env)
            return Type(t.type_name)
        if isinstance(t, Call):
            return self.builtin(t, env)
        raise self.fail(f"unexpected node {type(t).__name__}", t)

    def builtin(self, t: Call, env: dict[str, Type]) -> Type:
        name, args = t.name, t.args

        def arity(n: int):
            if len(args) != n:
                raise self.fail(f"{name} expects {n} argument(s), got {len(args)}", t, ArityError)

        def container(node: Node, kinds=("Set", "AWSet")) -> Type:
            ct = self.infer(node, env)
            if ct.name not in kinds:
                raise self.fail(f"{name} expects {' or '.join(kinds)}, got {ct}", node)
            return ct

        if name == "toSet":
            arity(1)
            return set_of(container(args[0]).args[0])
        if name in ("union", "intersect", "diff"):
            arity(2)
            st = container(args[0], ("Set",))
            self.check(args[1], st, env)
            return st
        if name in ("add", "remove"):
            arity(2)
            ct = container(args[0])
            self.check(args[1], ct.args[0], env)
            return ct
        if name == "removeAll":
            arity(2)
            ct = container(args[0])
            self.check(args[1], set_of(ct.args[0]), env)
            return ct
        if name == "in":
            arity(2)
            ct = container(args[1])
            self.check(args[0], ct.args[0], env)
            return BOOL
        if name in ("size", "isEmpty"):
            arity(1)
            container(args[0])
            return INT if name == "size" else BOOL
        if name == "sumDays":
            arity(1)
            ct = container(args[0])
            self.expect(ct.args[0], APPOINTMENT, args[0], "sumDays element")
            return INT
        if name in ("get_start", "get_end"):
            arity(1)
            self.check(args[0], APPOINTMENT, env)
            return INT
        if name in ("filter", "map", "sumBy"):
            arity(2)
            elem = container(args[0]).args[0]
            if name == "filter":
                self.check(args[1], fun(elem, BOOL), env)
                return set_of(elem)
            if name == "sumBy":
                self.check(args[1], fun(elem, INT), env)
                return INT
            f = args[1]
            if not isinstance(f, Lam):
                ft = self.infer(f, env)
                if ft.name != "Fun" or ft.args[0] != elem:
                    raise self.fail(f"map expects a function from {elem}", f)
                return set_of(ft.args[1])
            return set_of(self.infer(f.body, {**env, f.param: elem}))
        if name in ("inc", "dec"):
            arity(2)
            container(args[0], ("PNCounter",))
            self.check(args[1], INT, env)
            return Type("PNCounter")
        if name == "count":
            arity(1)
            container(args[0], ("PNCounter",))
            return INT
        if name == "write":
            arity(2)
            rt = container(args[0], ("LWWRegister",))
            self.check(args[1], rt.args[0], env)
            return rt
        if name == "read":
            arity(1)
            return container(args[0], ("LWWRegister",)).args[0]
        if name in ("min", "max"):
            arity(2)
            self.check(args[0], INT, env)
            self.check(args[1], INT, env)
            return INT
        raise self.fail(f"unknown builtin {name!r}", t)


def clause_type(mtypes: tuple[Type, ...], arg: Type, result: Type) -> Type:
    t = fun(arg, result)
    for m in reversed(mtypes):
        t = fun(m, t)
    return t


def executes_result(mtypes: tuple[Type, ...]) -> Type:
    return mtypes[0] if len(mtypes) == 1 else Type("Tuple", mtypes)


def resolve_and_check(p: Program) -> CheckedProgram:
    """Check a parsed program; raises CycleError, ArityError or TypingError."""
    file = p.file
    aliases = {t.name: t.type for t in p.types if t.type is not None}
    records: dict[str, tuple[tuple[str, Type], ...]] = {"Appointment": APPOINTMENT_RECORD}
    for t in p.types:
        if t.fields is not None:
            records[t.name] = tuple((n, _expand(ft, aliases)) for n, ft in t.fields)

    typer = _Typer(file, records, aliases, {})
    for name, fields in records.items():
        for _, ft in fields:
            typer.known(ft)

    source_types: dict[str, Type] = {}
    for s in p.sources:
        st = typer.known(s.declared)
        if st.name != s.crdt_kind:
            line, col = s.pos
            raise TypingError(f"source {s.name!r} declared {st} but initialised with {s.crdt_kind}", line, col, file)
        source_types[s.name] = st
    derived_types = {d.name: typer.known(d.declared) for d in p.deriveds}
    typer.reactive_types = {**source_types, **derived_types}

    for s in p.sources:
        st = source_types[s.name]
        if s.crdt_kind == "AWSet":
            for a in s.init_args:
                typer.check(a, st.args[0], {})
        elif s.crdt_kind == "PNCounter":
            if len(s.init_args) > 1:
                raise typer.fail("PNCounter takes at most one initial value", s.init_args[1], ArityError)
            for a in s.init_args:
                typer.check(a, INT, {})
        else:
            if len(s.init_args) > 1:
                raise typer.fail("LWWRegister takes at most one initial value", s.init_args[1], ArityError)
            for a in s.init_args:
                typer.check(a, st.args[0], {})

    # derived graph must be a DAG
    deps = {d.name: sorted(reads(d.body) & derived_types.keys()) for d in p.deriveds}
    try:
        order = list(TopologicalSorter(deps).static_order())
    except _GraphCycle as exc:
        cycle = list(exc.args[1])
        first = p.deriveds[[d.name for d in p.deriveds].index(cycle[0])]
        raise CycleError(cycle, *first.pos, file) from None
    for d in p.deriveds:
        typer.check(d.body, derived_types[d.name], {})

    executable: dict[str, InteractionDecl] = {}
    templates: dict[str, InteractionDecl] = {}
    for a in p.interactions:
        _check_interaction(a, typer, source_types)
        (executable if a.complete else templates)[a.name] = a

    for inv in p.invariants:
        typer.check(inv.formula, BOOL, {})

    return CheckedProgram(p, records, source_types, derived_types, order, executable, templates, aliases)


def _check_interaction(a: InteractionDecl, typer: _Typer, source_types: dict[str, Type]) -> None:
    file = typer.file
    line, col = a.pos
    mtypes = tuple(typer.known(m) for m in a.modifies_types)
    arg = typer.known(a.arg_type)
    if len(a.executes) > 1:
        raise ArityError(f"interaction {a.name!r} has {len(a.executes)} executes clauses", line, col, file)
    if a.modifies:
        if len(set(a.modifies)) != len(a.modifies):
            raise TypingError(f"interaction {a.name!r} modifies a reactive twice", line, col, file)
        if len(a.modifies) != len(mtypes):
            raise ArityError(
                f"interaction {a.name!r} modifies {len(a.modifies)} reactive(s) but declares {len(mtypes)} type(s)",
                line, col, file,
            )
        for r, m in zip(a.modifies, mtypes):
            if source_types[r] != m:
                raise TypingError(f"interaction {a.name!r}: source {r!r} has type {source_types[r]}, expected {m}", line, col, file)
    for clause in a.requires + a.ensures:
        typer.check(clause, clause_type(mtypes, arg, BOOL), {})
    for body in a.executes:
        _check_executes(a, body, mtypes, arg, typer)


def _check_executes(a: InteractionDecl, body: Node, mtypes, arg: Type, typer: _Typer) -> None:
    env: dict[str, Type] = {}
    node = body
    for t in (*mtypes, arg):
        if not isinstance(node, Lam):
            raise typer.fail(f"executes of {a.name!r} must take {len(mtypes) + 1} curried parameter(s)", node)
        env[node.param] = t
        node = node.body
    got = typer.infer(node, env)
    n = len(mtypes)
    produced = len(got.args) if got.name == "Tuple" else 1
    if n and produced != n:
        raise typer.fail(
            f"executes of {a.name!r} returns {produced} value(s) but modifies {n} reactive(s)", node, ArityError
        )
    typer.expect(got, executes_result(mtypes) if n else got, node, f"executes of {a.name!r}")


def term_type(p: CheckedProgram, t: Node, env: dict[str, Type] | None = None) -> Type:
    """Infer the type of a resolved term ``t`` of program ``p``."""
    typer = _Typer(p.program.file, p.records, p.aliases, {**p.source_types, **p.derived_types})
    return typer.infer(t, dict(env or {}))
