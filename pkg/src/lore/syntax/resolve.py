"""Name resolution: turns parser ``Ref`` nodes into variables, reactive reads,
record constructions or built-in calls."""

from __future__ import annotations

from dataclasses import replace

from lore.errors import UnknownIdentifier
from lore.syntax.ast import (
    BUILTINS,
    App,
    Call,
    Construct,
    Field,
    Lam,
    Node,
    Program,
    Quant,
    Read,
    Ref,
    Var,
    children,
)

BUILTIN_RECORDS = {"Appointment"}


class _Resolver:
    def __init__(self, program: Program):
        self.file = program.file
        self.reactives = {s.name for s in program.sources} | {d.name for d in program.deriveds}
        self.records = BUILTIN_RECORDS | {t.name for t in program.types if t.fields is not None}

    def unknown(self, name: str, node: Node) -> UnknownIdentifier:
        line, col = node.pos
        return UnknownIdentifier(f"unknown identifier {name!r}", line, col, self.file)

    def resolve(self, t: Node, scope: frozenset[str]) -> Node:
        if isinstance(t, Ref):
            if t.name in scope:
                return Var(t.name, pos=t.pos)
            if t.name in self.reactives:
                return Read(t.name, pos=t.pos)
            raise self.unknown(t.name, t)
        if isinstance(t, Field) and t.name == "value" and isinstance(t.target, Ref) and t.target.name not in scope:
            if t.target.name in self.reactives:
                return Read(t.target.name, pos=t.target.pos)
            raise self.unknown(t.target.name, t.target)
        if isinstance(t, Lam):
            return replace(t, body=self.resolve(t.body, scope | {t.param}))
        if isinstance(t, Quant):
            return replace(t, body=self.resolve(t.body, scope | {t.var}))
        if isinstance(t, Call):
            args = tuple(self.resolve(a, scope) for a in t.args)
            if t.name in scope:
                node: Node = Var(t.name, pos=t.pos)
                for a in args:
                    node = App(node, a, pos=t.pos)
                return node
            if t.name in BUILTINS:
                return replace(t, args=args)
            if t.name in self.records:
                return Construct(t.name, args, pos=t.pos)
            raise self.unknown(t.name, t)
        kids = children(t)
        if not kids:
            return t
        new = [self.resolve(k, scope) for k in kids]
        return _rebuild(t, new)


def _rebuild(t: Node, new: list[Node]) -> Node:
    from lore.syntax.ast import Binary, Construct, Field, If, TupleExpr, Unary

    if isinstance(t, App):
        return replace(t, fn=new[0], arg=new[1])
    if isinstance(t, Construct):
        return replace(t, args=tuple(new))
    if isinstance(t, Field):
        return replace(t, target=new[0])
    if isinstance(t, TupleExpr):
        return replace(t, items=tuple(new))
    if isinstance(t, Unary):
        return replace(t, operand=new[0])
    if isinstance(t, Binary):
        return replace(t, left=new[0], right=new[1])
    if isinstance(t, If):
        return replace(t, cond=new[0], then=new[1], other=new[2])
    raise AssertionError(type(t))


def resolve_names(program: Program) -> Program:
    r = _Resolver(program)
    empty: frozenset[str] = frozenset()
    sources = tuple(replace(s, init_args=tuple(r.resolve(a, empty) for a in s.init_args)) for s in program.sources)
    deriveds = tuple(replace(d, body=r.resolve(d.body, empty)) for d in program.deriveds)
    interactions = []
    for a in program.interactions:
        for name in a.modifies:
            if name not in {s.name for s in program.sources}:
                line, col = a.pos
                raise UnknownIdentifier(f"interaction {a.name!r} modifies unknown source {name!r}", line, col, r.file)
        interactions.append(
            replace(
                a,
                requires=tuple(r.resolve(x, empty) for x in a.requires),
                executes=tuple(r.resolve(x, empty) for x in a.executes),
                ensures=tuple(r.resolve(x, empty) for x in a.ensures),
            )
        )
    invariants = tuple(replace(i, formula=r.resolve(i.formula, empty)) for i in program.invariants)
    return replace(program, sources=sources, deriveds=deriveds, interactions=tuple(interactions), invariants=invariants)


def resolve_term(t: Node, program: Program, scope: frozenset[str] = frozenset()) -> Node:
    return _Resolver(program).resolve(t, scope)
