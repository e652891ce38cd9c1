"""Pretty printer producing concrete syntax that parses back to an equal AST."""

from __future__ import annotations

import json

from lore.syntax.ast import (
    App,
    Binary,
    Call,
    Construct,
    Field,
    If,
    Lam,
    Lit,
    Node,
    Program,
    Quant,
    Read,
    Ref,
    TupleExpr,
    Type,
    Unary,
    Var,
)


def print_type(t: Type) -> str:
    return str(t)


def print_term(t: Node) -> str:
    if isinstance(t, Lit):
        if isinstance(t.value, bool):
            return "true" if t.value else "false"
        if isinstance(t.value, int):
            return str(t.value) if t.value >= 0 else f"({t.value})"
        return json.dumps(t.value)
    if isinstance(t, (Var, Ref)):
        return t.name
    if isinstance(t, Read):
        return f"{t.reactive}.value"
    if isinstance(t, Lam):
        return f"({t.param} => {print_term(t.body)})"
    if isinstance(t, App):
        return f"({print_term(t.fn)})({print_term(t.arg)})"
    if isinstance(t, Call):
        if t.name == "in":
            return f"({print_term(t.args[0])} in {print_term(t.args[1])})"
        return f"{t.name}({', '.join(print_term(a) for a in t.args)})"
    if isinstance(t, Construct):
        return f"{t.type_name}({', '.join(print_term(a) for a in t.args)})"
    if isinstance(t, Field):
        return f"{print_term(t.target)}.{t.name}"
    if isinstance(t, TupleExpr):
        return "(" + ", ".join(print_term(x) for x in t.items) + ")"
    if isinstance(t, Unary):
        return f"{t.op}({print_term(t.operand)})"
    if isinstance(t, Binary):
        return f"({print_term(t.left)} {t.op} {print_term(t.right)})"
    if isinstance(t, If):
        return f"(if ({print_term(t.cond)}) {print_term(t.then)} else {print_term(t.other)})"
    if isinstance(t, Quant):
        return f"({t.kind} {t.var}: {print_type(t.type)} :: {print_term(t.body)})"
    raise TypeError(f"cannot print {type(t).__name__}")


def print_program(p: Program) -> str:
    out: list[str] = []
    for t in p.types:
        if t.fields is not None:
            fields = ", ".join(f"{n}: {print_type(ft)}" for n, ft in t.fields)
            out.append(f"type {t.name} = Record{{{fields}}}")
        else:
            out.append(f"type {t.name} = {print_type(t.type)}")
    for s in p.sources:
        args = ", ".join(print_term(a) for a in s.init_args)
        out.append(f"val {s.name}: Source[{print_type(s.declared)}] = Source({s.crdt_kind}({args}))")
    for d in p.deriveds:
        out.append(f"val {d.name}: Derived[{print_type(d.declared)}] = Derived{{ {print_term(d.body)} }}")
    for a in p.interactions:
        mtypes = ", ".join(print_type(m) for m in a.modifies_types)
        lines = [f"val {a.name}: Unit = Interaction[{mtypes}][{print_type(a.arg_type)}]"]
        if a.modifies:
            lines.append(f"  .modifies({', '.join(a.modifies)})")
        for part in ("requires", "executes", "ensures"):
            for clause in getattr(a, part):
                lines.append(f"  .{part}{{ {print_term(clause)} }}")
        out.append("\n".join(lines))
    for g in p.glue:
        out.append(g.text)
    for inv in p.invariants:
        out.append(f"invariant {print_term(inv.formula)}")
    return "\n".join(out) + "\n"
