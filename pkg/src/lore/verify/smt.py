"""SMT-LIB v2 text for verification obligations.

Sets (and observed AWSets) are arrays to Bool, counters are integers and
registers are their value. ``sumDays`` is uninterpreted, constrained by an
insertion axiom. Set union/intersection use the ``(_ map ...)`` array
extension understood by Z3. Each file asserts the obligation's hypotheses and
the negated goal, so ``unsat`` means the obligation holds.
"""

from __future__ import annotations

from dataclasses import dataclass

from lore.errors import NotEncodable
from lore.graph import build_graph, overlapping_pairs
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
    strip_lambdas,
    walk,
)
from lore.syntax.checker import CheckedProgram, term_type

_OPS = {
    "+": "+", "-": "-", "*": "*", "/": "div", "%": "mod",
    "<": "<", "<=": "<=", ">": ">", ">=": ">=",
    "==": "=", "&&": "and", "||": "or", "==>": "=>", "<==>": "=",
}


def _sym(name: str) -> str:
    return f"|{name}|"


@dataclass(frozen=True)
class SmtObligation:
    obligation: str
    text: str

    def filename(self, program: str) -> str:
        return f"{program}.{self.obligation}.smt2"


class _Encoder:
    def __init__(self, p: CheckedProgram):
        self.p = p
        self.lines: list[str] = []
        self.uses_sumdays = False

    # -- sorts ---------------------------------------------------------------

    def sort(self, t: Type) -> str:
        t = self.p.expand(t)
        if t.name in ("Int", "Bool", "String"):
            return t.name
        if t.name in self.p.records:
            return t.name
        if t.name in ("Set", "AWSet"):
            return f"(Array {self.sort(t.args[0])} Bool)"
        if t.name == "PNCounter":
            return "Int"
        if t.name == "LWWRegister":
            return self.sort(t.args[0])
        raise NotEncodable(f"type {t} has no SMT encoding")

    def used_records(self) -> set[str]:
        """Record types the program mentions, closed over record fields."""
        todo = list(self.p.source_types.values()) + list(self.p.derived_types.values())
        for a in self.p.executable.values():
            todo.append(a.arg_type)
            for c in a.requires + a.ensures + a.executes:
                todo += [n.type for n in walk(c) if isinstance(n, Quant)]
        for f in [inv.formula for inv in self.p.invariants] + [d.body for d in self.p.program.deriveds]:
            todo += [n.type for n in walk(f) if isinstance(n, Quant)]
        used: set[str] = set()
        while todo:
            t = self.p.expand(todo.pop())
            todo.extend(t.args)
            if t.name in self.p.records and t.name not in used:
                used.add(t.name)
                todo.extend(ft for _, ft in self.p.records[t.name])
        return used

    def preamble(self) -> None:
        self.lines.append("(set-logic ALL)")
        used = self.used_records()
        for name, fields in sorted(self.p.records.items()):
            if name not in used:
                continue
            fs = " ".join(f"({_sym(name + '.' + f)} {self.sort(ft)})" for f, ft in fields)
            self.lines.append(f"(declare-datatypes (({name} 0)) ((({_sym('mk-' + name)} {fs}))))")
        if "Appointment" in used:
            self.lines.append(
                "(define-fun days ((a Appointment)) Int (- (|Appointment.end| a) (|Appointment.start| a)))"
            )
            self.lines.append("(declare-fun sumDays ((Array Appointment Bool)) Int)")
            self.lines.append("(assert (= (sumDays ((as const (Array Appointment Bool)) false)) 0))")
            self.lines.append(
                "(assert (forall ((s (Array Appointment Bool)) (a Appointment))"
                " (=> (not (select s a)) (= (sumDays (store s a true)) (+ (sumDays s) (days a))))))"
            )

    # -- terms ---------------------------------------------------------------

    def term(self, t: Node, state: dict[str, str], env: dict[str, str], types: dict[str, Type]) -> str:
        rec = lambda x: self.term(x, state, env, types)  # noqa: E731
        if isinstance(t, Lit):
            if isinstance(t.value, bool):
                return "true" if t.value else "false"
            if isinstance(t.value, int):
                return str(t.value) if t.value >= 0 else f"(- {-t.value})"
            if isinstance(t.value, str):
                return '"' + t.value.replace('"', '""') + '"'
            raise NotEncodable(f"literal {t.value!r} has no SMT encoding")
        if isinstance(t, Var):
            return env[t.name]
        if isinstance(t, Read):
            return state[t.reactive]
        if isinstance(t, Unary):
            return f"({'not' if t.op == '!' else '-'} {rec(t.operand)})"
        if isinstance(t, Binary):
            if t.op == "!=":
                return f"(not (= {rec(t.left)} {rec(t.right)}))"
            return f"({_OPS[t.op]} {rec(t.left)} {rec(t.right)})"
        if isinstance(t, If):
            return f"(ite {rec(t.cond)} {rec(t.then)} {rec(t.other)})"
        if isinstance(t, Quant):
            v = f"{t.var}!{len(env)}"
            body = self.term(t.body, state, {**env, t.var: v}, {**types, t.var: t.type})
            q = "forall" if t.kind == "forall" else "exists"
            return f"({q} (({v} {self.sort(t.type)})) {body})"
        if isinstance(t, Field):
            target = rec(t.target)
            rt = term_type(self.p, t.target, types)
            if t.name == "days" and rt.name == "Appointment":
                return f"(days {target})"
            return f"({_sym(rt.name + '.' + t.name)} {target})"
        if isinstance(t, Construct):
            args = " ".join(rec(a) for a in t.args)
            return f"({_sym('mk-' + t.type_name)} {args})"
        if isinstance(t, Call):
            return self.call(t, [rec(a) for a in t.args], types)
        if isinstance(t, (Lam, App, TupleExpr)):
            raise NotEncodable(f"{type(t).__name__.lower()} terms are outside the SMT fragment")
        raise NotEncodable(f"cannot encode {t!r}")

    def call(self, t: Call, a: list[str], types: dict[str, Type]) -> str:
        n = t.name
        if n in ("toSet", "read", "count"):
            return a[0]
        if n == "union":
            return f"((_ map or) {a[0]} {a[1]})"
        if n == "intersect":
            return f"((_ map and) {a[0]} {a[1]})"
        if n == "diff":
            return f"((_ map and) {a[0]} ((_ map not) {a[1]}))"
        if n == "add":
            return f"(store {a[0]} {a[1]} true)"
        if n == "remove":
            return f"(store {a[0]} {a[1]} false)"
        if n == "in":
            return f"(select {a[1]} {a[0]})"
        if n == "isEmpty":
            st = self.sort(term_type(self.p, t.args[0], types))
            return f"(= {a[0]} ((as const {st}) false))"
        if n == "sumDays":
            return f"(sumDays {a[0]})"
        if n == "get_start":
            return f"(|Appointment.start| {a[0]})"
        if n == "get_end":
            return f"(|Appointment.end| {a[0]})"
        if n == "inc":
            return f"(+ {a[0]} {a[1]})"
        if n == "dec":
            return f"(- {a[0]} {a[1]})"
        if n == "write":
            return a[1]
        if n == "min":
            return f"(ite (<= {a[0]} {a[1]}) {a[0]} {a[1]})"
        if n == "max":
            return f"(ite (>= {a[0]} {a[1]}) {a[0]} {a[1]})"
        raise NotEncodable(f"built-in {n!r} is outside the SMT fragment")

    # -- states ----------------------------------------------------------------

    def declare_state(self, tag: str) -> dict[str, str]:
        state = {}
        for s, st in sorted(self.p.source_types.items()):
            state[s] = _sym(f"{s}@{tag}")
            self.lines.append(f"(declare-const {state[s]} {self.sort(st)})")
        return state

    def define_state(self, tag: str, sources: dict[str, str]) -> dict[str, str]:
        """Bind sources to given expressions and define derived reactives on top."""
        state = {}
        for s, expr in sorted(sources.items()):
            state[s] = _sym(f"{s}@{tag}")
            if expr != state[s]:
                self.lines.append(f"(define-fun {state[s]} () {self.sort(self.p.source_types[s])} {expr})")
        for d in self.p.derived_order:
            body = self.p.deriveds[d].body
            sym = _sym(f"{d}@{tag}")
            self.lines.append(f"(define-fun {sym} () {self.sort(self.p.derived_types[d])} {self.term(body, state, {}, {})})")
            state[d] = sym
        return state

    def clause(self, a: InteractionDecl, c: Node, state: dict[str, str], arg: str, pre: dict[str, str] | None = None) -> str:
        """A clause ``m1 => ... => arg => body`` applied to the sources' values in ``pre`` (default ``state``)."""
        params, body = strip_lambdas(c, len(a.modifies) + 1)
        if len(params) != len(a.modifies) + 1:
            raise NotEncodable(f"clause of {a.name} is not a literal lambda chain")
        binding = pre or state
        env = {x: binding[r] for x, r in zip(params, a.modifies)}
        env[params[-1]] = arg
        types = {x: self.p.source_types[r] for x, r in zip(params, a.modifies)}
        types[params[-1]] = a.arg_type
        return self.term(body, state, env, types)

    def effect(self, a: InteractionDecl, state: dict[str, str], arg: str) -> dict[str, str]:
        params, body = strip_lambdas(a.executes[0], len(a.modifies) + 1)
        if len(params) != len(a.modifies) + 1:
            raise NotEncodable(f"executes of {a.name} is not a literal lambda chain")
        env = {x: state[r] for x, r in zip(params, a.modifies)}
        env[params[-1]] = arg
        types = {x: self.p.source_types[r] for x, r in zip(params, a.modifies)}
        types[params[-1]] = a.arg_type
        if len(a.modifies) == 1:
            outs = [body]
        elif isinstance(body, TupleExpr):
            outs = list(body.items)
        else:
            raise NotEncodable(f"executes of {a.name} must build a literal tuple")
        result = {s: state[s] for s in self.p.source_types}
        for r, o in zip(a.modifies, outs):
            result[r] = self.term(o, state, env, types)
        return result

    def invariants(self, state: dict[str, str], ids=None) -> list[str]:
        return [self.term(i.formula, state, {}, {}) for i in self.p.invariants if ids is None or i.id in ids]

    def merge(self, s0: dict[str, str], s1: dict[str, str], s2: dict[str, str]) -> dict[str, str]:
        """Observable merge of two successors of a common state."""
        out = {}
        for s, st in self.p.source_types.items():
            a, b, c = s0[s], s1[s], s2[s]
            if st.name == "AWSet":
                fresh = f"((_ map or) ((_ map and) {b} ((_ map not) {a})) ((_ map and) {c} ((_ map not) {a})))"
                out[s] = f"((_ map or) ((_ map and) {b} {c}) {fresh})"
            elif st.name == "PNCounter":
                out[s] = f"(- (+ {b} {c}) {a})"
            else:
                pick = _sym(f"{s}@pick")
                self.lines.append(f"(declare-const {pick} Bool)")
                out[s] = f"(ite {pick} {b} {c})"
        return out


def _conj(xs: list[str]) -> str:
    if not xs:
        return "true"
    return xs[0] if len(xs) == 1 else f"(and {' '.join(xs)})"


def _preservation(p: CheckedProgram, a: InteractionDecl, inv_ids) -> str:
    enc = _Encoder(p)
    enc.preamble()
    enc.lines.append(f"; preservation of {a.name}")
    raw = enc.declare_state("pre")
    pre = enc.define_state("pre", raw)
    arg = _sym("arg")
    enc.lines.append(f"(declare-const {arg} {enc.sort(a.arg_type)})")
    for f in enc.invariants(pre):
        enc.lines.append(f"(assert {f})")
    for c in a.requires:
        enc.lines.append(f"(assert {enc.clause(a, c, pre, arg)})")
    post = enc.define_state("post", enc.effect(a, pre, arg))
    goal = [enc.clause(a, c, post, arg) for c in a.ensures] + enc.invariants(post, inv_ids)
    enc.lines.append(f"(assert (not {_conj(goal)}))")
    enc.lines.append("(check-sat)")
    return "\n".join(enc.lines) + "\n"


def _confluence(p: CheckedProgram, a1: InteractionDecl, a2: InteractionDecl) -> str:
    enc = _Encoder(p)
    enc.preamble()
    enc.lines.append(f"; confluence of {a1.name} and {a2.name} from a common valid state")
    base = enc.define_state("pre", enc.declare_state("pre"))
    x1, x2 = _sym("arg1"), _sym("arg2")
    enc.lines.append(f"(declare-const {x1} {enc.sort(a1.arg_type)})")
    enc.lines.append(f"(declare-const {x2} {enc.sort(a2.arg_type)})")
    for f in enc.invariants(base):
        enc.lines.append(f"(assert {f})")
    for c in a1.requires:
        enc.lines.append(f"(assert {enc.clause(a1, c, base, x1)})")
    for c in a2.requires:
        enc.lines.append(f"(assert {enc.clause(a2, c, base, x2)})")
    s1 = enc.define_state("one", enc.effect(a1, base, x1))
    s2 = enc.define_state("two", enc.effect(a2, base, x2))
    joined = enc.define_state("merged", enc.merge(base, s1, s2))
    enc.lines.append(f"(assert (not {_conj(enc.invariants(joined))}))")
    enc.lines.append("(check-sat)")
    return "\n".join(enc.lines) + "\n"


def obligations(p: CheckedProgram) -> list[tuple[str, tuple[str, ...]]]:
    """Obligation ids of ``p`` with their interactions, in report order."""
    overlap = overlapping_pairs(build_graph(p), p)
    names = sorted(p.executable)
    out = [(f"preservation-{n}", (n,)) for n in names]
    out += [(f"confluence-{x}-{y}", (x, y)) for x, y in sorted(overlap.interaction_pairs)]
    return out


def emit_smt(p: CheckedProgram, obligation: str) -> str:
    """SMT-LIB v2 text for one obligation id (``preservation-a`` or ``confluence-a-b``)."""
    table = dict(obligations(p))
    if obligation not in table:
        raise KeyError(f"unknown obligation {obligation!r}")
    names = table[obligation]
    if obligation.startswith("preservation-"):
        overlap = overlapping_pairs(build_graph(p), p)
        return _preservation(p, p.executable[names[0]], overlap.invariant_overlaps[names[0]])
    return _confluence(p, p.executable[names[0]], p.executable[names[1]])


def emit_all(p: CheckedProgram) -> list[SmtObligation]:
    return [SmtObligation(ob, emit_smt(p, ob)) for ob, _ in obligations(p)]
