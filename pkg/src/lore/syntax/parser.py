"""Recursive-descent parser for ``.lore`` programs.

The concrete syntax follows the calendar listing: ``val`` declarations of
``Source``/``Derived`` reactives and builder-style ``Interaction`` chains,
``invariant`` formulas, ``type`` aliases/records and ``//`` comments. Any other
top-level statement is treated as UI glue and kept verbatim.
"""

from __future__ import annotations

import json
from dataclasses import replace

from lore.errors import DuplicateName, ParseError, UnknownIdentifier
from lore.syntax.ast import (
    BUILTINS,
    CRDT_TYPE_NAMES,
    App,
    Binary,
    Call,
    Construct,
    DerivedDecl,
    Field,
    GlueStmt,
    If,
    InteractionDecl,
    InvariantDecl,
    Lam,
    Lit,
    Node,
    Program,
    Quant,
    Read,
    Ref,
    SourceDecl,
    TupleExpr,
    Type,
    TypeDecl,
    Unary,
    Var,
)
from lore.syntax.lexer import Token, tokenize

BUILTIN_TYPES = {"Int", "Bool", "String", "Unit", "Appointment", "Set", "AWSet", "PNCounter", "LWWRegister"}
DECL_START = {"val", "type", "invariant"}


class Parser:
    def __init__(self, text: str, file: str = "<input>"):
        self.text = text
        self.file = file
        self.tokens = tokenize(text, file)
        self.i = 0
        self.interactions: dict[str, InteractionDecl] = {}

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text in texts

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def error(self, message: str, tok: Token | None = None, cls=ParseError):
        tok = tok or self.tok
        return cls(message, tok.line, tok.col, self.file)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            found = self.tok.text or "end of input"
            raise self.error(f"expected identifier, found {found!r}")
        return self.advance()

    # -- program -------------------------------------------------------------

    def parse_program(self) -> Program:
        types, sources, deriveds, interactions, invariants, glue = [], [], [], [], [], []
        names: dict[str, Token] = {}

        def declare(tok: Token):
            if tok.text in names:
                prev = names[tok.text]
                raise self.error(
                    f"duplicate name {tok.text!r} (first declared at {prev.line}:{prev.col})", tok, DuplicateName
                )
            names[tok.text] = tok

        while self.tok.kind != "eof":
            start = self.tok
            if self.at("type"):
                decl = self.type_decl()
                declare(_name_token(self, decl))
                types.append(decl)
            elif self.at("val"):
                self.advance()
                name_tok = self.ident()
                declare(name_tok)
                decl = self.val_decl(name_tok)
                if isinstance(decl, SourceDecl):
                    sources.append(decl)
                elif isinstance(decl, DerivedDecl):
                    deriveds.append(decl)
                else:
                    interactions.append(decl)
                    self.interactions[decl.name] = decl
            elif self.at("invariant"):
                self.advance()
                formula = self.expr()
                invariants.append(InvariantDecl(len(invariants) + 1, formula, pos=(start.line, start.col)))
            else:
                glue.append(self.glue())
        program = Program(
            tuple(types), tuple(sources), tuple(deriveds), tuple(interactions), tuple(invariants), tuple(glue),
            file=self.file,
        )
        from lore.syntax.resolve import resolve_names

        return resolve_names(program)

    def glue(self) -> GlueStmt:
        start = self.tok
        depth = 0
        last = start
        while self.tok.kind != "eof":
            if depth == 0 and self.tok.kind == "kw" and self.tok.text in DECL_START and self.tok is not start:
                break
            if self.at("(", "{", "["):
                depth += 1
            elif self.at(")", "}", "]"):
                depth -= 1
                if depth < 0:
                    raise self.error(f"unbalanced {self.tok.text!r}")
            last = self.advance()
            if depth == 0 and self.tok.line != last.line and not self.at(".", "{", "("):
                break
        text = self.text[start.offset : last.offset + len(last.text)]
        return GlueStmt(text, pos=(start.line, start.col))

    def type_decl(self) -> TypeDecl:
        start = self.expect("type")
        name = self.ident()
        self.expect("=")
        if self.at("Record"):
            self.advance()
            self.expect("{")
            fields = []
            while True:
                fname = self.ident().text
                self.expect(":")
                fields.append((fname, self.type_expr()))
                if not self.at(","):
                    break
                self.advance()
            self.expect("}")
            return TypeDecl(name.text, None, tuple(fields), pos=(name.line, name.col))
        return TypeDecl(name.text, self.type_expr(), None, pos=(name.line, name.col))

    def type_expr(self) -> Type:
        if self.at("("):
            self.advance()
            items = [self.type_expr()]
            while self.at(","):
                self.advance()
                items.append(self.type_expr())
            self.expect(")")
            return items[0] if len(items) == 1 else Type("Tuple", tuple(items))
        tok = self.tok
        if tok.kind not in ("ident", "kw"):
            raise self.error(f"expected type, found {tok.text!r}")
        self.advance()
        args: list[Type] = []
        if self.at("["):
            self.advance()
            args.append(self.type_expr())
            while self.at(","):
                self.advance()
                args.append(self.type_expr())
            self.expect("]")
        return Type(tok.text, tuple(args))

    def val_decl(self, name_tok: Token):
        name = name_tok.text
        pos = (name_tok.line, name_tok.col)
        self.expect(":")
        declared = self.type_expr()
        self.expect("=")
        if self.at("Source"):
            self.advance()
            self.expect("(")
            kind_tok = self.ident()
            if kind_tok.text not in CRDT_TYPE_NAMES:
                raise self.error(f"unknown CRDT {kind_tok.text!r}", kind_tok)
            args = self.call_args()
            self.expect(")")
            if declared.name != "Source" or len(declared.args) != 1:
                raise self.error(f"source {name!r} must be declared as Source[T]", name_tok)
            return SourceDecl(name, declared.args[0], kind_tok.text, tuple(args), pos=pos)
        if self.at("Derived"):
            self.advance()
            close = "}" if self.at("{") else ")"
            self.expect("{" if close == "}" else "(")
            body = self.expr()
            self.expect(close)
            if declared.name != "Derived" or len(declared.args) != 1:
                raise self.error(f"derived {name!r} must be declared as Derived[T]", name_tok)
            return DerivedDecl(name, declared.args[0], body, pos=pos)
        if self.at("Interaction"):
            self.advance()
            self.expect("[")
            mtypes: list[Type] = []
            if not self.at("]"):
                mtypes.append(self.type_expr())
                while self.at(","):
                    self.advance()
                    mtypes.append(self.type_expr())
            self.expect("]")
            self.expect("[")
            arg_type = self.type_expr()
            self.expect("]")
            decl = InteractionDecl(name, tuple(mtypes), arg_type, pos=pos)
            return self.chain(decl)
        base_tok = self.ident()
        base = self.interactions.get(base_tok.text)
        if base is None:
            raise self.error(f"unknown interaction {base_tok.text!r}", base_tok, UnknownIdentifier)
        decl = replace(base, name=name, base=base.name, pos=pos)
        return self.chain(decl)

    def chain(self, decl: InteractionDecl) -> InteractionDecl:
        while self.at(".") and self.peek().text in ("requires", "ensures", "executes", "modifies"):
            self.advance()
            part = self.advance().text
            if part == "modifies":
                self.expect("(")
                names = [self.ident().text]
                while self.at(","):
                    self.advance()
                    names.append(self.ident().text)
                self.expect(")")
                decl = replace(decl, modifies=decl.modifies + tuple(names))
                continue
            close = "}" if self.at("{") else ")"
            self.expect("{" if close == "}" else "(")
            body = self.expr()
            self.expect(close)
            decl = replace(decl, **{part: getattr(decl, part) + (body,)})
        return decl

    # -- expressions ---------------------------------------------------------

    def expr(self) -> Node:
        return self.iff()

    def iff(self) -> Node:
        left = self.implies()
        while self.at("<==>"):
            tok = self.advance()
            left = Binary("<==>", left, self.implies(), pos=(tok.line, tok.col))
        return left

    def implies(self) -> Node:
        left = self.disj()
        if self.at("==>"):
            tok = self.advance()
            return Binary("==>", left, self.implies(), pos=(tok.line, tok.col))
        return left

    def disj(self) -> Node:
        left = self.conj()
        while self.at("||"):
            tok = self.advance()
            left = Binary("||", left, self.conj(), pos=(tok.line, tok.col))
        return left

    def conj(self) -> Node:
        left = self.comparison()
        while self.at("&&"):
            tok = self.advance()
            left = Binary("&&", left, self.comparison(), pos=(tok.line, tok.col))
        return left

    def comparison(self) -> Node:
        left = self.additive()
        if self.at("==", "!=", "<", "<=", ">", ">=", "in"):
            tok = self.advance()
            right = self.additive()
            if tok.text == "in":
                return Call("in", (left, right), pos=(tok.line, tok.col))
            return Binary(tok.text, left, right, pos=(tok.line, tok.col))
        return left

    def additive(self) -> Node:
        left = self.multiplicative()
        while self.at("+", "-"):
            tok = self.advance()
            left = Binary(tok.text, left, self.multiplicative(), pos=(tok.line, tok.col))
        return left

    def multiplicative(self) -> Node:
        left = self.unary()
        while self.at("*", "/", "%"):
            tok = self.advance()
            left = Binary(tok.text, left, self.unary(), pos=(tok.line, tok.col))
        return left

    def unary(self) -> Node:
        if self.at("!", "-"):
            tok = self.advance()
            operand = self.unary()
            if tok.text == "-" and isinstance(operand, Lit) and type(operand.value) is int:
                return Lit(-operand.value, pos=(tok.line, tok.col))
            return Unary(tok.text, operand, pos=(tok.line, tok.col))
        return self.postfix()

    def call_args(self) -> list[Node]:
        self.expect("(")
        args: list[Node] = []
        if not self.at(")"):
            args.append(self.expr())
            while self.at(","):
                self.advance()
                args.append(self.expr())
        self.expect(")")
        return args

    def postfix(self) -> Node:
        node = self.primary()
        while True:
            if self.at(".") and self.peek().kind in ("ident", "kw"):
                self.advance()
                tok = self.advance()
                pos = (tok.line, tok.col)
                if tok.text in BUILTINS:
                    args = self.call_args() if self.at("(") else []
                    if self.at("{"):
                        self.advance()
                        args.append(self.expr())
                        self.expect("}")
                    node = Call(tok.text, (node, *args), pos=pos)
                elif self.at("("):
                    raise self.error(f"unknown method {tok.text!r}", tok, UnknownIdentifier)
                else:
                    node = Field(node, tok.text, pos=pos)
            elif self.at("("):
                tok = self.tok
                args = self.call_args()
                if isinstance(node, Ref):
                    node = Call(node.name, tuple(args), pos=node.pos)
                else:
                    for a in args:
                        node = App(node, a, pos=(tok.line, tok.col))
            else:
                return node

    def primary(self) -> Node:
        tok = self.tok
        pos = (tok.line, tok.col)
        if tok.kind == "int":
            self.advance()
            return Lit(int(tok.text), pos=pos)
        if tok.kind == "string":
            self.advance()
            return Lit(json.loads(tok.text), pos=pos)
        if self.at("true", "false"):
            self.advance()
            return Lit(tok.text == "true", pos=pos)
        if self.at("forall", "exists", "exist"):
            self.advance()
            var = self.ident().text
            self.expect(":")
            qtype = self.type_expr()
            self.expect("::")
            body = self.expr()
            kind = "forall" if tok.text == "forall" else "exists"
            return Quant(kind, var, qtype, body, pos=pos)
        if self.at("if"):
            self.advance()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.expr()
            self.expect("else")
            return If(cond, then, self.expr(), pos=pos)
        if tok.kind == "ident":
            if self.peek().text == "=>":
                self.advance()
                self.advance()
                return Lam(tok.text, self.expr(), pos=pos)
            self.advance()
            return Ref(tok.text, pos=pos)
        if self.at("("):
            self.advance()
            if self.at(")"):
                self.advance()
                return TupleExpr((), pos=pos)
            items = [self.expr()]
            while self.at(","):
                self.advance()
                items.append(self.expr())
            self.expect(")")
            return items[0] if len(items) == 1 else TupleExpr(tuple(items), pos=pos)
        found = tok.text or "end of input"
        raise self.error(f"unexpected {found!r}")


def _name_token(parser: Parser, decl: TypeDecl) -> Token:
    line, col = decl.pos
    return Token("ident", decl.name, line, col, 0)


def parse_program(text: str, file: str = "<input>") -> Program:
    """Parse ``.lore`` source text into a name-resolved :class:`Program`."""
    return Parser(text, file).parse_program()


def parse_expr(text: str) -> Node:
    """Parse a standalone (unresolved) expression; used by tests and the REPL-ish CLI paths."""
    p = Parser(text)
    node = p.expr()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r}")
    return node
