"""Tokenizer for the concrete syntax."""

from __future__ import annotations

import re
from dataclasses import dataclass

from lore.errors import ParseError

KEYWORDS = {
    "val", "type", "invariant", "forall", "exists", "exist", "true", "false",
    "if", "else", "in", "Source", "Derived", "Interaction", "Record",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<int>\d+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><==>|==>|=>|::|==|!=|<=|>=|&&|\|\||[-+*/%<>!=(){}\[\],.:])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "int" | "string" | "ident" | "kw" | "op" | "eof"
    text: str
    line: int
    col: int
    offset: int


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1, file)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            if kind == "ident" and chunk in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, chunk, line, pos - line_start + 1, pos))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1, pos))
    return tokens
