"""Front end: parsing, name resolution, checking and printing of ``.lore`` programs."""

from lore.syntax.ast import Program, Type
from lore.syntax.checker import CheckedProgram, resolve_and_check
from lore.syntax.parser import parse_expr, parse_program
from lore.syntax.printer import print_program, print_term


def load_program(text: str, file: str = "<input>") -> CheckedProgram:
    """Parse and check in one step."""
    return resolve_and_check(parse_program(text, file))


def load_file(path) -> CheckedProgram:
    from pathlib import Path

    path = Path(path)
    return load_program(path.read_text(encoding="utf-8"), str(path))


__all__ = [
    "CheckedProgram",
    "Program",
    "Type",
    "load_file",
    "load_program",
    "parse_expr",
    "parse_program",
    "print_program",
    "print_term",
    "resolve_and_check",
]
