"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class LoreError(Exception):
    """Base class for all errors raised by this package."""


# -- front end -------------------------------------------------------------


class ParseError(LoreError):
    def __init__(self, message: str, line: int = 0, col: int = 0, file: str = "<input>"):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col
        self.file = file

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}: {self.message}"


class DuplicateName(ParseError):
    pass


class UnknownIdentifier(ParseError):
    pass


class SemanticError(ParseError):
    """Raised by name resolution and checking after a successful parse."""


class CycleError(SemanticError):
    def __init__(self, cycle: list[str], line: int = 0, col: int = 0, file: str = "<input>"):
        super().__init__("derived reactives form a cycle: " + " -> ".join(cycle), line, col, file)
        self.cycle = cycle


class ArityError(SemanticError):
    pass


class TypingError(SemanticError):
    pass


# -- values ----------------------------------------------------------------


class KindMismatch(LoreError):
    pass


class StaleDot(LoreError):
    pass


class EvalError(LoreError):
    pass


class Stuck(EvalError):
    pass


class UnknownReactive(EvalError):
    pass


class UniverseMissing(EvalError):
    pass


class DomainMismatch(EvalError):
    pass


# -- verification ----------------------------------------------------------


class VerifyError(LoreError):
    pass


class NotExecutable(VerifyError):
    """A partial interaction (no modifies/executes) was used where a complete one is needed."""


class BoundsTooLarge(VerifyError):
    pass


class PreservationFailed(VerifyError):
    def __init__(self, verdicts):
        names = ", ".join(v.obligation for v in verdicts)
        super().__init__(f"invariant preservation refuted: {names}")
        self.verdicts = verdicts


class NotEncodable(VerifyError):
    pass


# -- runtime ---------------------------------------------------------------


class Refusal(LoreError):
    """An interaction attempt was rejected; the device vector is unchanged."""

    MISSING_LOCKS = "MissingLocks"
    PRECONDITION_FALSE = "PreconditionFalse"

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


class Fault(LoreError):
    """A postcondition failed after a verified interaction ran: the run must abort."""

    def __init__(self, detail: str):
        super().__init__(f"PostconditionFalse: {detail}")
        self.reason = "PostconditionFalse"


class LockNotHeld(LoreError):
    pass


class ProtocolViolation(LoreError):
    pass


class NoSerialization(LoreError):
    pass
