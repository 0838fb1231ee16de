from __future__ import annotations

from tremu.errors import TremuError


class TelError(TremuError):
    """A TEL program failed to parse, check or run.

    ``trace`` holds the bindings that completed before the failure (empty
    for parse and type errors).
    """

    kind = "TelError"

    def __init__(self, message: str, line: int | None = None, col: int | None = None, trace=None):
        self.message = message
        self.line = line
        self.col = col
        self.trace = list(trace or [])
        where = f"line {line}, col {col}: " if line is not None else ""
        super().__init__(f"{self.kind}: {where}{message}")

    def to_dict(self) -> dict:
        return {"error": self.kind, "message": self.message, "line": self.line, "col": self.col}


class TelParseError(TelError):
    kind = "ParseError"


class TelTypeError(TelError):
    kind = "TypeError"


class TelNameError(TelError):
    kind = "NameError"


class TelDomainError(TelError):
    kind = "DomainError"


class TelBudgetError(TelError):
    kind = "BudgetError"
