"""Syntax tree for TEL programs and a printer that inverts the parser.

Source positions are carried on every node but excluded from equality, so
two trees compare equal when they have the same structure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

DURATION_UNITS = ("day", "week", "month", "year")


@dataclass(frozen=True)
class Node:
    line: int = field(default=0, compare=False, repr=False, kw_only=True)
    col: int = field(default=0, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class DateLit(Node):
    year: int
    month: int
    day: int


@dataclass(frozen=True)
class DurationLit(Node):
    amount: int
    unit: str  # one of DURATION_UNITS


@dataclass(frozen=True)
class StringLit(Node):
    value: str


@dataclass(frozen=True)
class IntLit(Node):
    value: int


@dataclass(frozen=True)
class WeekdayLit(Node):
    name: str


@dataclass(frozen=True)
class Name(Node):
    ident: str


@dataclass(frozen=True)
class Call(Node):
    func: str
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class If(Node):
    cond: "Expr"
    then: "Expr"
    orelse: "Expr"


Expr = DateLit | DurationLit | StringLit | IntLit | WeekdayLit | Name | Call | If


@dataclass(frozen=True)
class Binding:
    name: str
    expr: Expr
    line: int = field(default=0, compare=False)
    source: str = field(default="", compare=False)


@dataclass(frozen=True)
class Program:
    bindings: tuple[Binding, ...]
    answer: Expr
    answer_source: str = field(default="", compare=False)


def format_expr(e: Expr) -> str:
    if isinstance(e, DateLit):
        return f"date({e.year},{e.month},{e.day})"
    if isinstance(e, DurationLit):
        unit = e.unit if abs(e.amount) == 1 else e.unit + "s"
        return f"{e.amount} {unit}"
    if isinstance(e, StringLit):
        # JSON string escaping is a subset of what the lexer accepts
        return json.dumps(e.value, ensure_ascii=False)
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, WeekdayLit):
        return e.name
    if isinstance(e, Name):
        return e.ident
    if isinstance(e, Call):
        return f"{e.func}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, If):
        return f"if {format_expr(e.cond)} then {format_expr(e.then)} else {format_expr(e.orelse)}"
    raise TypeError(f"not a TEL expression: {e!r}")


def format_program(p: Program) -> str:
    lines = [f"let {b.name} := {format_expr(b.expr)}" for b in p.bindings]
    lines.append(f"answer {format_expr(p.answer)}")
    return "\n".join(lines) + "\n"
