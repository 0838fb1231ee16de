"""TEL, a small typed language for date arithmetic.

A program is a list of ``let name := expr`` bindings followed by one
``answer expr`` line.  Programs are parsed, type-checked against the names
the caller will supply, and evaluated binding by binding into a trace.
"""

from tremu.tel.ast import Program, format_expr, format_program
from tremu.tel.builtins import BUILTINS, TelType, cheat_sheet, format_value, type_of, value_from_json, value_to_json
from tremu.tel.checker import TypedProgram, typecheck
from tremu.tel.errors import (
    TelBudgetError,
    TelDomainError,
    TelError,
    TelNameError,
    TelParseError,
    TelTypeError,
)
from tremu.tel.evaluator import (
    DEFAULT_BUDGET,
    TraceStep,
    env_types_of,
    evaluate,
    render_trace,
    run_program,
    trace_digest,
)
from tremu.tel.options import match_option, normalize_option
from tremu.tel.parser import parse_expr, parse_program

__all__ = [
    "BUILTINS",
    "DEFAULT_BUDGET",
    "Program",
    "TelBudgetError",
    "TelDomainError",
    "TelError",
    "TelNameError",
    "TelParseError",
    "TelType",
    "TelTypeError",
    "TraceStep",
    "TypedProgram",
    "cheat_sheet",
    "env_types_of",
    "evaluate",
    "format_expr",
    "format_program",
    "format_value",
    "match_option",
    "normalize_option",
    "parse_expr",
    "parse_program",
    "render_trace",
    "run_program",
    "trace_digest",
    "type_of",
    "typecheck",
    "value_from_json",
    "value_to_json",
]
