"""Step-traced evaluation of type-checked TEL programs."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Any, Mapping

from tremu import temporal as tc
from tremu.errors import ContractError, DomainError
from tremu.tel.ast import Call, DateLit, DurationLit, Expr, If, IntLit, Name, Program, StringLit, WeekdayLit
from tremu.tel.builtins import WEEKDAY_VALUES, format_value, type_of, value_to_json
from tremu.tel.checker import TypedProgram, typecheck
from tremu.tel.errors import TelBudgetError, TelDomainError, TelTypeError
from tremu.tel.parser import parse_program

DEFAULT_BUDGET = 256

_UNIT_FIELDS = {"day": ("days", 1), "week": ("days", 7), "month": ("months", 1), "year": ("years", 1)}


@dataclass(frozen=True)
class TraceStep:
    name: str
    source: str
    value: Any

    def to_dict(self) -> dict:
        return {"name": self.name, "source": self.source, "value": value_to_json(self.value)}


def trace_digest(trace: list[TraceStep]) -> str:
    payload = json.dumps([s.to_dict() for s in trace], sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def render_trace(trace: list[TraceStep], answer: Any | None = None) -> str:
    lines = [f"{s.name} = {format_value(s.value)}    # {s.source}" for s in trace]
    if answer is not None:
        lines.append(f"answer = {format_value(answer)}")
    return "\n".join(lines)


class _Evaluator:
    def __init__(self, typed: TypedProgram, env: Mapping[str, Any]):
        self.typed = typed
        self.scope = dict(env)

    def eval(self, e: Expr) -> Any:
        if isinstance(e, DateLit):
            try:
                return tc.make_date(e.year, e.month, e.day)
            except DomainError as exc:
                raise TelDomainError(str(exc), e.line, e.col) from None
        if isinstance(e, DurationLit):
            field_name, scale = _UNIT_FIELDS[e.unit]
            return tc.Duration(**{field_name: e.amount * scale})
        if isinstance(e, (StringLit, IntLit)):
            return e.value
        if isinstance(e, WeekdayLit):
            return WEEKDAY_VALUES[e.name]
        if isinstance(e, Name):
            return self.scope[e.ident]
        if isinstance(e, If):
            return self.eval(e.then) if self.eval(e.cond) else self.eval(e.orelse)
        if isinstance(e, Call):
            sig = self.typed.signatures[id(e)]
            args = [self.eval(a) for a in e.args]
            try:
                return sig.impl(*args)
            except (DomainError, ContractError) as exc:
                raise TelDomainError(f"{e.func}: {exc}", e.line, e.col) from None
        raise TypeError(f"unknown node {e!r}")


def evaluate(typed: TypedProgram, env: Mapping[str, Any] | None = None,
             budget: int = DEFAULT_BUDGET) -> tuple[Any, list[TraceStep]]:
    """Run the bindings in order and return ``(answer_value, trace)``.

    Raises TelDomainError for invalid runtime values and TelBudgetError when
    more than ``budget`` bindings would execute.  Either way the exception
    carries the trace of the bindings that completed.
    """
    env = dict(env or {})
    for name, t in typed.env_types.items():
        if name not in env:
            raise TelTypeError(f"environment binding {name!r} was declared but not supplied")
        if type_of(env[name]) is not t:
            raise TelTypeError(f"environment binding {name!r} is {type_of(env[name]).value}, expected {t.value}")
    ev = _Evaluator(typed, env)
    trace: list[TraceStep] = []
    program = typed.program
    for b in program.bindings:
        if len(trace) >= budget:
            raise TelBudgetError(f"step budget of {budget} bindings exhausted", b.line, 1, trace=trace)
        try:
            value = ev.eval(b.expr)
        except TelDomainError as exc:
            exc.trace = list(trace)
            raise
        ev.scope[b.name] = value
        trace.append(TraceStep(b.name, b.source, value))
    try:
        answer = ev.eval(program.answer)
    except TelDomainError as exc:
        exc.trace = list(trace)
        raise
    return answer, trace


def env_types_of(env: Mapping[str, Any]) -> dict:
    return {k: type_of(v) for k, v in env.items()}


def run_program(source: str | Program, env: Mapping[str, Any] | None = None,
                budget: int = DEFAULT_BUDGET) -> tuple[Any, list[TraceStep]]:
    """Parse, check and evaluate in one go."""
    env = dict(env or {})
    program = parse_program(source) if isinstance(source, str) else source
    typed = typecheck(program, env_types_of(env))
    return evaluate(typed, env, budget)
