"""Static type checking for TEL programs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from tremu.tel.ast import Call, DateLit, DurationLit, Expr, If, IntLit, Name, Program, StringLit, WeekdayLit
from tremu.tel.builtins import BUILTINS, RELATION_NAMES, VALUE_TYPES, Signature, TelType
from tremu.tel.errors import TelNameError, TelTypeError


@dataclass
class TypedProgram:
    program: Program
    env_types: dict[str, TelType]
    binding_types: dict[str, TelType]
    answer_type: TelType
    # resolved overload for every call node, keyed by id(node)
    signatures: dict[int, Signature] = field(default_factory=dict, repr=False)


class _Checker:
    def __init__(self, env_types: Mapping[str, TelType]):
        self.scope: dict[str, TelType] = dict(env_types)
        self.signatures: dict[int, Signature] = {}

    def fail(self, node, message):
        return TelTypeError(message, node.line, node.col)

    def value_type(self, e: Expr, what: str) -> TelType:
        t = self.infer(e)
        if t not in VALUE_TYPES:
            raise self.fail(e, f"{what} has type {t.value}, which is only allowed as a literal argument")
        return t

    def infer(self, e: Expr) -> TelType:
        if isinstance(e, DateLit):
            return TelType.DATE
        if isinstance(e, DurationLit):
            return TelType.DURATION
        if isinstance(e, StringLit):
            return TelType.TEXT
        if isinstance(e, IntLit):
            return TelType.INT
        if isinstance(e, WeekdayLit):
            return TelType.WEEKDAY
        if isinstance(e, Name):
            if e.ident not in self.scope:
                raise TelNameError(f"name {e.ident!r} is not bound", e.line, e.col)
            return self.scope[e.ident]
        if isinstance(e, If):
            if self.infer(e.cond) is not TelType.BOOL:
                raise self.fail(e.cond, "condition of 'if' must be boolean")
            then_t = self.value_type(e.then, "'then' branch")
            else_t = self.value_type(e.orelse, "'else' branch")
            if then_t is not else_t:
                raise self.fail(e, f"'if' branches differ: {then_t.value} vs {else_t.value}")
            return then_t
        if isinstance(e, Call):
            return self.call(e)
        raise TypeError(f"unknown node {e!r}")

    def call(self, e: Call) -> TelType:
        if e.func == "date":
            raise self.fail(e, "date() takes three integer literals")
        sigs = BUILTINS.get(e.func)
        if sigs is None:
            raise TelNameError(f"unknown function {e.func!r}", e.line, e.col)
        arg_types = tuple(self.infer(a) for a in e.args)
        for sig in sigs:
            if sig.params == arg_types:
                break
        else:
            got = ", ".join(t.value for t in arg_types)
            options = "; ".join(s.describe(e.func) for s in sigs)
            raise self.fail(e, f"no overload {e.func}({got}); expected {options}")
        if e.func == "allen" and len(e.args) == 3:
            rel = e.args[2]
            if not isinstance(rel, StringLit) or rel.value not in RELATION_NAMES:
                raise self.fail(rel, "third argument of allen must be a relation name literal, one of "
                                + ", ".join(sorted(RELATION_NAMES)))
        self.signatures[id(e)] = sig
        return sig.returns


def typecheck(program: Program, env_types: Mapping[str, TelType] | None = None) -> TypedProgram:
    """Assign a type to every expression or raise TelTypeError / TelNameError."""
    env_types = dict(env_types or {})
    checker = _Checker(env_types)
    binding_types: dict[str, TelType] = {}
    for b in program.bindings:
        if b.name in checker.scope:
            origin = "the environment" if b.name in env_types else "an earlier line"
            raise TelNameError(f"{b.name!r} is already bound by {origin}", b.line, 1)
        t = checker.value_type(b.expr, f"binding {b.name!r}")
        checker.scope[b.name] = t
        binding_types[b.name] = t
    answer_type = checker.value_type(program.answer, "answer")
    return TypedProgram(program, env_types, binding_types, answer_type, checker.signatures)
