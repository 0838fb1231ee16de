"""Value types and the fixed builtin function table."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from datetime import date
from typing import Any, Callable

from tremu import temporal as tc
from tremu.temporal import AllenRelation, DateInterval, Duration, Weekday
from tremu.errors import DomainError


class TelType(str, enum.Enum):
    DATE = "date"
    DURATION = "duration"
    INTERVAL = "interval"
    BOOL = "boolean"
    TEXT = "text"
    # only valid as literal arguments, never as a bound or answered value
    INT = "int"
    WEEKDAY = "weekday"


VALUE_TYPES = frozenset({TelType.DATE, TelType.DURATION, TelType.INTERVAL, TelType.BOOL, TelType.TEXT})

D, U, I, B, T = TelType.DATE, TelType.DURATION, TelType.INTERVAL, TelType.BOOL, TelType.TEXT


def type_of(value: Any) -> TelType:
    """Runtime type of a TEL value."""
    # bool before anything else: bool is an int subclass
    if isinstance(value, bool):
        return TelType.BOOL
    if isinstance(value, date):
        return TelType.DATE
    if isinstance(value, Duration):
        return TelType.DURATION
    if isinstance(value, DateInterval):
        return TelType.INTERVAL
    if isinstance(value, str):
        return TelType.TEXT
    raise TypeError(f"{value!r} is not a TEL value")


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, date):
        return value.isoformat()
    return str(value)


def value_to_json(value: Any) -> dict:
    t = type_of(value)
    if t is TelType.DURATION:
        payload: Any = {"days": value.days, "months": value.months, "years": value.years}
    elif t is TelType.INTERVAL:
        payload = [value.start.isoformat(), value.end.isoformat()]
    elif t is TelType.DATE:
        payload = value.isoformat()
    else:
        payload = value
    return {"type": t.value, "value": payload}


def value_from_json(obj: Any) -> Any:
    """Inverse of :func:`value_to_json`; a bare string is read as a date."""
    if isinstance(obj, str):
        return tc.parse_date(obj)
    t = TelType(obj["type"])
    v = obj["value"]
    if t is TelType.DATE:
        return tc.parse_date(v)
    if t is TelType.DURATION:
        return Duration(int(v.get("days", 0)), int(v.get("months", 0)), int(v.get("years", 0)))
    if t is TelType.INTERVAL:
        return DateInterval(tc.parse_date(v[0]), tc.parse_date(v[1]))
    if t is TelType.BOOL:
        return bool(v)
    return str(v)


def _min_max(pick):
    def impl(a, b):
        if isinstance(a, Duration):
            if not (a.is_days_only and b.is_days_only):
                raise DomainError("cannot order durations with month or year components")
            return a if pick(a.days, b.days) else b
        return a if pick(a, b) else b
    return impl


def _allen_is(a: DateInterval, b: DateInterval, rel: str) -> bool:
    return tc.allen_relation(a, b) is AllenRelation(rel)


@dataclass(frozen=True)
class Signature:
    params: tuple[TelType, ...]
    returns: TelType
    impl: Callable[..., Any]

    def describe(self, name: str) -> str:
        return f"{name}({', '.join(p.value for p in self.params)}) -> {self.returns.value}"


BUILTINS: dict[str, list[Signature]] = {
    "add": [
        Signature((D, U), D, tc.add_relative),
        Signature((U, U), U, lambda a, b: a + b),
    ],
    "sub": [
        Signature((D, U), D, lambda t, d: tc.add_relative(t, -d)),
        Signature((U, U), U, lambda a, b: a - b),
    ],
    "diff_days": [Signature((D, D), U, tc.diff_days)],
    "diff_months": [Signature((D, D), U, tc.diff_months)],
    "next_weekday": [
        Signature((D, TelType.WEEKDAY), D, lambda t, w: tc.next_weekday(t, w, 1)),
        Signature((D, TelType.WEEKDAY, TelType.INT), D, tc.next_weekday),
    ],
    "week_range": [Signature((D,), I, tc.week_range)],
    "month_range": [Signature((D,), I, tc.month_range)],
    "interval": [Signature((D, D), I, DateInterval)],
    "allen": [
        Signature((I, I), T, lambda a, b: tc.allen_relation(a, b).value),
        Signature((I, I, T), B, _allen_is),
    ],
    "before": [
        Signature((D, D), B, lambda a, b: a < b),
        Signature((I, I), B, lambda a, b: a.end < b.start),
    ],
    "after": [
        Signature((D, D), B, lambda a, b: a > b),
        Signature((I, I), B, lambda a, b: a.start > b.end),
    ],
    "same_day": [Signature((D, D), B, lambda a, b: a == b)],
    "min": [Signature((D, D), D, _min_max(lambda x, y: x <= y)), Signature((U, U), U, _min_max(lambda x, y: x <= y))],
    "max": [Signature((D, D), D, _min_max(lambda x, y: x >= y)), Signature((U, U), U, _min_max(lambda x, y: x >= y))],
}

WEEKDAY_VALUES = {w.name: w for w in Weekday}
RELATION_NAMES = frozenset(r.value for r in AllenRelation)


def cheat_sheet() -> str:
    """One line per builtin signature, for prompting code generation."""
    lines = ["date(year, month, day) -> date"]
    for name, sigs in BUILTINS.items():
        lines.extend(s.describe(name) for s in sigs)
    return "\n".join(lines)
