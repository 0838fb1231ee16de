"""Calendar arithmetic on civil dates.

Dates are plain :class:`datetime.date` values (proleptic Gregorian, years
1-9999, no time zones).  On top of them this module provides signed
durations with separate calendar components, closed day intervals, weekday
resolution with ``relativedelta``-style semantics, week/month ranges and
Allen's thirteen interval relations.

Everything here is immutable and pure.
"""

from __future__ import annotations

import calendar
import enum
import re
from dataclasses import dataclass, field
from datetime import date, timedelta

from tremu.errors import ContractError, DomainError, FormatError

__all__ = [
    "AllenRelation",
    "CalDate",
    "DateInterval",
    "Duration",
    "Weekday",
    "add_relative",
    "allen_relation",
    "calendar_range",
    "diff_days",
    "diff_months",
    "format_date",
    "make_date",
    "month_range",
    "next_weekday",
    "parse_date",
    "week_range",
]

CalDate = date

MIN_YEAR = 1
MAX_YEAR = 9999

_ISO_RE = re.compile(r"^\s*(\d{4})-(\d{2})-(\d{2})\s*$")
_US_RE = re.compile(r"^\s*(\d{1,2})/(\d{1,2})/(\d{4})\s*$")


class Weekday(enum.IntEnum):
    """Days of the week, numbered as ISO weekdays (Monday is 1)."""

    MO = 1
    TU = 2
    WE = 3
    TH = 4
    FR = 5
    SA = 6
    SU = 7

    @classmethod
    def of(cls, d: date) -> "Weekday":
        return cls(d.isoweekday())


class AllenRelation(str, enum.Enum):
    BEFORE = "before"
    MEETS = "meets"
    OVERLAPS = "overlaps"
    STARTS = "starts"
    DURING = "during"
    FINISHES = "finishes"
    EQUALS = "equals"
    AFTER = "after"
    MET_BY = "met_by"
    OVERLAPPED_BY = "overlapped_by"
    STARTED_BY = "started_by"
    CONTAINS = "contains"
    FINISHED_BY = "finished_by"

    def inverse(self) -> "AllenRelation":
        return _INVERSE[self]


_INVERSE = {
    AllenRelation.BEFORE: AllenRelation.AFTER,
    AllenRelation.MEETS: AllenRelation.MET_BY,
    AllenRelation.OVERLAPS: AllenRelation.OVERLAPPED_BY,
    AllenRelation.STARTS: AllenRelation.STARTED_BY,
    AllenRelation.DURING: AllenRelation.CONTAINS,
    AllenRelation.FINISHES: AllenRelation.FINISHED_BY,
    AllenRelation.EQUALS: AllenRelation.EQUALS,
}
_INVERSE.update({v: k for k, v in list(_INVERSE.items())})


@dataclass(frozen=True)
class Duration:
    """A signed span of time.

    ``days`` is the canonical unit.  ``months`` and ``years`` are calendar
    components: they are never converted into days because their length
    depends on where they are applied (see :func:`add_relative`).

    ``anchor`` optionally records the date the span was measured from.  It
    does not take part in equality; option matching uses it to compare a
    day count against a calendar-month answer.
    """

    days: int = 0
    months: int = 0
    years: int = 0
    anchor: date | None = field(default=None, compare=False, repr=False)

    @property
    def is_days_only(self) -> bool:
        return self.months == 0 and self.years == 0

    def total_months(self) -> int:
        return self.years * 12 + self.months

    def __add__(self, other: "Duration") -> "Duration":
        if not isinstance(other, Duration):
            return NotImplemented
        return Duration(self.days + other.days, self.months + other.months, self.years + other.years)

    def __neg__(self) -> "Duration":
        return Duration(-self.days, -self.months, -self.years)

    def __sub__(self, other: "Duration") -> "Duration":
        if not isinstance(other, Duration):
            return NotImplemented
        return self + (-other)

    def __str__(self) -> str:
        parts = []
        for amount, unit in ((self.years, "year"), (self.months, "month"), (self.days, "day")):
            if amount:
                parts.append(f"{amount} {unit}" + ("" if abs(amount) == 1 else "s"))
        return ", ".join(parts) if parts else "0 days"


@dataclass(frozen=True)
class DateInterval:
    """A closed interval of whole days, ``start <= end``."""

    start: date
    end: date

    def __post_init__(self):
        if self.start > self.end:
            raise DomainError(f"interval start {self.start} is after end {self.end}")

    def __contains__(self, d: date) -> bool:
        return self.start <= d <= self.end

    @property
    def length_days(self) -> int:
        return (self.end - self.start).days + 1

    def __str__(self) -> str:
        return f"[{self.start.isoformat()}, {self.end.isoformat()}]"


def make_date(year: int, month: int, day: int) -> date:
    """Build a date, raising :class:`DomainError` for impossible ones."""
    try:
        return date(year, month, day)
    except (ValueError, OverflowError) as exc:
        raise DomainError(f"no such date {year:04d}-{month:02d}-{day:02d}: {exc}") from None


def parse_date(text: str) -> date:
    """Parse ``YYYY-MM-DD`` or ``MM/DD/YYYY``."""
    m = _ISO_RE.match(text)
    if m:
        y, mo, d = (int(g) for g in m.groups())
        return make_date(y, mo, d)
    m = _US_RE.match(text)
    if m:
        mo, d, y = (int(g) for g in m.groups())
        return make_date(y, mo, d)
    raise FormatError(f"unrecognised date {text!r}; expected YYYY-MM-DD or MM/DD/YYYY")


def format_date(d: date) -> str:
    return d.isoformat()


def diff_days(a: date, b: date) -> Duration:
    """Signed number of days from ``a`` to ``b``."""
    return Duration(days=(b - a).days, anchor=a)


def _shift_months(t: date, months: int) -> date:
    index = t.year * 12 + (t.month - 1) + months
    year, month0 = divmod(index, 12)
    if not MIN_YEAR <= year <= MAX_YEAR:
        raise DomainError(f"date out of supported range (year {year})")
    month = month0 + 1
    return date(year, month, min(t.day, calendar.monthrange(year, month)[1]))


def add_relative(t: date, delta: Duration) -> date:
    """Apply years, then months (clamping to month end), then days."""
    shifted = _shift_months(t, delta.total_months()) if not delta.is_days_only else t
    try:
        return shifted + timedelta(days=delta.days)
    except OverflowError:
        raise DomainError(f"{t} + {delta} leaves the supported date range") from None


def diff_months(a: date, b: date) -> Duration:
    """Whole calendar months from ``a`` towards ``b``.

    The result ``m`` is the largest (in magnitude) count for which
    ``add_relative(a, m months)`` does not overshoot ``b``.
    """
    m = (b.year - a.year) * 12 + (b.month - a.month)
    if b >= a:
        while m > 0 and _shift_months(a, m) > b:
            m -= 1
    else:
        while m < 0 and _shift_months(a, m) < b:
            m += 1
    return Duration(months=m, anchor=a)


def next_weekday(t: date, weekday: Weekday, n: int = 1) -> date:
    """Resolve the ``n``-th ``weekday`` relative to ``t``.

    ``n=+1`` is the nearest such day on or after ``t`` (``t`` itself counts),
    ``n=-1`` the nearest on or before; larger magnitudes step whole weeks.
    Use ``next_weekday(t + 1 day, w)`` for a strictly-after reading.
    """
    if n == 0:
        raise ContractError("next_weekday needs a non-zero occurrence count")
    weekday = Weekday(weekday)
    if n > 0:
        offset = (weekday - t.isoweekday()) % 7 + 7 * (n - 1)
    else:
        offset = -((t.isoweekday() - weekday) % 7) + 7 * (n + 1)
    try:
        return t + timedelta(days=offset)
    except OverflowError:
        raise DomainError(f"{weekday.name}({n:+d}) from {t} leaves the supported range") from None


def week_range(t: date) -> DateInterval:
    """Monday-to-Sunday week containing ``t``."""
    start = t - timedelta(days=t.isoweekday() - 1)
    return DateInterval(start, start + timedelta(days=6))


def month_range(t: date) -> DateInterval:
    last = calendar.monthrange(t.year, t.month)[1]
    return DateInterval(t.replace(day=1), t.replace(day=last))


def calendar_range(t: date, unit: str) -> DateInterval:
    if unit == "week":
        return week_range(t)
    if unit == "month":
        return month_range(t)
    raise ContractError(f"unknown calendar unit {unit!r}")


def allen_relation(a: DateInterval, b: DateInterval) -> AllenRelation:
    """Classify the pair by comparing starts, then ends, then the cross endpoints.

    Intervals are closed at day granularity, so ``meets`` means the two
    intervals share exactly their boundary day; adjacent days are ``before``.
    """
    if a.start == b.start:
        if a.end == b.end:
            return AllenRelation.EQUALS
        return AllenRelation.STARTS if a.end < b.end else AllenRelation.STARTED_BY
    if a.end == b.end:
        return AllenRelation.FINISHES if a.start > b.start else AllenRelation.FINISHED_BY
    if a.start < b.start:
        if a.end > b.end:
            return AllenRelation.CONTAINS
        if a.end < b.start:
            return AllenRelation.BEFORE
        if a.end == b.start:
            return AllenRelation.MEETS
        return AllenRelation.OVERLAPS
    # a.start > b.start
    if a.end < b.end:
        return AllenRelation.DURING
    if a.start > b.end:
        return AllenRelation.AFTER
    if a.start == b.end:
        return AllenRelation.MET_BY
    return AllenRelation.OVERLAPPED_BY
