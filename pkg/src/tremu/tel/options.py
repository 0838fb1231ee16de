"""Deterministic matching of a TEL answer value against option texts.

Normalisation is deliberately narrow: an option either reads unambiguously
as a date, a duration, a date range or the explicit "Unanswerable" marker,
or it is kept as plain text.  Anything doubtful yields no match so that the
caller can fall back to asking the model.
"""

from __future__ import annotations

import calendar
import re
from dataclasses import dataclass
from datetime import date
from typing import Any

from tremu import temporal as tc
from tremu.errors import AmbiguityError, DataError
from tremu.temporal import DateInterval, Duration

UNANSWERABLE = "unanswerable"

MONTH_NUMBERS = {name.lower(): i for i, name in enumerate(calendar.month_name) if name}
MONTH_NUMBERS.update({name.lower(): i for i, name in enumerate(calendar.month_abbr) if name})
MONTH_NUMBERS["sept"] = 9
_WEEKDAY_NAMES = {name.lower(): i + 1 for i, name in enumerate(calendar.day_name)}
_NUMBER_WORDS = {
    "a": 1, "an": 1, "one": 1, "two": 2, "three": 3, "four": 4, "five": 5, "six": 6,
    "seven": 7, "eight": 8, "nine": 9, "ten": 10, "eleven": 11, "twelve": 12,
}
_MONTH_RE = "(" + "|".join(sorted(MONTH_NUMBERS, key=len, reverse=True)) + r")\.?"
_DAY_RE = r"(\d{1,2})(?:st|nd|rd|th)?"

_PREFIX_RE = re.compile(r"^\s*(?:\(([A-Za-z])\)|([A-Za-z])[.)])\s+")
_LETTER_RE = re.compile(r"^\s*\(?([A-Za-z])\)?\s*[.:]?\s*$")
_MDY_WORDS = re.compile(rf"^{_MONTH_RE}\s+{_DAY_RE},?\s+(\d{{4}})$", re.I)
_DMY_WORDS = re.compile(rf"^{_DAY_RE}\s+(?:of\s+)?{_MONTH_RE},?\s+(\d{{4}})$", re.I)
_MONTH_YEAR = re.compile(rf"^{_MONTH_RE},?\s+(\d{{4}})$", re.I)
_DURATION = re.compile(r"^(-?\d+|" + "|".join(_NUMBER_WORDS) + r")\s+(day|week|month|year)s?$", re.I)
_WEEK_OF = re.compile(r"^(?:the\s+)?week\s+of\s+(.+)$", re.I)
_RANGE = re.compile(r"^(?:from|between)?\s*(.+?)\s+(?:to|and|-|–|through|until)\s+(.+)$", re.I)


@dataclass(frozen=True)
class _Unanswerable:
    pass


def is_unanswerable(text: str) -> bool:
    """True for option text that states the question cannot be answered."""
    return isinstance(normalize_option(text), _Unanswerable)


def strip_label(text: str) -> str:
    """Remove a leading option label such as ``"B. "`` or ``"(B) "``."""
    return _PREFIX_RE.sub("", text, count=1).strip()


def letter_index(text: str, n_options: int) -> int | None:
    m = _LETTER_RE.match(text)
    if not m:
        return None
    idx = ord(m.group(1).upper()) - ord("A")
    return idx if 0 <= idx < n_options else None


def _parse_calendar_date(text: str) -> date | None:
    text = text.strip().rstrip(".").strip()
    text = re.sub(r"^on\s+", "", text, flags=re.I)
    weekday = None
    m = re.match(r"^([A-Za-z]+),?\s+(.*)$", text)
    if m and m.group(1).lower() in _WEEKDAY_NAMES:
        weekday, text = _WEEKDAY_NAMES[m.group(1).lower()], m.group(2)
    d = None
    try:
        d = tc.parse_date(text)
    except DataError:
        for rx, order in ((_MDY_WORDS, "mdy"), (_DMY_WORDS, "dmy")):
            m = rx.match(text)
            if m:
                if order == "mdy":
                    mon, day, year = m.groups()
                else:
                    day, mon, year = m.groups()
                try:
                    d = tc.make_date(int(year), MONTH_NUMBERS[mon.lower().rstrip(".")], int(day))
                except DataError:
                    return None
                break
    if d is not None and weekday is not None and d.isoweekday() != weekday:
        return None  # self-contradictory, e.g. "Monday, March 12, 2020"
    return d


def _parse_duration(text: str) -> Duration | None:
    m = _DURATION.match(text.strip().rstrip("."))
    if not m:
        return None
    raw, unit = m.group(1).lower(), m.group(2).lower()
    n = _NUMBER_WORDS[raw] if raw in _NUMBER_WORDS else int(raw)
    if unit == "day":
        return Duration(days=n)
    if unit == "week":
        return Duration(days=7 * n)
    if unit == "month":
        return Duration(months=n)
    return Duration(years=n)


def _parse_interval(text: str) -> DateInterval | None:
    text = text.strip().rstrip(".")
    m = _WEEK_OF.match(text)
    if m:
        d = _parse_calendar_date(m.group(1))
        return tc.week_range(d) if d else None
    m = _MONTH_YEAR.match(text)
    if m:
        return tc.month_range(date(int(m.group(2)), MONTH_NUMBERS[m.group(1).lower().rstrip(".")], 1))
    m = _RANGE.match(text)
    if m:
        a, b = _parse_calendar_date(m.group(1)), _parse_calendar_date(m.group(2))
        if a and b and a <= b:
            return DateInterval(a, b)
    return None


def normalize_option(text: str) -> Any:
    """Return the value an option text denotes, or its casefolded text."""
    body = strip_label(text)
    if body.strip().rstrip(".").casefold() == UNANSWERABLE:
        return _Unanswerable()
    for parse in (_parse_calendar_date, _parse_duration, _parse_interval):
        v = parse(body)
        if v is not None:
            return v
    return body.casefold()


def _duration_days(d: Duration) -> int | None:
    """Exact day length of ``d`` when it is days-only or anchored."""
    if d.is_days_only:
        return d.days
    if d.anchor is not None:
        return (tc.add_relative(d.anchor, d) - d.anchor).days
    return None


def _durations_match(value: Duration, option: Duration) -> bool:
    # Elapsed-time answers are unsigned in prose, so compare magnitudes.
    if option.is_days_only:
        days = _duration_days(value)
        return days is not None and abs(days) == abs(option.days)
    if value.days == 0 and not value.is_days_only:
        return abs(value.total_months()) == abs(option.total_months())
    if value.is_days_only and value.anchor is not None:
        sign = 1 if value.days >= 0 else -1
        target = tc.add_relative(value.anchor, option if sign > 0 else -option)
        return (target - value.anchor).days == value.days
    return False


def _matches(value: Any, option: Any) -> bool:
    if isinstance(value, bool):
        return False
    if isinstance(value, date):
        return isinstance(option, date) and option == value
    if isinstance(value, Duration):
        return isinstance(option, Duration) and _durations_match(value, option)
    if isinstance(value, DateInterval):
        return isinstance(option, DateInterval) and option == value
    return False


def match_option(value: Any, options: list[str]) -> int | None:
    """Index of the unique option equal to ``value``, or None.

    Text values match an option letter ("C"), the explicit unanswerable
    marker, an option's exact text, or (when the text itself reads as a
    date, duration or range) the option with that normalised value.

    Raises AmbiguityError if several options match.
    """
    if not options:
        raise ValueError("match_option needs at least one option")
    normalized = [normalize_option(o) for o in options]

    if isinstance(value, str):
        idx = letter_index(value, len(options))
        if idx is not None:
            return idx
        text = value.strip().rstrip(".").casefold()
        if text == UNANSWERABLE:
            hits = [i for i, n in enumerate(normalized) if isinstance(n, _Unanswerable)]
        else:
            hits = [i for i, o in enumerate(options) if strip_label(o).casefold() == value.strip().casefold()]
            if not hits:
                parsed = normalize_option(value)
                if isinstance(parsed, (date, Duration, DateInterval)):
                    hits = [i for i, n in enumerate(normalized) if _matches(parsed, n)]
    else:
        hits = [i for i, n in enumerate(normalized) if _matches(value, n)]

    if len(hits) > 1:
        raise AmbiguityError(f"value matches options {[chr(65 + i) for i in hits]}")
    return hits[0] if hits else None


def find_dates(text: str) -> list[date]:
    """All unambiguous calendar dates mentioned in free text."""
    found = []
    patterns = [
        r"\b\d{4}-\d{2}-\d{2}\b",
        r"\b\d{1,2}/\d{1,2}/\d{4}\b",
        rf"\b{_MONTH_RE}\s+{_DAY_RE},?\s+\d{{4}}\b",
        rf"\b{_DAY_RE}\s+(?:of\s+)?{_MONTH_RE},?\s+\d{{4}}\b",
    ]
    for pat in patterns:
        for m in re.finditer(pat, text, re.I):
            d = _parse_calendar_date(m.group(0))
            if d is not None and d not in found:
                found.append(d)
    return found
