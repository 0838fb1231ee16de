"""Scoring of answer logs and report rendering.

Percentages are computed exactly from counts and rounded half away from
zero to two decimals, so a report depends only on the records it scores.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction

from tremu.errors import MismatchError
from tremu.reasoner import TemporalQuestion

QTYPES = ("TA", "TP", "TI")
COLUMNS = ("Method", "TA", "TP", "TI", "Overall", "P", "R", "F1", "ExecFail")
FORMATS = ("text", "json", "csv")
_CENT = Decimal("0.01")


def percent(value: Fraction | None) -> Decimal | None:
    """``value`` as a percentage rounded half away from zero to 2 places."""
    if value is None:
        return None
    exact = Decimal(value.numerator * 100) / Decimal(value.denominator)
    return exact.quantize(_CENT, rounding=ROUND_HALF_UP)


def _ratio(num: int, den: int) -> Fraction | None:
    return Fraction(num, den) if den else None


def f1_score(p: Fraction, r: Fraction) -> Fraction:
    return 2 * p * r / (p + r) if p + r else Fraction(0)


@dataclass(frozen=True)
class FailureRate:
    failures: int
    attempts: int
    present: bool

    @property
    def percent(self) -> Decimal:
        return percent(_ratio(self.failures, self.attempts) or Fraction(0))


def failure_rate(records) -> FailureRate:
    """Share of program generations that ended in a TEL error.

    Only TReMu records generate programs.  With none, the rate is 0.00 and
    ``present`` is false.
    """
    tremu = [r for r in records if r.strategy == "tremu"]
    failures = sum(1 for r in tremu for a in r.attempts if a.failed)
    attempts = sum(len(r.attempts) for r in tremu)
    return FailureRate(failures, attempts, bool(tremu))


@dataclass
class EvalReport:
    strategy: str
    counts: dict[str, int]
    correct: dict[str, int]
    predicted_unanswerable: int
    predicted_unanswerable_correct: int
    gold_unanswerable: int
    gold_unanswerable_correct: int
    failures: FailureRate
    flags: dict[str, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def total_correct(self) -> int:
        return sum(self.correct.values())

    def accuracy(self, qtype: str | None = None) -> Decimal | None:
        if qtype is None:
            return percent(_ratio(self.total_correct, self.total))
        return percent(_ratio(self.correct.get(qtype, 0), self.counts.get(qtype, 0)))

    def _p(self) -> Fraction:
        return _ratio(self.predicted_unanswerable_correct, self.predicted_unanswerable) or Fraction(0)

    def _r(self) -> Fraction:
        return _ratio(self.gold_unanswerable_correct, self.gold_unanswerable) or Fraction(0)

    @property
    def precision(self) -> Decimal:
        return percent(self._p())

    @property
    def recall(self) -> Decimal:
        return percent(self._r())

    @property
    def f1(self) -> Decimal:
        return percent(f1_score(self._p(), self._r()))

    def row(self) -> dict[str, Decimal | str | None]:
        return {
            "Method": self.strategy,
            **{t: self.accuracy(t) for t in QTYPES},
            "Overall": self.accuracy(),
            "P": self.precision,
            "R": self.recall,
            "F1": self.f1,
            "ExecFail": self.failures.percent if self.failures.present else None,
        }

    def to_dict(self) -> dict:
        def num(v):
            return None if v is None else float(v)

        return {
            "strategy": self.strategy,
            "counts": {t: self.counts.get(t, 0) for t in QTYPES},
            "correct": {t: self.correct.get(t, 0) for t in QTYPES},
            "unanswerable": {
                "predicted": self.predicted_unanswerable,
                "predicted_correct": self.predicted_unanswerable_correct,
                "gold": self.gold_unanswerable,
                "gold_correct": self.gold_unanswerable_correct,
            },
            "execution_failures": {"failures": self.failures.failures, "attempts": self.failures.attempts,
                                   "present": self.failures.present},
            "flags": dict(sorted(self.flags.items())),
            "metrics": {k: num(v) for k, v in self.row().items() if k != "Method"},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        u = d["unanswerable"]
        ef = d["execution_failures"]
        return cls(d["strategy"], dict(d["counts"]), dict(d["correct"]), u["predicted"], u["predicted_correct"],
                   u["gold"], u["gold_correct"], FailureRate(ef["failures"], ef["attempts"], ef["present"]),
                   dict(d.get("flags", {})))


def compute_metrics(records, questions) -> EvalReport:
    """Score one strategy's records against the benchmark questions."""
    by_id: dict[str, TemporalQuestion] = {}
    for q in questions:
        if q.question_id in by_id:
            raise MismatchError(f"duplicate question id {q.question_id}")
        by_id[q.question_id] = q
    seen: set[str] = set()
    strategies = {r.strategy for r in records}
    if len(strategies) > 1:
        raise MismatchError(f"records mix strategies: {', '.join(sorted(strategies))}")
    for r in records:
        if r.question_id not in by_id:
            raise MismatchError(f"record for unknown question {r.question_id}")
        if r.question_id in seen:
            raise MismatchError(f"duplicate record for question {r.question_id}")
        seen.add(r.question_id)
    missing = sorted(set(by_id) - seen)
    if missing:
        raise MismatchError(f"{len(missing)} questions have no record (first: {missing[0]})")

    counts: Counter = Counter()
    correct: Counter = Counter()
    pu = puc = gu = guc = 0
    flags: Counter = Counter()
    for r in records:
        q = by_id[r.question_id]
        if not 0 <= r.predicted < len(q.options):
            raise MismatchError(f"{r.question_id}: predicted index {r.predicted} outside the options")
        ok = r.predicted == q.gold
        counts[q.qtype] += 1
        correct[q.qtype] += ok
        if q.is_unanswerable(r.predicted):
            pu += 1
            puc += ok
        if q.gold_unanswerable:
            gu += 1
            guc += ok
        flags.update(r.flags)
    return EvalReport(strategies.pop() if strategies else "none", dict(counts), dict(correct),
                      pu, puc, gu, guc, failure_rate(records), dict(flags))


def _cell(v) -> str:
    return "-" if v is None else str(v)


def render_report(reports, fmt: str = "text") -> str:
    """Render one report or a list of them as a text table, JSON or CSV."""
    if isinstance(reports, EvalReport):
        reports = [reports]
    if fmt == "json":
        return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in reports:
            w.writerow([_cell(v) for v in r.row().values()])
        return buf.getvalue()
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}")

    rows = [list(COLUMNS)] + [[_cell(v) for v in r.row().values()] for r in reports]
    widths = [max(len(row[i]) for row in rows) for i in range(len(COLUMNS))]
    lines = ["  ".join(c.ljust(widths[0]) if i == 0 else c.rjust(widths[i]) for i, c in enumerate(row)).rstrip()
             for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    for r in reports:
        sizes = ", ".join(f"{t} {r.counts.get(t, 0)}" for t in QTYPES)
        lines.append(f"{r.strategy}: {r.total} questions ({sizes}), {r.gold_unanswerable} gold unanswerable")
        if r.failures.present:
            lines.append(f"{r.strategy}: {r.failures.failures} of {r.failures.attempts} program generations failed")
        if r.flags:
            lines.append(f"{r.strategy}: flags " + ", ".join(f"{k} {v}" for k, v in sorted(r.flags.items())))
    return "\n".join(lines) + "\n"
