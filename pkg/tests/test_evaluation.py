import csv
import io
import json
from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from helpers import GOLDEN
from tremu.errors import MismatchError
from tremu.evaluation import (
    COLUMNS,
    EvalReport,
    compute_metrics,
    f1_score,
    failure_rate,
    percent,
    render_report,
)
from tremu.reasoner import AnswerRecord, Attempt, TemporalQuestion

ANSWERABLE = ("a", "b", "c", "d", "Unanswerable")


def question(i, gold_unanswerable=False, qtype="TA"):
    opts = ANSWERABLE if qtype != "TP" else ("a", "b", "Unanswerable")
    gold = len(opts) - 1 if gold_unanswerable else 0
    return TemporalQuestion(f"q{i}", "c", qtype, "?", opts, gold, gold_unanswerable)


def record(q, predicted, strategy="tremu", attempts=None, flags=()):
    return AnswerRecord(q.question_id, strategy, predicted, "auto-match",
                        attempts if attempts is not None else [Attempt("answer x", trace_digest="d")], 0.0, list(flags))


def in_window(num, den, target):
    """True when 100*num/den rounds (half up) to ``target`` at 2 decimals."""
    lo, hi = Fraction(target) - Fraction(1, 200), Fraction(target) + Fraction(1, 200)
    return lo <= Fraction(100 * num, den) < hi


def unanswerable_set(correct, predicted, gold, total):
    """Records where ``predicted`` say Unanswerable, ``gold`` are Unanswerable, ``correct`` overlap."""
    qs = [question(i, gold_unanswerable=i < gold) for i in range(total)]
    recs = []
    for i, q in enumerate(qs):
        if i < correct:
            recs.append(record(q, 4))
        elif i < gold:
            recs.append(record(q, 0))
        elif i < gold + predicted - correct:
            recs.append(record(q, 4))
        else:
            recs.append(record(q, 0))
    return recs, qs


class TestReportedFigures:
    def test_precision_recall_pair_gives_f1(self):
        # every count triple (<= 600 questions) consistent with the rounded P and R
        def denominators(c, target):
            centre = int(100 * c / float(target))
            return [d for d in range(max(c, centre - 2), min(600, centre + 2) + 1) if in_window(c, d, target)]

        solutions = [(c, pu, gu) for c in range(1, 601)
                     for pu in denominators(c, "55.48") for gu in denominators(c, "76.79")]
        assert solutions
        for c, pu, gu in solutions:
            if gu + pu - c > 600:
                continue
            recs, qs = unanswerable_set(c, pu, gu, 600)
            r = compute_metrics(recs, qs)
            assert (r.precision, r.recall) == (Decimal("55.48"), Decimal("76.79"))
            assert abs(r.f1 - Decimal("64.42")) <= Decimal("0.01")

    def test_all_unanswerable_predictions(self):
        qs = [question(i, gold_unanswerable=i < 112) for i in range(600)]
        r = compute_metrics([record(q, 4) for q in qs], qs)
        assert r.recall == Decimal("100.00")
        assert r.precision == Decimal("18.67")

    def test_zero_correct(self):
        qs = [question(i, gold_unanswerable=i % 2 == 0) for i in range(10)]
        r = compute_metrics([record(q, 1) for q in qs], qs)
        assert r.accuracy() == r.precision == r.recall == r.f1 == Decimal("0.00")


class TestRounding:
    def test_half_away_from_zero(self):
        assert percent(Fraction(1, 800)) == Decimal("0.13")
        assert percent(Fraction(3, 800)) == Decimal("0.38")
        assert percent(Fraction(2, 3)) == Decimal("66.67")
        assert percent(None) is None

    def test_f1_zero_when_both_zero(self):
        assert f1_score(Fraction(0), Fraction(0)) == 0


class TestMismatch:
    QS = [question(i) for i in range(3)]

    def test_missing(self):
        with pytest.raises(MismatchError):
            compute_metrics([record(q, 0) for q in self.QS[:2]], self.QS)

    def test_duplicate(self):
        with pytest.raises(MismatchError):
            compute_metrics([record(q, 0) for q in self.QS] + [record(self.QS[0], 0)], self.QS)

    def test_unknown(self):
        with pytest.raises(MismatchError):
            compute_metrics([record(q, 0) for q in self.QS] + [record(question(9), 0)], self.QS)

    def test_mixed_strategies(self):
        recs = [record(self.QS[0], 0, "sp")] + [record(q, 0) for q in self.QS[1:]]
        with pytest.raises(MismatchError):
            compute_metrics(recs, self.QS)


class TestFailureRate:
    def test_two_in_a_hundred(self):
        recs = [AnswerRecord(f"q{i}", "tremu", 0, "auto-match", [Attempt("x", trace_digest="d")]) for i in range(98)]
        recs += [AnswerRecord("f1", "tremu", 0, "llm-select", [Attempt("x", error={"error": "ParseError"})]),
                 AnswerRecord("f2", "tremu", 0, "llm-select", [Attempt("x", error={"error": "TypeError"})])]
        assert failure_rate(recs).percent == Decimal("2.00")

    def test_absent(self):
        fr = failure_rate([AnswerRecord("q", "cot", 0, "llm-select")])
        assert fr.percent == Decimal("0.00") and not fr.present

    def test_fail_fail_ok(self):
        fail = Attempt("x", error={"error": "NameError"})
        fr = failure_rate([AnswerRecord("q", "tremu", 0, "auto-match", [fail, fail, Attempt("x", trace_digest="d")])])
        assert (fr.failures, fr.attempts) == (2, 3)


def mixed_report():
    qs = ([question(i, qtype="TA") for i in range(4)] + [question(10 + i, qtype="TP") for i in range(3)]
          + [question(20 + i, qtype="TI") for i in range(4)] + [question(99, True)])
    preds = {"q0": 0, "q1": 0, "q2": 1, "q3": 0, "q10": 0, "q11": 2, "q12": 0, "q20": 0, "q21": 0, "q22": 0,
             "q23": 4, "q99": 4}
    fail = Attempt("x", error={"error": "ParseError"})
    recs = [record(q, preds[q.question_id], attempts=[fail, Attempt("y", trace_digest="d")] if q.question_id == "q2"
                   else None, flags=["truncated"] if q.question_id == "q3" else ()) for q in qs]
    return compute_metrics(recs, qs)


class TestRendering:
    def test_values(self):
        r = mixed_report()
        row = r.row()
        # TA: q0,q1,q3 right, q2 wrong, q99 right -> 4/5
        assert row["TA"] == Decimal("80.00") and row["TP"] == Decimal("66.67") and row["TI"] == Decimal("75.00")
        assert row["Overall"] == Decimal("75.00")
        # predicted unanswerable: q11 (TP option 2), q23, q99 -> 1 right; gold: q99
        assert (row["P"], row["R"], row["F1"]) == (Decimal("33.33"), Decimal("100.00"), Decimal("50.00"))
        assert row["ExecFail"] == Decimal("7.69")

    def test_text_golden(self):
        assert render_report(mixed_report(), "text") == (GOLDEN / "report.txt").read_text()

    def test_json_round_trip(self):
        r = mixed_report()
        [d] = json.loads(render_report(r, "json"))
        back = EvalReport.from_dict(d)
        assert back == r and back.row() == r.row()

    def test_csv_header(self):
        rows = list(csv.reader(io.StringIO(render_report([mixed_report(), mixed_report()], "csv"))))
        assert tuple(rows[0]) == COLUMNS == ("Method", "TA", "TP", "TI", "Overall", "P", "R", "F1", "ExecFail")
        assert rows[1] == ["tremu", "80.00", "66.67", "75.00", "75.00", "33.33", "100.00", "50.00", "7.69"]

    def test_missing_type_and_no_programs(self):
        q = question(1)
        r = compute_metrics([record(q, 0, "sp", attempts=[])], [q])
        assert r.row()["TP"] is None and r.row()["ExecFail"] is None
        assert "-" in render_report(r)


@st.composite
def scored(draw):
    n = draw(st.integers(1, 30))
    qs, recs = [], []
    for i in range(n):
        qtype = draw(st.sampled_from(["TA", "TP", "TI"]))
        unans = draw(st.booleans())
        q = question(i, unans, qtype)
        qs.append(q)
        recs.append(record(q, draw(st.integers(0, len(q.options) - 1))))
    return recs, qs


@given(scored())
def test_overall_is_weighted_mean(data):
    recs, qs = data
    r = compute_metrics(recs, qs)
    weighted = sum(Fraction(r.correct.get(t, 0)) for t in r.counts) / r.total
    assert r.accuracy() == percent(weighted)
    assert Decimal(0) <= r.accuracy() <= Decimal(100)


@given(scored(), st.randoms())
def test_permutation_invariant(data, rnd):
    recs, qs = data
    shuffled = list(recs)
    rnd.shuffle(shuffled)
    assert compute_metrics(shuffled, qs) == compute_metrics(recs, qs)


@given(st.fractions(0, 1), st.fractions(0, 1))
def test_f1_symmetric_and_bounded(p, r):
    assert f1_score(p, r) == f1_score(r, p)
    if p > 0 and r > 0:
        assert min(p, r) <= f1_score(p, r) <= max(p, r)
