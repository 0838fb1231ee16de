"""Benchmark construction: event extraction, cross-session linking, QA drafting.

The human review step is not automated.  Drafts are exported as JSONL,
a reviewer marks each one accepted, revised or rejected, and the file is
imported back as a benchmark.
"""

from __future__ import annotations

import json
import logging
import random
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from tremu import prompts
from tremu.errors import DataError, FormatError, InsufficientMaterial
from tremu.gateway import ChatRequest, Gateway
from tremu.memory import DialogueCorpus, DialogueSession
from tremu.reasoner import OPTION_COUNTS, TemporalQuestion
from tremu.tel.options import is_unanswerable

log = logging.getLogger(__name__)

REVIEW_STATES = ("pending", "accepted", "revised", "rejected")
# relative phrases too vague to pin to a day
AMBIGUOUS_EXPRESSIONS = (
    "the other day", "the other week", "recently", "a while ago", "a while back", "some time ago",
    "a few days ago", "a couple of days ago", "a few weeks ago", "a couple of weeks ago", "lately",
    "not long ago", "some days ago", "back then", "soon", "someday", "one day",
)
_NONE = {"none", "n/a", "-", ""}


@dataclass(frozen=True)
class TemporalEvent:
    event_id: str
    session_id: str
    description: str
    relative_expression: str | None
    inferred_date: date | None

    def to_dict(self) -> dict:
        return {"event_id": self.event_id, "session_id": self.session_id, "description": self.description,
                "relative_expression": self.relative_expression,
                "inferred_date": self.inferred_date.isoformat() if self.inferred_date else None}

    @classmethod
    def from_dict(cls, d: dict) -> "TemporalEvent":
        when = d.get("inferred_date")
        return cls(d["event_id"], str(d["session_id"]), d["description"], d.get("relative_expression"),
                   date.fromisoformat(when) if when else None)


@dataclass(frozen=True)
class EventGroup:
    group_id: str
    member_ids: tuple[str, ...]
    entity: str


@dataclass
class DraftQA:
    question: TemporalQuestion
    source_events: tuple[str, ...]
    group_id: str | None = None
    review_state: str = "pending"

    def __post_init__(self):
        if self.review_state not in REVIEW_STATES:
            raise DataError(f"unknown review state {self.review_state!r}")


def is_ambiguous(expression: str | None) -> bool:
    if not expression:
        return False
    text = expression.casefold().strip()
    return any(re.search(rf"\b{re.escape(p)}\b", text) for p in AMBIGUOUS_EXPRESSIONS)


def parse_events(text: str, session: DialogueSession,
                 window: tuple[date, date] | None = None) -> tuple[list[TemporalEvent], int]:
    """Events from ``EVENT | RELATIVE_EXPRESSION | INFERRED_DATE`` lines.

    Returns the events and the number of lines that could not be read.
    """
    events: list[TemporalEvent] = []
    dropped = 0
    for raw in text.splitlines():
        line = raw.strip().lstrip("-*• ").strip()
        if not line or line.casefold() == "none":
            continue
        parts = [p.strip() for p in line.split("|")]
        if len(parts) != 3 or not parts[0]:
            dropped += 1
            continue
        desc, rel, when = parts
        relative = None if rel.casefold() in _NONE else rel
        if when.upper() == "UNKNOWN":
            inferred = None
        else:
            try:
                inferred = date.fromisoformat(when)
            except ValueError:
                dropped += 1
                continue
        if inferred is not None and (is_ambiguous(relative)
                                     or (window and not window[0] <= inferred <= window[1])):
            inferred = None
        events.append(TemporalEvent(f"{session.session_id}.{len(events) + 1}", session.session_id, desc,
                                    relative, inferred))
    return events, dropped


def extract_events(session: DialogueSession, gateway: Gateway,
                   window: tuple[date, date] | None = None) -> list[TemporalEvent]:
    req = ChatRequest.build("extract", prompts.EXTRACT_SYSTEM.format(date=session.timestamp.isoformat()),
                            prompts.EXTRACT_USER.format(session=prompts.render_session(session)))
    events, dropped = parse_events(gateway.complete(req), session, window)
    if dropped:
        log.warning("session %s: dropped %d unreadable event lines", session.session_id, dropped)
    return events


def extract_corpus_events(corpus: DialogueCorpus, gateway: Gateway, jobs: int = 1) -> list[TemporalEvent]:
    window = corpus.sanity_window()
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        per_session = list(pool.map(lambda s: extract_events(s, gateway, window), corpus.sessions))
    return [e for events in per_session for e in events]


def render_event(e: TemporalEvent) -> str:
    when = e.inferred_date.isoformat() if e.inferred_date else "unknown date"
    rel = f' ("{e.relative_expression}")' if e.relative_expression else ""
    return f"[{e.event_id}] session {e.session_id}, {when}{rel}: {e.description}"


def link_events(events: list[TemporalEvent], gateway: Gateway) -> list[EventGroup]:
    """Group related events; groups confined to one session are discarded."""
    if len({e.session_id for e in events}) < 2:
        return []
    by_id = {e.event_id: e for e in events}
    req = ChatRequest.build("link", prompts.LINK_SYSTEM,
                            prompts.LINK_USER.format(events="\n".join(render_event(e) for e in events)))
    groups: list[EventGroup] = []
    for raw in gateway.complete(req).splitlines():
        parts = [p.strip() for p in raw.split("|")]
        if len(parts) != 3 or parts[0].upper() != "GROUP":
            continue
        ids = []
        for tok in re.split(r"[,\s]+", parts[2]):
            tok = tok.strip("[]")
            if tok in by_id and tok not in ids:
                ids.append(tok)
        if len({by_id[i].session_id for i in ids}) < 2:
            log.info("discarding group %r: fewer than two sessions", parts[1])
            continue
        groups.append(EventGroup(f"g{len(groups) + 1}", tuple(ids), parts[1]))
    return groups


def _parse_created(text: str) -> tuple[str, list[str], str] | None:
    fields: dict[str, str] = {}
    for line in text.splitlines():
        m = re.match(r"^\s*(QUESTION|OPTIONS|ANSWER)\s*:\s*(.*)$", line, re.I)
        if m:
            fields[m.group(1).upper()] = m.group(2).strip()
    if set(fields) != {"QUESTION", "OPTIONS", "ANSWER"}:
        return None
    options = [o.strip() for o in fields["OPTIONS"].split("|") if o.strip()]
    return fields["QUESTION"], options, fields["ANSWER"].strip("() .").upper()


def _round_half_up(x: float) -> int:
    return int(Decimal(str(x)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def _candidates(events, groups):
    by_id = {e.event_id: e for e in events}
    ta = [(e.event_id,) for e in events if e.relative_expression and e.inferred_date]
    pairs = []
    for g in groups:
        members = [by_id[i] for i in g.member_ids if i in by_id]
        for i, a in enumerate(members):
            for b in members[i + 1:]:
                if a.session_id != b.session_id:
                    pairs.append(((a.event_id, b.event_id), g.group_id))
    return ta, pairs


def create_qas(conversation_id: str, events: list[TemporalEvent], groups: list[EventGroup], gateway: Gateway,
               targets: dict[str, int], unanswerable_fraction: float = 112 / 600, seed: int = 0) -> list[DraftQA]:
    """Draft multiple-choice questions of each type from events and groups.

    TA questions come from single events stated in relative time, TP and TI
    questions from cross-session pairs within one group.  A fixed share of
    drafts (chosen by ``seed``) is requested with "Unanswerable" as gold.
    Model replies that break the option rules are skipped and the next
    candidate is tried.
    """
    if not events:
        raise InsufficientMaterial("no events to draft questions from")
    if not 0 <= unanswerable_fraction <= 1:
        raise ValueError("unanswerable_fraction must lie in [0, 1]")
    ta, pairs = _candidates(events, groups)
    pools = {"TA": [(c, None) for c in ta], "TP": list(pairs), "TI": list(pairs)}
    for qtype, n in targets.items():
        if qtype not in OPTION_COUNTS:
            raise ValueError(f"unknown question type {qtype!r}")
        if n > len(pools[qtype]):
            raise InsufficientMaterial(f"{qtype}: {n} questions requested, only {len(pools[qtype])} candidates")

    rng = random.Random(seed)
    slots = [t for t in ("TA", "TP", "TI") for _ in range(targets.get(t, 0))]
    n_unans = _round_half_up(unanswerable_fraction * len(slots))
    unanswerable_slots = set(rng.sample(range(len(slots)), n_unans))
    for t in pools:
        rng.shuffle(pools[t])

    by_id = {e.event_id: e for e in events}
    drafts: list[DraftQA] = []
    numbering = {t: 0 for t in OPTION_COUNTS}
    for slot, qtype in enumerate(slots):
        want_unans = slot in unanswerable_slots
        name, help_text = prompts.QTYPE_HELP[qtype]
        system = prompts.CREATE_SYSTEM.format(qtype_name=name, qtype_help=help_text, n_options=OPTION_COUNTS[qtype],
                                              answerability=prompts.UNANSWERABLE if want_unans else prompts.ANSWERABLE)
        while True:
            if not pools[qtype]:
                raise InsufficientMaterial(f"{qtype}: ran out of usable candidates")
            source, group_id = pools[qtype].pop()
            user = prompts.CREATE_USER.format(events="\n".join(render_event(by_id[i]) for i in source))
            draft = _draft(conversation_id, qtype, numbering[qtype] + 1, want_unans,
                           gateway.complete(ChatRequest.build("create", system, user)), source, group_id)
            if draft is not None:
                numbering[qtype] += 1
                drafts.append(draft)
                break
    return drafts


def _draft(conversation_id, qtype, n, want_unans, reply, source, group_id) -> DraftQA | None:
    parsed = _parse_created(reply)
    if parsed is None:
        log.warning("%s draft: unreadable model reply", qtype)
        return None
    text, options, letter = parsed
    if len(letter) != 1 or not "A" <= letter <= prompts.LETTERS[len(options) - 1]:
        log.warning("%s draft: bad answer letter %r", qtype, letter)
        return None
    gold = ord(letter) - ord("A")
    if sum(is_unanswerable(o) for o in options) != 1 or is_unanswerable(options[gold]) != want_unans:
        log.warning("%s draft: options break the unanswerable rule", qtype)
        return None
    try:
        q = TemporalQuestion(f"{conversation_id}-{qtype}-{n:03d}", conversation_id, qtype, text, tuple(options),
                             gold, want_unans)
    except DataError as exc:
        log.warning("%s draft rejected: %s", qtype, exc)
        return None
    return DraftQA(q, tuple(source), group_id)


def export_review(drafts: list[DraftQA], path) -> None:
    """Write drafts as JSONL for human review, one object per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for d in drafts:
            row = {"question_id": d.question.question_id, "decision": d.review_state,
                   **{k: v for k, v in d.question.to_dict().items() if k != "question_id"},
                   "source_events": list(d.source_events), "group_id": d.group_id}
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


_REVISABLE = ("text", "options", "gold", "gold_unanswerable")


def import_review(path) -> list[TemporalQuestion]:
    """Questions a reviewer accepted or revised, in file order.

    Rejected and still-pending items are logged and left out.
    """
    questions: list[TemporalQuestion] = []
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        where = f"{path}:{n}"
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{where}: invalid JSON ({exc})") from None
        if not isinstance(row, dict) or "question_id" not in row:
            raise FormatError(f"{where}: expected an object with question_id")
        decision = row.get("decision")
        if decision not in REVIEW_STATES:
            raise FormatError(f"{where}: unknown decision {decision!r}")
        if decision in ("rejected", "pending"):
            log.info("%s: %s left out (%s)", where, row["question_id"], decision)
            continue
        revised = row.get("revised", {})
        if not isinstance(revised, dict) or set(revised) - set(_REVISABLE):
            raise FormatError(f"{where}: revised may only change {', '.join(_REVISABLE)}")
        data = {**row, **revised}
        try:
            if revised and "gold_unanswerable" not in revised and 0 <= int(data["gold"]) < len(data["options"]):
                data["gold_unanswerable"] = is_unanswerable(data["options"][int(data["gold"])])
            q = TemporalQuestion.from_dict(data)
        except (DataError, TypeError, ValueError, KeyError) as exc:
            raise FormatError(f"{where}: {exc}") from None
        questions.append(q)
    ids = [q.question_id for q in questions]
    if len(set(ids)) != len(ids):
        raise FormatError(f"{path}: duplicate question ids")
    return questions
