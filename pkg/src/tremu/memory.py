"""Dialogue corpora, time-aware memorization and prompt-based retrieval."""

from __future__ import annotations

import json
import logging
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path
from typing import Iterable

from tremu import prompts
from tremu.errors import DataError, DomainError, FormatError
from tremu.gateway import ChatRequest, Gateway
from tremu.temporal import Duration, add_relative, parse_date
from tremu.tel.options import MONTH_NUMBERS, find_dates

log = logging.getLogger(__name__)

DEFAULT_K = 10
RETRIEVAL_CHUNK = 40
SANITY_YEARS = 10
FALLBACK_CHARS = 600

_LINE_RE = re.compile(r"^\s*(?:[-*•]\s*)?([^|]+?)\s*\|\s*(.+?)\s*$")
_DATE_SHAPED = re.compile(r"\d{4}-\d{2}-\d{2}|\d{1,2}/\d{1,2}/\d{4}")


@dataclass(frozen=True)
class Turn:
    speaker: str
    text: str


@dataclass(frozen=True)
class DialogueSession:
    session_id: str
    timestamp: date
    turns: tuple[Turn, ...]

    def __post_init__(self):
        if not self.turns:
            raise DataError(f"session {self.session_id} has no turns")

    def text(self) -> str:
        return "\n".join(f"{t.speaker}: {t.text}" for t in self.turns)


@dataclass(frozen=True)
class DialogueCorpus:
    conversation_id: str
    speakers: tuple[str, ...]
    sessions: tuple[DialogueSession, ...]

    def __post_init__(self):
        for a, b in zip(self.sessions, self.sessions[1:]):
            if not a.timestamp < b.timestamp:
                raise DataError(f"{self.conversation_id}: session {b.session_id} ({b.timestamp}) "
                                f"does not come after session {a.session_id} ({a.timestamp})")
        ids = [s.session_id for s in self.sessions]
        if len(set(ids)) != len(ids):
            raise DataError(f"{self.conversation_id}: duplicate session ids")

    def session(self, session_id: str) -> DialogueSession:
        for s in self.sessions:
            if s.session_id == session_id:
                return s
        raise KeyError(session_id)

    def sanity_window(self) -> tuple[date, date]:
        return (add_relative(self.sessions[0].timestamp, Duration(years=-SANITY_YEARS)),
                add_relative(self.sessions[-1].timestamp, Duration(years=SANITY_YEARS)))

    def to_dict(self) -> dict:
        return {
            "conversation_id": self.conversation_id,
            "speakers": list(self.speakers),
            "sessions": [
                {"session_id": s.session_id, "timestamp": s.timestamp.isoformat(),
                 "turns": [{"speaker": t.speaker, "text": t.text} for t in s.turns]}
                for s in self.sessions
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DialogueCorpus":
        try:
            sessions = tuple(
                DialogueSession(str(s["session_id"]), parse_date(s["timestamp"]),
                                tuple(Turn(t["speaker"], t["text"]) for t in s["turns"]))
                for s in d["sessions"]
            )
            return cls(str(d["conversation_id"]), tuple(d.get("speakers", ())), sessions)
        except (KeyError, TypeError) as exc:
            raise FormatError(f"corpus is missing field {exc}") from None


@dataclass(frozen=True)
class MemoryEntry:
    entry_id: int
    session_id: str
    mention_date: date
    event_date: date | None  # None means the date could not be inferred
    summary: str
    kind: str  # "timeline" or "flat"
    fallback: bool = False

    def to_dict(self) -> dict:
        return {
            "entry_id": self.entry_id,
            "session_id": self.session_id,
            "mention_date": self.mention_date.isoformat(),
            "event_date": self.event_date.isoformat() if self.event_date else None,
            "summary": self.summary,
            "kind": self.kind,
            "fallback": self.fallback,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MemoryEntry":
        ev = d.get("event_date")
        return cls(int(d["entry_id"]), str(d["session_id"]), parse_date(d["mention_date"]),
                   parse_date(ev) if ev else None, d["summary"], d.get("kind", "timeline"),
                   bool(d.get("fallback", False)))


@dataclass
class MemoryPool:
    conversation_id: str
    entries: list[MemoryEntry] = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def extend(self, entries: Iterable[MemoryEntry]) -> list[MemoryEntry]:
        """Append entries, assigning consecutive ids starting after the last one."""
        with self._lock:
            next_id = max((e.entry_id for e in self.entries), default=0) + 1
            added = []
            for e in entries:
                added.append(replace(e, entry_id=next_id))
                next_id += 1
            self.entries.extend(added)
            return added

    def by_id(self) -> dict[int, MemoryEntry]:
        return {e.entry_id: e for e in self.entries}

    def session_dates(self) -> dict[str, date]:
        out: dict[str, date] = {}
        for e in self.entries:
            out.setdefault(e.session_id, e.mention_date)
        return out

    def __len__(self) -> int:
        return len(self.entries)

    def to_dict(self) -> dict:
        return {"conversation_id": self.conversation_id, "entries": [e.to_dict() for e in self.entries]}

    @classmethod
    def from_dict(cls, d: dict) -> "MemoryPool":
        try:
            entries = [MemoryEntry.from_dict(e) for e in d["entries"]]
        except (KeyError, TypeError) as exc:
            raise FormatError(f"memory entry is missing field {exc}") from None
        ids = [e.entry_id for e in entries]
        if len(set(ids)) != len(ids):
            raise DataError(f"memory for {d.get('conversation_id')} has duplicate entry ids")
        return cls(str(d["conversation_id"]), entries)


# -- file helpers ------------------------------------------------------------

def _load_json(path) -> object:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None


def load_corpora(path) -> list[DialogueCorpus]:
    """Read a corpus file holding one conversation or a list of them."""
    data = _load_json(path)
    items = data if isinstance(data, list) else [data]
    return [DialogueCorpus.from_dict(d) for d in items]


def save_corpora(corpora: list[DialogueCorpus], path) -> None:
    data = corpora[0].to_dict() if len(corpora) == 1 else [c.to_dict() for c in corpora]
    Path(path).write_text(json.dumps(data, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def load_pools(path) -> dict[str, MemoryPool]:
    data = _load_json(path)
    items = data if isinstance(data, list) else [data]
    pools = [MemoryPool.from_dict(d) for d in items]
    return {p.conversation_id: p for p in pools}


def save_pools(pools: list[MemoryPool], path) -> None:
    data = pools[0].to_dict() if len(pools) == 1 else [p.to_dict() for p in pools]
    Path(path).write_text(json.dumps(data, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


# -- memorization ------------------------------------------------------------

def _truncate(text: str, limit: int = FALLBACK_CHARS) -> str:
    return text if len(text) <= limit else text[: limit - 3].rstrip() + "..."


def parse_timeline(text: str) -> list[tuple[date | None, str]]:
    """Read ``DATE | SUMMARY`` lines; lines of any other shape are skipped."""
    items = []
    for line in text.splitlines():
        m = _LINE_RE.match(line)
        if not m:
            continue
        raw_date, summary = m.group(1).strip(), m.group(2).strip()
        if raw_date.upper() == "UNKNOWN":
            items.append((None, summary))
            continue
        try:
            items.append((parse_date(raw_date), summary))
        except (FormatError, DomainError):
            continue
    return items


def memorize_timeline(session: DialogueSession, gateway: Gateway,
                      window: tuple[date, date] | None = None) -> list[MemoryEntry]:
    """Summarise a session into dated entries.

    Entries come back with ``entry_id`` 0; :meth:`MemoryPool.extend` numbers
    them.  Dates outside ``window`` are demoted to unknown.  An unreadable
    reply is retried once, after which the raw session text is stored.
    """
    req = ChatRequest.build("mem", prompts.TIMELINE_SYSTEM,
                            prompts.TIMELINE_USER.format(date=session.timestamp.isoformat(),
                                                         session=prompts.render_session(session)))
    reply = gateway.complete(req)
    items = parse_timeline(reply)
    if not items:
        log.warning("session %s: unreadable timeline, asking again", session.session_id)
        reply = gateway.complete(req.extended(("assistant", reply), ("user", prompts.TIMELINE_REPAIR)))
        items = parse_timeline(reply)
    if not items:
        return [MemoryEntry(0, session.session_id, session.timestamp, session.timestamp,
                            _truncate(session.text()), "flat", fallback=True)]
    entries = []
    for event_date, summary in items:
        if event_date is not None and window is not None and not window[0] <= event_date <= window[1]:
            log.warning("session %s: event date %s outside sanity window, marking unknown",
                        session.session_id, event_date)
            event_date = None
        entries.append(MemoryEntry(0, session.session_id, session.timestamp, event_date, summary, "timeline"))
    return entries


def memorize_flat(session: DialogueSession, gateway: Gateway) -> MemoryEntry:
    """One undated summary per session, as in MemoChat-style memory."""
    req = ChatRequest.build("mem", prompts.FLAT_SYSTEM, prompts.FLAT_USER.format(
        session=prompts.render_session(session)))
    reply = gateway.complete(req).strip()
    if not reply:
        reply = gateway.complete(req.extended(("assistant", ""), ("user", prompts.FLAT_REPAIR))).strip()
    if not reply:
        return MemoryEntry(0, session.session_id, session.timestamp, session.timestamp,
                           _truncate(session.text()), "flat", fallback=True)
    return MemoryEntry(0, session.session_id, session.timestamp, session.timestamp, reply, "flat")


def memorize_corpus(corpus: DialogueCorpus, gateway: Gateway, mode: str = "timeline", jobs: int = 1) -> MemoryPool:
    """Memorize every session; entry ids follow session order whatever ``jobs`` is."""
    if mode not in ("timeline", "flat"):
        raise ValueError(f"unknown memorization mode {mode!r}")
    window = corpus.sanity_window()

    def one(session):
        if mode == "timeline":
            return memorize_timeline(session, gateway, window)
        return [memorize_flat(session, gateway)]

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool_exec:
        per_session = list(pool_exec.map(one, corpus.sessions))
    pool = MemoryPool(corpus.conversation_id)
    for entries in per_session:
        pool.extend(entries)
    return pool


# -- retrieval ---------------------------------------------------------------

@dataclass
class Retrieval:
    entries: list[MemoryEntry]
    fallback: bool = False


def parse_ids(text: str) -> list[int]:
    for line in text.splitlines():
        if line.strip().upper().startswith("IDS:"):
            body = line.split(":", 1)[1]
            break
    else:
        body = text
    body = _DATE_SHAPED.sub(" ", body)
    return [int(n) for n in re.findall(r"\b\d+\b", body)]


def nearest_entries(question: str, entries: list[MemoryEntry], k: int) -> list[MemoryEntry]:
    """The ``k`` entries dated closest to any date mentioned in the question.

    With no dates in the question, the ``k`` most recently mentioned entries.
    """
    qdates = find_dates(question)
    if not qdates:
        ranked = sorted(entries, key=lambda e: (-e.mention_date.toordinal(), e.entry_id))
        return ranked[:k]

    def distance(e):
        d = e.event_date or e.mention_date
        return min(abs((d - q).days) for q in qdates)

    return sorted(entries, key=lambda e: (distance(e), e.entry_id))[:k]


def retrieve_detailed(question: str, pool: MemoryPool, gateway: Gateway, k: int = DEFAULT_K,
                      chunk_size: int = RETRIEVAL_CHUNK) -> Retrieval:
    if k < 1:
        raise ValueError("k must be at least 1")
    if not pool.entries:
        return Retrieval([])
    known = pool.by_id()
    chosen: list[int] = []
    for start in range(0, len(pool.entries), chunk_size):
        chunk = pool.entries[start:start + chunk_size]
        listing = "\n".join(prompts.render_entry(e) for e in chunk)
        req = ChatRequest.build("retrieval", prompts.RETRIEVAL_SYSTEM,
                                prompts.RETRIEVAL_USER.format(question=question, entries=listing))
        for i in parse_ids(gateway.complete(req)):
            if i in known and i not in chosen:
                chosen.append(i)
    if not chosen:
        return Retrieval(nearest_entries(question, pool.entries, k), fallback=True)
    return Retrieval([known[i] for i in chosen[:k]])


def retrieve(question: str, pool: MemoryPool, gateway: Gateway, k: int = DEFAULT_K) -> list[MemoryEntry]:
    """Ask the retrieval model which memories matter; never invents entries."""
    return retrieve_detailed(question, pool, gateway, k).entries


# -- LoCoMo import -----------------------------------------------------------

_LOCOMO_DATE = re.compile(r"(\d{1,2})\s+([A-Za-z]+),?\s+(\d{4})")


def _locomo_date(text: str) -> date:
    m = _LOCOMO_DATE.search(text)
    if not m or m.group(2).lower() not in MONTH_NUMBERS:
        raise FormatError(f"cannot read LoCoMo session time {text!r}")
    return date(int(m.group(3)), MONTH_NUMBERS[m.group(2).lower()], int(m.group(1)))


def import_locomo(path) -> list[DialogueCorpus]:
    """Convert the upstream LoCoMo JSON layout into corpora (best effort).

    Sessions without turns, or whose date does not advance, are skipped
    with a warning.
    """
    data = _load_json(path)
    corpora = []
    for sample in data if isinstance(data, list) else [data]:
        conv = sample["conversation"]
        speakers = tuple(conv[k] for k in ("speaker_a", "speaker_b") if k in conv)
        numbers = sorted(int(m.group(1)) for k in conv if (m := re.fullmatch(r"session_(\d+)", k)))
        sessions = []
        for n in numbers:
            turns = tuple(Turn(t["speaker"], t.get("text", "")) for t in conv[f"session_{n}"] or [])
            if not turns:
                continue
            ts = _locomo_date(conv.get(f"session_{n}_date_time", ""))
            if sessions and ts <= sessions[-1].timestamp:
                log.warning("%s: skipping session %d, date %s does not advance", sample.get("sample_id"), n, ts)
                continue
            sessions.append(DialogueSession(str(n), ts, turns))
        corpora.append(DialogueCorpus(str(sample.get("sample_id", len(corpora))), speakers, tuple(sessions)))
    return corpora
