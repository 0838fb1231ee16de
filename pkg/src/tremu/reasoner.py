"""Question answering strategies, from plain prompting to generate-and-execute.

Every strategy returns an :class:`AnswerRecord`; none of them can predict an
index outside the question's options.  When a model reply names no option
the last option is taken and the record is flagged ``unparsed-answer``.
"""

from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from tremu import prompts
from tremu.errors import AmbiguityError, DataError, FormatError
from tremu.gateway import ChatRequest, Gateway
from tremu.memory import DEFAULT_K, DialogueCorpus, MemoryEntry, MemoryPool, retrieve_detailed
from tremu.tel import (
    DEFAULT_BUDGET,
    TelError,
    env_types_of,
    evaluate,
    format_value,
    match_option,
    parse_program,
    render_trace,
    trace_digest,
    typecheck,
)
from tremu.tel.options import is_unanswerable

OPTION_COUNTS = {"TA": 5, "TP": 3, "TI": 5}
DEFAULT_RETRIES = 3
DEFAULT_CONTEXT_TOKENS = 120_000
CHARS_PER_TOKEN = 4

STRATEGY_NAMES = ("sp", "cot", "memochat", "memochat_cot", "timeline_cot", "tremu")
# which memory each strategy reads; None means the raw dialogue
STRATEGY_MEMORY = {"sp": None, "cot": None, "memochat": "flat", "memochat_cot": "flat",
                   "timeline_cot": "timeline", "tremu": "timeline"}


@dataclass(frozen=True)
class TemporalQuestion:
    question_id: str
    conversation_id: str
    qtype: str
    text: str
    options: tuple[str, ...]
    gold: int
    gold_unanswerable: bool = False

    def __post_init__(self):
        object.__setattr__(self, "options", tuple(self.options))
        if self.qtype not in OPTION_COUNTS:
            raise DataError(f"{self.question_id}: unknown question type {self.qtype!r}")
        if len(self.options) != OPTION_COUNTS[self.qtype]:
            raise DataError(f"{self.question_id}: {self.qtype} questions need {OPTION_COUNTS[self.qtype]} "
                            f"options, got {len(self.options)}")
        if not 0 <= self.gold < len(self.options):
            raise DataError(f"{self.question_id}: gold index {self.gold} out of range")
        if self.gold_unanswerable != is_unanswerable(self.options[self.gold]):
            raise DataError(f"{self.question_id}: gold_unanswerable disagrees with the gold option text")

    def is_unanswerable(self, index: int) -> bool:
        return is_unanswerable(self.options[index])

    def to_dict(self) -> dict:
        return {"question_id": self.question_id, "conversation_id": self.conversation_id, "qtype": self.qtype,
                "text": self.text, "options": list(self.options), "gold": self.gold,
                "gold_unanswerable": self.gold_unanswerable}

    @classmethod
    def from_dict(cls, d: dict) -> "TemporalQuestion":
        try:
            return cls(str(d["question_id"]), str(d["conversation_id"]), d["qtype"], d["text"],
                       tuple(d["options"]), int(d["gold"]), bool(d.get("gold_unanswerable", False)))
        except KeyError as exc:
            raise FormatError(f"question is missing field {exc}") from None


def load_benchmark(path) -> list[TemporalQuestion]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    questions = [TemporalQuestion.from_dict(d) for d in data]
    ids = [q.question_id for q in questions]
    if len(set(ids)) != len(ids):
        raise DataError(f"{path}: duplicate question ids")
    return questions


def save_benchmark(questions, path) -> None:
    Path(path).write_text(json.dumps([q.to_dict() for q in questions], indent=2, ensure_ascii=False) + "\n",
                          encoding="utf-8")


@dataclass
class Attempt:
    source: str
    error: dict | None = None
    trace_digest: str | None = None
    value: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    def to_dict(self) -> dict:
        return {"source": self.source, "error": self.error, "trace_digest": self.trace_digest, "value": self.value}


@dataclass
class AnswerRecord:
    question_id: str
    strategy: str
    predicted: int
    selection_path: str  # "auto-match" or "llm-select"
    attempts: list[Attempt] = field(default_factory=list)
    latency: float = 0.0
    flags: list[str] = field(default_factory=list)

    @property
    def letter(self) -> str:
        return prompts.LETTERS[self.predicted]

    def to_dict(self) -> dict:
        return {"question_id": self.question_id, "strategy": self.strategy, "predicted": self.predicted,
                "letter": self.letter, "selection_path": self.selection_path,
                "attempts": [a.to_dict() for a in self.attempts], "latency": round(self.latency, 6),
                "flags": list(self.flags)}

    @classmethod
    def from_dict(cls, d: dict) -> "AnswerRecord":
        try:
            return cls(str(d["question_id"]), d["strategy"], int(d["predicted"]), d["selection_path"],
                       [Attempt(a["source"], a.get("error"), a.get("trace_digest"), a.get("value"))
                        for a in d.get("attempts", [])],
                       float(d.get("latency", 0.0)), list(d.get("flags", [])))
        except KeyError as exc:
            raise FormatError(f"answer record is missing field {exc}") from None


def write_answer_log(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")


def read_answer_log(path) -> list[AnswerRecord]:
    records = []
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            records.append(AnswerRecord.from_dict(json.loads(line)))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{n}: invalid JSON ({exc})") from None
    return records


# -- answer letter extraction -------------------------------------------------

def _letter_patterns(n: int):
    cls = f"[A-{prompts.LETTERS[n - 1]}]"
    return (
        re.compile(rf"(?i:answer)\s*(?:(?i:is)\s*)?[:\-]?\s*\**\s*\(?({cls})\b"),
        re.compile(rf"\(({cls})\)"),
        re.compile(rf"^[\W_]*({cls})[\W_]*$"),
        re.compile(rf"^\s*\**({cls})[.)]\s"),
    )


def extract_letter(text: str, n_options: int) -> int | None:
    """Option index named in a model reply.

    The last non-empty line is searched first ("Answer: C", "(C)", a bare
    "C", "C. ..."), then the whole reply in the same order.
    """
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        return None
    patterns = _letter_patterns(n_options)
    for pat in patterns:
        found = pat.findall(lines[-1])
        if found:
            return ord(found[-1]) - ord("A")
    for pat in patterns:
        found = [m for ln in lines for m in pat.findall(ln)]
        if found:
            return ord(found[-1]) - ord("A")
    return None


def _pick(reply: str, q: TemporalQuestion, flags: list[str]) -> int:
    idx = extract_letter(reply, len(q.options))
    if idx is None:
        flags.append("unparsed-answer")
        return len(q.options) - 1
    return idx


# -- context rendering ---------------------------------------------------------

def render_dialogue(corpus: DialogueCorpus, context_tokens: int | None = DEFAULT_CONTEXT_TOKENS) -> tuple[str, bool]:
    """Whole dialogue as text, dropping the oldest sessions to fit the budget."""
    blocks = [prompts.render_session(s) for s in corpus.sessions]
    if context_tokens is None:
        return "\n\n".join(blocks), False
    budget = context_tokens * CHARS_PER_TOKEN
    kept: list[str] = []
    used = 0
    for block in reversed(blocks):
        if kept and used + len(block) + 2 > budget:
            break
        kept.append(block)
        used += len(block) + 2
    return "\n\n".join(reversed(kept)), len(kept) < len(blocks)


def render_memories(entries: list[MemoryEntry]) -> str:
    return "\n".join(prompts.render_entry(e) for e in entries)


def _question_block(q: TemporalQuestion) -> dict:
    return {"question": q.text, "options": prompts.render_options(q.options)}


# -- baselines ----------------------------------------------------------------

def _answer_over_dialogue(q, corpus, gateway, system, strategy, context_tokens) -> AnswerRecord:
    t0 = time.perf_counter()
    flags: list[str] = []
    context, truncated = render_dialogue(corpus, context_tokens)
    if truncated:
        flags.append("truncated")
    req = ChatRequest.build("select", system, prompts.ANSWER_USER_DIALOGUE.format(context=context, **_question_block(q)))
    predicted = _pick(gateway.complete(req), q, flags)
    return AnswerRecord(q.question_id, strategy, predicted, "llm-select", latency=time.perf_counter() - t0, flags=flags)


def answer_sp(q: TemporalQuestion, corpus: DialogueCorpus, gateway: Gateway,
              context_tokens: int | None = DEFAULT_CONTEXT_TOKENS) -> AnswerRecord:
    """Standard prompting over the full (possibly truncated) dialogue."""
    return _answer_over_dialogue(q, corpus, gateway, prompts.ANSWER_SYSTEM_SP, "sp", context_tokens)


def answer_cot(q: TemporalQuestion, corpus: DialogueCorpus, gateway: Gateway,
               context_tokens: int | None = DEFAULT_CONTEXT_TOKENS) -> AnswerRecord:
    return _answer_over_dialogue(q, corpus, gateway, prompts.ANSWER_SYSTEM_COT, "cot", context_tokens)


def _answer_over_memory(q, pool, gateway, with_cot, strategy, k) -> AnswerRecord:
    t0 = time.perf_counter()
    flags: list[str] = []
    got = retrieve_detailed(q.text, pool, gateway, k)
    if got.fallback:
        flags.append("retrieval-fallback")
    system = prompts.ANSWER_SYSTEM_COT if with_cot else prompts.ANSWER_SYSTEM_SP
    if got.entries:
        user = prompts.ANSWER_USER_MEMORY.format(context=render_memories(got.entries), **_question_block(q))
    else:
        flags.append("degenerate")
        user = prompts.ANSWER_USER_NO_CONTEXT.format(**_question_block(q))
    predicted = _pick(gateway.complete(ChatRequest.build("select", system, user)), q, flags)
    return AnswerRecord(q.question_id, strategy, predicted, "llm-select", latency=time.perf_counter() - t0, flags=flags)


def answer_memochat(q: TemporalQuestion, pool: MemoryPool, gateway: Gateway, with_cot: bool = False,
                    k: int = DEFAULT_K) -> AnswerRecord:
    """Retrieve from per-session summaries, then answer (optionally step by step)."""
    return _answer_over_memory(q, pool, gateway, with_cot, "memochat_cot" if with_cot else "memochat", k)


def answer_timeline_cot(q: TemporalQuestion, pool: MemoryPool, gateway: Gateway, k: int = DEFAULT_K) -> AnswerRecord:
    return _answer_over_memory(q, pool, gateway, True, "timeline_cot", k)


# -- generate, execute, retry, select ----------------------------------------

_FENCE_RE = re.compile(r"```[A-Za-z]*[ \t]*\n(.*?)```", re.S)


def extract_program(reply: str) -> str:
    m = _FENCE_RE.search(reply)
    return m.group(1) if m else reply


def _ident(text: str) -> str:
    return re.sub(r"\W", "_", text)


def tel_environment(pool: MemoryPool, retrieved: list[MemoryEntry]) -> dict:
    """Dates a generated program may reference by name."""
    env = {f"session_{_ident(sid)}_date": d for sid, d in pool.session_dates().items()}
    for e in retrieved:
        if e.event_date is not None:
            env[f"event_{e.entry_id}_date"] = e.event_date
    return env


def _render_env(env: dict) -> str:
    return ", ".join(f"{k} = {v.isoformat()}" for k, v in env.items()) or "none"


def answer_tremu(q: TemporalQuestion, pool: MemoryPool, gateway: Gateway, retries: int = DEFAULT_RETRIES,
                 k: int = DEFAULT_K, budget: int = DEFAULT_BUDGET) -> AnswerRecord:
    """Retrieve, generate a TEL program, run it, and choose an option.

    A program that fails to parse, type-check or run is sent back to the
    model with the error, up to ``retries`` times.  A successful value is
    matched against the options directly; if no option matches, the model
    picks one given the program and its trace.  If every attempt fails the
    model answers from the retrieved memories alone.
    """
    t0 = time.perf_counter()
    flags: list[str] = []
    got = retrieve_detailed(q.text, pool, gateway, k)
    if got.fallback:
        flags.append("retrieval-fallback")
    if not got.entries:
        flags.append("degenerate")
    env = tel_environment(pool, got.entries)
    env_types = env_types_of(env)
    req = ChatRequest.build("code", prompts.CODE_SYSTEM, prompts.CODE_USER.format(
        entries=render_memories(got.entries) or "(none)", env=_render_env(env), **_question_block(q)))

    attempts: list[Attempt] = []
    result = None
    for _ in range(retries + 1):
        reply = gateway.complete(req)
        source = extract_program(reply)
        try:
            typed = typecheck(parse_program(source), env_types)
            value, trace = evaluate(typed, env, budget)
        except TelError as exc:
            attempts.append(Attempt(source, error=exc.to_dict()))
            req = req.extended(("assistant", reply), ("user", prompts.CODE_RETRY.format(error=str(exc))))
            continue
        attempts.append(Attempt(source, trace_digest=trace_digest(trace), value=format_value(value)))
        result = (source, value, trace)
        break

    def done(predicted, path):
        return AnswerRecord(q.question_id, "tremu", predicted, path, attempts, time.perf_counter() - t0, flags)

    if result is None:
        flags.append("exhausted-retries")
        if got.entries:
            user = prompts.ANSWER_USER_MEMORY.format(context=render_memories(got.entries), **_question_block(q))
        else:
            user = prompts.ANSWER_USER_NO_CONTEXT.format(**_question_block(q))
        reply = gateway.complete(ChatRequest.build("select", prompts.ANSWER_SYSTEM_COT, user))
        return done(_pick(reply, q, flags), "llm-select")

    source, value, trace = result
    try:
        idx = match_option(value, list(q.options))
    except AmbiguityError:
        flags.append("ambiguous-match")
        idx = None
    if idx is not None:
        return done(idx, "auto-match")
    user = prompts.SELECT_USER.format(program=source.strip(), trace=render_trace(trace, value), **_question_block(q))
    reply = gateway.complete(ChatRequest.build("select", prompts.SELECT_SYSTEM, user))
    return done(_pick(reply, q, flags), "llm-select")


@dataclass
class StrategyConfig:
    k: int = DEFAULT_K
    retries: int = DEFAULT_RETRIES
    budget: int = DEFAULT_BUDGET
    context_tokens: int | None = DEFAULT_CONTEXT_TOKENS


def run_strategy(strategy: str, q: TemporalQuestion, gateway: Gateway, corpus: DialogueCorpus | None = None,
                 pool: MemoryPool | None = None, config: StrategyConfig | None = None) -> AnswerRecord:
    """Dispatch one question to a named strategy."""
    cfg = config or StrategyConfig()
    if strategy not in STRATEGY_NAMES:
        raise ValueError(f"unknown strategy {strategy!r}")
    needs = STRATEGY_MEMORY[strategy]
    if needs is None and corpus is None:
        raise DataError(f"strategy {strategy} needs the dialogue corpus for {q.conversation_id}")
    if needs is not None and pool is None:
        raise DataError(f"strategy {strategy} needs a {needs} memory pool for {q.conversation_id}")
    table: dict[str, Callable[[], AnswerRecord]] = {
        "sp": lambda: answer_sp(q, corpus, gateway, cfg.context_tokens),
        "cot": lambda: answer_cot(q, corpus, gateway, cfg.context_tokens),
        "memochat": lambda: answer_memochat(q, pool, gateway, False, cfg.k),
        "memochat_cot": lambda: answer_memochat(q, pool, gateway, True, cfg.k),
        "timeline_cot": lambda: answer_timeline_cot(q, pool, gateway, cfg.k),
        "tremu": lambda: answer_tremu(q, pool, gateway, cfg.retries, cfg.k, cfg.budget),
    }
    return table[strategy]()
