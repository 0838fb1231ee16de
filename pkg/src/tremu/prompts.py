"""Prompt templates for every model role.

All structured outputs use one record per line with ``|`` separators so
they can be parsed without a JSON-speaking model.
"""

from __future__ import annotations

from tremu.tel.builtins import cheat_sheet

LETTERS = "ABCDEFGHIJ"


def render_options(options) -> str:
    return "\n".join(f"{LETTERS[i]}. {o}" for i, o in enumerate(options))


def render_session(session) -> str:
    head = f"[Session {session.session_id}, {session.timestamp.strftime('%A %m/%d/%Y')}]"
    return "\n".join([head] + [f"{t.speaker}: {t.text}" for t in session.turns])


def render_entry(entry) -> str:
    event = entry.event_date.isoformat() if entry.event_date else "unknown"
    return f"[{entry.entry_id}] event date: {event} | mentioned on: {entry.mention_date.isoformat()} | {entry.summary}"


# -- memorization -----------------------------------------------------------

TIMELINE_SYSTEM = """\
You maintain the long-term memory of a conversational assistant.
You will read one session of a multi-session conversation, tagged with the date it took place.
Write a timeline of what the session tells us: first one line summarising the session itself,
dated with the session date, then one line for every event the speakers mention that happened
(or will happen) on a different day. Resolve relative expressions such as "yesterday",
"last week" or "next Friday" against the session date.

Output one line per item, exactly in the form
YYYY-MM-DD | summary
Use UNKNOWN in place of the date when the day cannot be worked out (for example "the other day").
Do not output anything else."""

TIMELINE_USER = "Session date: {date}\n\n{session}"

TIMELINE_REPAIR = """\
Your reply could not be read. Answer again using only lines of the form
YYYY-MM-DD | summary
(or UNKNOWN | summary), one per line, nothing else."""

FLAT_SYSTEM = """\
You maintain the long-term memory of a conversational assistant.
Summarise the following conversation session in a short paragraph covering the topics,
facts and plans the speakers mention. Output only the summary."""

FLAT_USER = "{session}"

FLAT_REPAIR = "Your reply was empty. Output the summary paragraph for the session."

# -- retrieval ---------------------------------------------------------------

RETRIEVAL_SYSTEM = """\
You select memories that help answer a question about a past conversation.
Each memory is listed with its id, the date of the event it describes and the date it was mentioned.
Reply with a single line
IDS: <id>, <id>, ...
listing the relevant memory ids, most relevant first. Reply "IDS: none" if nothing is relevant."""

RETRIEVAL_USER = "Question: {question}\n\nMemories:\n{entries}"

# -- answering ---------------------------------------------------------------

ANSWER_SYSTEM_SP = """\
You answer multiple-choice questions about the timing of events in a conversation.
Reply with the letter of the correct option only."""

ANSWER_SYSTEM_COT = """\
You answer multiple-choice questions about the timing of events in a conversation.
Think it through step by step, then give your final choice on the last line as
Answer: <letter>"""

ANSWER_USER_DIALOGUE = "Conversation:\n{context}\n\nQuestion: {question}\n{options}"

ANSWER_USER_MEMORY = "Relevant memories:\n{context}\n\nQuestion: {question}\n{options}"

ANSWER_USER_NO_CONTEXT = "No memories were found for this question.\n\nQuestion: {question}\n{options}"

# -- code generation ---------------------------------------------------------

CODE_SYSTEM = f"""\
You answer temporal questions about a conversation by writing a short program in TEL,
a date-arithmetic language. A program is a sequence of lines
    let <name> := <expression>
followed by exactly one line
    answer <expression>
Expressions are literals, names, function calls, or `if <cond> then <a> else <b>`.
Literals: date(2020,3,16), durations such as 3 days, 2 weeks, 1 month, -7 days,
strings in double quotes, weekday names MO TU WE TH FR SA SU.
Weeks run Monday to Sunday. next_weekday(t, FR) is the first Friday on or after t;
next_weekday(t, FR, -1) the last Friday on or before t.
allen(a, b) names the interval relation; allen(a, b, "equals") tests one.
Available functions:
{cheat_sheet()}

Name each date you use after what it means (e.g. t_start_course), distinguishing the day an
event happened from the day it was mentioned. The answer should be the value the question asks
for (a date, duration or interval), or the letter of the option as a string when you compare
options yourself. Answer "Unanswerable" only when the memories cannot support any option.

Example
Question: When did Alex adopt the puppy?
Memories: [4] event date: 2020-05-08 | mentioned on: 2020-05-11 | Alex adopted a puppy last Friday.
Dates you may use: session_2_date = 2020-05-11, event_4_date = 2020-05-08
```tel
let t_mentioned := session_2_date
let t_adopt := next_weekday(sub(t_mentioned, 1 day), FR, -1)
answer t_adopt
```

Reply with one program in a ```tel code block."""

CODE_USER = """\
Question: {question}
{options}

Memories:
{entries}

Dates you may use: {env}"""

CODE_RETRY = """\
Running that program failed with
{error}
Write a corrected program in a ```tel code block."""

SELECT_SYSTEM = """\
You choose the answer to a multiple-choice temporal question using the output of a program
that was written to solve it. Check the computed values against each option, then give your
final choice on the last line as
Answer: <letter>"""

SELECT_USER = """\
Question: {question}
{options}

Program:
{program}

Execution trace:
{trace}"""

# -- benchmark construction --------------------------------------------------

EXTRACT_SYSTEM = """\
You extract temporal events from one session of a conversation dated {date}.
For each event a speaker mentions, output one line
EVENT | RELATIVE_EXPRESSION | INFERRED_DATE
where RELATIVE_EXPRESSION is the relative time phrase used ("last week", "next Friday") or NONE
when the time was not expressed relatively, and INFERRED_DATE is YYYY-MM-DD or UNKNOWN.
Output NONE alone if the session mentions no events."""

EXTRACT_USER = "{session}"

LINK_SYSTEM = """\
You are given events extracted from several sessions of the same conversation.
Group events that concern the same or related entities across different sessions,
especially ones that show something changing over time.
Output one line per group:
GROUP | shared entity description | event id, event id, ...
Output NONE if no events are related."""

LINK_USER = "{events}"

CREATE_SYSTEM = """\
You write one multiple-choice question testing temporal reasoning over a conversation.
Question type: {qtype_name}. {qtype_help}
Write exactly {n_options} options, one of which must be the text Unanswerable.
{answerability}
Reply in exactly this format:
QUESTION: <question text>
OPTIONS: <option> | <option> | ...
ANSWER: <letter>"""

CREATE_USER = "Events:\n{events}"

QTYPE_HELP = {
    "TA": ("Temporal Anchoring", "Ask for the exact date (or week) of the event."),
    "TP": ("Temporal Precedence", "Ask which of the two events happened first."),
    "TI": ("Temporal Interval", "Ask how much time passed between the two events."),
}

ANSWERABLE = "The correct option must follow from the events."
UNANSWERABLE = ("Make the question impossible to answer from the conversation (it should ask about a "
                "detail never stated), so that the correct option is Unanswerable.")
