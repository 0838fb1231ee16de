"""Regenerate the shipped datasets and their replay fixtures.

Model replies are scripted below rather than sampled from a live endpoint.
The real memorization and answering code runs against a recording gateway,
so every fixture key is exactly the request the package makes.  Run from
the repository root:

    python3 scripts/build_fixtures.py
"""

from __future__ import annotations

import re
import shutil
from datetime import date
from pathlib import Path

from tremu import prompts
from tremu.gateway import ChatRequest, Gateway
from tremu.memory import DialogueCorpus, DialogueSession, Turn, memorize_corpus, save_corpora, save_pools
from tremu.reasoner import (
    TemporalQuestion,
    answer_cot,
    answer_timeline_cot,
    answer_tremu,
    save_benchmark,
)

DATA = Path(__file__).resolve().parents[1] / "src" / "tremu" / "data"
RECORDED_AT = "2024-01-01T00:00:00+00:00"


def corpus(cid, speakers, sessions):
    return DialogueCorpus(cid, speakers, tuple(
        DialogueSession(sid, ts, tuple(Turn(s, t) for s, t in turns)) for sid, ts, turns in sessions))


def tel(*lines):
    return "```tel\n" + "\n".join(lines) + "\n```"


# -- mini benchmark ------------------------------------------------------------

MINI = corpus("mini-1", ("Maya", "Tom"), [
    ("1", date(2021, 5, 3), [
        ("Maya", "Guess what, I adopted a cat yesterday! She's a little grey tabby called Pixel."),
        ("Tom", "That's lovely. Big week for me too: I start my new job at the design studio next Monday."),
        ("Maya", "Congratulations! Things have been busy since my sister's wedding two weeks ago."),
        ("Tom", "How was the wedding?"),
        ("Maya", "Wonderful, although I cried through the whole ceremony."),
    ]),
    ("2", date(2021, 5, 20), [
        ("Tom", "My first week at the studio went well. Last Friday I gave my first presentation to a client."),
        ("Maya", "Nice! I took Pixel to the vet three days ago for her vaccinations."),
        ("Tom", "Is she okay?"),
        ("Maya", "She's fine. I also ran a 10k last Sunday, my first race in years."),
    ]),
    ("3", date(2021, 6, 14), [
        ("Tom", "I have news: I got promoted last Wednesday!"),
        ("Maya", "Already? That's amazing. I finally moved into my new flat on the first of the month."),
        ("Tom", "We should celebrate. I'm also planning a trip at some point, not sure when."),
    ]),
])

MINI_TIMELINE = {
    "2021-05-03": ["2021-05-03 | Maya and Tom catch up; Maya has a new cat and Tom has a new job lined up.",
                   "2021-05-02 | Maya adopted a grey tabby cat called Pixel.",
                   "2021-05-10 | Tom starts his new job at a design studio.",
                   "2021-04-19 | Maya's sister got married."],
    "2021-05-20": ["2021-05-20 | Tom reports on his first week at work; Maya talks about her cat and running.",
                   "2021-05-14 | Tom gave his first presentation to a client at the studio.",
                   "2021-05-17 | Maya took Pixel to the vet for vaccinations.",
                   "2021-05-16 | Maya ran a 10k race, her first in years."],
    "2021-06-14": ["2021-06-14 | Tom shares career news and Maya has settled into a new flat.",
                   "2021-06-09 | Tom was promoted.",
                   "2021-06-01 | Maya moved into her new flat.",
                   "UNKNOWN | Tom is planning a trip at an undecided time."],
}

MINI_FLAT = {
    "2021-05-03": "Maya adopted a cat called Pixel and talked about her sister's wedding; Tom is about to start "
                  "a new job at a design studio.",
    "2021-05-20": "Tom described his first week at the studio and his first client presentation. Maya took her "
                  "cat to the vet and ran a 10k race.",
    "2021-06-14": "Tom was promoted and is planning a trip. Maya moved into her new flat.",
}


def q(qid, qtype, text, options, gold, cid="mini-1"):
    opts = tuple(options)
    return TemporalQuestion(qid, cid, qtype, text, opts, gold, opts[gold] == "Unanswerable")


MINI_QUESTIONS = [
    q("mini-01", "TA", "When did Maya adopt her cat?",
      ["04/30/2021", "05/01/2021", "05/02/2021", "05/03/2021", "Unanswerable"], 2),
    q("mini-02", "TA", "When did Tom give his first client presentation?",
      ["May 7, 2021", "May 13, 2021", "May 14, 2021", "May 21, 2021", "Unanswerable"], 2),
    q("mini-03", "TA", "When did Maya move into her new flat?",
      ["05/31/2021", "06/01/2021", "06/07/2021", "06/14/2021", "Unanswerable"], 1),
    q("mini-04", "TA", "When did Tom start his new job?",
      ["May 3, 2021", "May 10, 2021", "May 17, 2021", "May 24, 2021", "Unanswerable"], 1),
    q("mini-05", "TP", "Which happened first: Maya adopting her cat or her sister's wedding?",
      ["Maya adopted her cat", "Maya's sister got married", "Unanswerable"], 1),
    q("mini-06", "TP", "Which happened first: Tom's promotion or Maya's move to her new flat?",
      ["Tom's promotion", "Maya's move", "Unanswerable"], 1),
    q("mini-07", "TP", "Which came first: Pixel's vet visit or Maya's 10k race?",
      ["The vet visit", "The 10k race", "Unanswerable"], 1),
    q("mini-08", "TI", "How many days passed between Maya adopting her cat and taking it to the vet?",
      ["14 days", "15 days", "16 days", "3 weeks", "Unanswerable"], 1),
    q("mini-09", "TI", "How long after starting his new job was Tom promoted?",
      ["2 weeks", "3 weeks", "30 days", "2 months", "Unanswerable"], 2),
    q("mini-10", "TI", "How much time passed between Maya's sister's wedding and Pixel's vet visit?",
      ["2 weeks", "3 weeks", "4 weeks", "5 weeks", "Unanswerable"], 2),
    q("mini-11", "TI", "How much time passed between Tom's first client presentation and his promotion?",
      ["20 days", "26 days", "3 weeks", "5 weeks", "Unanswerable"], 1),
    q("mini-12", "TA", "When did Tom buy his car?",
      ["May 1, 2021", "May 8, 2021", "June 5, 2021", "June 12, 2021", "Unanswerable"], 4),
]

# per question: retrieval reply, program replies in attempt order, select reply (if reached)
MINI_SCRIPT = {
    "mini-01": ("IDS: 2, 1", [tel("let t_mentioned := session_1_date",
                                  "let t_adopt := sub(t_mentioned, 1 day)",
                                  "answer t_adopt")], None),
    "mini-02": ("IDS: 6, 5", [tel("let t_mentioned := session_2_date",
                                  "let t_present := next_weekday(sub(t_mentioned, 1 day), FR, -1",
                                  "answer t_present"),
                              tel("let t_mentioned := session_2_date",
                                  "let t_present := next_weekday(sub(t_mentioned, 1 day), FR, -1)",
                                  "answer t_present")], None),
    "mini-03": ("IDS: 11, 9", [tel("let t_move := event_11_date", "answer t_move")], None),
    "mini-04": ("IDS: 3, 1", [tel("let t_mentioned := session_1_date",
                                  "let t_job := next_weekday(add(t_mentioned, 1 day), MO)",
                                  "answer t_job")], None),
    "mini-05": ("IDS: 4, 2", [tel("let t_cat := event_2_date",
                                  "let t_wedding := event_4_date",
                                  'answer if before(t_wedding, t_cat) then "B" else "A"')], None),
    "mini-06": ("IDS: 10, 11", [tel("let t_promotion := event_10_date",
                                    "let t_move := event_11_date",
                                    "answer before(t_move, t_promotion)")],
                "The program shows the move (2021-06-01) came before the promotion (2021-06-09).\nAnswer: B"),
    "mini-07": ("IDS: 7, 8", [tel("let t_vet := event_7_date",
                                  "let t_race := event_8_date",
                                  'answer if before(t_vet, t_race) then "A" else "B"')], None),
    "mini-08": ("IDS: 2, 7", [tel("answer diff_days(event_2_date, event_7_date)")], None),
    "mini-09": ("IDS: 3, 10", [tel("let t_job := event_3_date",
                                   "let t_promotion := event_10_date",
                                   "answer diff_days(t_job, t_promotion)")], None),
    "mini-10": ("IDS: 4, 7", [tel("answer diff_days(event_4_date, event_7_date)")], None),
    # measures from the wrong anchor (the session date), so it is scored wrong
    "mini-11": ("IDS: 6, 10", [tel("let t_mentioned := session_2_date",
                                   "let t_promotion := event_10_date",
                                   "answer diff_days(t_mentioned, t_promotion)")], None),
    "mini-12": ("IDS: none", [tel('answer "Unanswerable"')], None),
}

# -- case study --------------------------------------------------------------

CASES = corpus("case-study", ("Sharon", "Jordan"), [
    ("1", date(2020, 3, 2), [
        ("Sharon", "I finally signed up for that week-long wilderness survival course!"),
        ("Jordan", "Brave. When does it start?"),
        ("Sharon", "Some time this month. They still have to confirm the dates."),
    ]),
    ("2", date(2020, 3, 16), [
        ("Sharon", "I'm back! The survival course started last Thursday and I only got home this morning."),
        ("Jordan", "How did it go?"),
        ("Sharon", "Exhausting but worth it. Last week, before I left, I also volunteered at the animal shelter."),
        ("Jordan", "You never stop."),
    ]),
])

CASE_TIMELINE = {
    "2020-03-02": ["2020-03-02 | Sharon tells Jordan she signed up for a week-long wilderness survival course.",
                   "UNKNOWN | The survival course is due to start some time in March."],
    "2020-03-16": ["2020-03-16 | Sharon is back from her survival course and tells Jordan about it.",
                   "2020-03-12 | Sharon's week-long survival course started.",
                   "2020-03-09 | Sharon volunteered at the animal shelter during the previous week."],
}

CASE_QUESTIONS = [
    q("case-1", "TA", "When did Sharon start her survival course?",
      ["03/05/2020", "03/09/2020", "03/12/2020", "03/16/2020", "Unanswerable"], 2, "case-study"),
    q("case-2", "TA", "When did Sharon volunteer at the animal shelter?",
      ["The week of 02/24/2020", "The week of 03/02/2020", "The week of 03/11/2020", "The week of 03/16/2020",
       "Unanswerable"], 2, "case-study"),
]

CASE_SCRIPT = {
    "case-1": ("IDS: 4, 3", [tel("let t_mentioned := session_2_date",
                                 "let t_start_course := event_4_date",
                                 "answer t_start_course")], None),
    "case-2": ("IDS: 5, 3", [tel("let t_mentioned := session_2_date",
                                 "let last_week := week_range(sub(t_mentioned, 1 week))",
                                 "answer last_week")], None),
}

CASE_COT = {
    "case-1": ("On 03/16/2020 Sharon says the survival course started last Thursday, which would be "
               "03/12/2020. But it was a week-long course, so it would still have been running until about "
               "03/19/2020, which conflicts with her being home on 03/16/2020. The start date cannot be "
               "pinned down from the conversation.\nAnswer: E"),
    "case-2": ("Sharon speaks on 03/16/2020, so last week is the week of 03/09/2020. None of the options "
               "names the week of 03/09/2020, so the options do not contain the right week.\nAnswer: E"),
}

CASE_TIMELINE_COT = {
    "case-1": ("Memory [4] records that the survival course started on 2020-03-12; Sharon mentioned it on "
               "2020-03-16. The question asks for the start date.\nAnswer: C"),
}


class ScriptedModel:
    """Answers each request from the tables above; unknown requests are errors."""

    name = "scripted"

    def __init__(self, timeline, flat, script, cot=None, timeline_cot=None):
        self.timeline = timeline
        self.flat = flat or {}
        self.script = script
        self.cot = cot or {}
        self.timeline_cot = timeline_cot or {}
        self.by_text = {}

    def register(self, questions):
        self.by_text = {qq.text: qq.question_id for qq in questions}

    def _qid(self, req: ChatRequest) -> str:
        m = re.search(r"^Question: (.*)$", req.messages[1][1], re.M)
        return self.by_text[m.group(1)]

    def __call__(self, req: ChatRequest) -> str:
        system, user = req.messages[0][1], req.messages[1][1]
        if req.role_tag == "mem":
            when = re.search(r"\[Session \S+, \w+ (\d\d)/(\d\d)/(\d{4})\]", user)
            key = f"{when.group(3)}-{when.group(1)}-{when.group(2)}"
            return "\n".join(self.timeline[key]) if system == prompts.TIMELINE_SYSTEM else self.flat[key]
        qid = self._qid(req)
        retrieval, programs, select = self.script[qid]
        if req.role_tag == "retrieval":
            return retrieval
        if req.role_tag == "code":
            return programs[(len(req.messages) - 2) // 2]
        if system == prompts.SELECT_SYSTEM:
            return select
        if "Conversation:" in user:
            return self.cot[qid]
        return self.timeline_cot[qid]


def build(name, corpus_, model, questions, runs, with_flat):
    root = DATA / name
    shutil.rmtree(root / "fixtures", ignore_errors=True)
    root.mkdir(parents=True, exist_ok=True)
    gw = Gateway("record", root / "fixtures", live=model, clock=lambda: RECORDED_AT)
    model.register(questions)
    save_corpora([corpus_], root / "corpus.json")
    timeline = memorize_corpus(corpus_, gw, "timeline")
    save_pools([timeline], root / "memory_timeline.json")
    if with_flat:
        save_pools([memorize_corpus(corpus_, gw, "flat")], root / "memory_flat.json")
    save_benchmark(questions, root / "benchmark.json")
    for only, run in runs:
        for qq in questions:
            if qq.question_id in only:
                run(qq, corpus_, timeline, gw)
    print(f"{name}: {sum(1 for _ in (root / 'fixtures').glob('*.json'))} fixtures")


def main():
    mini = ScriptedModel(MINI_TIMELINE, MINI_FLAT, MINI_SCRIPT)
    build("mini", MINI, mini, MINI_QUESTIONS,
          [(MINI_SCRIPT, lambda qq, c, p, gw: answer_tremu(qq, p, gw))], with_flat=True)
    cases = ScriptedModel(CASE_TIMELINE, None, CASE_SCRIPT, CASE_COT, CASE_TIMELINE_COT)
    build("cases", CASES, cases, CASE_QUESTIONS, [
        (CASE_SCRIPT, lambda qq, c, p, gw: answer_tremu(qq, p, gw)),
        (CASE_COT, lambda qq, c, p, gw: answer_cot(qq, c, gw)),
        (CASE_TIMELINE_COT, lambda qq, c, p, gw: answer_timeline_cot(qq, p, gw)),
    ], with_flat=False)


if __name__ == "__main__":
    main()
