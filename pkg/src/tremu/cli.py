"""Command line entry point: ``tremu <command> [options]``.

Errors are printed to stderr as one JSON object and mapped to exit codes:
2 configuration, 3 data, 4 model gateway, 5 internal.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from tremu import __version__
from tremu.errors import ConfigError, DataError, GatewayError, TremuError
from tremu.tel.errors import TelError

log = logging.getLogger("tremu")

EXIT_CONFIG, EXIT_DATA, EXIT_GATEWAY, EXIT_INTERNAL = 2, 3, 4, 5


@dataclass
class RunConfig:
    """Options shared by every command, after merging the config file."""

    backend: str = "replay"
    fixtures: str | None = None
    rate_limit: float | None = None
    jobs: int = 1
    deterministic: bool = False

    def gateway(self):
        from tremu.gateway import Gateway

        if self.backend in ("record", "replay") and not self.fixtures:
            raise ConfigError(f"the {self.backend} backend needs --fixtures")
        if self.backend == "replay" and not Path(self.fixtures).is_dir():
            raise ConfigError(f"fixture directory not found: {self.fixtures}")
        return Gateway(self.backend, self.fixtures, rate_limit=self.rate_limit)


def _existing(path: str | None, what: str) -> Path:
    if not path:
        raise ConfigError(f"{what} path is required")
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"{what} not found: {path}")
    return p


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text, encoding="utf-8")


# -- commands ----------------------------------------------------------------

def cmd_memorize(args, cfg: RunConfig) -> None:
    from tremu.memory import load_corpora, memorize_corpus, save_pools

    corpora = load_corpora(_existing(args.corpus, "corpus"))
    if args.conversation:
        corpora = [c for c in corpora if c.conversation_id in set(args.conversation)]
        if not corpora:
            raise DataError("no corpus matches --conversation")
    gw = cfg.gateway()
    pools = [memorize_corpus(c, gw, args.mode, cfg.jobs) for c in corpora]
    save_pools(pools, args.out)
    log.info("wrote %d entries for %d conversations to %s", sum(len(p) for p in pools), len(pools), args.out)


def cmd_eval(args, cfg: RunConfig) -> None:
    from tremu.evaluation import compute_metrics, render_report
    from tremu.memory import load_corpora, load_pools
    from tremu.reasoner import STRATEGY_MEMORY, StrategyConfig, load_benchmark, run_strategy, write_answer_log

    questions = load_benchmark(_existing(args.benchmark, "benchmark"))
    needs = STRATEGY_MEMORY[args.strategy]
    corpora, pools = {}, {}
    if needs is None:
        corpora = {c.conversation_id: c for c in load_corpora(_existing(args.corpus, "corpus"))}
    else:
        pools = load_pools(_existing(args.memory, "memory"))
    gw = cfg.gateway()
    scfg = StrategyConfig(k=args.k, retries=args.retries, context_tokens=args.context_tokens)

    def answer(q):
        return run_strategy(args.strategy, q, gw, corpora.get(q.conversation_id), pools.get(q.conversation_id), scfg)

    with ThreadPoolExecutor(max_workers=max(1, cfg.jobs)) as pool:
        records = list(pool.map(answer, questions))
    if cfg.deterministic:
        for r in records:
            r.latency = 0.0
    if args.log:
        write_answer_log(records, args.log)
    report = render_report(compute_metrics(records, questions), args.format)
    _write(args.report, _stamp(report, args.format, cfg))


def _stamp(report: str, fmt: str, cfg: RunConfig) -> str:
    if cfg.deterministic or fmt != "text":
        return report
    return report + f"generated: {datetime.now(timezone.utc).isoformat(timespec='seconds')}\n"


def cmd_report(args, cfg: RunConfig) -> None:
    from tremu.evaluation import compute_metrics, render_report
    from tremu.reasoner import load_benchmark, read_answer_log

    questions = load_benchmark(_existing(args.benchmark, "benchmark"))
    reports = [compute_metrics(read_answer_log(_existing(p, "answer log")), questions) for p in args.log]
    _write(args.out, _stamp(render_report(reports, args.format), args.format, cfg))


def _parse_targets(text: str) -> dict[str, int]:
    targets = {}
    for part in text.split(","):
        name, _, n = part.partition("=")
        try:
            targets[name.strip().upper()] = int(n)
        except ValueError:
            raise ConfigError(f"bad --targets entry {part!r}; expected e.g. TA=4,TP=3,TI=4") from None
    return targets


def cmd_build_bench(args, cfg: RunConfig) -> None:
    from tremu.bench import create_qas, export_review, extract_corpus_events, import_review, link_events
    from tremu.memory import load_corpora
    from tremu.reasoner import save_benchmark

    if args.review:
        questions = import_review(_existing(args.review, "review file"))
        save_benchmark(questions, args.out)
        log.info("wrote %d reviewed questions to %s", len(questions), args.out)
        return
    corpora = load_corpora(_existing(args.corpus, "corpus"))
    targets = _parse_targets(args.targets)
    gw = cfg.gateway()
    drafts = []
    for c in corpora:
        events = extract_corpus_events(c, gw, cfg.jobs)
        groups = link_events(events, gw)
        drafts += create_qas(c.conversation_id, events, groups, gw, targets, args.unanswerable_fraction, args.seed)
    export_review(drafts, args.out)
    log.info("wrote %d drafts for review to %s", len(drafts), args.out)


def _env_bindings(args) -> dict:
    from tremu.tel import value_from_json

    env = {}
    if args.env_file:
        data = json.loads(_existing(args.env_file, "env file").read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise DataError("env file must hold a JSON object")
        env.update({k: value_from_json(v) for k, v in data.items()})
    for item in args.env or []:
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"bad --env {item!r}; expected name=YYYY-MM-DD")
        env[name.strip()] = value_from_json(value.strip())
    return env


def cmd_exec_tel(args, cfg: RunConfig) -> None:
    from tremu.tel import format_value, render_trace, run_program, trace_digest, value_to_json

    source = sys.stdin.read() if args.program == "-" else _existing(args.program, "program").read_text("utf-8")
    value, trace = run_program(source, _env_bindings(args), args.budget)
    if args.json:
        out = {"value": value_to_json(value), "trace": [s.to_dict() for s in trace],
               "trace_digest": trace_digest(trace)}
        sys.stdout.write(json.dumps(out, indent=2) + "\n")
    else:
        if trace:
            sys.stdout.write(render_trace(trace) + "\n")
        sys.stdout.write(format_value(value) + "\n")


# -- argument handling --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    from tremu.gateway import BACKENDS
    from tremu.reasoner import DEFAULT_CONTEXT_TOKENS, DEFAULT_RETRIES, STRATEGY_NAMES
    from tremu.memory import DEFAULT_K
    from tremu.tel import DEFAULT_BUDGET

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of option defaults (keys as in the long flags)")
    common.add_argument("--backend", choices=BACKENDS)
    common.add_argument("--fixtures", help="fixture directory for record/replay")
    common.add_argument("--rate-limit", type=float, help="requests per minute for live calls")
    common.add_argument("--jobs", type=int, help="concurrent workers (default 1)")
    common.add_argument("--deterministic", action="store_true", default=None,
                        help="zero latencies and omit timestamps so outputs are byte-stable")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="tremu", description="Temporal reasoning over multi-session dialogue.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("memorize", parents=[common], help="build memory from dialogue sessions")
    m.add_argument("--corpus")
    m.add_argument("--out", default="memory.json")
    m.add_argument("--mode", choices=("timeline", "flat"), default="timeline")
    m.add_argument("--conversation", action="append", help="restrict to these conversation ids")
    m.set_defaults(func=cmd_memorize)

    e = sub.add_parser("eval", parents=[common], help="answer a benchmark and score it")
    e.add_argument("--benchmark")
    e.add_argument("--corpus", help="dialogue corpus (sp and cot strategies)")
    e.add_argument("--memory", help="memory JSON (memory-based strategies)")
    e.add_argument("--strategy", choices=STRATEGY_NAMES, default="tremu")
    e.add_argument("--k", type=int, default=DEFAULT_K, help="memories retrieved per question")
    e.add_argument("--retries", type=int, default=DEFAULT_RETRIES)
    e.add_argument("--context-tokens", type=int, default=DEFAULT_CONTEXT_TOKENS)
    e.add_argument("--log", help="answer log JSONL to write")
    e.add_argument("--report", help="report file (default stdout)")
    e.add_argument("--format", choices=("text", "json", "csv"), default="text")
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("build-bench", parents=[common], help="draft questions, or import a reviewed file")
    b.add_argument("--corpus")
    b.add_argument("--review", help="reviewed JSONL to turn into a benchmark")
    b.add_argument("--out", default="review.jsonl")
    b.add_argument("--targets", default="TA=4,TP=3,TI=4")
    b.add_argument("--unanswerable-fraction", type=float, default=112 / 600)
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_build_bench)

    x = sub.add_parser("exec-tel", parents=[common], help="run a TEL program and print its trace")
    x.add_argument("program", help="program file, or - for stdin")
    x.add_argument("--env", action="append", help="name=YYYY-MM-DD binding (repeatable)")
    x.add_argument("--env-file", help="JSON object of bindings")
    x.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    x.add_argument("--json", action="store_true")
    x.set_defaults(func=cmd_exec_tel)

    r = sub.add_parser("report", parents=[common], help="score answer logs")
    r.add_argument("--log", action="append", required=True, help="answer log JSONL (repeatable)")
    r.add_argument("--benchmark")
    r.add_argument("--format", choices=("text", "json", "csv"), default="text")
    r.add_argument("--out", help="output file (default stdout)")
    r.set_defaults(func=cmd_report)
    p.commands = {"memorize": m, "eval": e, "build-bench": b, "exec-tel": x, "report": r}
    return p


def _load_config(path: str) -> dict:
    try:
        data = json.loads(_existing(path, "config file").read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    """Parse ``argv``; values from ``--config`` act as defaults under the flags."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sub = parser.commands[args.command]
        known = {a.dest for a in sub._actions} - {"help", "config"}
        data = _load_config(args.config)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys for {args.command}: {', '.join(unknown)}")
        sub.set_defaults(**data)
        args = parser.parse_args(argv)
    return args


def run_config(args) -> RunConfig:
    cfg = RunConfig()
    for name in ("backend", "fixtures", "rate_limit", "jobs", "deterministic"):
        value = getattr(args, name)
        if value is not None:
            setattr(cfg, name, value)
    if cfg.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    return cfg


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, GatewayError):
        return EXIT_GATEWAY
    if isinstance(exc, (DataError, TelError)):
        return EXIT_DATA
    return EXIT_INTERNAL


def main(argv: list[str] | None = None) -> int:
    try:
        args = parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        args.func(args, run_config(args))
    except Exception as exc:
        code = exit_code(exc)
        payload = exc.to_dict() if isinstance(exc, TremuError) else {"error": "InternalError", "message": repr(exc)}
        payload["exit_code"] = code
        if code == EXIT_INTERNAL:
            log.debug("internal error", exc_info=True)
        sys.stderr.write(json.dumps(payload) + "\n")
        return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
