"""Lexer and recursive-descent parser for TEL.

Grammar::

    program  := {NEWLINE} {binding {NEWLINE}} terminal {NEWLINE}
    binding  := "let" IDENT ":=" expr NEWLINE
    terminal := "answer" expr
    expr     := "if" expr "then" expr "else" expr
              | "date" "(" INT "," INT "," INT ")"
              | ["-"] INT UNIT            (duration, e.g. "2 weeks")
              | ["-"] INT | STRING | WEEKDAY | IDENT
              | IDENT "(" [expr {"," expr}] ")"

Newlines are significant, so an unclosed bracket is reported on the line
where it was opened.  ``#`` starts a comment running to end of line.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from tremu.tel.ast import (
    Binding,
    Call,
    DateLit,
    DurationLit,
    Expr,
    If,
    IntLit,
    Name,
    Program,
    StringLit,
    WeekdayLit,
)
from tremu.tel.errors import TelParseError

KEYWORDS = frozenset({"let", "answer", "if", "then", "else"})
WEEKDAYS = frozenset({"MO", "TU", "WE", "TH", "FR", "SA", "SU"})
UNIT_WORDS = {
    "day": "day", "days": "day",
    "week": "week", "weeks": "week",
    "month": "month", "months": "month",
    "year": "year", "years": "year",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<assign>:=)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<comma>,)
  | (?P<minus>-)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            ch = source[pos]
            if ch == '"':
                raise TelParseError("unterminated string literal", line, col)
            raise TelParseError(f"unexpected character {ch!r}", line, col)
        kind = m.lastgroup
        if kind == "newline":
            tokens.append(Token("newline", "\n", line, col))
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.lines = source.split("\n")
        self.tokens = tokenize(source)
        self.i = 0

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok: Token | None = None) -> TelParseError:
        tok = tok or self.peek()
        return TelParseError(message, tok.line, tok.col)

    def expect(self, kind: str, what: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            found = "end of line" if tok.kind == "newline" else "end of input" if tok.kind == "eof" else repr(tok.text)
            raise self.error(f"expected {what}, found {found}", tok)
        return self.advance()

    def is_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "ident" and tok.text == word

    def skip_newlines(self) -> None:
        while self.peek().kind == "newline":
            self.advance()

    def source_line(self, line: int) -> str:
        text = self.lines[line - 1]
        # strip a trailing comment, but not a '#' inside a string literal
        out, in_str, esc = [], False, False
        for ch in text:
            if in_str:
                esc = (ch == "\\") and not esc
                if ch == '"' and not esc:
                    in_str = False
            elif ch == '"':
                in_str = True
            elif ch == "#":
                break
            out.append(ch)
        return "".join(out).strip()

    def program(self) -> Program:
        bindings = []
        self.skip_newlines()
        while self.is_keyword("let"):
            bindings.append(self.binding())
            self.skip_newlines()
        if not self.is_keyword("answer"):
            tok = self.peek()
            if tok.kind == "eof":
                raise self.error("program has no 'answer' line", tok)
            raise self.error(f"expected 'let' or 'answer', found {tok.text!r}", tok)
        start = self.advance()
        answer = self.expr()
        if self.peek().kind not in ("newline", "eof"):
            raise self.error(f"unexpected {self.peek().text!r} after answer expression")
        self.skip_newlines()
        if self.peek().kind != "eof":
            raise self.error("'answer' must be the last statement")
        return Program(tuple(bindings), answer, answer_source=self.source_line(start.line))

    def binding(self) -> Binding:
        let = self.advance()
        name_tok = self.expect("ident", "a name after 'let'")
        name = name_tok.text
        if name in KEYWORDS or name in WEEKDAYS or name == "date":
            raise self.error(f"{name!r} is reserved and cannot be bound", name_tok)
        self.expect("assign", "':='")
        expr = self.expr()
        tok = self.peek()
        if tok.kind != "newline":
            if tok.kind == "eof":
                raise self.error("program has no 'answer' line", tok)
            raise self.error(f"unexpected {tok.text!r} after expression", tok)
        self.advance()
        return Binding(name, expr, line=let.line, source=self.source_line(let.line))

    def expr(self) -> Expr:
        tok = self.peek()
        pos = {"line": tok.line, "col": tok.col}
        if tok.kind == "ident" and tok.text == "if":
            self.advance()
            cond = self.expr()
            if not self.is_keyword("then"):
                raise self.error("expected 'then'")
            self.advance()
            then = self.expr()
            if not self.is_keyword("else"):
                raise self.error("expected 'else'")
            self.advance()
            return If(cond, then, self.expr(), **pos)
        if tok.kind == "minus" or tok.kind == "int":
            return self.number()
        if tok.kind == "string":
            self.advance()
            try:
                return StringLit(json.loads(tok.text), **pos)
            except json.JSONDecodeError:
                raise self.error("invalid escape in string literal", tok) from None
        if tok.kind == "ident":
            if tok.text in KEYWORDS:
                raise self.error(f"unexpected keyword {tok.text!r}", tok)
            self.advance()
            if tok.text == "date" and self.peek().kind == "lparen":
                return self.date_literal(pos)
            if self.peek().kind == "lparen":
                return Call(tok.text, self.arguments(), **pos)
            if tok.text in WEEKDAYS:
                return WeekdayLit(tok.text, **pos)
            return Name(tok.text, **pos)
        if tok.kind in ("newline", "eof"):
            raise self.error("expression expected before end of line", tok)
        raise self.error(f"unexpected {tok.text!r}", tok)

    def signed_int(self) -> int:
        negative = False
        if self.peek().kind == "minus":
            self.advance()
            negative = True
        tok = self.expect("int", "an integer")
        return -int(tok.text) if negative else int(tok.text)

    def number(self) -> Expr:
        tok = self.peek()
        value = self.signed_int()
        unit_tok = self.peek()
        if unit_tok.kind == "ident" and unit_tok.text in UNIT_WORDS:
            self.advance()
            return DurationLit(value, UNIT_WORDS[unit_tok.text], line=tok.line, col=tok.col)
        return IntLit(value, line=tok.line, col=tok.col)

    def date_literal(self, pos: dict) -> DateLit:
        self.expect("lparen", "'('")
        parts = []
        for i in range(3):
            if i:
                self.expect("comma", "',' in date(year, month, day)")
            if self.peek().kind not in ("int", "minus"):
                raise self.error("date() takes three integer literals")
            parts.append(self.signed_int())
        self.expect("rparen", "')' to close date(")
        return DateLit(*parts, **pos)

    def arguments(self) -> tuple[Expr, ...]:
        self.expect("lparen", "'('")
        args = []
        if self.peek().kind != "rparen":
            args.append(self.expr())
            while self.peek().kind == "comma":
                self.advance()
                args.append(self.expr())
        self.expect("rparen", "')' or ','")
        return tuple(args)


def parse_program(source: str) -> Program:
    """Parse TEL source text into a :class:`Program`."""
    return _Parser(source).program()


def parse_expr(source: str) -> Expr:
    p = _Parser(source)
    e = p.expr()
    if p.peek().kind not in ("newline", "eof"):
        raise p.error(f"unexpected {p.peek().text!r}")
    return e
