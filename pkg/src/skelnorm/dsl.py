"""Text syntax for skeleton programs.

Grammar::

    program := decl* "run" expr
    decl    := IDENT "=" "seq" "(" NUMBER ("," NUMBER)? ("," kv)* ")" ";"
    kv      := ("t_in" | "t_out" | "in" | "out") "=" (NUMBER | IDENT)
    expr    := term ("|" term)*
    term    := factor (";" factor)*
    factor  := "farm" "(" expr ")" | "(" expr ")" | IDENT

";" binds tighter than "|"; "#" starts a comment running to end of line.
Times are in seconds.  A declaration's second positional number is the
latency sigma (default 0); t_in and t_out default to 0.01 * mu.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .core import (
    Constant,
    Farm,
    Normal,
    Pipe,
    Program,
    SeqComp,
    SeqProfile,
    SeqRef,
    Skeleton,
    pipe,
    seqcomp,
)

KEYWORDS = {"seq", "run", "farm"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+(\.\d+)?([eE][+-]?\d+)?|\.\d+([eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>[=(),;|])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    start: int
    end: int


class ParseError(ValueError):
    def __init__(self, message: str, span: Optional[SourceSpan] = None):
        self.span = span
        if span is not None:
            message = f"{span.line}:{span.column}: {message}"
        super().__init__(message)


class UnknownName(ParseError):
    """A skeleton expression references a stage that was never declared."""


@dataclass(frozen=True)
class _Token:
    kind: str  # "number" | "ident" | "sym" | "eof"
    text: str
    span: SourceSpan


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = SourceSpan(line, pos - line_start + 1, pos, pos + 1)
            raise ParseError(f"unexpected character {text[pos]!r}", span)
        kind = m.lastgroup
        value = m.group()
        if kind in ("ws", "comment"):
            for i, ch in enumerate(value):
                if ch == "\n":
                    line += 1
                    line_start = pos + i + 1
        else:
            span = SourceSpan(line, pos - line_start + 1, pos, m.end())
            tokens.append(_Token(kind, value, span))
        pos = m.end()
    tokens.append(_Token("eof", "", SourceSpan(line, pos - line_start + 1, pos, pos)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str, text: Optional[str] = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            raise ParseError(f"expected {want!r}, found {tok.text or 'end of input'!r}", tok.span)
        return self.next()

    # program := decl* "run" expr
    def program(self) -> Program:
        decls: dict[str, SeqProfile] = {}
        while True:
            tok = self.peek()
            if tok.kind == "ident" and tok.text == "run":
                break
            if tok.kind == "eof":
                raise ParseError("expected a 'run' statement", tok.span)
            self._decl(decls)
        self.expect("ident", "run")
        body = self._expr(decls)
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(f"trailing input starting at {tok.text!r}", tok.span)
        return Program(decls, body)

    def _decl(self, decls: dict[str, SeqProfile]) -> None:
        name_tok = self.expect("ident")
        name = name_tok.text
        if name in KEYWORDS:
            raise ParseError(f"{name!r} is reserved", name_tok.span)
        if name in decls:
            raise ParseError(f"duplicate declaration of {name!r}", name_tok.span)
        self.expect("sym", "=")
        self.expect("ident", "seq")
        self.expect("sym", "(")
        mu_tok = self.expect("number")
        mu = float(mu_tok.text)
        sigma = 0.0
        t_in: Optional[float] = None
        t_out: Optional[float] = None
        in_type: Optional[str] = None
        out_type: Optional[str] = None
        first_extra = True
        while self.peek().text == ",":
            self.next()
            tok = self.peek()
            if tok.kind == "number" and first_extra:
                sigma = float(self.next().text)
            elif tok.kind == "ident":
                key_tok = self.next()
                self.expect("sym", "=")
                if key_tok.text in ("t_in", "t_out"):
                    val = float(self.expect("number").text)
                    if key_tok.text == "t_in":
                        t_in = val
                    else:
                        t_out = val
                elif key_tok.text in ("in", "out"):
                    tag = self.expect("ident").text
                    if key_tok.text == "in":
                        in_type = tag
                    else:
                        out_type = tag
                else:
                    raise ParseError(f"unknown parameter {key_tok.text!r}", key_tok.span)
            else:
                raise ParseError(f"expected a parameter, found {tok.text!r}", tok.span)
            first_extra = False
        self.expect("sym", ")")
        self.expect("sym", ";")
        if mu <= 0:
            raise ParseError(f"latency mean must be positive, got {mu_tok.text}", mu_tok.span)
        dist = Normal(mu, sigma) if sigma > 0 else Constant(mu)
        default_comm = 0.01 * mu
        decls[name] = SeqProfile(
            name=name,
            t_seq=dist,
            t_in=default_comm if t_in is None else t_in,
            t_out=default_comm if t_out is None else t_out,
            in_type=in_type,
            out_type=out_type,
        )

    # expr := term ("|" term)*
    def _expr(self, decls: dict[str, SeqProfile]) -> Skeleton:
        stages = [self._term(decls)]
        while self.peek().text == "|":
            self.next()
            stages.append(self._term(decls))
        if len(stages) == 1:
            return stages[0]
        return pipe(*stages)

    # term := factor (";" factor)*
    def _term(self, decls: dict[str, SeqProfile]) -> Skeleton:
        first_tok = self.peek()
        parts = [self._factor(decls)]
        while self.peek().text == ";":
            self.next()
            parts.append(self._factor(decls))
        if len(parts) == 1:
            return parts[0]
        for p, tok in zip(parts, [first_tok] * len(parts)):
            if not isinstance(p, SeqRef):
                raise ParseError("';' composes sequential stages only", tok.span)
        return seqcomp(*parts)

    # factor := "farm" "(" expr ")" | "(" expr ")" | IDENT
    def _factor(self, decls: dict[str, SeqProfile]) -> Skeleton:
        tok = self.peek()
        if tok.kind == "ident" and tok.text == "farm":
            self.next()
            self.expect("sym", "(")
            inner = self._expr(decls)
            self.expect("sym", ")")
            return Farm(inner)
        if tok.text == "(":
            self.next()
            inner = self._expr(decls)
            self.expect("sym", ")")
            return inner
        if tok.kind == "ident":
            self.next()
            if tok.text in KEYWORDS:
                raise ParseError(f"{tok.text!r} is reserved", tok.span)
            if tok.text not in decls:
                raise UnknownName(f"unknown stage {tok.text!r}", tok.span)
            return SeqRef(tok.text)
        raise ParseError(f"expected a skeleton expression, found {tok.text or 'end of input'!r}", tok.span)


def parse(text: str) -> Program:
    """Parse source text into a Program.

    Raises ParseError (with a SourceSpan) on bad syntax and UnknownName when
    the body references an undeclared stage.
    """
    return _Parser(text).program()


def parse_expr(text: str, decls: dict[str, SeqProfile]) -> Skeleton:
    """Parse a bare skeleton expression against existing declarations."""
    p = _Parser(text)
    body = p._expr(decls)
    tok = p.peek()
    if tok.kind != "eof":
        raise ParseError(f"trailing input starting at {tok.text!r}", tok.span)
    return body


def format_expr(s: Skeleton) -> str:
    """Canonical text of a skeleton expression.

    Flattened storage means no parentheses are ever required: ";" binds
    tighter than "|", and a single-part composition prints as its element.
    """
    if isinstance(s, SeqRef):
        return s.name
    if isinstance(s, Farm):
        return f"farm({format_expr(s.inner)})"
    if isinstance(s, SeqComp):
        return " ; ".join(format_expr(p) for p in s.parts)
    return " | ".join(format_expr(st) for st in s.stages)


def _format_number(v: float) -> str:
    return repr(v)


def format_decl(p: SeqProfile) -> str:
    args = [_format_number(p.t_seq.mu)]
    if isinstance(p.t_seq, Normal):
        args.append(_format_number(p.t_seq.sigma))
    default_comm = 0.01 * p.t_seq.mu
    if p.t_in != default_comm:
        args.append(f"t_in={_format_number(p.t_in)}")
    if p.t_out != default_comm:
        args.append(f"t_out={_format_number(p.t_out)}")
    if p.in_type is not None:
        args.append(f"in={p.in_type}")
    if p.out_type is not None:
        args.append(f"out={p.out_type}")
    return f"{p.name} = seq({', '.join(args)});"


def format_program(program: Program) -> str:
    """Canonical text of a whole program; round-trips through parse()."""
    lines = [format_decl(p) for p in program.decls.values()]
    lines.append(f"run {format_expr(program.body)}")
    return "\n".join(lines)
