"""Basic-graph-pattern query language: parser, printer, evaluator.

Grammar (keywords case-insensitive, whitespace-insensitive):

    query    ::= SELECT projection WHERE '{' clause ('.' clause)* '.'? '}'
    projection ::= '*' | var+
    clause   ::= pattern | filter
    pattern  ::= term term term          (subject/predicate: iri or var)
    filter   ::= FILTER var cmp constant
    term     ::= var | pname | constant
    var      ::= '?' NAME
    pname    ::= PREFIX ':' LOCAL        (prefix from the built-in table)
    constant ::= '"' lexical '"' ('^^' datatype)?  |  INTEGER  |  DECIMAL
               | 'true' | 'false'
    cmp      ::= '=' | '!=' | '<' | '>'

Bare numbers are integer/decimal literals, bare true/false booleans, and a
quoted form without `^^` is a string. Evaluation is the natural join of
per-pattern matches, restricted by filters, projected, deduplicated, and
canonically ordered, so permuting patterns never changes the result.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .errors import ParseError, TypeMismatch, UnboundVariable
from .store import (
    PREFIXES,
    Iri,
    Literal,
    Term,
    TriplePattern,
    TripleStore,
    Variable,
    term_key,
    term_text,
    unify,
)

COMPARATORS = ("=", "!=", "<", ">")


@dataclass(frozen=True)
class Filter:
    """Restriction `?var cmp constant` applied after the join."""

    variable: str
    comparator: str
    constant: Literal

    def __str__(self):
        return f"FILTER ?{self.variable} {self.comparator} {self.constant}"


@dataclass(frozen=True)
class Query:
    """Parsed query AST. `select_vars` of None means SELECT *."""

    select_vars: Optional[tuple[str, ...]]
    patterns: tuple[TriplePattern, ...]
    filters: tuple[Filter, ...] = ()

    def pattern_variables(self) -> list[str]:
        """Variables in first-appearance order across patterns."""
        seen: list[str] = []
        for p in self.patterns:
            for name in p.variables():
                if name not in seen:
                    seen.append(name)
        return seen

    def columns(self) -> tuple[str, ...]:
        if self.select_vars is None:
            return tuple(self.pattern_variables())
        return self.select_vars


@dataclass(frozen=True)
class ResultSet:
    """Projected, deduplicated, canonically ordered bindings."""

    columns: tuple[str, ...]
    rows: tuple[tuple[Term, ...], ...]

    def __len__(self):
        return len(self.rows)

    def as_dicts(self) -> list[dict[str, Term]]:
        return [dict(zip(self.columns, row)) for row in self.rows]

    def to_text(self) -> str:
        """Tab-separated rows with a header line, for the CLI."""
        lines = ["\t".join(f"?{c}" for c in self.columns)]
        lines.extend("\t".join(term_text(t) for t in row) for row in self.rows)
        return "\n".join(lines) + "\n"


# -- tokenizer ----------------------------------------------------------------

_TOKEN_RES = [
    ("VAR", re.compile(r"\?[A-Za-z_]\w*")),
    ("LITERAL", re.compile(r'"([^"\n]*)"(?:\^\^(string|integer|decimal|boolean))?')),
    ("PNAME", re.compile(r"[A-Za-z][\w-]*:[\w-]+(?:\.[\w-]+)*")),
    ("WORD", re.compile(r"[A-Za-z][\w-]*")),
    ("NUMBER", re.compile(r"[+-]?\d+\.\d+|[+-]?\d+")),
    ("CMP", re.compile(r"!=|=|<|>")),
    ("LBRACE", re.compile(r"\{")),
    ("RBRACE", re.compile(r"\}")),
    ("DOT", re.compile(r"\.")),
    ("STAR", re.compile(r"\*")),
]


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int
    groups: tuple = field(default=())


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    for lineno, line in enumerate(text.splitlines() or [""], start=1):
        pos = 0
        while pos < len(line):
            if line[pos].isspace():
                pos += 1
                continue
            for kind, rx in _TOKEN_RES:
                m = rx.match(line, pos)
                if m:
                    tokens.append(_Token(kind, m.group(0), lineno, pos + 1, m.groups()))
                    pos = m.end()
                    break
            else:
                raise ParseError(f"unexpected character {line[pos]!r}",
                                 line=lineno, column=pos + 1)
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], text: str):
        self.tokens = tokens
        self.pos = 0
        self.text = text

    def peek(self) -> Optional[_Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> _Token:
        tok = self.peek()
        if tok is None:
            last_line = self.text.count("\n") + 1
            raise ParseError("unexpected end of query", line=last_line,
                             column=len(self.text.splitlines()[-1]) + 1 if self.text else 1)
        self.pos += 1
        return tok

    def expect_keyword(self, word: str) -> None:
        tok = self.take()
        if tok.kind != "WORD" or tok.text.upper() != word:
            raise ParseError(f"expected {word}", line=tok.line, column=tok.column,
                             expected=word)

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.take()
        if tok.kind != kind:
            raise ParseError(f"expected {what}, got {tok.text!r}",
                             line=tok.line, column=tok.column, expected=what)
        return tok

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == "WORD" and tok.text.upper() == word

    def parse_query(self) -> Query:
        self.expect_keyword("SELECT")
        select_vars: Optional[tuple[str, ...]]
        tok = self.peek()
        if tok is not None and tok.kind == "STAR":
            self.take()
            select_vars = None
        else:
            names = []
            while (tok := self.peek()) is not None and tok.kind == "VAR":
                names.append(self.take().text[1:])
            if not names:
                bad = self.peek()
                raise ParseError("expected '*' or at least one variable",
                                 line=bad.line if bad else 1,
                                 column=bad.column if bad else 1,
                                 expected="variable")
            select_vars = tuple(names)
        self.expect_keyword("WHERE")
        self.expect("LBRACE", "'{'")

        patterns: list[TriplePattern] = []
        filters: list[Filter] = []
        while True:
            tok = self.peek()
            if tok is None:
                raise ParseError("unexpected end of query, expected '}'",
                                 line=1, column=1, expected="}")
            if tok.kind == "RBRACE":
                self.take()
                break
            if self.at_keyword("FILTER"):
                filters.append(self.parse_filter())
            else:
                patterns.append(self.parse_pattern())
            nxt = self.peek()
            if nxt is not None and nxt.kind == "DOT":
                self.take()
        if self.peek() is not None:
            tok = self.peek()
            raise ParseError(f"trailing input {tok.text!r}", line=tok.line, column=tok.column)
        if not patterns:
            raise ParseError("query needs at least one pattern", line=1, column=1,
                             expected="pattern")

        q = Query(select_vars, tuple(patterns), tuple(filters))
        bound = set(q.pattern_variables())
        for name in (q.select_vars or ()):
            if name not in bound:
                raise UnboundVariable(f"?{name} appears in no pattern")
        for f in q.filters:
            if f.variable not in bound:
                raise UnboundVariable(f"?{f.variable} appears in no pattern")
        return q

    def parse_pattern(self) -> TriplePattern:
        s = self.parse_term(positions="sp")
        p = self.parse_term(positions="sp")
        o = self.parse_term(positions="o")
        return TriplePattern(s, p, o)

    def parse_term(self, positions: str) -> Term:
        tok = self.take()
        if tok.kind == "VAR":
            return Variable(tok.text[1:])
        if tok.kind == "PNAME":
            prefix = tok.text.partition(":")[0]
            if prefix not in PREFIXES:
                raise ParseError(f"unknown prefix {prefix!r}", line=tok.line,
                                 column=tok.column)
            return Iri(tok.text)
        if positions == "o":
            lit = self._constant_from(tok)
            if lit is not None:
                return lit
            raise ParseError(f"expected term, got {tok.text!r}", line=tok.line,
                             column=tok.column, expected="term")
        raise ParseError(f"expected IRI or variable, got {tok.text!r}",
                         line=tok.line, column=tok.column, expected="iri or variable")

    def _constant_from(self, tok: _Token) -> Optional[Literal]:
        if tok.kind == "LITERAL":
            return Literal(tok.groups[0], tok.groups[1] or "string")
        if tok.kind == "NUMBER":
            return Literal(tok.text, "decimal" if "." in tok.text else "integer")
        if tok.kind == "WORD" and tok.text.lower() in ("true", "false"):
            return Literal(tok.text.lower(), "boolean")
        return None

    def parse_filter(self) -> Filter:
        self.expect_keyword("FILTER")
        var = self.expect("VAR", "variable")
        cmp_tok = self.take()
        if cmp_tok.kind != "CMP":
            raise ParseError(f"expected comparator, got {cmp_tok.text!r}",
                             line=cmp_tok.line, column=cmp_tok.column,
                             expected="one of = != < >")
        const_tok = self.take()
        constant = self._constant_from(const_tok)
        if constant is None:
            raise ParseError(f"expected constant, got {const_tok.text!r}",
                             line=const_tok.line, column=const_tok.column,
                             expected="literal constant")
        return Filter(var.text[1:], cmp_tok.text, constant)


def parse_query(text: str) -> Query:
    """Parse query text into an AST; ParseError carries line/column."""
    return _Parser(_tokenize(text), text).parse_query()


def pretty_print(q: Query) -> str:
    """Canonical single-line text form; parse(pretty_print(q)) == q."""
    head = "*" if q.select_vars is None else " ".join(f"?{v}" for v in q.select_vars)
    clauses = [str(p) for p in q.patterns] + [str(f) for f in q.filters]
    return f"SELECT {head} WHERE {{ " + " . ".join(clauses) + " }"


# -- evaluation ---------------------------------------------------------------

def _substitute(p: TriplePattern, binding: dict) -> Optional[TriplePattern]:
    """Ground the bound variables; None when the result cannot match.

    A literal bound into a subject or predicate slot is unsatisfiable
    because stored triples keep IRIs there.
    """
    def sub(t: Term) -> Term:
        if isinstance(t, Variable) and t.name in binding:
            return binding[t.name]
        return t

    s, pred, o = sub(p.subject), sub(p.predicate), sub(p.object)
    if isinstance(s, Literal) or isinstance(pred, Literal):
        return None
    return TriplePattern(s, pred, o)


def _passes(f: Filter, binding: dict) -> bool:
    value = binding[f.variable]
    if f.comparator in ("<", ">"):
        num = value.numeric if isinstance(value, Literal) else None
        const = f.constant.numeric
        if num is None or const is None:
            raise TypeMismatch(
                f"filter {f.comparator} needs numeric operands, got {value} {f.comparator} {f.constant}")
        return num < const if f.comparator == "<" else num > const
    if isinstance(value, Literal) and value.numeric is not None and f.constant.numeric is not None:
        equal = value.numeric == f.constant.numeric
    else:
        equal = value == f.constant
    return equal if f.comparator == "=" else not equal


def evaluate(store: TripleStore, q: Query) -> ResultSet:
    """Natural join of pattern matches, filtered, projected, ordered.

    Join is left-to-right with index-backed candidate lookup; the result is a
    set, so pattern order cannot show through.
    """
    bindings: list[dict] = [{}]
    for pattern in q.patterns:
        extended = []
        for binding in bindings:
            ground = _substitute(pattern, binding)
            if ground is None:
                continue
            for t in store.match(ground):
                nxt = unify(ground, t, binding)
                if nxt is not None:
                    extended.append(nxt)
        bindings = extended
        if not bindings:
            break
    surviving = [b for b in bindings if all(_passes(f, b) for f in q.filters)]
    cols = q.columns()
    rows = {tuple(b[c] for c in cols) for b in surviving}
    ordered = sorted(rows, key=lambda row: tuple(term_key(t) for t in row))
    return ResultSet(cols, tuple(ordered))
