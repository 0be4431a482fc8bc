"""In-memory triple store with indexed pattern matching.

Terms come in three flavors: `Iri` (namespaced identifier, e.g.
``cm:RoadAccident``), `Literal` (lexical form tagged with one of four
datatypes), and `Variable` (legal only inside patterns and queries, never in
stored data). A `TripleStore` keeps a duplicate-free fact set plus
by-subject / by-predicate / by-object indexes that stay coherent with it.

Canonical ordering, used everywhere output must be deterministic: Iri sorts
before Literal; within each kind, lexicographic by lexical form (datatype as
the final tiebreak for literals).
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Iterable, Iterator, Optional, Union

from .errors import InvalidTriple, ParseError

# Built-in prefix table. IRIs circulate in compact prefixed form; `expand_iri`
# gives the full form when an absolute identifier is needed.
PREFIXES = {
    "cm": "http://crisismesh.dev/ns/cm#",
    "rdf": "http://www.w3.org/1999/02/22-rdf-syntax-ns#",
}

DATATYPES = ("string", "integer", "decimal", "boolean")

_INTEGER_RE = re.compile(r"^[+-]?\d+$")
_DECIMAL_RE = re.compile(r"^[+-]?(\d+\.\d*|\.\d+|\d+)$")


@dataclass(frozen=True)
class Iri:
    """Namespaced identifier such as ``cm:acc1``."""

    value: str

    def __post_init__(self):
        if not self.value or any(c.isspace() for c in self.value):
            raise InvalidTriple(f"bad IRI: {self.value!r}")

    def expand(self) -> str:
        return expand_iri(self.value)

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Literal:
    """Typed literal; datatype is one of string/integer/decimal/boolean."""

    lexical: str
    datatype: str = "string"

    def __post_init__(self):
        if self.datatype not in DATATYPES:
            raise InvalidTriple(f"unknown datatype: {self.datatype!r}")
        if '"' in self.lexical or "\n" in self.lexical:
            raise InvalidTriple("literal lexical form may not contain quotes or newlines")
        if self.datatype == "integer" and not _INTEGER_RE.match(self.lexical):
            raise InvalidTriple(f"not an integer lexical form: {self.lexical!r}")
        if self.datatype == "decimal" and not _DECIMAL_RE.match(self.lexical):
            raise InvalidTriple(f"not a decimal lexical form: {self.lexical!r}")
        if self.datatype == "boolean" and self.lexical not in ("true", "false"):
            raise InvalidTriple(f"not a boolean lexical form: {self.lexical!r}")

    @property
    def numeric(self) -> Optional[Decimal]:
        """Exact numeric value for integer/decimal literals, else None."""
        if self.datatype in ("integer", "decimal"):
            try:
                return Decimal(self.lexical)
            except InvalidOperation:  # unreachable given __post_init__
                return None
        return None

    def __str__(self):
        return f'"{self.lexical}"^^{self.datatype}'


@dataclass(frozen=True)
class Variable:
    """Query variable; never stored in data."""

    name: str

    def __post_init__(self):
        if not self.name or any(c.isspace() for c in self.name):
            raise InvalidTriple(f"bad variable name: {self.name!r}")

    def __str__(self):
        return f"?{self.name}"


Term = Union[Iri, Literal, Variable]


def expand_iri(compact: str) -> str:
    prefix, _, local = compact.partition(":")
    if prefix in PREFIXES and local:
        return PREFIXES[prefix] + local
    return compact


def term_key(t: Term) -> tuple:
    """Canonical sort key: Iri < Literal, then lexical, then datatype."""
    if isinstance(t, Iri):
        return (0, t.value, "")
    if isinstance(t, Literal):
        return (1, t.lexical, t.datatype)
    return (2, t.name, "")


def term_text(t: Term) -> str:
    """Canonical text form used by the query printer and the CLI."""
    return str(t)


@dataclass(frozen=True)
class Triple:
    """Ground fact: subject and predicate are IRIs, object an IRI or literal."""

    subject: Iri
    predicate: Iri
    object: Union[Iri, Literal]

    def __post_init__(self):
        if not isinstance(self.subject, Iri):
            raise InvalidTriple(f"subject must be an IRI, got {self.subject!r}")
        if not isinstance(self.predicate, Iri):
            raise InvalidTriple(f"predicate must be an IRI, got {self.predicate!r}")
        if not isinstance(self.object, (Iri, Literal)):
            raise InvalidTriple(f"object must be an IRI or literal, got {self.object!r}")

    def key(self) -> tuple:
        return (term_key(self.subject), term_key(self.predicate), term_key(self.object))

    def __str__(self):
        return f"{self.subject} {self.predicate} {self.object} ."


@dataclass(frozen=True)
class TriplePattern:
    """Triple with variables allowed; subject/predicate stay IRI-or-variable."""

    subject: Union[Iri, Variable]
    predicate: Union[Iri, Variable]
    object: Term

    def __post_init__(self):
        if not isinstance(self.subject, (Iri, Variable)):
            raise InvalidTriple("pattern subject must be an IRI or variable")
        if not isinstance(self.predicate, (Iri, Variable)):
            raise InvalidTriple("pattern predicate must be an IRI or variable")
        if not isinstance(self.object, (Iri, Literal, Variable)):
            raise InvalidTriple("pattern object must be a term")

    def terms(self) -> tuple[Term, Term, Term]:
        return (self.subject, self.predicate, self.object)

    def variables(self) -> list[str]:
        return [t.name for t in self.terms() if isinstance(t, Variable)]

    def __str__(self):
        return f"{self.subject} {self.predicate} {self.object}"


def unify(pattern: TriplePattern, triple: Triple, binding: dict) -> Optional[dict]:
    """Extend `binding` so the pattern matches the triple, or return None.

    Repeated variables must bind to equal terms; the input binding is not
    mutated.
    """
    out = binding
    for pat_term, fact_term in zip(pattern.terms(), (triple.subject, triple.predicate, triple.object)):
        if isinstance(pat_term, Variable):
            bound = out.get(pat_term.name)
            if bound is None:
                if out is binding:
                    out = dict(binding)
                out[pat_term.name] = fact_term
            elif bound != fact_term:
                return None
        elif pat_term != fact_term:
            return None
    return dict(out) if out is binding else out


class TripleStore:
    """Duplicate-free fact set with subject/predicate/object indexes.

    Mutations are serialized through an internal lock (single-writer
    discipline); readers that must not observe concurrent writes should take
    a `snapshot()` and query that. Instances hold no thread-affine state and
    may be handed between threads freely.
    """

    def __init__(self, triples: Iterable[Triple] = ()):
        self._lock = threading.RLock()
        self._facts: set[Triple] = set()
        self._by_subject: dict[Iri, set[Triple]] = {}
        self._by_predicate: dict[Iri, set[Triple]] = {}
        self._by_object: dict[Union[Iri, Literal], set[Triple]] = {}
        for t in triples:
            self.insert(t)

    def __len__(self) -> int:
        return len(self._facts)

    def __contains__(self, t: Triple) -> bool:
        return t in self._facts

    def __iter__(self) -> Iterator[Triple]:
        return iter(self.triples())

    def triples(self) -> list[Triple]:
        """All facts in canonical order."""
        with self._lock:
            return sorted(self._facts, key=Triple.key)

    def insert(self, t: Triple) -> bool:
        """Add a fact. Returns True iff it was absent before."""
        if not isinstance(t, Triple):
            raise InvalidTriple(f"not a triple: {t!r}")
        with self._lock:
            if t in self._facts:
                return False
            self._facts.add(t)
            self._by_subject.setdefault(t.subject, set()).add(t)
            self._by_predicate.setdefault(t.predicate, set()).add(t)
            self._by_object.setdefault(t.object, set()).add(t)
            return True

    def remove(self, t: Triple) -> bool:
        """Drop a fact. Returns True iff it was present."""
        with self._lock:
            if t not in self._facts:
                return False
            self._facts.discard(t)
            for index, key in (
                (self._by_subject, t.subject),
                (self._by_predicate, t.predicate),
                (self._by_object, t.object),
            ):
                bucket = index[key]
                bucket.discard(t)
                if not bucket:
                    del index[key]
            return True

    def snapshot(self) -> "TripleStore":
        """Independent copy safe to read while this store keeps mutating."""
        with self._lock:
            return TripleStore(self._facts)

    def _candidates(self, p: TriplePattern) -> Iterable[Triple]:
        """Smallest index bucket consistent with the pattern's ground terms."""
        best = None
        if isinstance(p.subject, Iri):
            best = self._by_subject.get(p.subject, set())
        if isinstance(p.predicate, Iri):
            bucket = self._by_predicate.get(p.predicate, set())
            if best is None or len(bucket) < len(best):
                best = bucket
        if not isinstance(p.object, Variable):
            bucket = self._by_object.get(p.object, set())
            if best is None or len(bucket) < len(best):
                best = bucket
        return self._facts if best is None else best

    def match(self, p: TriplePattern) -> list[Triple]:
        """Stored triples unifying with the pattern, canonically ordered."""
        with self._lock:
            hits = [t for t in self._candidates(p) if unify(p, t, {}) is not None]
        return sorted(hits, key=Triple.key)


# -- line-oriented triple document format -------------------------------------
#
#   <subject> <predicate> <object> .
#
# One triple per line, terminated by a dot. Terms are prefixed names from the
# built-in table or literals written "lexical"^^datatype (bare "lexical" is a
# string). `#` starts a comment; blank lines are ignored.

_PNAME_RE = re.compile(r"[A-Za-z][\w-]*:[\w-]+(?:\.[\w-]+)*")
_LITERAL_RE = re.compile(r'"([^"\n]*)"(?:\^\^(string|integer|decimal|boolean))?')


def _lex_document_line(line: str, lineno: int) -> list[Term]:
    pos = 0
    terms: list[Term] = []
    dot_seen = False
    while pos < len(line):
        c = line[pos]
        if c.isspace():
            pos += 1
            continue
        if c == "#":
            break
        if dot_seen:
            raise ParseError("content after terminating dot", line=lineno, column=pos + 1)
        if c == ".":
            dot_seen = True
            pos += 1
            continue
        m = _LITERAL_RE.match(line, pos)
        if m:
            terms.append(Literal(m.group(1), m.group(2) or "string"))
            pos = m.end()
            continue
        m = _PNAME_RE.match(line, pos)
        if m:
            name = m.group(0)
            prefix = name.partition(":")[0]
            if prefix not in PREFIXES:
                raise ParseError(f"unknown prefix {prefix!r}", line=lineno, column=pos + 1)
            terms.append(Iri(name))
            pos = m.end()
            continue
        raise ParseError(f"unexpected character {c!r}", line=lineno, column=pos + 1,
                         expected="prefixed name, literal, or '.'")
    if not terms and not dot_seen:
        return []
    if not dot_seen:
        raise ParseError("missing terminating '.'", line=lineno, column=len(line))
    if len(terms) != 3:
        raise ParseError(f"expected 3 terms before '.', got {len(terms)}", line=lineno, column=1)
    return terms


def parse_document(text: str) -> list[Triple]:
    """Parse a triple document; raises ParseError with the offending line."""
    triples = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        terms = _lex_document_line(line, lineno)
        if not terms:
            continue
        s, p, o = terms
        if not isinstance(s, Iri) or not isinstance(p, Iri):
            raise ParseError("subject and predicate must be IRIs", line=lineno, column=1)
        try:
            triples.append(Triple(s, p, o))
        except InvalidTriple as exc:
            raise ParseError(str(exc), line=lineno, column=1) from exc
    return triples


def load_document(store: TripleStore, text: str) -> int:
    """Insert every triple of the document; all-or-nothing on parse errors.

    Returns the number of *newly* inserted triples (duplicates within the
    document or against the store do not count).
    """
    triples = parse_document(text)
    return sum(1 for t in triples if store.insert(t))


def dump_document(store: TripleStore) -> str:
    """Render the store back into the line format, canonically ordered."""
    return "".join(f"{t}\n" for t in store.triples())
