"""Crisis domain ontology: class hierarchy, subclass reasoning, type matching.

The schema (classes, subclass DAG, property domain/range constraints) ships
as a manifest file under ``data/``; instance-level seed facts (task
templates, role assignments, stakeholder instances) ship as a triple
document next to it. Both load through `build_domain_ontology`.

Domain/range validation is advisory: `validate` reports violations as data
so scenarios can model bad field reports without being blocked at insert.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Iterable, Optional, Union

from .errors import EmptyObservation, InvalidTriple, ParseError, SchemaError, UnknownClass
from .store import (
    DATATYPES,
    Iri,
    Literal,
    Triple,
    TriplePattern,
    TripleStore,
    Variable,
)

RDF_TYPE = Iri("rdf:type")

CRISIS = Iri("cm:Crisis")
ROAD_ACCIDENT = Iri("cm:RoadAccident")
TERRORIST_ATTACK = Iri("cm:TerroristAttack")


@dataclass(frozen=True)
class PropertyConstraint:
    """Optional domain class and range (class IRI or datatype tag)."""

    property: Iri
    domain: Optional[Iri] = None
    range: Optional[Union[Iri, str]] = None


class OntologySchema:
    """Immutable class hierarchy with per-property constraints.

    Subclass edges must form a DAG over declared classes; reachability
    (reflexive-transitive) is precomputed so `is_subclass_of` is a lookup.
    Instances are freely shareable between threads once built.
    """

    def __init__(self, classes: Iterable[Iri], subclass_edges: Iterable[tuple[Iri, Iri]],
                 properties: Iterable[PropertyConstraint] = ()):
        self.classes = frozenset(classes)
        self.subclass_edges = frozenset(subclass_edges)
        self.properties = {pc.property: pc for pc in properties}
        for child, parent in self.subclass_edges:
            if child not in self.classes or parent not in self.classes:
                raise SchemaError(f"subclass edge endpoint not declared: {child} -> {parent}")
        for pc in self.properties.values():
            if pc.domain is not None and pc.domain not in self.classes:
                raise SchemaError(f"domain of {pc.property} not a declared class: {pc.domain}")
            if isinstance(pc.range, Iri) and pc.range not in self.classes:
                raise SchemaError(f"range of {pc.property} not a declared class: {pc.range}")
            if isinstance(pc.range, str) and pc.range not in DATATYPES:
                raise SchemaError(f"range of {pc.property} not a datatype: {pc.range}")
        self._ancestors = self._close()

    def _close(self) -> dict[Iri, frozenset[Iri]]:
        parents: dict[Iri, set[Iri]] = defaultdict(set)
        for child, parent in self.subclass_edges:
            parents[child].add(parent)

        ancestors: dict[Iri, frozenset[Iri]] = {}
        visiting: set[Iri] = set()

        def walk(c: Iri) -> frozenset[Iri]:
            if c in ancestors:
                return ancestors[c]
            if c in visiting:
                raise SchemaError(f"subclass cycle through {c}")
            visiting.add(c)
            acc = {c}
            for p in parents[c]:
                acc.update(walk(p))
            visiting.discard(c)
            ancestors[c] = frozenset(acc)
            return ancestors[c]

        for c in self.classes:
            walk(c)
        return ancestors

    def ancestors(self, c: Iri) -> frozenset[Iri]:
        if c not in self.classes:
            raise UnknownClass(f"not a declared class: {c}")
        return self._ancestors[c]


def is_subclass_of(schema: OntologySchema, a: Iri, b: Iri) -> bool:
    """True iff b is reachable from a over subclass edges, reflexively."""
    if b not in schema.classes:
        raise UnknownClass(f"not a declared class: {b}")
    return b in schema.ancestors(a)


def instances_of(store: TripleStore, schema: OntologySchema, c: Iri) -> frozenset[Iri]:
    """Subjects typed, directly or via a subclass, as c."""
    if c not in schema.classes:
        raise UnknownClass(f"not a declared class: {c}")
    out = set()
    for t in store.match(TriplePattern(Variable("s"), RDF_TYPE, Variable("d"))):
        d = t.object
        if isinstance(d, Iri) and d in schema.classes and is_subclass_of(schema, d, c):
            out.add(t.subject)
    return frozenset(out)


# -- crisis-type matching ------------------------------------------------------

@dataclass(frozen=True)
class CrisisTypeProfile:
    """Crisis class plus the feature markers that characterize it."""

    type_class: Iri
    characteristic_features: frozenset[Iri]

    def __post_init__(self):
        if not self.characteristic_features:
            raise SchemaError(f"profile {self.type_class} has no features")


@dataclass(frozen=True)
class MatchResult:
    type_class: Iri
    score: Fraction
    matched: frozenset[Iri]
    missing: frozenset[Iri]


def match_crisis_type(profiles: list[CrisisTypeProfile],
                      observed: frozenset[Iri]) -> list[MatchResult]:
    """Jaccard-score every profile against the observed feature set.

    Result is sorted by descending score, ties broken by ascending class
    IRI, so equal inputs rank identically across runs and platforms.
    """
    if not observed:
        raise EmptyObservation("no observed features to match against")
    results = []
    for prof in profiles:
        feats = prof.characteristic_features
        union = feats | observed
        score = Fraction(len(feats & observed), len(union))
        results.append(MatchResult(
            type_class=prof.type_class,
            score=score,
            matched=frozenset(feats & observed),
            missing=frozenset(feats - observed),
        ))
    results.sort(key=lambda r: (-r.score, r.type_class.value))
    return results


def merge_context(store: TripleStore, crisis_facts: Iterable[Triple],
                  context_facts: Iterable[Triple]) -> int:
    """Insert both fact sets; returns the newly inserted count.

    Plain set union underneath, so the merge is commutative and idempotent
    at the store-state level.
    """
    inserted = 0
    for t in list(crisis_facts) + list(context_facts):
        if not isinstance(t, Triple):
            raise InvalidTriple(f"not a triple: {t!r}")
        if store.insert(t):
            inserted += 1
    return inserted


# -- advisory constraint validation -------------------------------------------

@dataclass(frozen=True)
class Violation:
    triple: Triple
    kind: str  # "domain" | "range" | "unknown-class"
    detail: str


def validate(store: TripleStore, schema: OntologySchema) -> list[Violation]:
    """Report every constraint breach; an empty list means the store is valid.

    rdf:type objects must be declared classes; for constrained predicates the
    subject (domain) and object (range) must carry an asserted type that
    reaches the constraint class through the subclass closure, or — for
    datatype ranges — be a literal of that datatype.
    """
    asserted: dict[Iri, set[Iri]] = defaultdict(set)
    for t in store.match(TriplePattern(Variable("s"), RDF_TYPE, Variable("c"))):
        if isinstance(t.object, Iri):
            asserted[t.subject].add(t.object)

    def reaches(types: set[Iri], target: Iri) -> bool:
        return any(d in schema.classes and is_subclass_of(schema, d, target) for d in types)

    out = []
    for t in store.triples():
        if t.predicate == RDF_TYPE:
            if not isinstance(t.object, Iri) or t.object not in schema.classes:
                out.append(Violation(t, "unknown-class", f"{t.object} is not a declared class"))
            continue
        pc = schema.properties.get(t.predicate)
        if pc is None:
            continue
        if pc.domain is not None and not reaches(asserted[t.subject], pc.domain):
            out.append(Violation(t, "domain", f"{t.subject} lacks type {pc.domain}"))
        if pc.range is None:
            continue
        if isinstance(pc.range, str):
            if not isinstance(t.object, Literal) or t.object.datatype != pc.range:
                out.append(Violation(t, "range", f"object is not a {pc.range} literal"))
        else:
            if not isinstance(t.object, Iri) or not reaches(asserted.get(t.object, set()), pc.range):
                out.append(Violation(t, "range", f"{t.object} lacks type {pc.range}"))
    out.sort(key=lambda v: (v.triple.key(), v.kind))
    return out


# -- schema manifest + seed fixtures -------------------------------------------
#
# Manifest lines: `class <iri>`, `subclass <child> <parent>`,
# `property <iri> [domain=<iri>] [range=<iri-or-datatype>]`.
# `#` comments and blank lines are ignored.

def load_schema_manifest(text: str) -> OntologySchema:
    classes: list[Iri] = []
    edges: list[tuple[Iri, Iri]] = []
    props: list[PropertyConstraint] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        kind = fields[0]
        try:
            if kind == "class" and len(fields) == 2:
                classes.append(Iri(fields[1]))
            elif kind == "subclass" and len(fields) == 3:
                edges.append((Iri(fields[1]), Iri(fields[2])))
            elif kind == "property" and 2 <= len(fields) <= 4:
                domain = rng = None
                for opt in fields[2:]:
                    key, _, val = opt.partition("=")
                    if key == "domain":
                        domain = Iri(val)
                    elif key == "range":
                        rng = val if val in DATATYPES else Iri(val)
                    else:
                        raise ParseError(f"unknown property option {key!r}", line=lineno)
                props.append(PropertyConstraint(Iri(fields[1]), domain, rng))
            else:
                raise ParseError(f"unrecognized manifest line: {line!r}", line=lineno)
        except InvalidTriple as exc:
            raise ParseError(str(exc), line=lineno) from exc
    return OntologySchema(classes, edges, props)


def _read_data(name: str) -> str:
    return (resources.files("crisismesh") / "data" / name).read_text(encoding="utf-8")


def build_domain_ontology() -> tuple[OntologySchema, str]:
    """The fixed seed schema plus the seed facts document (triple format)."""
    schema = load_schema_manifest(_read_data("schema_manifest.txt"))
    return schema, _read_data("seed_ontology.triples")


def default_crisis_profiles(schema: OntologySchema) -> list[CrisisTypeProfile]:
    """Built-in feature profiles for the seeded crisis types."""
    profiles = [
        CrisisTypeProfile(ROAD_ACCIDENT,
                          frozenset({Iri("cm:VehicleInvolved"), Iri("cm:RoadBlocked")})),
        CrisisTypeProfile(TERRORIST_ATTACK,
                          frozenset({Iri("cm:ExplosionReported"), Iri("cm:ArmedThreat")})),
    ]
    for p in profiles:
        if not is_subclass_of(schema, p.type_class, CRISIS):
            raise SchemaError(f"profile class {p.type_class} is not a crisis type")
    return profiles
