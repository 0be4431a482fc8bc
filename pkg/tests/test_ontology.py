"""Ontology: seed schema contents, subclass reasoning, matching, validation."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crisismesh.errors import EmptyObservation, SchemaError, UnknownClass
from crisismesh.ontology import (
    CRISIS,
    CrisisTypeProfile,
    OntologySchema,
    RDF_TYPE,
    ROAD_ACCIDENT,
    default_crisis_profiles,
    instances_of,
    is_subclass_of,
    match_crisis_type,
    merge_context,
    validate,
)
from crisismesh.store import Iri, Literal, Triple, TripleStore, load_document


# -- seed schema -----------------------------------------------------------------

def test_road_accident_is_a_crisis(seed_schema):
    assert is_subclass_of(seed_schema, ROAD_ACCIDENT, CRISIS)
    assert is_subclass_of(seed_schema, Iri("cm:TerroristAttack"), CRISIS)


def test_phases_under_phase_class(seed_schema):
    for name in ("cm:Before", "cm:During", "cm:After"):
        assert is_subclass_of(seed_schema, Iri(name), Iri("cm:Phase"))


def test_seed_schema_contains_prescribed_vocabulary(seed_schema):
    required = [
        "cm:Crisis", "cm:RoadAccident", "cm:TerroristAttack",
        "cm:Phase", "cm:Before", "cm:During", "cm:After",
        "cm:Mission", "cm:Role",
        "cm:Actor", "cm:Expert", "cm:Police", "cm:TechnicalInvestigator",
        "cm:Hospital", "cm:Citizen",
        "cm:Context", "cm:Climate", "cm:Geography", "cm:DamageLevel",
        "cm:Consequence", "cm:Interaction",
        "cm:Task", "cm:Resource", "cm:Plan", "cm:Strategy",
    ]
    for name in required:
        assert Iri(name) in seed_schema.classes, name


def test_schema_rejects_cycles():
    a, b = Iri("cm:A"), Iri("cm:B")
    with pytest.raises(SchemaError):
        OntologySchema([a, b], [(a, b), (b, a)])


def test_schema_rejects_dangling_edge():
    with pytest.raises(SchemaError):
        OntologySchema([Iri("cm:A")], [(Iri("cm:A"), Iri("cm:B"))])


def test_subclass_reflexive(seed_schema):
    for c in seed_schema.classes:
        assert is_subclass_of(seed_schema, c, c)


def test_unknown_class_raises(seed_schema):
    with pytest.raises(UnknownClass):
        is_subclass_of(seed_schema, Iri("cm:Nope"), CRISIS)
    with pytest.raises(UnknownClass):
        instances_of(TripleStore(), seed_schema, Iri("cm:Nope"))


# -- closure oracle ---------------------------------------------------------------

def warshall_closure(n, edges):
    """Reflexive-transitive closure as bitset rows (matrix method)."""
    reach = [1 << i for i in range(n)]
    for child, parent in edges:
        reach[child] |= 1 << parent
    for k in range(n):
        bit = 1 << k
        for i in range(n):
            if reach[i] & bit:
                reach[i] |= reach[k]
    return reach


def random_dag(rng, max_nodes=50):
    n = rng.randint(1, max_nodes)
    edges = []
    for child in range(1, n):
        for parent in range(child):
            if rng.random() < 0.08:
                edges.append((child, parent))
    return n, edges


def test_subclass_matches_matrix_closure_sample():
    rng = random.Random(555)
    for _ in range(60):
        n, edges = random_dag(rng)
        classes = [Iri(f"cm:c{i}") for i in range(n)]
        schema = OntologySchema(classes, [(classes[a], classes[b]) for a, b in edges])
        reach = warshall_closure(n, edges)
        for i in range(n):
            for j in range(n):
                assert is_subclass_of(schema, classes[i], classes[j]) == bool(reach[i] >> j & 1)


# -- instance retrieval -------------------------------------------------------------

def test_instances_of_one_hop(seed_schema):
    store = TripleStore([Triple(Iri("cm:acc1"), RDF_TYPE, ROAD_ACCIDENT)])
    assert instances_of(store, seed_schema, CRISIS) == frozenset({Iri("cm:acc1")})


def test_instances_of_empty(seed_schema):
    assert instances_of(TripleStore(), seed_schema, Iri("cm:Mission")) == frozenset()


def test_instances_of_matches_scan_closure_oracle(seed_schema):
    rng = random.Random(808)
    classes = sorted(seed_schema.classes, key=lambda c: c.value)
    for _ in range(40):
        store = TripleStore()
        for i in range(rng.randint(0, 30)):
            store.insert(Triple(Iri(f"cm:i{i % 12}"), RDF_TYPE, rng.choice(classes)))
        target = rng.choice(classes)
        expected = set()
        for t in store.triples():
            if t.predicate == RDF_TYPE and isinstance(t.object, Iri):
                if t.object in seed_schema.classes and target in seed_schema.ancestors(t.object):
                    expected.add(t.subject)
        assert instances_of(store, seed_schema, target) == frozenset(expected)


# -- crisis-type matching -------------------------------------------------------------

F1, F2, F3, F4 = (Iri(f"cm:f{i}") for i in range(1, 5))


def _profile(cls, feats):
    return CrisisTypeProfile(Iri(cls), frozenset(feats))


def test_exact_feature_match_scores_one(seed_schema):
    profiles = default_crisis_profiles(seed_schema)
    road = next(p for p in profiles if p.type_class == ROAD_ACCIDENT)
    ranked = match_crisis_type(profiles, road.characteristic_features)
    assert ranked[0].type_class == ROAD_ACCIDENT
    assert ranked[0].score == 1


def test_disjoint_observation_scores_zero_lexical_order():
    profiles = [_profile("cm:B", [F1]), _profile("cm:A", [F2])]
    ranked = match_crisis_type(profiles, frozenset({F3}))
    assert [r.score for r in ranked] == [0, 0]
    assert [r.type_class.value for r in ranked] == ["cm:A", "cm:B"]


def test_empty_observation_rejected():
    with pytest.raises(EmptyObservation):
        match_crisis_type([_profile("cm:A", [F1])], frozenset())


def test_match_result_partitions_features():
    profiles = [_profile("cm:A", [F1, F2])]
    (result,) = match_crisis_type(profiles, frozenset({F2, F3}))
    assert result.matched | result.missing == frozenset({F1, F2})
    assert result.matched & result.missing == frozenset()


def jaccard_oracle(observed, features):
    inter = len(observed & features)
    union = len(observed | features)
    return Fraction(inter, union)


def test_scores_match_set_arithmetic_oracle():
    """Every profile/observation pair recomputed with independent set math."""
    rng = random.Random(31415)
    pool = [Iri(f"cm:feat{i}") for i in range(6)]
    for _ in range(200):
        profiles = [
            _profile(f"cm:T{i}", rng.sample(pool, rng.randint(1, len(pool))))
            for i in range(rng.randint(1, 4))
        ]
        observed = frozenset(rng.sample(pool, rng.randint(1, len(pool))))
        ranked = match_crisis_type(profiles, observed)
        for result in ranked:
            prof = next(p for p in profiles if p.type_class == result.type_class)
            assert result.score == jaccard_oracle(observed, prof.characteristic_features)
        oracle_order = sorted(
            ((-jaccard_oracle(observed, p.characteristic_features), p.type_class.value)
             for p in profiles))
        assert [(-r.score, r.type_class.value) for r in ranked] == oracle_order


def test_stated_two_profile_example():
    profiles = [_profile("cm:A", [F1, F2]), _profile("cm:B", [F2, F3, F4])]
    observed = frozenset({F2, F3})
    ranked = match_crisis_type(profiles, observed)
    assert jaccard_oracle(observed, profiles[0].characteristic_features) == Fraction(1, 3)
    assert jaccard_oracle(observed, profiles[1].characteristic_features) == Fraction(2, 3)
    assert [r.type_class.value for r in ranked] == ["cm:B", "cm:A"]


def test_ranking_deterministic_across_runs(seed_schema):
    profiles = default_crisis_profiles(seed_schema)
    observed = frozenset({Iri("cm:RoadBlocked"), Iri("cm:ArmedThreat")})
    first = match_crisis_type(profiles, observed)
    for _ in range(5):
        assert match_crisis_type(profiles, observed) == first


def test_shared_feature_keeps_equal_profiles_tied():
    # both profiles contain the new feature and match the observation equally
    profiles = [_profile("cm:A", [F1, F4]), _profile("cm:B", [F2, F4])]
    observed = frozenset({F1, F2})
    before = match_crisis_type(profiles, observed)
    after = match_crisis_type(profiles, observed | {F4})
    assert [r.type_class for r in before] == [r.type_class for r in after]


# -- merge ---------------------------------------------------------------------------

def _facts(*pairs):
    return [Triple(Iri(s), Iri("cm:p"), Iri(o)) for s, o in pairs]


def test_merge_disjoint_counts():
    store = TripleStore()
    crisis = _facts(("cm:a", "cm:1"), ("cm:a", "cm:2"), ("cm:a", "cm:3"))
    context = _facts(("cm:b", "cm:1"), ("cm:b", "cm:2"), ("cm:b", "cm:3"), ("cm:b", "cm:4"))
    assert merge_context(store, crisis, context) == 7
    assert len(store) == 7


def test_merge_commutative():
    a = _facts(("cm:a", "cm:1"), ("cm:a", "cm:2"))
    b = _facts(("cm:b", "cm:1"), ("cm:a", "cm:2"))
    s1, s2 = TripleStore(), TripleStore()
    merge_context(s1, a, b)
    merge_context(s2, b, a)
    assert s1.triples() == s2.triples()


def test_merge_idempotent():
    facts = _facts(("cm:a", "cm:1"), ("cm:a", "cm:2"))
    store = TripleStore()
    assert merge_context(store, facts, facts) == 2
    assert merge_context(store, facts, facts) == 0
    assert len(store) == 2


_fact_st = st.builds(
    Triple,
    st.sampled_from([Iri(f"cm:s{i}") for i in range(3)]),
    st.sampled_from([Iri(f"cm:p{i}") for i in range(2)]),
    st.sampled_from([Iri(f"cm:o{i}") for i in range(4)]),
)


@settings(max_examples=60)
@given(st.lists(_fact_st, max_size=12), st.lists(_fact_st, max_size=12))
def test_merge_commutes_and_counts_union(a, b):
    left, right = TripleStore(), TripleStore()
    count_left = merge_context(left, a, b)
    count_right = merge_context(right, b, a)
    assert left.triples() == right.triples()
    assert count_left == count_right == len(set(a) | set(b))


# -- validation ---------------------------------------------------------------------

def test_seed_ontology_validates_clean(seed_store, seed_schema):
    assert validate(seed_store, seed_schema) == []


def test_range_violation_reported(seed_schema):
    store = TripleStore([
        Triple(Iri("cm:acc1"), RDF_TYPE, ROAD_ACCIDENT),
        Triple(Iri("cm:acc1"), Iri("cm:locatedIn"), Literal("hello")),
    ])
    violations = validate(store, seed_schema)
    assert len(violations) == 1
    assert violations[0].kind == "range"


def test_unknown_type_object_reported(seed_schema):
    store = TripleStore([Triple(Iri("cm:x"), RDF_TYPE, Iri("cm:NotAClass"))])
    violations = validate(store, seed_schema)
    assert [v.kind for v in violations] == ["unknown-class"]


def brute_force_validate(store, seed_schema):
    """Check every triple against every constraint, closure walked per query."""
    def ancestors_of(cls):
        out, frontier = {cls}, [cls]
        while frontier:
            node = frontier.pop()
            for child, parent in seed_schema.subclass_edges:
                if child == node and parent not in out:
                    out.add(parent)
                    frontier.append(parent)
        return out

    triples = store.triples()
    types = {}
    for t in triples:
        if t.predicate == RDF_TYPE and isinstance(t.object, Iri):
            types.setdefault(t.subject, set()).add(t.object)

    def satisfies(subject, target):
        for d in types.get(subject, set()):
            if d in seed_schema.classes and target in ancestors_of(d):
                return True
        return False

    count = 0
    for t in triples:
        if t.predicate == RDF_TYPE:
            if not isinstance(t.object, Iri) or t.object not in seed_schema.classes:
                count += 1
            continue
        pc = seed_schema.properties.get(t.predicate)
        if pc is None:
            continue
        if pc.domain is not None and not satisfies(t.subject, pc.domain):
            count += 1
        if pc.range is not None:
            if isinstance(pc.range, str):
                if not isinstance(t.object, Literal) or t.object.datatype != pc.range:
                    count += 1
            elif not (isinstance(t.object, Iri) and satisfies(t.object, pc.range)):
                count += 1
    return count


def test_validation_matches_brute_force_oracle(seed_schema):
    rng = random.Random(616)
    classes = sorted(seed_schema.classes, key=lambda c: c.value)
    predicates = sorted(seed_schema.properties, key=lambda p: p.value) + \
        [RDF_TYPE, Iri("cm:unconstrained")]
    objects = [Iri("cm:thing1"), Iri("cm:thing2"), ROAD_ACCIDENT, Iri("cm:Geography"),
               Literal("3", "integer"), Literal("word"), Literal("true", "boolean")]
    for _ in range(80):
        store = TripleStore()
        for _ in range(rng.randint(0, 25)):
            subject = Iri(f"cm:n{rng.randint(0, 6)}")
            predicate = rng.choice(predicates)
            obj = rng.choice(objects + classes[:4])
            store.insert(Triple(subject, predicate, obj))
        violations = validate(store, seed_schema)
        assert len(violations) == brute_force_validate(store, seed_schema)


def test_build_domain_ontology_seed_loads(seed_schema, seed_document):
    store = TripleStore()
    count = load_document(store, seed_document)
    assert count == len(store)
    assert validate(store, seed_schema) == []
    actors = instances_of(store, seed_schema, Iri("cm:Actor"))
    assert len(actors) == 5
