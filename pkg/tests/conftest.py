from pathlib import Path

import pytest

from crisismesh.ontology import build_domain_ontology
from crisismesh.scenario import load_scenario
from crisismesh.store import TripleStore, load_document

REPO_ROOT = Path(__file__).resolve().parent.parent
ROAD_ACCIDENT = REPO_ROOT / "scenarios" / "road_accident.scenario"
GOLDEN_SNIFF = Path(__file__).resolve().parent / "golden" / "road_accident.sniff"


@pytest.fixture(scope="session")
def seed_schema():
    schema, _ = build_domain_ontology()
    return schema


@pytest.fixture(scope="session")
def seed_document():
    _, doc = build_domain_ontology()
    return doc


@pytest.fixture()
def seed_store(seed_document):
    store = TripleStore()
    load_document(store, seed_document)
    return store


@pytest.fixture(scope="session")
def road_scenario():
    return load_scenario(ROAD_ACCIDENT.read_text(encoding="utf-8"))
