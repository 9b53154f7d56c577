from __future__ import annotations

from pathlib import Path

import pytest

from msclod.build import build_graph, read_translations
from msclod.rdf import Graph, Iri
from msclod.rules import expand
from msclod.serialize import parse_ntriples
from msclod.source import parse_source

DATA = Path(__file__).parent / "data"

MSC = "http://msc2010.org/resources/MSC/2010/"

SMALL_SOURCE = """\
53-XX Differential geometry
53Axx Classical differential geometry
53A45 Vector and tensor analysis
"""


@pytest.fixture(scope="session")
def small_records():
    records, diagnostics = parse_source(SMALL_SOURCE)
    assert not diagnostics
    return records


@pytest.fixture(scope="session")
def small_master(small_records) -> Graph:
    graph, diagnostics = build_graph(small_records)
    assert not diagnostics
    return graph.freeze()


@pytest.fixture(scope="session")
def small_expanded(small_master) -> Graph:
    return expand(small_master).freeze()


@pytest.fixture(scope="session")
def fixture_records():
    records, diagnostics = parse_source((DATA / "fixture.msc").read_text(encoding="utf-8"))
    assert not diagnostics
    return records


@pytest.fixture(scope="session")
def fixture_master(fixture_records) -> Graph:
    translations, problems = read_translations((DATA / "translations.tsv").read_text(encoding="utf-8"))
    assert not problems
    graph, diagnostics = build_graph(fixture_records, translations=translations)
    assert not diagnostics
    return graph.freeze()


@pytest.fixture(scope="session")
def fixture_expanded(fixture_master) -> Graph:
    return expand(fixture_master).freeze()


@pytest.fixture(scope="session")
def fixture_with_articles(fixture_expanded) -> Graph:
    graph = fixture_expanded.copy()
    graph.insert_all(parse_ntriples((DATA / "articles.nt").read_text(encoding="utf-8")))
    return graph.freeze()


@pytest.fixture(scope="session")
def listing_query_text() -> str:
    return (DATA / "listing.rq").read_text(encoding="utf-8")


def msc(code: str) -> Iri:
    return Iri(MSC + code)
