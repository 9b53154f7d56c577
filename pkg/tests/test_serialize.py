from __future__ import annotations

from xml.dom import minidom

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msclod.rdf import (
    RDF,
    SKOS,
    XML_LITERAL,
    BlankNode,
    Graph,
    Iri,
    Literal,
    Triple,
)
from msclod.serialize import (
    NTriplesParseError,
    parse_ntriples,
    split_per_concept,
    to_ntriples,
    to_rdfxml,
    to_turtle,
)

from readers import rdfxml_to_graph, turtle_to_graph

MSC = "http://msc2010.org/resources/MSC/2010/"
EXT = MSC + "vocab#"


def single_label_graph() -> Graph:
    g = Graph()
    g.add(Iri(MSC + "53A45"), SKOS.prefLabel, Literal("Vector and tensor analysis", language="en"))
    return g


class TestNTriplesOut:
    def test_single_triple_single_line(self):
        text = to_ntriples(single_label_graph())
        lines = text.splitlines()
        assert len(lines) == 1
        assert lines[0].endswith(" .")

    def test_quote_escaped(self):
        g = Graph()
        g.add(Iri(MSC + "53A45"), SKOS.note, Literal('say "hello"'))
        assert '\\"hello\\"' in to_ntriples(g)

    def test_newline_and_backslash_escaped(self):
        g = Graph()
        g.add(Iri(MSC + "53A45"), SKOS.note, Literal("a\nb\\c"))
        text = to_ntriples(g)
        assert "\\n" in text and "\\\\" in text
        assert "\n" not in text.rstrip("\n")

    def test_non_ascii_escaped(self):
        g = Graph()
        g.add(Iri(MSC + "53A45"), SKOS.prefLabel, Literal("анализ", language="ru"))
        text = to_ntriples(g)
        assert "\\u0430" in text

    def test_lines_sorted(self, small_expanded):
        lines = to_ntriples(small_expanded).splitlines()
        assert lines == sorted(lines)

    def test_deterministic(self, small_expanded):
        assert to_ntriples(small_expanded) == to_ntriples(small_expanded.copy())

    def test_empty_graph(self):
        assert to_ntriples(Graph()) == ""


class TestNTriplesIn:
    def test_roundtrip_expanded_fixture(self, fixture_expanded):
        assert parse_ntriples(to_ntriples(fixture_expanded)) == fixture_expanded

    def test_empty_input(self):
        assert parse_ntriples("") == Graph()

    def test_missing_dot_reports_line(self):
        text = (
            f"<{MSC}53A45> <{SKOS.prefLabel.value}> \"x\" .\n"
            f"<{MSC}53Axx> <{SKOS.prefLabel.value}> \"y\"\n"
        )
        with pytest.raises(NTriplesParseError) as err:
            parse_ntriples(text)
        assert err.value.line == 2

    def test_literal_subject_rejected(self):
        with pytest.raises(NTriplesParseError):
            parse_ntriples('"x" <http://example.org/p> "y" .\n')

    def test_comments_and_blank_lines(self):
        text = f"# header\n\n<{MSC}53A45> <{SKOS.notation.value}> \"53A45\" . # trailing\n"
        g = parse_ntriples(text)
        assert len(g) == 1


class TestTurtle:
    def test_concept_block_shape(self, small_master):
        text = to_turtle(small_master)
        assert "@prefix skos: <http://www.w3.org/2004/02/skos/core#> ." in text
        assert "msc:53A45 a skos:Concept ;" in text
        assert 'skos:prefLabel "Vector and tensor analysis"@en' in text

    def test_unregistered_namespace_falls_back_to_iri(self):
        g = Graph({"skos": SKOS.base})
        g.add(Iri("http://elsewhere.org/x"), SKOS.related, Iri("http://elsewhere.org/y"))
        text = to_turtle(g)
        assert "<http://elsewhere.org/x>" in text
        assert "<http://elsewhere.org/y>" in text

    def test_empty_graph_is_prefixes_only(self):
        g = Graph({"skos": SKOS.base})
        assert to_turtle(g).strip() == f"@prefix skos: <{SKOS.base}> ."

    def test_reparses_to_equal_graph(self, fixture_expanded):
        assert turtle_to_graph(to_turtle(fixture_expanded)) == fixture_expanded

    def test_deterministic(self, fixture_expanded):
        assert to_turtle(fixture_expanded) == to_turtle(fixture_expanded.copy())


class TestRdfXml:
    def test_language_tag_becomes_xml_lang(self):
        text = to_rdfxml(single_label_graph())
        assert 'xml:lang="en"' in text
        minidom.parseString(text)

    def test_empty_graph_root_only(self):
        doc = minidom.parseString(to_rdfxml(Graph()))
        root = doc.documentElement
        assert root.localName == "RDF"
        assert not [n for n in root.childNodes if n.nodeType == n.ELEMENT_NODE]

    def test_math_label_uses_parse_type_literal(self, fixture_master):
        text = to_rdfxml(fixture_master)
        assert 'rdf:parseType="Literal"' in text

    def test_reparses_to_equal_graph(self, fixture_expanded):
        assert rdfxml_to_graph(to_rdfxml(fixture_expanded)) == fixture_expanded

    def test_escapes_special_characters(self):
        g = Graph()
        g.add(Iri(MSC + "53A45"), SKOS.note, Literal("a < b & c"))
        text = to_rdfxml(g)
        minidom.parseString(text)
        assert rdfxml_to_graph(text) == g

    def test_deterministic(self, fixture_expanded):
        assert to_rdfxml(fixture_expanded) == to_rdfxml(fixture_expanded.copy())


class TestSplit:
    def test_three_slices(self, small_expanded):
        slices = split_per_concept(small_expanded)
        assert sorted(slices) == ["53-XX", "53A45", "53Axx"]

    def test_middle_slice_has_asserted_and_entailed_links(self, small_expanded):
        piece = split_per_concept(small_expanded)["53Axx"]
        subject = Iri(MSC + "53Axx")
        assert Triple(subject, SKOS.broader, Iri(MSC + "53-XX")) in piece
        assert Triple(subject, SKOS.narrower, Iri(MSC + "53A45")) in piece

    def test_scoped_node_included(self, fixture_expanded):
        piece = split_per_concept(fixture_expanded)["53-XX"]
        node = BlankNode("b53-XX-sr0")
        assert Triple(node, Iri(EXT + "target"), Iri(MSC + "57Rxx")) in piece
        assert Triple(node, Iri(EXT + "scope"), Literal("differential topology", language="en")) in piece

    def test_empty_graph(self):
        assert split_per_concept(Graph()) == {}

    def test_split_soundness(self, fixture_expanded):
        slices = split_per_concept(fixture_expanded)
        concepts = {
            t.subject
            for t in fixture_expanded.match_iter(None, RDF.type, SKOS.Concept)
            if isinstance(t.subject, Iri)
        }
        concept_subject_triples = {
            t for t in fixture_expanded if t.subject in concepts
        }
        union: set[Triple] = set()
        for code, piece in slices.items():
            for t in piece:
                assert t in fixture_expanded
            own = {t for t in piece if t.subject == Iri(MSC + code)}
            assert not (union & own)
            union |= own
        assert union == concept_subject_triples


# -- round-trip property -------------------------------------------------

_iris = st.one_of(
    st.sampled_from([Iri(MSC + c) for c in ("53A45", "53Axx", "53-XX")]),
    st.builds(lambda s: Iri("http://example.org/" + s), st.text("abcdefXYZ09", min_size=1, max_size=6)),
)
_subjects = st.one_of(_iris, st.builds(BlankNode, st.from_regex(r"[A-Za-z][A-Za-z0-9._-]{0,5}", fullmatch=True)))
_predicates = st.sampled_from([SKOS.prefLabel, SKOS.broader, SKOS.note, RDF.type])
_literals = st.builds(
    Literal,
    st.text(max_size=12),
    st.one_of(st.none(), st.sampled_from(["en", "it", "zh", "en-US"])),
)
_typed_literals = st.builds(lambda s: Literal(s, datatype=XML_LITERAL), st.text(max_size=12))
_objects = st.one_of(_iris, _subjects, _literals, _typed_literals)

# XML 1.0 cannot represent most C0 controls even escaped, so the RDF/XML
# property sticks to representable text; N-Triples carries everything.
_xml_safe_text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters="".join(
        chr(c) for c in range(0x20) if chr(c) not in "\t\n\r"
    )),
    max_size=12,
)
_xml_safe_literals = st.builds(
    Literal, _xml_safe_text, st.one_of(st.none(), st.sampled_from(["en", "it", "zh"]))
)
_xml_safe_objects = st.one_of(_iris, _subjects, _xml_safe_literals)


@st.composite
def graphs(draw, objects=_objects):
    g = Graph()
    g.insert_all(draw(st.lists(st.builds(Triple, _subjects, _predicates, objects), max_size=25)))
    return g


@given(graphs())
@settings(max_examples=120)
def test_ntriples_roundtrip_property(g):
    assert parse_ntriples(to_ntriples(g)) == g


@given(graphs(objects=_xml_safe_objects))
@settings(max_examples=60)
def test_rdfxml_reparses_property(g):
    assert rdfxml_to_graph(to_rdfxml(g)) == g


@given(graphs(objects=_xml_safe_objects))
@settings(max_examples=60)
def test_turtle_reparses_property(g):
    assert turtle_to_graph(to_turtle(g)) == g
