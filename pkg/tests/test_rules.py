from __future__ import annotations

import random

import pytest

from msclod.build import default_prefix_map
from msclod.rdf import SKOS, Graph, Iri, Literal, Triple, TriplePattern, Var
from msclod.rules import Rule, RuleError, RuleParseError, builtin_ruleset, expand, parse_rules

MSC = "http://msc2010.org/resources/MSC/2010/"
EXT = MSC + "vocab#"
SCHEME = Iri(MSC)


def concept(code: str) -> Iri:
    return Iri(MSC + code)


class TestBuiltinRuleset:
    def test_inverse_rule_application(self):
        g = Graph()
        g.add(concept("53A45"), SKOS.broader, concept("53Axx"))
        expanded = expand(g)
        assert Triple(concept("53Axx"), SKOS.narrower, concept("53A45")) in expanded

    def test_every_rule_satisfies_no_invention(self):
        for rule in builtin_ruleset():
            premise_vars = set()
            for p in rule.premises:
                premise_vars |= p.variables()
            for c in rule.conclusions:
                assert c.variables() <= premise_vars
                assert isinstance(c.predicate, Iri)

    def test_ruleset_ids(self):
        ids = [r.id for r in builtin_ruleset()]
        assert ids == [
            "R1", "R2", "R3a", "R3b", "R4a", "R4b", "R4c", "R5",
            "R6a", "R6b", "R6c", "R7", "R8a", "R8b", "R8c", "R9",
        ]

    def test_transitive_rule_on_three_level_chain(self):
        g = Graph()
        g.add(concept("53A45"), SKOS.broader, concept("53Axx"))
        g.add(concept("53Axx"), SKOS.broader, concept("53-XX"))
        expanded = expand(g)
        assert Triple(concept("53A45"), SKOS.broaderTransitive, concept("53-XX")) in expanded


class TestExpand:
    def test_small_master_expansion(self, small_master, small_expanded):
        added = set(small_expanded) - set(small_master)
        assert added == {
            Triple(concept("53-XX"), SKOS.narrower, concept("53Axx")),
            Triple(concept("53Axx"), SKOS.narrower, concept("53A45")),
            Triple(concept("53Axx"), SKOS.broaderTransitive, concept("53-XX")),
            Triple(concept("53A45"), SKOS.broaderTransitive, concept("53Axx")),
            Triple(concept("53A45"), SKOS.broaderTransitive, concept("53-XX")),
            Triple(SCHEME, SKOS.hasTopConcept, concept("53-XX")),
        }
        for c in ("53-XX", "53Axx", "53A45"):
            assert Triple(concept(c), SKOS.inScheme, SCHEME) in small_expanded

    def test_input_graph_unmodified(self, small_master):
        size = len(small_master)
        expand(small_master)
        assert len(small_master) == size

    def test_idempotent(self, small_expanded):
        assert expand(small_expanded) == small_expanded

    def test_empty_graph(self):
        assert expand(Graph()) == Graph()

    def test_monotone(self, small_master, small_expanded):
        assert set(small_master) <= set(small_expanded)

    def test_scoped_relation_projection(self, fixture_expanded):
        assert Triple(concept("53-XX"), SKOS.related, concept("57Rxx")) in fixture_expanded
        assert Triple(concept("57Rxx"), SKOS.related, concept("53-XX")) in fixture_expanded

    def test_see_also_projection_is_symmetric(self, fixture_expanded):
        assert Triple(concept("53A45"), SKOS.related, concept("58A10")) in fixture_expanded
        assert Triple(concept("58A10"), SKOS.related, concept("53A45")) in fixture_expanded

    def test_exact_match_symmetry_and_transitivity(self):
        g = Graph()
        a, b, c = concept("53A45"), Iri(MSC.replace("2010", "2000") + "53A45"), Iri(
            MSC.replace("2010", "1991") + "53A45"
        )
        g.add(a, SKOS.exactMatch, b)
        g.add(b, SKOS.exactMatch, c)
        expanded = expand(g)
        assert Triple(b, SKOS.exactMatch, a) in expanded
        assert Triple(a, SKOS.exactMatch, c) in expanded
        assert Triple(c, SKOS.exactMatch, a) in expanded

    def test_invalid_rule_rejected_before_evaluation(self):
        bad = object.__new__(Rule)
        object.__setattr__(bad, "id", "bad")
        object.__setattr__(bad, "premises", (TriplePattern(Var("x"), SKOS.broader, Var("y")),))
        object.__setattr__(bad, "conclusions", (TriplePattern(Var("z"), SKOS.narrower, Var("x")),))
        with pytest.raises(RuleError):
            expand(Graph(), [bad])

    def test_rule_constructor_validates(self):
        with pytest.raises(RuleError):
            Rule("loose", (TriplePattern(Var("x"), SKOS.broader, Var("y")),),
                 (TriplePattern(Var("z"), SKOS.narrower, Var("x")),))
        with pytest.raises(RuleError):
            Rule("varpred", (TriplePattern(Var("x"), Var("p"), Var("y")),),
                 (TriplePattern(Var("x"), Var("p"), Var("y")),))


def random_scheme(rng: random.Random, max_concepts: int = 50) -> Graph:
    """Small random concept graph: tree-ish broader links plus extras,
    some top concepts, labels, and related edges."""
    n = rng.randint(2, max_concepts)
    nodes = [Iri(f"http://example.org/c/{i}") for i in range(n)]
    g = Graph()
    for i, node in enumerate(nodes):
        if i == 0 or rng.random() < 0.1:
            g.add(node, SKOS.topConceptOf, SCHEME)
        else:
            g.add(node, SKOS.broader, nodes[rng.randrange(i)])
        if rng.random() < 0.3:
            g.add(node, SKOS.prefLabel, Literal(f"concept {i}", language="en"))
    for _ in range(rng.randint(0, n // 2)):
        a, b = rng.choice(nodes), rng.choice(nodes)
        if a != b:
            g.add(a, rng.choice([SKOS.broader, SKOS.narrower, SKOS.related]), b)
    return g


def broader_closure(graph: Graph) -> set[tuple[Iri, Iri]]:
    """Independent oracle: paths of length >= 1 over the effective broader
    edge set (asserted broader plus inverted narrower), found by BFS."""
    edges: dict[Iri, set[Iri]] = {}
    for t in graph.match_iter(None, SKOS.broader, None):
        edges.setdefault(t.subject, set()).add(t.object)
    for t in graph.match_iter(None, SKOS.narrower, None):
        edges.setdefault(t.object, set()).add(t.subject)
    closure: set[tuple[Iri, Iri]] = set()
    for start in edges:
        queue = list(edges[start])
        seen: set[Iri] = set()
        while queue:
            node = queue.pop()
            if node in seen:
                continue
            seen.add(node)
            closure.add((start, node))
            queue.extend(edges.get(node, ()))
    return closure


class TestFixpointProperties:
    def test_randomized_fixpoint_properties(self):
        rng = random.Random(20260808)
        for _ in range(40):
            g = random_scheme(rng, max_concepts=30)
            expanded = expand(g)
            assert set(g) <= set(expanded)
            assert expand(expanded) == expanded
            closure = broader_closure(expanded)
            bt = {
                (t.subject, t.object)
                for t in expanded.match_iter(None, SKOS.broaderTransitive, None)
            }
            assert bt == closure
            broader_pairs = {
                (t.subject, t.object) for t in expanded.match_iter(None, SKOS.broader, None)
            }
            narrower_pairs = {
                (t.object, t.subject) for t in expanded.match_iter(None, SKOS.narrower, None)
            }
            assert broader_pairs == narrower_pairs


class TestRuleText:
    def test_parse_simple_rule(self):
        rules = parse_rules(
            "inv: skos:broader(?x, ?y) => skos:narrower(?y, ?x)\n", default_prefix_map()
        )
        assert len(rules) == 1
        assert rules[0].id == "inv"
        assert rules[0].premises[0].predicate == SKOS.broader

    def test_parse_conjunction(self):
        text = "trans: skos:broaderTransitive(?x, ?y) & skos:broaderTransitive(?y, ?z) => skos:broaderTransitive(?x, ?z)\n"
        rules = parse_rules(text, default_prefix_map())
        assert len(rules[0].premises) == 2

    def test_parse_full_iri_and_literal(self):
        rules = parse_rules(
            'tag: <http://example.org/p>(?x, "en label"@en) => skos:related(?x, ?x)\n',
            default_prefix_map(),
        )
        assert rules[0].premises[0].object == Literal("en label", language="en")

    def test_comments_and_blank_lines(self):
        assert parse_rules("# nothing\n\n", default_prefix_map()) == []

    def test_missing_arrow(self):
        with pytest.raises(RuleParseError):
            parse_rules("broken: skos:broader(?x, ?y)\n", default_prefix_map())

    def test_value_invention_rejected(self):
        with pytest.raises(RuleParseError):
            parse_rules("bad: skos:broader(?x, ?y) => skos:narrower(?z, ?x)\n", default_prefix_map())

    def test_parsed_rules_run(self):
        g = Graph()
        g.add(concept("53A45"), SKOS.broader, concept("53Axx"))
        custom = parse_rules("inv: skos:broader(?x, ?y) => skos:narrower(?y, ?x)\n", default_prefix_map())
        expanded = expand(g, custom)
        assert Triple(concept("53Axx"), SKOS.narrower, concept("53A45")) in expanded
