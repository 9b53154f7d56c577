"""Structural and statistical quality control for master and expanded graphs.

Findings are data, never exceptions: a validation run always completes and
returns the full report. Checks V1-V5 and V7 report errors; the dangling
link check V6 only warns, because a scheme legitimately references codes
retired in other versions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .build import DEFAULT_CONFIG, SchemeConfig
from .rdf import RDF, SKOS, XML_LITERAL, Graph, Iri, Literal, Term
from .source import Level, is_valid_code, parse_code

SEVERITY = {
    "V1": "error",
    "V2": "error",
    "V3": "error",
    "V4": "error",
    "V5": "error",
    "V6": "warning",
    "V7": "error",
}


@dataclass(frozen=True, slots=True)
class Violation:
    check_id: str
    severity: str
    subject: str
    message: str


@dataclass(frozen=True, slots=True)
class SchemeStats:
    top: int
    intermediate: int
    leaves: int
    total_concepts: int
    math_label_count: int

    @property
    def math_label_fraction(self) -> float:
        if self.total_concepts == 0:
            return 0.0
        return self.math_label_count / self.total_concepts


@dataclass(slots=True)
class Report:
    phase: str
    violations: list[Violation]
    stats: SchemeStats

    @property
    def errors(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == "error"]

    def to_text(self) -> str:
        lines = [f"validation report (phase: {self.phase})"]
        if not self.violations:
            lines.append("no violations")
        for v in self.violations:
            lines.append(f"{v.check_id} {v.severity} {v.subject}: {v.message}")
        s = self.stats
        lines.append(
            f"stats: top={s.top} intermediate={s.intermediate} leaves={s.leaves} "
            f"concepts={s.total_concepts} math-labels={s.math_label_count} "
            f"({s.math_label_fraction:.4%})"
        )
        return "\n".join(lines) + "\n"

    def to_tsv(self) -> str:
        lines = [f"{v.check_id}\t{v.severity}\t{v.subject}\t{v.message}" for v in self.violations]
        return "\n".join(lines) + ("\n" if lines else "")


def _subject_name(term: Term) -> str:
    if isinstance(term, Iri):
        return term.value.rstrip("/").rsplit("/", 1)[-1]
    return term.nt()


def validate(graph: Graph, phase: str = "master", config: SchemeConfig = DEFAULT_CONFIG) -> Report:
    """Run all checks over a frozen graph; read-only and repeatable."""
    if phase not in ("master", "expanded"):
        raise ValueError(f"unknown phase {phase!r} (expected 'master' or 'expanded')")

    concepts = sorted(
        (t.subject for t in graph.match_iter(None, RDF.type, SKOS.Concept) if isinstance(t.subject, Iri)),
        key=lambda c: c.value,
    )
    concept_set = set(concepts)
    violations: list[Violation] = []

    def report(check: str, subject: Term, message: str) -> None:
        violations.append(Violation(check, SEVERITY[check], _subject_name(subject), message))

    # V1: exactly one notation per concept, values globally unique
    notation_owner: dict[str, Term] = {}
    for concept in concepts:
        notations = sorted(
            (t.object.lexical for t in graph.match_iter(concept, SKOS.notation, None) if isinstance(t.object, Literal))
        )
        if len(notations) != 1:
            report("V1", concept, f"expected exactly one notation, found {len(notations)}")
        for value in notations:
            if value in notation_owner and notation_owner[value] != concept:
                report("V1", concept, f"notation {value!r} already used by {_subject_name(notation_owner[value])}")
            else:
                notation_owner.setdefault(value, concept)

    # V2: at most one prefLabel per (concept, language)
    for concept in concepts:
        by_lang: dict[Optional[str], int] = {}
        for t in graph.match_iter(concept, SKOS.prefLabel, None):
            if isinstance(t.object, Literal):
                by_lang[t.object.language] = by_lang.get(t.object.language, 0) + 1
        for lang, count in sorted(by_lang.items(), key=lambda kv: str(kv[0])):
            if count > 1:
                report("V2", concept, f"{count} prefLabels for language {lang or '(none)'}")

    # V3: prefLabel and altLabel value sets disjoint per concept
    for concept in concepts:
        pref = {t.object for t in graph.match_iter(concept, SKOS.prefLabel, None)}
        alt = {t.object for t in graph.match_iter(concept, SKOS.altLabel, None)}
        for literal in sorted(pref & alt, key=lambda o: o.nt()):
            report("V3", concept, f"label {literal.nt()} is both prefLabel and altLabel")

    # V4: broader is acyclic
    parents: dict[Term, list[Term]] = {
        c: sorted(graph.objects(c, SKOS.broader), key=lambda o: o.nt()) for c in concepts
    }
    WHITE, GRAY, BLACK = 0, 1, 2
    color: dict[Term, int] = {}

    def find_cycle(root: Term) -> Optional[list[Term]]:
        """Iterative DFS along broader links; a GRAY node seen again closes
        a cycle. On a hit, abandoned path nodes are reset so later roots
        start clean."""
        color[root] = GRAY
        path = [root]
        stack = [(root, iter(parents.get(root, ())))]
        while stack:
            node, it = stack[-1]
            step: Optional[Term] = None
            for nxt in it:
                c = color.get(nxt, WHITE)
                if c == BLACK:
                    continue
                if c == GRAY:
                    cycle = path[path.index(nxt):] + [nxt]
                    for p in path:
                        color[p] = WHITE
                    for member in cycle:
                        color[member] = BLACK
                    return cycle
                step = nxt
                break
            if step is None:
                color[node] = BLACK
                stack.pop()
                path.pop()
            else:
                color[step] = GRAY
                path.append(step)
                stack.append((step, iter(parents.get(step, ()))))
        return None

    for concept in concepts:
        while color.get(concept, WHITE) == WHITE:
            cycle = find_cycle(concept)
            if cycle is None:
                break
            names = " -> ".join(_subject_name(c) for c in cycle)
            report("V4", cycle[0], f"broader cycle: {names}")

    # V5: tree shape — exactly one broader unless top, none if top
    for concept in concepts:
        broader_count = len(parents.get(concept, ()))
        is_top = any(graph.match_iter(concept, SKOS.topConceptOf, None))
        if is_top and broader_count > 0:
            report("V5", concept, f"top concept carries {broader_count} broader link(s)")
        elif not is_top and broader_count == 0:
            report("V5", concept, "concept is neither a top concept nor has a broader link")
        elif not is_top and broader_count > 1:
            report("V5", concept, f"expected exactly one broader link, found {broader_count}")

    # V6: link targets resolve to concepts of the scheme
    ext = config.vocab
    link_predicates: list[Iri] = [SKOS.member, ext.seeAlso, ext.seeMainly, ext.target]
    for rel in ("exactMatch", "closeMatch", "narrowMatch", "broadMatch"):
        link_predicates.append(SKOS[rel])
    for predicate in link_predicates:
        for t in graph.match_iter(None, predicate, None):
            if isinstance(t.object, Iri) and t.object not in concept_set:
                report(
                    "V6",
                    t.subject,
                    f"{_subject_name(t.predicate)} target {t.object.value} is not a concept in this graph",
                )

    # V7 (expanded only): narrower present iff broader inverse present
    if phase == "expanded":
        broader_pairs = {(t.subject, t.object) for t in graph.match_iter(None, SKOS.broader, None)}
        narrower_pairs = {(t.object, t.subject) for t in graph.match_iter(None, SKOS.narrower, None)}
        for child, parent in sorted(broader_pairs - narrower_pairs, key=lambda p: (p[0].nt(), p[1].nt())):
            report("V7", child, f"broader {_subject_name(parent)} has no narrower inverse")
        for child, parent in sorted(narrower_pairs - broader_pairs, key=lambda p: (p[0].nt(), p[1].nt())):
            report("V7", parent, f"narrower {_subject_name(child)} has no broader inverse")

    # V8: statistics
    level_counts = {Level.TOP: 0, Level.MIDDLE: 0, Level.LEAF: 0}
    math_count = 0
    for concept in concepts:
        notations = [
            t.object.lexical for t in graph.match_iter(concept, SKOS.notation, None) if isinstance(t.object, Literal)
        ]
        for value in notations:
            if is_valid_code(value):
                level_counts[parse_code(value).level] += 1
                break
        if any(
            isinstance(t.object, Literal) and t.object.datatype == XML_LITERAL
            for t in graph.match_iter(concept, None, None)
        ):
            math_count += 1

    stats = SchemeStats(
        top=level_counts[Level.TOP],
        intermediate=level_counts[Level.MIDDLE],
        leaves=level_counts[Level.LEAF],
        total_concepts=len(concepts),
        math_label_count=math_count,
    )
    violations.sort(key=lambda v: (v.check_id, v.subject, v.message))
    return Report(phase=phase, violations=violations, stats=stats)
