"""Build the non-redundant SKOS master graph from parsed records.

The master states each fact exactly once: hierarchy child-to-parent only
(`skos:broader`), one notation and one authoritative label per concept.
Inverse and transitive links belong to the expanded dataset (see rules.py),
never to the master.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .rdf import (
    RDF,
    RDFS,
    SKOS,
    STANDARD_PREFIXES,
    XML_LITERAL,
    BlankNode,
    CurieError,
    Graph,
    Iri,
    Literal,
    Namespace,
    expand_curie,
)
from .source import InvalidCodeError, SourceRecord, CrossRefKind, is_valid_code, parse_code

DEFAULT_BASE_IRI = "http://msc2010.org/resources/MSC/2010/"

_LANG_RE = re.compile(r"^[A-Za-z]{1,8}(-[A-Za-z0-9]{1,8})*$")
_MATH_SPAN_RE = re.compile(r"\$([^$]+)\$")

MATCH_RELATIONS = {
    "exact": "exactMatch",
    "close": "closeMatch",
    "narrow": "narrowMatch",
    "broad": "broadMatch",
}


@dataclass(frozen=True, slots=True)
class SchemeConfig:
    base_iri: str = DEFAULT_BASE_IRI
    scheme_iri: Optional[str] = None
    extension_vocab_iri: Optional[str] = None
    default_language: str = "en"

    def __post_init__(self) -> None:
        Iri(self.base_iri)
        if not self.base_iri.endswith("/"):
            raise ValueError(f"base IRI must end with '/': {self.base_iri!r}")
        if not _LANG_RE.match(self.default_language):
            raise ValueError(f"invalid default language tag: {self.default_language!r}")

    @property
    def scheme(self) -> Iri:
        return Iri(self.scheme_iri or self.base_iri)

    @property
    def vocab(self) -> Namespace:
        return Namespace(self.extension_vocab_iri or self.base_iri + "vocab#")

    def sibling_base(self, version: str) -> str:
        """Base IRI of a sibling scheme version: final path segment swapped."""
        return re.sub(r"[^/]+/$", version + "/", self.base_iri)


DEFAULT_CONFIG = SchemeConfig()


def mint_iri(config: SchemeConfig, code: str) -> Iri:
    """Concept IRI: base IRI + code, verbatim."""
    parse_code(code)
    return Iri(config.base_iri + code)


def strip_math(label: str) -> str:
    """Drop the `$` delimiters around math spans, keeping their content."""
    return _MATH_SPAN_RE.sub(r"\1", label)


@dataclass(frozen=True, slots=True)
class VersionMapping:
    old_code: str
    relation: str
    new_code: str
    old_scheme_base_iri: str

    def __post_init__(self) -> None:
        if self.relation not in MATCH_RELATIONS:
            raise ValueError(f"unknown mapping relation: {self.relation!r}")
        for code in (self.old_code, self.new_code):
            if not is_valid_code(code):
                raise InvalidCodeError(code)


@dataclass(frozen=True, slots=True)
class CollectionSpec:
    collection_id: str
    label_lang: str
    label_text: str
    member_codes: tuple[str, ...]

    def __post_init__(self) -> None:
        if not re.match(r"^[A-Za-z0-9_-]+$", self.collection_id):
            raise ValueError(f"collection id is not IRI-safe: {self.collection_id!r}")


@dataclass(frozen=True, slots=True)
class ExternalMapping:
    code: str
    property_curie: str
    target_iri: str


def default_prefix_map(config: SchemeConfig = DEFAULT_CONFIG) -> dict[str, str]:
    prefixes = dict(STANDARD_PREFIXES)
    prefixes["msc"] = config.base_iri
    prefixes["ext"] = config.vocab.base
    return prefixes


def build_graph(
    records: Sequence[SourceRecord],
    translations: Iterable[tuple[str, str, str]] = (),
    version_mappings: Iterable[VersionMapping] = (),
    collections: Iterable[CollectionSpec] = (),
    external_mappings: Iterable[ExternalMapping] = (),
    config: SchemeConfig = DEFAULT_CONFIG,
) -> tuple[Graph, list[str]]:
    """Assemble the master graph; returns it with row-level diagnostics.

    Rows of the auxiliary inputs that reference a code absent from
    `records` are skipped and reported, never guessed at.
    """
    ext = config.vocab
    scheme = config.scheme
    graph = Graph(default_prefix_map(config))
    diagnostics: list[str] = []

    graph.add(scheme, RDF.type, SKOS.ConceptScheme)

    known = {r.code.text for r in records}
    uses_see_also = False
    uses_see_mainly = False

    for record in records:
        concept = mint_iri(config, record.code.text)
        graph.add(concept, RDF.type, SKOS.Concept)
        graph.add(concept, SKOS.inScheme, scheme)
        graph.add(concept, SKOS.notation, Literal(record.code.text))
        if record.has_math_markup:
            graph.add(concept, SKOS.prefLabel, Literal(strip_math(record.label), language=config.default_language))
            # The markup-bearing form keeps its delimiters and carries no
            # language tag: XML content and language tags do not mix.
            graph.add(concept, ext.mathLabel, Literal(record.label, datatype=XML_LITERAL))
        else:
            graph.add(concept, SKOS.prefLabel, Literal(record.label, language=config.default_language))
        if record.code.parent is None:
            graph.add(concept, SKOS.topConceptOf, scheme)
        else:
            graph.add(concept, SKOS.broader, mint_iri(config, record.code.parent))
        if record.note is not None:
            graph.add(concept, SKOS.note, Literal(record.note))
        for index, ref in enumerate(record.crossrefs):
            if ref.kind is CrossRefKind.SEE_ALSO:
                uses_see_also = True
                for target in ref.targets:
                    graph.add(concept, ext.seeAlso, mint_iri(config, target))
            elif ref.kind is CrossRefKind.SEE_MAINLY:
                uses_see_mainly = True
                for target in ref.targets:
                    graph.add(concept, ext.seeMainly, mint_iri(config, target))
            else:
                # A scope cannot annotate a binary triple, so scoped
                # references are reified; the node id is derived from the
                # owning code and clause position to keep builds identical.
                node = BlankNode(f"b{record.code.text}-sr{index}")
                graph.add(concept, ext.scopedRelation, node)
                graph.add(node, RDF.type, ext.ScopedRelation)
                graph.add(node, ext.scope, Literal(ref.scope or "", language=config.default_language))
                for target in ref.targets:
                    graph.add(node, ext.target, mint_iri(config, target))

    if uses_see_also:
        graph.add(ext.seeAlso, RDFS.subPropertyOf, SKOS.related)
    if uses_see_mainly:
        graph.add(ext.seeMainly, RDFS.subPropertyOf, SKOS.related)

    diagnostics.extend(add_labels(graph, translations, config=config))

    for mapping in version_mappings:
        if mapping.new_code not in known:
            diagnostics.append(f"version mapping for unknown code {mapping.new_code!r}; row skipped")
            continue
        prop = SKOS[MATCH_RELATIONS[mapping.relation]]
        graph.add(mint_iri(config, mapping.new_code), prop, Iri(mapping.old_scheme_base_iri + mapping.old_code))

    for spec in collections:
        missing = [c for c in spec.member_codes if c not in known]
        if missing:
            diagnostics.append(
                f"collection {spec.collection_id!r} references unknown codes {missing}; collection skipped"
            )
            continue
        coll = Iri(config.base_iri + spec.collection_id)
        graph.add(coll, RDF.type, SKOS.Collection)
        graph.add(coll, SKOS.prefLabel, Literal(spec.label_text, language=spec.label_lang))
        for code in spec.member_codes:
            graph.add(coll, SKOS.member, mint_iri(config, code))

    for em in external_mappings:
        if em.code not in known:
            diagnostics.append(f"external mapping for unknown code {em.code!r}; row skipped")
            continue
        try:
            prop = expand_curie(graph.prefixes, em.property_curie)
        except CurieError as exc:
            diagnostics.append(f"external mapping: {exc}; row skipped")
            continue
        graph.add(mint_iri(config, em.code), prop, Iri(em.target_iri))

    return graph, diagnostics


def add_labels(
    graph: Graph,
    rows: Iterable[tuple[str, str, str]],
    config: SchemeConfig = DEFAULT_CONFIG,
) -> list[str]:
    """Add one prefLabel per (code, language, text) row.

    A concept may carry at most one prefLabel per language, so a second row
    for the same (code, language) is rejected, leaving the graph unchanged.
    """
    diagnostics: list[str] = []
    for code, lang, text in rows:
        if not is_valid_code(code):
            diagnostics.append(f"label row with invalid code {code!r}; row skipped")
            continue
        concept = mint_iri(config, code)
        if not any(graph.match_iter(concept, RDF.type, SKOS.Concept)):
            diagnostics.append(f"label row for unknown code {code!r}; row skipped")
            continue
        try:
            literal = Literal(text, language=lang)
        except ValueError as exc:
            diagnostics.append(f"label row for {code!r}: {exc}; row skipped")
            continue
        existing = [
            t.object
            for t in graph.match_iter(concept, SKOS.prefLabel, None)
            if isinstance(t.object, Literal) and t.object.language == literal.language
        ]
        if existing:
            diagnostics.append(f"duplicate {literal.language!r} prefLabel for {code!r}; row skipped")
            continue
        graph.add(concept, SKOS.prefLabel, literal)
    return diagnostics


# -- auxiliary TSV inputs ---------------------------------------------


def _tsv_rows(text: str, arity: int, what: str) -> tuple[list[tuple[str, ...]], list[str]]:
    rows: list[tuple[str, ...]] = []
    problems: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = tuple(p.strip() for p in line.split("\t"))
        if len(parts) != arity:
            problems.append(f"{what} line {lineno}: expected {arity} tab-separated fields, got {len(parts)}")
            continue
        rows.append(parts)
    return rows, problems


def read_translations(text: str) -> tuple[list[tuple[str, str, str]], list[str]]:
    """`code<TAB>lang<TAB>label` rows."""
    rows, problems = _tsv_rows(text, 3, "translations")
    return [(c, l, t) for c, l, t in rows], problems


def read_version_mappings(
    text: str, config: SchemeConfig = DEFAULT_CONFIG
) -> tuple[list[VersionMapping], list[str]]:
    """`old-code<TAB>relation<TAB>new-code<TAB>version` rows; version names
    the sibling scheme (2000 or 1991) whose base IRI the old code joins."""
    raw, problems = _tsv_rows(text, 4, "version mappings")
    mappings: list[VersionMapping] = []
    for old_code, relation, new_code, version in raw:
        try:
            mappings.append(
                VersionMapping(old_code, relation, new_code, config.sibling_base(version))
            )
        except ValueError as exc:
            problems.append(f"version mappings: {exc}; row skipped")
    return mappings, problems


def read_collections(text: str) -> tuple[list[CollectionSpec], list[str]]:
    """`collection-id<TAB>lang<TAB>label<TAB>member-code`, one row per member."""
    raw, problems = _tsv_rows(text, 4, "collections")
    order: list[str] = []
    by_id: dict[str, tuple[str, str, list[str]]] = {}
    for cid, lang, label, member in raw:
        if cid not in by_id:
            order.append(cid)
            by_id[cid] = (lang, label, [member])
        else:
            lang0, label0, members = by_id[cid]
            if (lang, label) != (lang0, label0):
                problems.append(f"collection {cid!r}: conflicting label row ignored (first row wins)")
            members.append(member)
    specs: list[CollectionSpec] = []
    for cid in order:
        lang, label, members = by_id[cid]
        try:
            specs.append(CollectionSpec(cid, lang, label, tuple(members)))
        except ValueError as exc:
            problems.append(f"collections: {exc}; collection skipped")
    return specs, problems


def read_external_mappings(text: str) -> tuple[list[ExternalMapping], list[str]]:
    """`code<TAB>property-curie<TAB>target-iri` rows."""
    rows, problems = _tsv_rows(text, 3, "external mappings")
    return [ExternalMapping(c, p, t) for c, p, t in rows], problems
