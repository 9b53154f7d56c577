"""Graph serialization: N-Triples (read/write), Turtle and RDF/XML (write),
plus the per-concept split of the expanded dataset.

Sorted N-Triples is the canonical on-disk and comparison form: every
serializer here is byte-deterministic for a given graph, and
`parse_ntriples(to_ntriples(g)) == g`.
"""

from __future__ import annotations

import re
from typing import Mapping, Optional
from xml.sax.saxutils import escape as xml_escape
from xml.sax.saxutils import quoteattr as xml_quoteattr

from .rdf import (
    RDF,
    SKOS,
    XML_LITERAL,
    BlankNode,
    Graph,
    Iri,
    Literal,
    Term,
    Triple,
    unescape_literal,
)


class NTriplesParseError(ValueError):
    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class SerializationError(ValueError):
    pass


# -- N-Triples ---------------------------------------------------------


def to_ntriples(graph: Graph) -> str:
    """One triple per line, canonical escaping, lines sorted; '' for the
    empty graph."""
    lines = sorted(t.nt() for t in graph)
    if not lines:
        return ""
    return "\n".join(lines) + "\n"


_IRIREF_RE = re.compile(r'<([^<>"{}|^`\\\x00-\x20]*)>')
_BNODE_RE = re.compile(r"_:([A-Za-z0-9_][A-Za-z0-9._-]*)")
_STRING_RE = re.compile(r'"((?:[^"\\]|\\.)*)"')
_LANG_RE = re.compile(r"@([A-Za-z]{1,8}(?:-[A-Za-z0-9]{1,8})*)")


class _LineReader:
    def __init__(self, text: str, lineno: int) -> None:
        self.text = text
        self.pos = 0
        self.lineno = lineno

    def error(self, message: str) -> NTriplesParseError:
        return NTriplesParseError(self.lineno, message)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def take(self, regex: re.Pattern) -> Optional[re.Match]:
        m = regex.match(self.text, self.pos)
        if m:
            self.pos = m.end()
        return m

    def term(self, *, allow_literal: bool, allow_bnode: bool) -> Term:
        self.skip_ws()
        if self.pos >= len(self.text):
            raise self.error("unexpected end of line")
        ch = self.text[self.pos]
        if ch == "<":
            m = self.take(_IRIREF_RE)
            if not m:
                raise self.error("malformed IRI")
            return Iri(m.group(1))
        if ch == "_" and allow_bnode:
            m = self.take(_BNODE_RE)
            if not m:
                raise self.error("malformed blank node label")
            return BlankNode(m.group(1))
        if ch == '"' and allow_literal:
            m = self.take(_STRING_RE)
            if not m:
                raise self.error("malformed string literal")
            try:
                lexical = unescape_literal(m.group(1))
            except ValueError as exc:
                raise self.error(str(exc)) from exc
            if self.pos < len(self.text) and self.text[self.pos] == "@":
                lang = self.take(_LANG_RE)
                if not lang:
                    raise self.error("malformed language tag")
                return Literal(lexical, language=lang.group(1))
            if self.text.startswith("^^", self.pos):
                self.pos += 2
                dt = self.take(_IRIREF_RE)
                if not dt:
                    raise self.error("malformed datatype IRI")
                return Literal(lexical, datatype=dt.group(1))
            return Literal(lexical)
        raise self.error(f"unexpected character {ch!r}")


def parse_ntriples(text: str) -> Graph:
    """Parse N-Triples text; `#` comment lines and blank lines are allowed."""
    graph = Graph()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        reader = _LineReader(raw, lineno)
        try:
            subject = reader.term(allow_literal=False, allow_bnode=True)
            predicate = reader.term(allow_literal=False, allow_bnode=False)
            obj = reader.term(allow_literal=True, allow_bnode=True)
        except ValueError as exc:
            if isinstance(exc, NTriplesParseError):
                raise
            raise NTriplesParseError(lineno, str(exc)) from exc
        reader.skip_ws()
        if reader.pos >= len(reader.text) or reader.text[reader.pos] != ".":
            raise reader.error("missing terminating '.'")
        reader.pos += 1
        reader.skip_ws()
        rest = reader.text[reader.pos :].strip()
        if rest and not rest.startswith("#"):
            raise reader.error("trailing content after '.'")
        graph.insert(Triple(subject, predicate, obj))
    return graph


# -- Turtle ------------------------------------------------------------

_SAFE_LOCAL_RE = re.compile(r"^[A-Za-z0-9_]([A-Za-z0-9_-]*[A-Za-z0-9_])?$|^$")


def _curie_or_iriref(iri: str, prefixes: Mapping[str, str]) -> str:
    best: Optional[tuple[str, str]] = None
    for name, base in prefixes.items():
        if iri.startswith(base) and (best is None or len(base) > len(best[1])):
            local = iri[len(base):]
            if _SAFE_LOCAL_RE.match(local):
                best = (name, base)
    if best is None:
        return f"<{iri}>"
    return f"{best[0]}:{iri[len(best[1]):]}"


def _turtle_term(term: Term, prefixes: Mapping[str, str]) -> str:
    if isinstance(term, Iri):
        return _curie_or_iriref(term.value, prefixes)
    if isinstance(term, Literal) and term.datatype is not None:
        body = term.nt().rsplit("^^", 1)[0]
        return f"{body}^^{_curie_or_iriref(term.datatype, prefixes)}"
    return term.nt()


def to_turtle(graph: Graph, prefixes: Optional[Mapping[str, str]] = None) -> str:
    """Turtle grouped by subject with `;`/`,` abbreviation, subjects and
    predicates in deterministic order, `a` for rdf:type."""
    prefix_map = dict(graph.prefixes if prefixes is None else prefixes)
    out: list[str] = [f"@prefix {name}: <{prefix_map[name]}> ." for name in sorted(prefix_map)]

    by_subject: dict[Term, dict[Term, list[Term]]] = {}
    for t in graph.sorted_triples():
        by_subject.setdefault(t.subject, {}).setdefault(t.predicate, []).append(t.object)

    rdf_type = RDF.type
    for subject in sorted(by_subject, key=lambda s: s.nt()):
        if out:
            out.append("")
        lines: list[str] = []
        predicates = sorted(by_subject[subject], key=lambda p: ("" if p == rdf_type else p.nt()))
        for predicate in predicates:
            objects = sorted(by_subject[subject][predicate], key=lambda o: o.nt())
            pred_text = "a" if predicate == rdf_type else _turtle_term(predicate, prefix_map)
            obj_text = ", ".join(_turtle_term(o, prefix_map) for o in objects)
            lines.append(f"{pred_text} {obj_text}")
        subject_text = _turtle_term(subject, prefix_map)
        body = " ;\n    ".join(lines)
        out.append(f"{subject_text} {body} .")
    return "\n".join(out) + "\n"


# -- RDF/XML -----------------------------------------------------------

_NCNAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9._-]*$")
# XML 1.0 cannot carry these code points at all, escaped or not.
_XML_FORBIDDEN_RE = re.compile(r"[\x00-\x08\x0B\x0C\x0E-\x1F￾￿]")


def _xml_text(text: str) -> str:
    if _XML_FORBIDDEN_RE.search(text):
        raise SerializationError(
            "literal contains control characters not representable in XML; "
            "export this graph as N-Triples or Turtle instead"
        )
    return xml_escape(text)


def _split_qname(iri: str) -> tuple[str, str]:
    """Split a predicate IRI into (namespace, local NCName) at the last
    position yielding a valid XML element name."""
    for i in range(len(iri) - 1, 0, -1):
        if iri[i] in "#/":
            local = iri[i + 1 :]
            if _NCNAME_RE.match(local):
                return iri[: i + 1], local
    raise SerializationError(f"predicate IRI has no XML-name local part: {iri}")


def to_rdfxml(graph: Graph, prefixes: Optional[Mapping[str, str]] = None) -> str:
    """Well-formed RDF/XML; language-tagged literals carry xml:lang and
    XML-literal-typed literals are emitted with rdf:parseType="Literal"."""
    prefix_map = dict(graph.prefixes if prefixes is None else prefixes)
    inverted: dict[str, str] = {}
    for name in sorted(prefix_map):
        base = prefix_map[name]
        if name != "rdf" and base not in inverted:
            inverted[base] = name

    by_subject: dict[Term, list[Triple]] = {}
    namespaces: dict[str, str] = {}
    element_names: dict[str, tuple[str, str]] = {}

    used_names = set(inverted.values()) | {"rdf"}

    def ns_prefix(base: str) -> str:
        if base == RDF.base:
            return "rdf"
        if base not in namespaces:
            name = inverted.get(base)
            if name is None:
                i = len(namespaces) + 1
                while f"ns{i}" in used_names:
                    i += 1
                name = f"ns{i}"
                used_names.add(name)
            namespaces[base] = name
        return namespaces[base]

    for t in graph.sorted_triples():
        by_subject.setdefault(t.subject, []).append(t)
        if t.predicate.value not in element_names:
            base, local = _split_qname(t.predicate.value)
            element_names[t.predicate.value] = (ns_prefix(base), local)

    out: list[str] = ['<?xml version="1.0" encoding="utf-8"?>']
    attrs = [f'xmlns:rdf="{RDF.base}"']
    for base in sorted(namespaces, key=lambda b: namespaces[b]):
        attrs.append(f'xmlns:{namespaces[base]}="{xml_escape(base)}"')
    out.append(f"<rdf:RDF {' '.join(attrs)}>")

    for subject in sorted(by_subject, key=lambda s: s.nt()):
        if isinstance(subject, Iri):
            out.append(f"  <rdf:Description rdf:about={xml_quoteattr(subject.value)}>")
        else:
            out.append(f"  <rdf:Description rdf:nodeID={xml_quoteattr(subject.local_id)}>")
        for t in by_subject[subject]:
            prefix, local = element_names[t.predicate.value]
            name = f"{prefix}:{local}"
            obj = t.object
            if isinstance(obj, Iri):
                out.append(f"    <{name} rdf:resource={xml_quoteattr(obj.value)}/>")
            elif isinstance(obj, BlankNode):
                out.append(f"    <{name} rdf:nodeID={xml_quoteattr(obj.local_id)}/>")
            elif obj.language is not None:
                out.append(f"    <{name} xml:lang={xml_quoteattr(obj.language)}>{_xml_text(obj.lexical)}</{name}>")
            elif obj.datatype == XML_LITERAL:
                out.append(f'    <{name} rdf:parseType="Literal">{_xml_text(obj.lexical)}</{name}>')
            elif obj.datatype is not None:
                out.append(
                    f"    <{name} rdf:datatype={xml_quoteattr(obj.datatype)}>{_xml_text(obj.lexical)}</{name}>"
                )
            else:
                out.append(f"    <{name}>{_xml_text(obj.lexical)}</{name}>")
        out.append("  </rdf:Description>")
    out.append("</rdf:RDF>")
    return "\n".join(out) + "\n"


# -- per-concept split -------------------------------------------------


def split_per_concept(expanded: Graph) -> dict[str, Graph]:
    """Slice the expanded graph into one description per concept.

    A concept's slice holds every triple it is the subject of, plus the
    triples of each blank node it points to (the reified scoped
    references). Keys are the concepts' notation values.
    """
    slices: dict[str, Graph] = {}
    for t in expanded.match_iter(None, RDF.type, SKOS.Concept):
        concept = t.subject
        notations = [
            tt.object.lexical
            for tt in expanded.match_iter(concept, SKOS.notation, None)
            if isinstance(tt.object, Literal)
        ]
        if not notations:
            continue
        code = sorted(notations)[0]
        piece = Graph(expanded.prefixes)
        for st in expanded.match_iter(concept, None, None):
            piece.insert(st)
            if isinstance(st.object, BlankNode):
                piece.insert_all(expanded.match_iter(st.object, None, None))
        slices[code] = piece
    return slices


FORMATS = {
    "nt": (to_ntriples, "application/n-triples"),
    "ttl": (to_turtle, "text/turtle"),
    "rdf": (to_rdfxml, "application/rdf+xml"),
}


def serialize(graph: Graph, fmt: str) -> str:
    try:
        writer = FORMATS[fmt][0]
    except KeyError:
        raise SerializationError(f"unknown format {fmt!r} (expected nt, ttl, or rdf)")
    return writer(graph)
