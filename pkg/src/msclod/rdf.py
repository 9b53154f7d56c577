"""Minimal RDF data model: terms, triples, and an indexed in-memory graph.

Terms are immutable. A Graph is mutable while it is being built, can be
frozen, and is then safe to share between threads (the HTTP server reads
one frozen graph from many requests at once).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Union


class RdfError(ValueError):
    """Base class for malformed RDF data."""


class TermError(RdfError):
    """Raised for an invalid IRI, blank-node label, or literal."""


class TripleError(RdfError):
    """Raised for a triple violating RDF constraints (literal subject, non-IRI predicate)."""


class CurieError(RdfError):
    """Raised when a CURIE cannot be expanded."""


class FrozenGraphError(RdfError):
    """Raised on attempts to mutate a frozen graph."""


_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.-]*:")
# Characters that cannot appear in an IRIREF; rejecting them at construction
# keeps every serialization of the graph round-trippable.
_IRI_BAD_CHARS = re.compile(r'[\x00-\x20<>"{}|^`\\]')
_BNODE_LABEL_RE = re.compile(r"^[A-Za-z0-9_][A-Za-z0-9._-]*$")
_LANG_TAG_RE = re.compile(r"^[A-Za-z]{1,8}(-[A-Za-z0-9]{1,8})*$")


@dataclass(frozen=True, slots=True)
class Iri:
    value: str

    def __post_init__(self) -> None:
        if not self.value or not _SCHEME_RE.match(self.value):
            raise TermError(f"not an absolute IRI: {self.value!r}")
        if _IRI_BAD_CHARS.search(self.value):
            raise TermError(f"IRI contains forbidden characters: {self.value!r}")

    def nt(self) -> str:
        return f"<{self.value}>"


@dataclass(frozen=True, slots=True)
class BlankNode:
    local_id: str

    def __post_init__(self) -> None:
        if not _BNODE_LABEL_RE.match(self.local_id):
            raise TermError(f"invalid blank node label: {self.local_id!r}")

    def nt(self) -> str:
        return f"_:{self.local_id}"


@dataclass(frozen=True, slots=True)
class Literal:
    lexical: str
    language: Optional[str] = None
    datatype: Optional[str] = None

    def __post_init__(self) -> None:
        if self.language is not None and self.datatype is not None:
            raise TermError("literal cannot carry both a language tag and a datatype")
        if self.language is not None:
            if not _LANG_TAG_RE.match(self.language):
                raise TermError(f"invalid language tag: {self.language!r}")
            # Tags compare case-insensitively; storing lowercase makes plain
            # equality canonical.
            object.__setattr__(self, "language", self.language.lower())
        if self.datatype is not None and not _SCHEME_RE.match(self.datatype):
            raise TermError(f"datatype is not an absolute IRI: {self.datatype!r}")

    def nt(self) -> str:
        body = f'"{escape_literal(self.lexical)}"'
        if self.language is not None:
            return f"{body}@{self.language}"
        if self.datatype is not None:
            return f"{body}^^<{self.datatype}>"
        return body


Term = Union[Iri, BlankNode, Literal]


def escape_literal(text: str) -> str:
    """Escape a literal's lexical form for N-Triples: \\, \", \\n, \\r, \\t
    by name, every other control or non-ASCII character as \\uXXXX/\\UXXXXXXXX."""
    out: list[str] = []
    for ch in text:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        else:
            cp = ord(ch)
            if 0x20 <= cp <= 0x7E:
                out.append(ch)
            elif cp <= 0xFFFF:
                out.append(f"\\u{cp:04X}")
            else:
                out.append(f"\\U{cp:08X}")
    return "".join(out)


_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t"}


def unescape_literal(text: str) -> str:
    """Inverse of escape_literal; also accepts the full N-Triples escape set."""
    out: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        if i + 1 >= n:
            raise ValueError("dangling backslash in literal")
        esc = text[i + 1]
        if esc in _ESCAPES:
            out.append(_ESCAPES[esc])
            i += 2
        elif esc == "u":
            out.append(chr(int(text[i + 2 : i + 6], 16)))
            i += 6
        elif esc == "U":
            out.append(chr(int(text[i + 2 : i + 10], 16)))
            i += 10
        else:
            raise ValueError(f"unknown escape sequence \\{esc}")
    return "".join(out)


@dataclass(frozen=True, slots=True)
class Triple:
    subject: Term
    predicate: Term
    object: Term

    def __post_init__(self) -> None:
        if isinstance(self.subject, Literal):
            raise TripleError(f"literal subject not allowed: {self.subject.nt()}")
        if not isinstance(self.subject, (Iri, BlankNode)):
            raise TripleError(f"subject must be an IRI or blank node: {self.subject!r}")
        if not isinstance(self.predicate, Iri):
            raise TripleError(f"predicate must be an IRI: {self.predicate!r}")
        if not isinstance(self.object, (Iri, BlankNode, Literal)):
            raise TripleError(f"object must be a term: {self.object!r}")

    def nt(self) -> str:
        return f"{self.subject.nt()} {self.predicate.nt()} {self.object.nt()} ."

    def sort_key(self) -> tuple[str, str, str]:
        return (self.subject.nt(), self.predicate.nt(), self.object.nt())


@dataclass(frozen=True, slots=True)
class Var:
    """Named variable for triple patterns (rules and queries)."""

    name: str

    def __post_init__(self) -> None:
        if not re.match(r"^[A-Za-z_][A-Za-z0-9_]*$", self.name):
            raise TermError(f"invalid variable name: {self.name!r}")


PatternTerm = Union[Term, Var]


@dataclass(frozen=True, slots=True)
class TriplePattern:
    subject: PatternTerm
    predicate: PatternTerm
    object: PatternTerm

    def variables(self) -> set[str]:
        return {t.name for t in (self.subject, self.predicate, self.object) if isinstance(t, Var)}


class Graph:
    """Set of triples with positional indexes and a prefix map.

    Three indexes (subject, predicate, object) back `match`; rule expansion
    and query evaluation scan by predicate heavily, so lookups have to be
    dict-backed rather than linear.
    """

    def __init__(self, prefixes: Optional[Mapping[str, str]] = None) -> None:
        self._triples: set[Triple] = set()
        self._by_s: dict[Term, set[Triple]] = {}
        self._by_p: dict[Term, set[Triple]] = {}
        self._by_o: dict[Term, set[Triple]] = {}
        self.prefixes: dict[str, str] = dict(prefixes or {})
        self._frozen = False

    # -- construction -------------------------------------------------

    def insert(self, triple: Triple) -> bool:
        """Add a triple; returns True iff it was not present before."""
        if self._frozen:
            raise FrozenGraphError("graph is frozen")
        if not isinstance(triple, Triple):
            raise TripleError(f"not a triple: {triple!r}")
        if triple in self._triples:
            return False
        self._triples.add(triple)
        self._by_s.setdefault(triple.subject, set()).add(triple)
        self._by_p.setdefault(triple.predicate, set()).add(triple)
        self._by_o.setdefault(triple.object, set()).add(triple)
        return True

    def add(self, subject: Term, predicate: Term, obj: Term) -> bool:
        return self.insert(Triple(subject, predicate, obj))

    def insert_all(self, triples: Iterable[Triple]) -> int:
        return sum(1 for t in triples if self.insert(t))

    def bind(self, name: str, iri_prefix: str) -> None:
        if self._frozen:
            raise FrozenGraphError("graph is frozen")
        self.prefixes[name] = iri_prefix

    def freeze(self) -> "Graph":
        self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    def copy(self) -> "Graph":
        """Unfrozen copy sharing no mutable state with the original."""
        g = Graph(self.prefixes)
        g._triples = set(self._triples)
        g._by_s = {k: set(v) for k, v in self._by_s.items()}
        g._by_p = {k: set(v) for k, v in self._by_p.items()}
        g._by_o = {k: set(v) for k, v in self._by_o.items()}
        return g

    # -- access --------------------------------------------------------

    def __len__(self) -> int:
        return len(self._triples)

    def __contains__(self, triple: Triple) -> bool:
        return triple in self._triples

    def __iter__(self) -> Iterator[Triple]:
        return iter(self._triples)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._triples == other._triples

    __hash__ = None  # type: ignore[assignment]

    def sorted_triples(self) -> list[Triple]:
        return sorted(self._triples, key=Triple.sort_key)

    def match_iter(
        self,
        s: Optional[Term] = None,
        p: Optional[Term] = None,
        o: Optional[Term] = None,
    ) -> Iterator[Triple]:
        """Unordered match; the workhorse behind `match` and the join engines."""
        candidates: Optional[set[Triple]] = None
        for term, index in ((s, self._by_s), (p, self._by_p), (o, self._by_o)):
            if term is None:
                continue
            bucket = index.get(term)
            if not bucket:
                return iter(())
            if candidates is None or len(bucket) < len(candidates):
                candidates = bucket
        if candidates is None:
            candidates = self._triples
        return (
            t
            for t in candidates
            if (s is None or t.subject == s)
            and (p is None or t.predicate == p)
            and (o is None or t.object == o)
        )

    def match(
        self,
        s: Optional[Term] = None,
        p: Optional[Term] = None,
        o: Optional[Term] = None,
    ) -> list[Triple]:
        """Triples agreeing with every bound position, in lexicographic order
        of their serialized terms."""
        return sorted(self.match_iter(s, p, o), key=Triple.sort_key)

    def subjects(self, p: Optional[Term] = None, o: Optional[Term] = None) -> set[Term]:
        return {t.subject for t in self.match_iter(None, p, o)}

    def objects(self, s: Optional[Term] = None, p: Optional[Term] = None) -> set[Term]:
        return {t.object for t in self.match_iter(s, p, None)}


def expand_curie(prefixes: Mapping[str, str], curie: str) -> Iri:
    """Expand `prefix:local` against a prefix map."""
    prefix, sep, local = curie.partition(":")
    if not sep:
        raise CurieError(f"not a CURIE (missing ':'): {curie!r}")
    if prefix not in prefixes:
        raise CurieError(f"unknown prefix {prefix!r} in {curie!r}")
    return Iri(prefixes[prefix] + local)


def unify_triple(
    pattern: TriplePattern, triple: Triple, binding: Mapping[str, Term]
) -> Optional[dict[str, Term]]:
    """Extend `binding` so the pattern equals the triple, or None.

    Ground positions must match exactly; repeated variables must agree."""
    out = dict(binding)
    for pat, val in (
        (pattern.subject, triple.subject),
        (pattern.predicate, triple.predicate),
        (pattern.object, triple.object),
    ):
        if isinstance(pat, Var):
            bound = out.get(pat.name)
            if bound is None:
                out[pat.name] = val
            elif bound != val:
                return None
        elif pat != val:
            return None
    return out


def match_pattern(
    graph: Graph, pattern: TriplePattern, binding: Mapping[str, Term]
) -> Iterator[dict[str, Term]]:
    """Bindings extending `binding` so that the instantiated pattern is in
    the graph. Repeated variables within the pattern must agree."""

    def resolve(t: PatternTerm) -> Optional[Term]:
        if isinstance(t, Var):
            return binding.get(t.name)
        return t

    s, p, o = resolve(pattern.subject), resolve(pattern.predicate), resolve(pattern.object)
    for triple in graph.match_iter(s, p, o):
        out = unify_triple(pattern, triple, binding)
        if out is not None:
            yield out


class Namespace:
    """IRI factory: SKOS.prefLabel or SKOS['prefLabel']."""

    def __init__(self, base: str) -> None:
        self.base = base

    def __getattr__(self, name: str) -> Iri:
        if name.startswith("_"):
            raise AttributeError(name)
        return Iri(self.base + name)

    def __getitem__(self, name: str) -> Iri:
        return Iri(self.base + name)


RDF = Namespace("http://www.w3.org/1999/02/22-rdf-syntax-ns#")
RDFS = Namespace("http://www.w3.org/2000/01/rdf-schema#")
SKOS = Namespace("http://www.w3.org/2004/02/skos/core#")
DCT = Namespace("http://purl.org/dc/terms/")
XSD = Namespace("http://www.w3.org/2001/XMLSchema#")

XML_LITERAL = RDF.base + "XMLLiteral"

STANDARD_PREFIXES: dict[str, str] = {
    "rdf": RDF.base,
    "rdfs": RDFS.base,
    "skos": SKOS.base,
    "dct": DCT.base,
    "xsd": XSD.base,
}
