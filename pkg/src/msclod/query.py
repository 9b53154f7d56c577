"""Parse and evaluate the supported query subset over a frozen graph.

The subset: PREFIX declarations, SELECT with optional DISTINCT, plain
variables and COUNT(?var) in the projection, basic graph patterns with
`;` abbreviation, OPTIONAL blocks, `FILTER langMatches(lang(?v), "tag")`,
and GROUP BY. Aggregation requires an explicit GROUP BY.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from .rdf import (
    XSD,
    CurieError,
    Graph,
    Iri,
    Literal,
    Term,
    TriplePattern,
    Var,
    expand_curie,
    match_pattern,
    unescape_literal,
)


class QueryParseError(ValueError):
    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class QueryValidationError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class CountExpr:
    var: str


@dataclass(frozen=True, slots=True)
class Bgp:
    patterns: tuple[TriplePattern, ...]


@dataclass(frozen=True, slots=True)
class OptionalBlock:
    patterns: tuple[TriplePattern, ...]


@dataclass(frozen=True, slots=True)
class LangMatchesFilter:
    var: str
    language_range: str


WhereItem = Union[Bgp, OptionalBlock, LangMatchesFilter]
Projection = Union[str, CountExpr]


@dataclass(frozen=True, slots=True)
class Query:
    prefixes: dict[str, str]
    projection: tuple[Projection, ...]
    distinct: bool
    where: tuple[WhereItem, ...]
    group_by: tuple[str, ...]


@dataclass(slots=True)
class ResultTable:
    header: tuple[str, ...]
    rows: list[tuple[Union[Term, int, None], ...]] = field(default_factory=list)


# -- tokenizer ---------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<comment>\#[^\n]*)
    | (?P<iriref><[^<>"{}|^`\\\x00-\x20]*>)
    | (?P<var>\?[A-Za-z_][A-Za-z0-9_]*)
    | (?P<string>"(?:[^"\\\n]|\\.)*")
    | (?P<langtag>@[A-Za-z]{1,8}(?:-[A-Za-z0-9]{1,8})*)
    | (?P<pname>[A-Za-z][A-Za-z0-9_-]*:(?:[A-Za-z0-9_](?:[A-Za-z0-9_.-]*[A-Za-z0-9_-])?)?)
    | (?P<keyword>[A-Za-z][A-Za-z0-9_]*)
    | (?P<punct>[{}();,.])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True, slots=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line = 1
    line_start = 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise QueryParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup or ""
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, m.group(0), line, m.start() - line_start + 1))
        newlines = m.group(0).count("\n")
        if newlines:
            line += newlines
            line_start = m.start() + m.group(0).rindex("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = _tokenize(text)
        self.pos = 0
        self.prefixes: dict[str, str] = {}

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str, token: Optional[_Token] = None) -> QueryParseError:
        tok = token or self.peek()
        return QueryParseError(message, tok.line, tok.column)

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "keyword" and tok.text.upper() == word

    def expect_keyword(self, word: str) -> _Token:
        if not self.at_keyword(word):
            raise self.error(f"expected {word}")
        return self.next()

    def expect_punct(self, ch: str) -> _Token:
        tok = self.peek()
        if tok.kind != "punct" or tok.text != ch:
            raise self.error(f"expected {ch!r}")
        return self.next()

    def at_punct(self, ch: str) -> bool:
        tok = self.peek()
        return tok.kind == "punct" and tok.text == ch

    # -- grammar --------------------------------------------------------

    def parse(self) -> Query:
        while self.at_keyword("PREFIX"):
            self.next()
            name_tok = self.peek()
            if name_tok.kind != "pname" or not name_tok.text.endswith(":"):
                raise self.error("expected prefix name ending in ':'")
            self.next()
            iri_tok = self.peek()
            if iri_tok.kind != "iriref":
                raise self.error("expected <iri> after prefix name")
            self.next()
            self.prefixes[name_tok.text[:-1]] = iri_tok.text[1:-1]

        self.expect_keyword("SELECT")
        distinct = False
        if self.at_keyword("DISTINCT"):
            self.next()
            distinct = True

        projection: list[Projection] = []
        while True:
            tok = self.peek()
            if tok.kind == "var":
                projection.append(self.next().text[1:])
            elif self.at_keyword("COUNT"):
                self.next()
                self.expect_punct("(")
                var_tok = self.peek()
                if var_tok.kind != "var":
                    raise self.error("expected variable inside COUNT()")
                self.next()
                self.expect_punct(")")
                projection.append(CountExpr(var_tok.text[1:]))
            else:
                break
        if not projection:
            raise self.error("expected at least one projected variable")

        self.expect_keyword("WHERE")
        self.expect_punct("{")
        where: list[WhereItem] = []
        current_bgp: list[TriplePattern] = []

        def flush_bgp() -> None:
            if current_bgp:
                where.append(Bgp(tuple(current_bgp)))
                current_bgp.clear()

        while not self.at_punct("}"):
            if self.at_keyword("OPTIONAL"):
                flush_bgp()
                self.next()
                self.expect_punct("{")
                block: list[TriplePattern] = []
                while not self.at_punct("}"):
                    block.extend(self.triples_same_subject())
                self.expect_punct("}")
                where.append(OptionalBlock(tuple(block)))
            elif self.at_keyword("FILTER"):
                flush_bgp()
                self.next()
                where.append(self.lang_matches_filter())
            elif self.peek().kind == "eof":
                raise self.error("unterminated WHERE block")
            else:
                current_bgp.extend(self.triples_same_subject())
        self.expect_punct("}")
        flush_bgp()

        group_by: list[str] = []
        if self.at_keyword("GROUP"):
            self.next()
            self.expect_keyword("BY")
            while self.peek().kind == "var":
                group_by.append(self.next().text[1:])
            if not group_by:
                raise self.error("expected at least one variable after GROUP BY")

        if self.peek().kind != "eof":
            raise self.error("unexpected trailing content")

        query = Query(
            prefixes=self.prefixes,
            projection=tuple(projection),
            distinct=distinct,
            where=tuple(where),
            group_by=tuple(group_by),
        )
        _validate(query)
        return query

    def triples_same_subject(self) -> list[TriplePattern]:
        subject = self.term(allow_literal=False)
        patterns: list[TriplePattern] = []
        while True:
            predicate = self.term(allow_literal=False, as_predicate=True)
            obj = self.term(allow_literal=True)
            patterns.append(TriplePattern(subject, predicate, obj))
            if self.at_punct(";"):
                self.next()
                # A dangling ';' before '.' is tolerated by SPARQL.
                if self.at_punct("."):
                    break
                continue
            break
        # The '.' after the last triple of a block may be omitted.
        if self.at_punct("."):
            self.next()
        elif not self.at_punct("}"):
            raise self.error("expected '.'")
        return patterns

    def term(self, *, allow_literal: bool, as_predicate: bool = False):
        tok = self.peek()
        if tok.kind == "var":
            self.next()
            return Var(tok.text[1:])
        if tok.kind == "iriref":
            self.next()
            return Iri(tok.text[1:-1])
        if tok.kind == "pname":
            self.next()
            try:
                return expand_curie(self.prefixes, tok.text)
            except CurieError as exc:
                raise self.error(str(exc), tok) from exc
        if tok.kind == "keyword" and tok.text == "a" and as_predicate:
            self.next()
            return Iri("http://www.w3.org/1999/02/22-rdf-syntax-ns#type")
        if tok.kind == "string" and allow_literal:
            self.next()
            lexical = unescape_literal(tok.text[1:-1])
            if self.peek().kind == "langtag":
                lang = self.next().text[1:]
                return Literal(lexical, language=lang)
            return Literal(lexical)
        raise self.error(f"unexpected token {tok.text!r}")

    def lang_matches_filter(self) -> LangMatchesFilter:
        name = self.peek()
        if not (name.kind == "keyword" and name.text.lower() == "langmatches"):
            raise self.error("only langMatches(lang(?var), \"range\") filters are supported")
        self.next()
        self.expect_punct("(")
        inner = self.peek()
        if not (inner.kind == "keyword" and inner.text.lower() == "lang"):
            raise self.error("expected lang(?var) inside langMatches")
        self.next()
        self.expect_punct("(")
        var_tok = self.peek()
        if var_tok.kind != "var":
            raise self.error("expected variable inside lang()")
        self.next()
        self.expect_punct(")")
        self.expect_punct(",")
        range_tok = self.peek()
        if range_tok.kind != "string":
            raise self.error("expected quoted language range")
        self.next()
        if range_tok.text == '"*"':
            language_range = "*"
        else:
            language_range = range_tok.text[1:-1]
        self.expect_punct(")")
        return LangMatchesFilter(var_tok.text[1:], language_range)


def _where_variables(query: Query) -> set[str]:
    names: set[str] = set()
    for item in query.where:
        if isinstance(item, (Bgp, OptionalBlock)):
            for p in item.patterns:
                names |= p.variables()
    return names


def _validate(query: Query) -> None:
    in_where = _where_variables(query)
    counts = [p for p in query.projection if isinstance(p, CountExpr)]
    plain = [p for p in query.projection if isinstance(p, str)]
    if counts:
        if not query.group_by:
            raise QueryValidationError("COUNT() requires an explicit GROUP BY")
        for var in plain:
            if var not in query.group_by:
                raise QueryValidationError(
                    f"projected variable ?{var} must appear in GROUP BY when COUNT() is projected"
                )
        for c in counts:
            if c.var not in in_where:
                raise QueryValidationError(f"counted variable ?{c.var} does not occur in WHERE")
    if query.group_by:
        for var in plain:
            if var not in query.group_by:
                raise QueryValidationError(f"projected variable ?{var} must appear in GROUP BY")


def parse_query(text: str) -> Query:
    return _Parser(text).parse()


# -- evaluation --------------------------------------------------------


def lang_matches(tag: str, language_range: str) -> bool:
    """Basic language-range filtering: exact match or prefix on a subtag
    boundary, case-insensitive; '*' matches any non-empty tag."""
    if not tag:
        return False
    if language_range == "*":
        return True
    tag_l = tag.lower()
    range_l = language_range.lower()
    return tag_l == range_l or tag_l.startswith(range_l + "-")


def _bgp_solutions(
    graph: Graph, patterns: tuple[TriplePattern, ...], start: dict[str, Term]
) -> Iterator[dict[str, Term]]:
    solutions: list[dict[str, Term]] = [start]
    for pattern in patterns:
        solutions = [ext for s in solutions for ext in match_pattern(graph, pattern, s)]
        if not solutions:
            return iter(())
    return iter(solutions)


def evaluate(graph: Graph, query: Query) -> ResultTable:
    """Evaluate a parsed query; rows come back in a deterministic order
    (sorted by serialized terms, left to right)."""
    solutions: list[dict[str, Term]] = [{}]
    for item in query.where:
        if isinstance(item, Bgp):
            solutions = [ext for s in solutions for ext in _bgp_solutions(graph, item.patterns, s)]
        elif isinstance(item, OptionalBlock):
            extended: list[dict[str, Term]] = []
            for s in solutions:
                matches = list(_bgp_solutions(graph, item.patterns, s))
                extended.extend(matches if matches else [s])
            solutions = extended
        else:
            kept = []
            for s in solutions:
                value = s.get(item.var)
                # lang() of an unbound variable or a non-literal is a type
                # error; an erroring FILTER removes the row.
                if not isinstance(value, Literal):
                    continue
                if lang_matches(value.language or "", item.language_range):
                    kept.append(s)
            solutions = kept

    header = tuple(p if isinstance(p, str) else f"count_{p.var}" for p in query.projection)

    if query.group_by:
        groups: dict[tuple, list[dict[str, Term]]] = {}
        for s in solutions:
            key = tuple(_group_key(s.get(v)) for v in query.group_by)
            groups.setdefault(key, []).append(s)
        rows = []
        for members in groups.values():
            representative = members[0]
            row: list[Union[Term, int, None]] = []
            for p in query.projection:
                if isinstance(p, CountExpr):
                    row.append(sum(1 for m in members if p.var in m))
                else:
                    row.append(representative.get(p))
            rows.append(tuple(row))
    else:
        rows = [tuple(s.get(p) for p in query.projection) for s in solutions]  # type: ignore[misc]

    if query.distinct:
        seen = set()
        unique = []
        for row in rows:
            key = tuple(_group_key(v) for v in row)
            if key not in seen:
                seen.add(key)
                unique.append(row)
        rows = unique

    rows.sort(key=lambda row: tuple(_sort_key(v) for v in row))
    return ResultTable(header=header, rows=rows)


def _group_key(value: Union[Term, int, None]):
    if value is None:
        return None
    if isinstance(value, int):
        return ("int", value)
    return ("term", value.nt())


def _sort_key(value: Union[Term, int, None]) -> tuple[str, str]:
    if value is None:
        return ("0", "")
    if isinstance(value, int):
        return ("1", f"{value:020d}")
    return ("1", value.nt())


# -- result rendering --------------------------------------------------


def _json_term(value: Union[Term, int]) -> dict[str, str]:
    if isinstance(value, int):
        return {"type": "literal", "value": str(value), "datatype": XSD.base + "integer"}
    if isinstance(value, Iri):
        return {"type": "uri", "value": value.value}
    if isinstance(value, Literal):
        out = {"type": "literal", "value": value.lexical}
        if value.language is not None:
            out["xml:lang"] = value.language
        elif value.datatype is not None:
            out["datatype"] = value.datatype
        return out
    return {"type": "bnode", "value": value.local_id}


def results_to_json(table: ResultTable) -> str:
    """Standard query-results JSON; unbound variables are omitted from
    their binding objects."""
    bindings = []
    for row in table.rows:
        binding = {
            name: _json_term(value)
            for name, value in zip(table.header, row)
            if value is not None
        }
        bindings.append(binding)
    doc = {"head": {"vars": list(table.header)}, "results": {"bindings": bindings}}
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _tsv_cell(value: Union[Term, int, None]) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return value.nt()


def results_to_tsv(table: ResultTable) -> str:
    lines = ["\t".join(f"?{name}" for name in table.header)]
    for row in table.rows:
        lines.append("\t".join(_tsv_cell(v) for v in row))
    return "\n".join(lines) + "\n"
