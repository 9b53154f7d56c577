"""Forward-chaining entailment: master graph in, expanded graph out.

Rules never invent values, so the fixpoint exists and is reached on every
finite graph. Evaluation is semi-naive: each round joins only bindings
that touch at least one triple derived in the previous round.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .build import DEFAULT_CONFIG, SchemeConfig
from .rdf import (
    RDF,
    SKOS,
    Graph,
    Iri,
    Literal,
    Term,
    Triple,
    TripleError,
    TriplePattern,
    Var,
    expand_curie,
    match_pattern,
    unescape_literal,
    unify_triple,
)


class RuleError(ValueError):
    """Raised for a rule whose conclusions could invent new values."""


class RuleParseError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Rule:
    id: str
    premises: tuple[TriplePattern, ...]
    conclusions: tuple[TriplePattern, ...]

    def __post_init__(self) -> None:
        if not self.premises or not self.conclusions:
            raise RuleError(f"rule {self.id}: premises and conclusions must be non-empty")
        bound = set()
        for p in self.premises:
            bound |= p.variables()
        for c in self.conclusions:
            if not isinstance(c.predicate, Iri):
                raise RuleError(f"rule {self.id}: conclusion predicate must be a ground IRI")
            loose = c.variables() - bound
            if loose:
                raise RuleError(
                    f"rule {self.id}: conclusion variables {sorted(loose)} not bound by any premise"
                )


def _p(s, pred, o) -> TriplePattern:
    return TriplePattern(s, pred, o)


def builtin_ruleset(config: SchemeConfig = DEFAULT_CONFIG) -> list[Rule]:
    """The shipped ruleset: hierarchy inverses and transitivity, scheme
    bookkeeping, relatedness projections, mapping symmetry/transitivity."""
    x, y, z, s, n = Var("x"), Var("y"), Var("z"), Var("s"), Var("n")
    ext = config.vocab
    return [
        Rule("R1", (_p(x, SKOS.broader, y),), (_p(y, SKOS.narrower, x),)),
        Rule("R2", (_p(x, SKOS.narrower, y),), (_p(y, SKOS.broader, x),)),
        Rule("R3a", (_p(x, SKOS.broader, y),), (_p(x, SKOS.broaderTransitive, y),)),
        Rule(
            "R3b",
            (_p(x, SKOS.broaderTransitive, y), _p(y, SKOS.broaderTransitive, z)),
            (_p(x, SKOS.broaderTransitive, z),),
        ),
        Rule("R4a", (_p(x, SKOS.topConceptOf, s),), (_p(s, SKOS.hasTopConcept, x),)),
        Rule("R4b", (_p(s, SKOS.hasTopConcept, x),), (_p(x, SKOS.topConceptOf, s),)),
        Rule("R4c", (_p(x, SKOS.topConceptOf, s),), (_p(x, SKOS.inScheme, s),)),
        Rule("R5", (_p(x, SKOS.related, y),), (_p(y, SKOS.related, x),)),
        Rule("R6a", (_p(x, ext.seeAlso, y),), (_p(x, SKOS.related, y),)),
        Rule("R6b", (_p(x, ext.seeMainly, y),), (_p(x, SKOS.related, y),)),
        Rule(
            "R6c",
            (_p(x, ext.scopedRelation, n), _p(n, ext.target, y)),
            (_p(x, SKOS.related, y),),
        ),
        Rule(
            "R7",
            (_p(x, SKOS.broader, y), _p(y, SKOS.inScheme, s)),
            (_p(x, SKOS.inScheme, s),),
        ),
        Rule("R8a", (_p(x, SKOS.exactMatch, y),), (_p(y, SKOS.exactMatch, x),)),
        Rule(
            "R8b",
            (_p(x, SKOS.exactMatch, y), _p(y, SKOS.exactMatch, z)),
            (_p(x, SKOS.exactMatch, z),),
        ),
        Rule("R8c", (_p(x, SKOS.closeMatch, y),), (_p(y, SKOS.closeMatch, x),)),
        Rule(
            "R9",
            (_p(x, SKOS.broader, y),),
            (_p(x, RDF.type, SKOS.Concept), _p(y, RDF.type, SKOS.Concept)),
        ),
    ]


def _instantiate(pattern: TriplePattern, binding: Mapping[str, Term]) -> Optional[Triple]:
    def resolve(t):
        return binding[t.name] if isinstance(t, Var) else t

    try:
        return Triple(resolve(pattern.subject), resolve(pattern.predicate), resolve(pattern.object))
    except TripleError:
        # e.g. an inverse rule over a literal-object triple would need a
        # literal subject; such conclusions are simply not derivable.
        return None


def _join(
    graph: Graph, patterns: Sequence[TriplePattern], binding: Mapping[str, Term]
) -> Iterable[dict[str, Term]]:
    if not patterns:
        yield dict(binding)
        return
    head, tail = patterns[0], patterns[1:]
    for extended in match_pattern(graph, head, binding):
        yield from _join(graph, tail, extended)


def expand(graph: Graph, rules: Optional[Sequence[Rule]] = None) -> Graph:
    """Least fixpoint of the rules over the graph; the input is untouched.

    Rules are re-validated up front so a hand-built rule that invents
    values is rejected before any evaluation happens.
    """
    ruleset = builtin_ruleset() if rules is None else list(rules)
    for rule in ruleset:
        Rule(rule.id, rule.premises, rule.conclusions)

    out = graph.copy()
    delta: set[Triple] = set(out)
    while delta:
        delta_by_p: dict[Term, list[Triple]] = {}
        for t in delta:
            delta_by_p.setdefault(t.predicate, []).append(t)

        derived: set[Triple] = set()
        for rule in ruleset:
            for k, seed in enumerate(rule.premises):
                rest = [p for i, p in enumerate(rule.premises) if i != k]
                for seed_triple in _delta_candidates(seed, delta, delta_by_p):
                    binding = unify_triple(seed, seed_triple, {})
                    if binding is None:
                        continue
                    for full in _join(out, rest, binding):
                        for conclusion in rule.conclusions:
                            t = _instantiate(conclusion, full)
                            if t is not None and t not in out and t not in derived:
                                derived.add(t)
        out.insert_all(derived)
        delta = derived
    return out


def _delta_candidates(
    pattern: TriplePattern, delta: set[Triple], delta_by_p: Mapping[Term, list[Triple]]
) -> Iterable[Triple]:
    if isinstance(pattern.predicate, Var):
        return delta
    return delta_by_p.get(pattern.predicate, ())


# -- text rule format --------------------------------------------------

_ATOM_RE = re.compile(
    r"""
      \?(?P<var>[A-Za-z_][A-Za-z0-9_]*)
    | <(?P<iri>[^<>\s]+)>
    | "(?P<lit>(?:[^"\\]|\\.)*)"(?:@(?P<lang>[A-Za-z][A-Za-z0-9-]*))?
    | (?P<curie>[A-Za-z][A-Za-z0-9_-]*:[A-Za-z0-9_.-]*)
    """,
    re.VERBOSE,
)
_PATTERN_HEAD_RE = re.compile(
    r"^\s*(?P<pred><[^<>\s]+>|[A-Za-z][A-Za-z0-9_-]*:[A-Za-z0-9_.-]*)\s*\((?P<args>.*)\)\s*$",
    re.DOTALL,
)


def _split_top_level(text: str, sep: str) -> list[str]:
    """Split on `sep` outside quoted strings and parentheses."""
    parts: list[str] = []
    current: list[str] = []
    depth = 0
    in_string = False
    i = 0
    while i < len(text):
        ch = text[i]
        if in_string:
            current.append(ch)
            if ch == "\\" and i + 1 < len(text):
                current.append(text[i + 1])
                i += 1
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
            current.append(ch)
        elif ch == "(":
            depth += 1
            current.append(ch)
        elif ch == ")":
            depth -= 1
            current.append(ch)
        elif ch == sep and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
        i += 1
    parts.append("".join(current))
    return parts


def _parse_atom(text: str, prefixes: Mapping[str, str], where: str):
    m = _ATOM_RE.fullmatch(text.strip())
    if not m:
        raise RuleParseError(f"{where}: cannot parse term {text!r}")
    if m.group("var") is not None:
        return Var(m.group("var"))
    if m.group("iri") is not None:
        return Iri(m.group("iri"))
    if m.group("lit") is not None:
        return Literal(unescape_literal(m.group("lit")), language=m.group("lang"))
    return expand_curie(prefixes, m.group("curie"))


def _parse_text_pattern(text: str, prefixes: Mapping[str, str], where: str) -> TriplePattern:
    m = _PATTERN_HEAD_RE.match(text)
    if not m:
        raise RuleParseError(f"{where}: expected pred(subject, object), got {text!r}")
    args = _split_top_level(m.group("args"), ",")
    if len(args) != 2:
        raise RuleParseError(f"{where}: expected two arguments in {text!r}")
    pred_text = m.group("pred")
    if pred_text.startswith("<"):
        pred: Term = Iri(pred_text[1:-1])
    else:
        pred = expand_curie(prefixes, pred_text)
    subject = _parse_atom(args[0], prefixes, where)
    obj = _parse_atom(args[1], prefixes, where)
    return TriplePattern(subject, pred, obj)


def _split_patterns(text: str) -> list[str]:
    return [p for p in (s.strip() for s in _split_top_level(text, "&")) if p]


def parse_rules(text: str, prefixes: Mapping[str, str]) -> list[Rule]:
    """One rule per line: `id: p1 & p2 => c1 & c2`, patterns written as
    `pred(term-or-?var, term-or-?var)` with CURIEs expanded via `prefixes`."""
    rules: list[Rule] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        where = f"line {lineno}"
        rule_id, sep, body = line.partition(":")
        if not sep or not rule_id.strip():
            raise RuleParseError(f"{where}: missing rule id before ':'")
        premises_text, sep, conclusions_text = body.partition("=>")
        if not sep:
            raise RuleParseError(f"{where}: missing '=>'")
        premises = tuple(
            _parse_text_pattern(p, prefixes, where) for p in _split_patterns(premises_text)
        )
        conclusions = tuple(
            _parse_text_pattern(c, prefixes, where) for c in _split_patterns(conclusions_text)
        )
        try:
            rules.append(Rule(rule_id.strip(), premises, conclusions))
        except RuleError as exc:
            raise RuleParseError(f"{where}: {exc}") from exc
    return rules
