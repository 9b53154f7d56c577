"""Parser for the line-oriented classification master source.

The master file carries one record per line (`CODE DESCRIPTION`), with `%`
comment lines, bracketed cross-reference clauses embedded in descriptions,
and an optional trailing `| NOTE` field. The three-level hierarchy is not
stated in the file; it is derived from the code grammar itself.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Optional


class InvalidCodeError(ValueError):
    def __init__(self, text: str) -> None:
        super().__init__(f"invalid class code: {text!r}")
        self.text = text


class Level(enum.Enum):
    TOP = "top"
    MIDDLE = "middle"
    LEAF = "leaf"


_TOP_RE = re.compile(r"^[0-9]{2}-XX$")
_MIDDLE_RE = re.compile(r"^[0-9]{2}[A-Z]xx$")
_LEAF_RE = re.compile(r"^[0-9]{2}[A-Z][0-9]{2}$")
_LEAF_DASH_RE = re.compile(r"^[0-9]{2}-[0-9]{2}$")


@dataclass(frozen=True, slots=True)
class ClassCode:
    text: str
    level: Level
    parent: Optional[str]


def parse_code(text: str) -> ClassCode:
    """Classify a 5-character class code and derive its parent code.

    Top `NN-XX` has no parent; middle `NNAxx` hangs under `NN-XX`; leaf
    `NNA45` hangs under `NNAxx` and dash-leaf `NN-45` under `NN-XX`.
    """
    if _TOP_RE.match(text):
        return ClassCode(text, Level.TOP, None)
    if _MIDDLE_RE.match(text):
        return ClassCode(text, Level.MIDDLE, text[:2] + "-XX")
    if _LEAF_RE.match(text):
        return ClassCode(text, Level.LEAF, text[:3] + "xx")
    if _LEAF_DASH_RE.match(text):
        return ClassCode(text, Level.LEAF, text[:2] + "-XX")
    raise InvalidCodeError(text)


def is_valid_code(text: str) -> bool:
    try:
        parse_code(text)
    except InvalidCodeError:
        return False
    return True


class CrossRefKind(enum.Enum):
    SEE_ALSO = "see-also"
    SEE_MAINLY = "see-mainly"
    FOR_SEE = "for-see"


@dataclass(frozen=True, slots=True)
class CrossRef:
    kind: CrossRefKind
    targets: tuple[str, ...]
    scope: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.targets:
            raise ValueError("cross-reference needs at least one target")
        for t in self.targets:
            if not is_valid_code(t):
                raise InvalidCodeError(t)
        if (self.kind is CrossRefKind.FOR_SEE) != (self.scope is not None):
            raise ValueError("scope is required exactly for 'for … see' references")
        if self.scope is not None and not self.scope.strip():
            raise ValueError("scope must be non-empty")


@dataclass(frozen=True, slots=True)
class SourceRecord:
    code: ClassCode
    label: str
    crossrefs: tuple[CrossRef, ...] = ()
    has_math_markup: bool = False
    note: Optional[str] = None


@dataclass(frozen=True, slots=True)
class Diagnostic:
    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


_MATH_SPAN_RE = re.compile(r"\$[^$]+\$")
_CODE_LIST_SPLIT_RE = re.compile(r"\s*,\s*|\s+and\s+")


def has_math_markup(text: str) -> bool:
    return bool(_MATH_SPAN_RE.search(text))


def _math_spans(text: str) -> list[tuple[int, int]]:
    return [m.span() for m in _MATH_SPAN_RE.finditer(text)]


def _clause_spans(text: str) -> list[tuple[int, int, str]]:
    """(start, end, body) for every bracketed/braced group outside math markup."""
    masked = _math_spans(text)

    def in_math(i: int) -> bool:
        return any(a <= i < b for a, b in masked)

    spans: list[tuple[int, int, str]] = []
    for m in re.finditer(r"\[[^\[\]]*\]|\{[^{}]*\}", text):
        if in_math(m.start()):
            continue
        spans.append((m.start(), m.end(), m.group(0)))
    return spans


def _parse_code_list(text: str) -> Optional[tuple[str, ...]]:
    """Split `58A10, 58A15 and 58C35` into codes; None if any token is not a code."""
    tokens = [t.strip() for t in _CODE_LIST_SPLIT_RE.split(text.strip()) if t.strip()]
    if not tokens or not all(is_valid_code(t) for t in tokens):
        return None
    return tuple(tokens)


def _parse_clause(body: str) -> CrossRef | str:
    """Parse one bracketed group; a CrossRef on success, else the problem
    message for the diagnostic stream."""
    inner = body[1:-1].strip()
    if body.startswith("["):
        for phrase, kind in (("See also", CrossRefKind.SEE_ALSO), ("See mainly", CrossRefKind.SEE_MAINLY)):
            if inner.startswith(phrase):
                codes = _parse_code_list(inner[len(phrase):])
                if codes is None:
                    return f"cross-reference clause without valid target codes: {body}"
                return CrossRef(kind, codes)
        return f"unsupported cross-reference clause: {body}"
    m = re.match(r"^For\s+(.+?),\s*see\s+(.+)$", inner, flags=re.DOTALL)
    if m:
        scope = m.group(1).strip()
        codes = _parse_code_list(m.group(2))
        if codes is None or not scope:
            return f"cross-reference clause without valid target codes: {body}"
        return CrossRef(CrossRefKind.FOR_SEE, codes, scope=scope)
    return f"unsupported cross-reference clause: {body}"


def extract_crossrefs(description: str) -> tuple[str, list[CrossRef], list[str]]:
    """Strip cross-reference clauses from a description.

    Returns (clean label, cross-references in clause order, problems).
    Unparseable clauses are reported and left in the label verbatim; the
    clean label is the input minus removed clause substrings, with the one
    doubled space each removal leaves behind collapsed.
    """
    crossrefs: list[CrossRef] = []
    problems: list[str] = []
    removals: list[tuple[int, int]] = []
    for start, end, body in _clause_spans(description):
        parsed = _parse_clause(body)
        if isinstance(parsed, CrossRef):
            crossrefs.append(parsed)
            removals.append((start, end))
        elif isinstance(parsed, str):
            problems.append(parsed)
    pieces: list[str] = []
    pos = 0
    for start, end in removals:
        pieces.append(description[pos:start])
        pos = end
        # Removal of an inner clause would otherwise leave "a  b".
        if pieces[-1].endswith(" ") and pos < len(description) and description[pos] == " ":
            pos += 1
    pieces.append(description[pos:])
    label = "".join(pieces).strip()
    return label, crossrefs, problems


def parse_source(text: str) -> tuple[list[SourceRecord], list[Diagnostic]]:
    """Parse a whole master file into records plus line-numbered diagnostics.

    Comment (`%` in column 1) and blank lines are skipped. Lines that fail
    to parse are skipped with a diagnostic; duplicated codes keep the first
    occurrence; a record whose derived parent is missing from the file is
    still emitted but flagged.
    """
    records: list[SourceRecord] = []
    diagnostics: list[Diagnostic] = []
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if not line.strip() or line.startswith("%"):
            continue
        code_text, _, rest = line.partition(" ")
        try:
            code = parse_code(code_text)
        except InvalidCodeError:
            diagnostics.append(Diagnostic(lineno, f"invalid class code {code_text!r}; line skipped"))
            continue
        if code.text in seen:
            diagnostics.append(
                Diagnostic(lineno, f"duplicate code {code.text!r} (first defined on line {seen[code.text]}); line skipped")
            )
            continue
        description, _, note_text = rest.partition("|")
        note = note_text.strip() or None
        label, crossrefs, problems = extract_crossrefs(description.strip())
        for p in problems:
            diagnostics.append(Diagnostic(lineno, p))
        if not label:
            diagnostics.append(Diagnostic(lineno, f"empty label for {code.text!r}; line skipped"))
            continue
        seen[code.text] = lineno
        records.append(
            SourceRecord(
                code=code,
                label=label,
                crossrefs=tuple(crossrefs),
                has_math_markup=has_math_markup(label),
                note=note,
            )
        )
    present = {r.code.text for r in records}
    for record in records:
        parent = record.code.parent
        if parent is not None and parent not in present:
            diagnostics.append(
                Diagnostic(seen[record.code.text], f"dangling parent {parent!r} for {record.code.text!r}")
            )
    return records, diagnostics


def render_record(record: SourceRecord) -> str:
    """Render a record back to a master-source line (clauses re-appended
    after the label, in order)."""
    parts = [record.code.text, record.label]
    for ref in record.crossrefs:
        codes = ", ".join(ref.targets)
        if ref.kind is CrossRefKind.SEE_ALSO:
            parts.append(f"[See also {codes}]")
        elif ref.kind is CrossRefKind.SEE_MAINLY:
            parts.append(f"[See mainly {codes}]")
        else:
            parts.append(f"{{For {ref.scope}, see {codes}}}")
    line = " ".join(parts)
    if record.note is not None:
        line += f" | {record.note}"
    return line
