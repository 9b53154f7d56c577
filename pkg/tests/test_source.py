from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from msclod.source import (
    CrossRef,
    CrossRefKind,
    InvalidCodeError,
    Level,
    SourceRecord,
    extract_crossrefs,
    has_math_markup,
    parse_code,
    parse_source,
    render_record,
)


class TestParseCode:
    def test_leaf(self):
        code = parse_code("53A45")
        assert code.level is Level.LEAF
        assert code.parent == "53Axx"

    def test_top(self):
        code = parse_code("53-XX")
        assert code.level is Level.TOP
        assert code.parent is None

    def test_middle(self):
        code = parse_code("53Axx")
        assert code.level is Level.MIDDLE
        assert code.parent == "53-XX"

    def test_dash_leaf(self):
        code = parse_code("00-01")
        assert code.level is Level.LEAF
        assert code.parent == "00-XX"

    @pytest.mark.parametrize("bad", ["5A345", "53a45", "53-xx", "53AXX", "53A4", "53A456", "", "53 45"])
    def test_invalid_codes(self, bad):
        with pytest.raises(InvalidCodeError):
            parse_code(bad)

    @given(st.text(max_size=8))
    def test_total_over_strings(self, text):
        try:
            code = parse_code(text)
        except InvalidCodeError:
            return
        assert code.text == text
        assert (code.parent is None) == (code.level is Level.TOP)
        if code.parent is not None:
            parent = parse_code(code.parent)
            assert parent.level in (Level.TOP, Level.MIDDLE)

    def test_derivation_is_functional(self):
        assert parse_code("53A45") == parse_code("53A45")


class TestExtractCrossrefs:
    def test_see_also(self):
        label, refs, problems = extract_crossrefs("Vector and tensor analysis [See also 58A10]")
        assert label == "Vector and tensor analysis"
        assert refs == [CrossRef(CrossRefKind.SEE_ALSO, ("58A10",))]
        assert problems == []

    def test_for_see_with_scope(self):
        label, refs, problems = extract_crossrefs("Curves {For numeric approximations, see 65D17}")
        assert label == "Curves"
        assert refs == [CrossRef(CrossRefKind.FOR_SEE, ("65D17",), scope="numeric approximations")]
        assert problems == []

    def test_plain_label_unchanged(self):
        label, refs, problems = extract_crossrefs("Plain label with no clause")
        assert (label, refs, problems) == ("Plain label with no clause", [], [])

    def test_see_mainly(self):
        label, refs, _ = extract_crossrefs("Connections [See mainly 53C05]")
        assert label == "Connections"
        assert refs[0].kind is CrossRefKind.SEE_MAINLY

    def test_code_list_with_comma_and_and(self):
        _, refs, _ = extract_crossrefs("Things [See also 58A10, 58A15 and 58C35]")
        assert refs[0].targets == ("58A10", "58A15", "58C35")

    def test_invalid_clause_kept_verbatim(self):
        label, refs, problems = extract_crossrefs("Stuff [See also NOTACODE]")
        assert label == "Stuff [See also NOTACODE]"
        assert refs == []
        assert len(problems) == 1

    def test_unsupported_clause_reported(self):
        label, refs, problems = extract_crossrefs("Stuff [Cf. 58A10]")
        assert label == "Stuff [Cf. 58A10]"
        assert refs == []
        assert len(problems) == 1

    def test_clause_inside_math_untouched(self):
        text = "Structures on $[0,1]$ intervals"
        label, refs, problems = extract_crossrefs(text)
        assert (label, refs, problems) == (text, [], [])

    def test_inner_clause_leaves_single_space(self):
        label, _, _ = extract_crossrefs("Curves [See also 58A10] and surfaces")
        assert label == "Curves and surfaces"

    def test_clause_order_preserved(self):
        _, refs, _ = extract_crossrefs("X {For apples, see 53A04} [See also 58A10]")
        assert [r.kind for r in refs] == [CrossRefKind.FOR_SEE, CrossRefKind.SEE_ALSO]


class TestParseSource:
    def test_three_line_fixture(self):
        text = "53-XX Differential geometry\n53Axx Classical differential geometry\n53A45 Vector and tensor analysis\n"
        records, diagnostics = parse_source(text)
        assert len(records) == 3
        assert diagnostics == []
        assert [r.code.text for r in records] == ["53-XX", "53Axx", "53A45"]

    def test_comments_only(self):
        records, diagnostics = parse_source("% nothing here\n%\n\n% more\n")
        assert records == []
        assert diagnostics == []

    def test_dangling_parent_still_emitted(self):
        records, diagnostics = parse_source("99Z99 Mystery topic\n")
        assert len(records) == 1
        assert any("dangling parent" in d.message for d in diagnostics)

    def test_bad_code_line_skipped_with_line_number(self):
        records, diagnostics = parse_source("53-XX Geometry\nBADBAD Nonsense\n")
        assert len(records) == 1
        assert diagnostics[0].line == 2

    def test_duplicate_code_first_wins(self):
        records, diagnostics = parse_source("53-XX Geometry\n53-XX Geometry again\n")
        assert len(records) == 1
        assert records[0].label == "Geometry"
        assert any("duplicate" in d.message for d in diagnostics)

    def test_note_field(self):
        records, _ = parse_source("53-XX Differential geometry | Check the mechanics sections too\n")
        assert records[0].note == "Check the mechanics sections too"

    def test_math_markup_flag(self):
        records, _ = parse_source("58A12 de Rham cohomology of $C^\\infty$ manifolds\n58Axx General theory\n58-XX Global analysis\n")
        assert records[0].has_math_markup is True
        assert records[1].has_math_markup is False

    def test_empty_label_skipped(self):
        records, diagnostics = parse_source("53-XX [See also 58A10]\n58A10 Forms\n58Axx T\n58-XX G\n")
        assert all(r.code.text != "53-XX" for r in records)
        assert any("empty label" in d.message for d in diagnostics)


def test_has_math_markup_requires_closed_span():
    assert has_math_markup("a $x^2$ b")
    assert not has_math_markup("a $ b")
    assert not has_math_markup("plain")


# -- record round trip ----------------------------------------------------

_codes = st.sampled_from(["53-XX", "53Axx", "53A45", "58A10", "00-02", "11B39"])
_label_text = st.text(
    alphabet=st.characters(whitelist_categories=("L", "N"), whitelist_characters=" -"),
    min_size=1,
    max_size=30,
).map(lambda s: " ".join(s.split())).filter(lambda s: s and not s.startswith("%"))
_targets = st.lists(_codes, min_size=1, max_size=3, unique=True).map(tuple)
_crossrefs = st.one_of(
    st.builds(CrossRef, st.sampled_from([CrossRefKind.SEE_ALSO, CrossRefKind.SEE_MAINLY]), _targets),
    st.builds(
        lambda t, scope: CrossRef(CrossRefKind.FOR_SEE, t, scope=scope),
        _targets,
        st.sampled_from(["numeric approximations", "applications in physics", "the general case"]),
    ),
)


@given(_codes, _label_text, st.lists(_crossrefs, max_size=3), st.one_of(st.none(), _label_text))
def test_record_roundtrip(code_text, label, refs, note):
    record = SourceRecord(
        code=parse_code(code_text),
        label=label,
        crossrefs=tuple(refs),
        has_math_markup=has_math_markup(label),
        note=note,
    )
    line = render_record(record)
    records, diagnostics = parse_source(line + "\n")
    parse_problems = [d for d in diagnostics if "dangling parent" not in d.message]
    assert parse_problems == []
    assert len(records) == 1
    assert records[0] == record
