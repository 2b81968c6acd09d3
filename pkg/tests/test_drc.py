from collections import Counter

import pytest

from tydic.drc import check_connection, run_drc
from tydic.elaborate import elaborate
from tydic.scope_eval import resolve
from tydic.stdlib import prelude
from tydic.syntax import parse

from conftest import BAD_DESIGNS, build, expected_diagnostic


@pytest.mark.parametrize("path", BAD_DESIGNS)
def test_bad_design_reports_exactly_one_expected_error(path):
    code, line, col = expected_diagnostic(path)
    result = build(path, "top")
    assert result.status == 1
    assert [(d.code, d.span.file, d.span.line, d.span.column) for d in result.diagnostics] == \
        [(code, path, line, col)]


def test_bad_corpus_covers_every_code():
    seen = Counter(expected_diagnostic(p)[0] for p in BAD_DESIGNS)
    assert len(BAD_DESIGNS) >= 12
    assert set(seen) >= {"E003", "E004", "E005", "E006", "E007", "E008", "E009", "E010", "E011"}


def test_e004_covers_zero_and_two_uses():
    msgs = [build(p, "top").diagnostics[0].message for p in BAD_DESIGNS if "e004" in p]
    assert any("used 0 times" in m for m in msgs)
    assert any("used 2 times" in m for m in msgs)


def design_of(src):
    prog = resolve([parse(src, "m.td")], prelude())
    assert not prog.diagnostics
    design, _ = elaborate(prog, "top")
    return design


MIXED = """
clockdomain fast = "fast";
Group A { x: Bit(8), }
Group B { y: Bit(8), }
streamlet src_s { out: Stream(A, c=5) out @fast, }
streamlet snk_s { in: Stream(B, c=1) in, }
external impl src_i of src_s {}
external impl snk_i of snk_s {}
streamlet top_s {}
impl top of top_s { instance a(src_i), instance b(snk_i), a.out => b.in, }
"""


def only_code(design):
    impl = design.impls[design.top]
    return [d.code for d in check_connection(design, impl, impl.connections[0], "strict")]


def test_one_diagnostic_per_connection_in_check_order():
    design = design_of(MIXED)
    impl = design.impls[design.top]
    [conn] = impl.connections
    # type comes before clock, clock before complexity
    assert [d.code for d in check_connection(design, impl, conn, "strict")] == ["E003"]
    fixed = MIXED.replace("Stream(B, c=1)", "Stream(A, c=1)")
    assert only_code(design_of(fixed)) == ["E005"]
    fixed = fixed.replace(" @fast", "")
    assert only_code(design_of(fixed)) == ["E006"]


def test_hierarchy_mode_accepts_aliases():
    result = build("corpus/bad/e003_aliases.td", "top", drc="hierarchy")
    assert result.status == 0


def test_hierarchy_mode_still_checks_field_names():
    result = build("corpus/bad/e003_fieldnames.td", "top", drc="hierarchy")
    assert [d.code for d in result.diagnostics] == ["E003"]


def test_relax_attribute_enables_structural_check():
    assert build("corpus/cookbook/relax.td", "bridge").status == 0
    src = open("corpus/cookbook/relax.td").read().replace(" @NoStrictType", "")
    design = design_of(src.replace("impl bridge of", "impl top of"))
    assert [d.code for d in run_drc(design, "strict") if d.code != "E004"] == ["E003"]


def test_reverse_stream_is_rejected():
    src = """
type R = Stream(Bit(8), direction=Reverse);
streamlet src_s { out: R out, }
streamlet snk_s { in: R in, }
external impl src_i of src_s {}
external impl snk_i of snk_s {}
streamlet top_s {}
impl top of top_s { instance a(src_i), instance b(snk_i), a.out => b.in, }
"""
    [d] = run_drc(design_of(src), "strict")
    assert d.code == "E003" and "reverse" in d.message


def test_external_impls_are_skipped():
    design = build("corpus/cookbook/union.td", "nic").design
    assert run_drc(design, "strict") == []
