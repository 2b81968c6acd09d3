from collections import Counter

import pytest

from tydic.diagnostics import TydiError
from tydic.elaborate import Endpoint, elaborate
from tydic.scope_eval import resolve
from tydic.stdlib import prelude
from tydic.syntax import parse
from tydic.types import bit_width

from conftest import TPCH_QUERIES, build

BYTE = "type Byte = Stream(Bit(8));\n"


def elab_text(src, top, **kw):
    prog = resolve([parse(src, "m.td")], prelude())
    assert prog.diagnostics == [], prog.diagnostics
    design, _ = elaborate(prog, top, **kw)
    return design


def elab_code(src, top, **kw):
    with pytest.raises(TydiError) as exc:
        elab_text(src, top, **kw)
    return exc.value.diagnostics[0]


def parallelize_impl(design):
    [impl] = [i for i in design.impls.values() if i.identity.name == "parallelize_i"]
    return impl


def test_parallelize_counts():
    design = build("corpus/cookbook/parallelize.td", "adder_8x", sugar=False).design
    impl = parallelize_impl(design)
    kinds = Counter(design.impls[i.impl].identity.name for i in impl.instances)
    assert kinds == {"demux_i": 1, "mux_i": 1, "adder_32": 8}
    internal = [c for c in impl.connections if c.src.owner is not None and c.dst.owner is not None]
    assert len(internal) == 16
    assert len(impl.connections) == 18
    pu_indices = sorted(i.index for i in impl.instances if i.name == "pu")
    assert pu_indices == list(range(8))
    for i in range(8):
        assert any(c.src == Endpoint("demux_inst", None, "out", i) and c.dst == Endpoint("pu", i, "in", None)
                   for c in impl.connections)


def test_parallelize_template_args_are_canonical():
    design = build("corpus/cookbook/parallelize.td", "adder_8x", sugar=False).design
    impl = parallelize_impl(design)
    assert impl.identity.args[-1] == "8"
    demux = next(design.impls[i.impl] for i in impl.instances if i.name == "demux_inst")
    port = design.streamlet_of(demux).port("out")
    assert port.size == 8
    assert bit_width(port.stream.element) == 64


@pytest.mark.parametrize("channel", [1, 3, 16])
def test_parallelize_scales_with_channel(tmp_path, channel):
    src = open("corpus/cookbook/parallelize.td").read().replace("int channel = 8;", f"int channel = {channel};")
    f = tmp_path / "p.td"
    f.write_text(src)
    design = build(str(f), "adder_8x", sugar=False).design
    impl = parallelize_impl(design)
    assert len(impl.instances) == channel + 2
    assert len(impl.connections) == 2 * channel + 2


def test_same_arguments_share_one_instantiation():
    src = BYTE + """
streamlet s<n: int> { in: Byte in [n], }
external impl e<n: int> of s<n> {}
streamlet top_s { in: Byte in [4], }
impl top of top_s {
  instance a(e<2>), instance b(e<1 + 1>),
  in[0] => a.in[0], in[1] => a.in[1], in[2] => b.in[0], in[3] => b.in[1],
}
"""
    design = elab_text(src, "top")
    impl = design.impls[design.top]
    assert impl.instances[0].impl == impl.instances[1].impl


def test_if_selects_branch():
    src = BYTE + """
streamlet s { in: Byte in, out: Byte out, }
external impl fast of s {}
external impl slow of s {}
impl pick<turbo: bool> of s {
  if (turbo) { instance u(fast), }
  if (!turbo) { instance u(slow), }
  in => u.in, u.out => out,
}
impl top of s {
  instance p(pick<true>),
  in => p.in, p.out => out,
}
"""
    design = elab_text(src, "top")
    [pick] = [i for i in design.impls.values() if i.identity.name == "pick"]
    assert design.impls[pick.instances[0].impl].identity.name == "fast"


def test_instance_redeclared_by_outer_loop():
    src = BYTE + """
streamlet cmp_s { in: Byte in, }
external impl cmp_i<v: string> of cmp_s {}
streamlet top_s { in: Byte in [6], }
impl top of top_s {
  [string] words = ["a", "b", "c"],
  for i in 0-1->2 {
    for j in 0-1->3 {
      instance c(cmp_i<words[j]>),
      in[i * 3 + j] => c[j].in,
    }
  }
}
"""
    # c[j] is declared again on every outer iteration
    assert elab_code(src, "top").code == "E008"


def test_for_instance_indexing():
    src = BYTE + """
streamlet cmp_s { in: Byte in, }
external impl cmp_i<v: string> of cmp_s {}
streamlet top_s { in: Byte in [3], }
impl top of top_s {
  [string] words = ["a", "b", "c"],
  for j in 0-1->3 {
    instance c(cmp_i<words[j]>),
    in[j] => c[j].in,
  }
}
"""
    design = elab_text(src, "top")
    impl = design.impls[design.top]
    args = [design.impls[i.impl].identity.args for i in impl.instances]
    assert [i.index for i in impl.instances] == [0, 1, 2]
    assert len(set(args)) == 3


def test_templated_top_is_rejected():
    src = BYTE + "streamlet s<n: int> {}\nimpl t<n: int> of s<n> {}\n"
    assert elab_code(src, "t").code == "E009"


def test_unknown_top():
    assert elab_code(BYTE, "nothing").code in ("E002", "E009")


def test_wrong_argument_count_is_e009():
    src = BYTE + """
streamlet s<n: int> { in: Byte in [n], }
external impl e<n: int> of s<n> {}
streamlet top_s {}
impl top of top_s { instance a(e<1, 2>), }
"""
    assert elab_code(src, "top").code == "E009"


def test_recursion_depth_limit():
    src = """
streamlet s<n: int> {}
impl r<n: int> of s<n> { instance inner(r<n + 1>), }
impl top of s<0> { instance x(r<0>), }
"""
    d = elab_code(src, "top", depth_limit=10)
    assert d.code == "E009" and "deeper" in d.message


def test_non_stream_port_is_e011():
    src = "streamlet s { a: Bit(8) in, }\nexternal impl e of s {}\nstreamlet t {}\nimpl top of t { instance x(e), }\n"
    assert elab_code(src, "top").code == "E011"


def test_failed_assert_points_at_assert():
    d = elab_code(BYTE + """
streamlet s<n: int> {}
external impl e<n: int> of s<n> { assert(n > 2), }
streamlet t {}
impl top of t { instance x(e<1>), }
""", "top")
    assert d.code == "E007"
    assert d.span.line == 4


def test_clock_domains_resolve():
    design = build("corpus/cookbook/clocks.td", "frame_grabber").design
    sync = next(i for i in design.impls.values() if i.identity.name == "cdc_fifo_i")
    s = design.streamlet_of(sync)
    assert s.port("in").clock.name == "pixel"
    assert s.port("out").clock.name == "memory"


def test_tpch_queries_elaborate(good_builds):
    for d in TPCH_QUERIES:
        design = good_builds[d].design
        assert len(design.impls) > 10
