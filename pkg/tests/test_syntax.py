from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tydic.diagnostics import TydiError
from tydic.stdlib import STDLIB_FILE, prelude
from tydic.syntax import ast as A
from tydic.syntax import parse, parse_expr, parse_range, pretty
from tydic.syntax.lexer import tokenize
from tydic.syntax.printer import expr as print_expr

from conftest import ROOT

ALL_SOURCES = sorted(str(p.relative_to(ROOT)) for p in (ROOT / "corpus").rglob("*.td"))


@pytest.mark.parametrize("path", ALL_SOURCES)
def test_corpus_pretty_round_trip(path):
    tree = parse((ROOT / path).read_text(), path)
    text = pretty(tree)
    again = parse(text, path)
    assert again == tree
    assert pretty(again) == text


def test_stdlib_round_trip():
    tree = prelude()
    assert parse(pretty(tree), STDLIB_FILE) == tree


def test_comments_and_whitespace_are_ignored():
    a = parse("type A = Bit(8); // trailing\n/* block\n comment */ type B = A;")
    b = parse("type A=Bit(8);type B=A;")
    assert a == b


def test_spans_point_at_tokens():
    tree = parse("\n  type Word = Bit(16);", "f.td")
    decl = tree.declarations[0]
    assert (decl.span.file, decl.span.line, decl.span.column) == ("f.td", 2, 3)


@pytest.mark.parametrize("text,line,col", [
    ("type A = Bit(8)", 1, 16),               # missing ';'
    ("streamlet s { a: Bit(8) sideways, }", 1, 25),
    ("type A = Bit(8);\n$", 2, 1),
    ("impl x of y { a.b => , }", 1, 22),
])
def test_syntax_errors_are_e001_with_location(text, line, col):
    with pytest.raises(TydiError) as exc:
        parse(text, "t.td")
    d = exc.value.diagnostics[0]
    assert d.code == "E001"
    assert (d.span.line, d.span.column) == (line, col)


def test_range_forms():
    r = parse_range("0-1->8")
    assert isinstance(r, A.Range)
    assert parse_range("(0-1->8)") == r
    with pytest.raises(TydiError):
        parse_range("0->8")


def test_precedence():
    e = parse_expr("1 + 2 * 3 ^ 2")
    assert isinstance(e, A.Binary) and e.op == "+"
    assert e.rhs.op == "*" and e.rhs.rhs.op == "^"


def test_lexer_keeps_string_escapes():
    toks = tokenize('"a\\"b"', "x")
    assert toks[0].kind == "string"


# -- random expressions survive print/parse ---------------------------------

names = st.sampled_from(["a", "width", "n_2", "x"])
leaves = st.one_of(
    st.integers(0, 10**30).map(A.IntLit),
    st.floats(0, 1e12, allow_nan=False, allow_infinity=False).map(A.FloatLit),
    st.text(st.characters(codec="ascii", exclude_categories=("Cc",)), max_size=6).map(A.StrLit),
    st.booleans().map(A.BoolLit),
    names.map(A.Name),
)
BINOPS = ["+", "-", "*", "/", "^", "==", "!=", "<", "<=", ">", ">=", "&&", "||"]


def _extend(children):
    return st.one_of(
        st.tuples(st.sampled_from(BINOPS), children, children).map(lambda t: A.Binary(*t)),
        st.tuples(st.sampled_from(["-", "!"]), children).map(lambda t: A.Unary(*t)),
        st.lists(children, max_size=3).map(lambda xs: A.ArrayLit(tuple(xs))),
        st.tuples(st.sampled_from(["ceil", "log2", "max"]), st.lists(children, min_size=1, max_size=2))
        .map(lambda t: A.Call(t[0], tuple(t[1]))),
        st.tuples(children, children).map(lambda t: A.Index(*t)),
    )


expressions = st.recursive(leaves, _extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(expressions)
def test_expression_print_parse_round_trip(e):
    text = print_expr(e)
    assert parse_expr(text) == e
