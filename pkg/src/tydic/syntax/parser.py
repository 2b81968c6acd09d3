"""Recursive-descent parser producing :class:`~tydic.syntax.ast.Ast`.

Parsing stops at the first syntax error (E001); partial trees are never returned.
"""

from __future__ import annotations

from typing import Optional

from ..diagnostics import SourceSpan, error
from . import ast as A
from .lexer import BASIC_KINDS, Token, tokenize

_STREAM_OPTS = {
    "dimension": "dimension", "d": "dimension",
    "throughput": "throughput", "t": "throughput",
    "complexity": "complexity", "c": "complexity",
    "synchronicity": "synchronicity", "s": "synchronicity",
    "direction": "direction", "r": "direction",
}

_COMPARISONS = ("==", "!=", "<", ">", "<=", ">=")
_ANGLE_OPS = ("<", ">", "<=", ">=")

# port names may reuse the direction keywords, as in ``pu[i].in``
_PORT_NAME_KWS = ("in", "out")

RELAX_ATTRIBUTE = "NoStrictType"


def _describe(tok: Token) -> str:
    if tok.kind == "eof":
        return "end of input"
    return f"'{tok.text}'"


class Parser:
    def __init__(self, text: str, file: str = "<input>"):
        self.file = file
        self.tokens = tokenize(text, file)
        self.pos = 0
        # >0 while parsing template arguments: '<' and '>' close the list instead of comparing
        self.template_depth = 0

    # -- token helpers -------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset=1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def fail(self, expected: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        raise error("E001", f"expected {expected}, found {_describe(tok)}", tok.span)

    def expect_op(self, op: str) -> Token:
        if not self.tok.is_op(op):
            self.fail(f"'{op}'")
        return self.advance()

    def expect_kw(self, kw: str) -> Token:
        if not self.tok.is_kw(kw):
            self.fail(f"'{kw}'")
        return self.advance()

    def expect_id(self, what="identifier") -> Token:
        if self.tok.kind != "id":
            self.fail(what)
        return self.advance()

    def accept_op(self, *ops) -> Optional[Token]:
        if self.tok.is_op(*ops):
            return self.advance()
        return None

    def span_from(self, start: Token) -> SourceSpan:
        prev = self.tokens[self.pos - 1] if self.pos > 0 else start
        s = start.span
        if prev.span.line == s.line and prev.span.column >= s.column:
            length = prev.span.column + prev.span.length - s.column
        else:
            length = s.length
        return SourceSpan(s.file, s.line, s.column, length)

    # -- file level ----------------------------------------------------------

    def parse_file(self) -> A.Ast:
        decls = []
        while self.tok.kind != "eof":
            decls.append(self.parse_declaration())
        return A.Ast(self.file, tuple(decls))

    def parse_declaration(self):
        t = self.tok
        if t.is_kw("type"):
            return self.parse_type_alias()
        if t.is_kw("Group", "Union"):
            return self.parse_group_or_union()
        if t.is_kw(*BASIC_KINDS) or t.is_op("["):
            decl = self.parse_const_decl()
            self.expect_op(";")
            return decl
        if t.is_kw("streamlet"):
            return self.parse_streamlet()
        if t.is_kw("impl", "external"):
            return self.parse_impl()
        if t.is_kw("import"):
            self.advance()
            if self.tok.kind != "string":
                self.fail("import path string")
            path = self.advance().value
            self.expect_op(";")
            return A.Import(path, span=self.span_from(t))
        self.fail("a declaration")

    def parse_type_alias(self):
        start = self.expect_kw("type")
        name = self.expect_id("type name").text
        self.expect_op("=")
        texpr = self.parse_type_expr()
        self.expect_op(";")
        return A.TypeAlias(name, texpr, span=self.span_from(start))

    def parse_group_or_union(self):
        start = self.advance()
        name = self.expect_id(f"{start.text} name").text
        self.expect_op("{")
        fields = []
        while not self.tok.is_op("}"):
            ftok = self.expect_id("field name")
            self.expect_op(":")
            ftype = self.parse_type_expr()
            self.expect_op(",")
            fields.append(A.Field(ftok.text, ftype, span=self.span_from(ftok)))
        close = self.expect_op("}")
        if not fields:
            raise error("E001", f"{start.text} '{name}' must have at least one field", close.span)
        span = self.span_from(start)
        self.accept_op(";")
        cls = A.GroupDecl if start.text == "Group" else A.UnionDecl
        return cls(name, tuple(fields), span=span)

    def parse_const_decl(self):
        start = self.tok
        is_array = bool(self.accept_op("["))
        if not self.tok.is_kw(*BASIC_KINDS):
            self.fail("a value kind (int, float, string, bool, clockdomain)")
        kind = self.advance().text
        if is_array:
            self.expect_op("]")
        name = self.expect_id("constant name").text
        self.expect_op("=")
        expr = self.parse_expr()
        return A.ConstDecl(kind, name, expr, is_array, span=self.span_from(start))

    # -- streamlets and impls --------------------------------------------------

    def parse_template_params(self):
        if not self.tok.is_op("<"):
            return ()
        self.advance()
        params = [self.parse_template_param()]
        while self.accept_op(","):
            params.append(self.parse_template_param())
        self.expect_op(">")
        return tuple(params)

    def parse_template_param(self):
        start = self.expect_id("template parameter name")
        self.expect_op(":")
        t = self.tok
        if t.is_kw(*BASIC_KINDS) or t.is_kw("type"):
            self.advance()
            return A.TemplateParam(start.text, t.text, span=self.span_from(start))
        if t.is_kw("impl"):
            self.advance()
            self.expect_kw("of")
            streamlet = self.expect_id("streamlet name").text
            return A.TemplateParam(start.text, "impl", streamlet, span=self.span_from(start))
        self.fail("template parameter kind")

    def parse_template_args(self):
        if not self.tok.is_op("<"):
            return None
        self.advance()
        self.template_depth += 1
        try:
            args = [self.parse_template_arg()]
            while self.accept_op(","):
                args.append(self.parse_template_arg())
        finally:
            self.template_depth -= 1
        self.expect_op(">")
        return tuple(args)

    def parse_template_arg(self):
        start = self.tok
        if start.is_kw("type"):
            self.advance()
            return A.TypeArg(self.parse_type_expr(), span=self.span_from(start))
        if start.is_kw("impl"):
            self.advance()
            name = self.expect_id("implementation name").text
            args = self.parse_template_args()
            return A.ImplArg(name, args, span=self.span_from(start))
        return A.ValueArg(self.parse_expr(), span=self.span_from(start))

    def parse_port_name(self) -> Token:
        if self.tok.kind == "id" or self.tok.is_kw(*_PORT_NAME_KWS):
            return self.advance()
        self.fail("port name")

    def parse_streamlet(self):
        start = self.expect_kw("streamlet")
        name = self.expect_id("streamlet name").text
        params = self.parse_template_params()
        self.expect_op("{")
        ports = []
        while not self.tok.is_op("}"):
            ports.append(self.parse_port_decl())
        self.expect_op("}")
        span = self.span_from(start)
        self.accept_op(";")
        return A.StreamletDecl(name, params, tuple(ports), span=span)

    def parse_port_decl(self):
        start = self.parse_port_name()
        self.expect_op(":")
        texpr = self.parse_type_expr()
        if not self.tok.is_kw("in", "out"):
            self.fail("port direction 'in' or 'out'")
        direction = self.advance().text
        size = None
        if self.accept_op("["):
            size = self.parse_expr()
            self.expect_op("]")
        clock = None
        if self.accept_op("@"):
            clock = self.expect_id("clock domain name").text
        span = self.span_from(start)
        self.expect_op(",")
        return A.PortDecl(start.text, texpr, direction, size, clock, span=span)

    def parse_impl(self):
        start = self.tok
        external = False
        if self.tok.is_kw("external"):
            self.advance()
            external = True
        self.expect_kw("impl")
        name = self.expect_id("implementation name").text
        params = self.parse_template_params()
        self.expect_kw("of")
        streamlet = self.expect_id("streamlet name").text
        sargs = self.parse_template_args()
        self.expect_op("{")
        body = self.parse_body()
        self.expect_op("}")
        span = self.span_from(start)
        self.accept_op(";")
        if external:
            for item in body:
                if not isinstance(item, (A.AssertStmt, A.ConstDecl)):
                    raise error(
                        "E001",
                        "an external implementation may only contain assertions and constants",
                        item.span,
                    )
        return A.ImplDecl(name, params, streamlet, sargs, external, tuple(body), span=span)

    def parse_body(self):
        items = []
        while not self.tok.is_op("}") and self.tok.kind != "eof":
            items.append(self.parse_impl_item())
        return items

    def end_item(self):
        if not self.accept_op(",", ";"):
            self.fail("',' after item")

    def parse_impl_item(self):
        t = self.tok
        if t.is_kw("instance"):
            return self.parse_instance()
        if t.is_kw("for"):
            self.advance()
            var = self.expect_id("loop variable").text
            self.expect_kw("in")
            iterable = self.parse_expr()
            self.expect_op("{")
            body = self.parse_body()
            self.expect_op("}")
            span = self.span_from(t)
            self.accept_op(",")
            return A.ForBlock(var, iterable, tuple(body), span=span)
        if t.is_kw("if"):
            self.advance()
            self.expect_op("(")
            cond = self.parse_expr()
            self.expect_op(")")
            self.expect_op("{")
            body = self.parse_body()
            self.expect_op("}")
            span = self.span_from(t)
            self.accept_op(",")
            return A.IfBlock(cond, tuple(body), span=span)
        if t.is_kw("assert"):
            self.advance()
            self.expect_op("(")
            expr = self.parse_expr()
            self.expect_op(")")
            span = self.span_from(t)
            self.end_item()
            return A.AssertStmt(expr, span=span)
        if t.is_kw(*BASIC_KINDS) or t.is_op("["):
            decl = self.parse_const_decl()
            self.end_item()
            return decl
        return self.parse_connection()

    def parse_instance(self):
        start = self.expect_kw("instance")
        name = self.expect_id("instance name").text
        self.expect_op("(")
        impl = self.expect_id("implementation name").text
        args = self.parse_template_args()
        self.expect_op(")")
        size = None
        if self.accept_op("["):
            size = self.parse_expr()
            self.expect_op("]")
        span = self.span_from(start)
        self.end_item()
        return A.InstanceDecl(name, impl, args, size, span=span)

    def parse_port_ref(self):
        start = self.tok
        if not (start.kind == "id" or start.is_kw(*_PORT_NAME_KWS)):
            self.fail("an implementation item")
        first = self.advance().text
        first_index = None
        if self.accept_op("["):
            first_index = self.parse_expr()
            self.expect_op("]")
        if self.accept_op("."):
            port = self.parse_port_name().text
            port_index = None
            if self.accept_op("["):
                port_index = self.parse_expr()
                self.expect_op("]")
            return A.PortRef(port, first, first_index, port_index, span=self.span_from(start))
        return A.PortRef(first, None, None, first_index, span=self.span_from(start))

    def parse_connection(self):
        start = self.tok
        lhs = self.parse_port_ref()
        self.expect_op("=>")
        rhs = self.parse_port_ref()
        relax = False
        if self.accept_op("@"):
            attr = self.expect_id("connection attribute")
            if attr.text != RELAX_ATTRIBUTE:
                raise error("E001", f"unknown connection attribute '@{attr.text}'", attr.span)
            relax = True
        span = self.span_from(start)
        self.end_item()
        return A.Connection(lhs, rhs, relax, span=span)

    # -- logical types -------------------------------------------------------

    def parse_type_expr(self):
        t = self.tok
        if t.is_kw("Null"):
            self.advance()
            return A.NullType(span=t.span)
        if t.is_kw("Bit"):
            self.advance()
            self.expect_op("(")
            width = self.parse_nested_expr()
            self.expect_op(")")
            return A.BitType(width, span=self.span_from(t))
        if t.is_kw("Stream"):
            self.advance()
            self.expect_op("(")
            element = self.parse_type_expr()
            options = []
            while self.accept_op(","):
                options.append(self.parse_stream_option())
            self.expect_op(")")
            return A.StreamType(element, tuple(options), span=self.span_from(t))
        if t.kind == "id":
            self.advance()
            args = self.parse_template_args()
            return A.TypeRef(t.text, args, span=self.span_from(t))
        self.fail("a type expression")

    def parse_stream_option(self):
        start = self.tok
        if start.kind != "id" or start.text not in _STREAM_OPTS:
            self.fail("a stream option (dimension, throughput, complexity, synchronicity, direction)")
        key = _STREAM_OPTS[self.advance().text]
        self.expect_op("=")
        if key == "synchronicity":
            if self.tok.kind != "string":
                self.fail("synchronicity string")
            value = self.advance().value
        elif key == "direction":
            if not (self.tok.kind == "id" and self.tok.text in ("Forward", "Reverse")):
                self.fail("'Forward' or 'Reverse'")
            value = self.advance().text
        else:
            value = self.parse_nested_expr()
        return A.StreamOption(key, value, span=self.span_from(start))

    # -- expressions ---------------------------------------------------------

    def parse_nested_expr(self):
        """Expression inside brackets, where '<' and '>' compare again."""
        saved = self.template_depth
        self.template_depth = 0
        try:
            return self.parse_expr()
        finally:
            self.template_depth = saved

    def parse_expr(self):
        start = self.tok
        expr = self.parse_or()
        if self.tok.is_op("->"):
            arrow = self.advance()
            if not (isinstance(expr, A.Binary) and expr.op == "-"):
                raise error("E001", "range must have the form start-step->end", arrow.span)
            end = self.parse_or()
            return A.Range(expr.lhs, expr.rhs, end, span=self.span_from(start))
        return expr

    def _binary_level(self, ops, sub):
        start = self.tok
        lhs = sub()
        while self.tok.is_op(*ops):
            op = self.advance().text
            rhs = sub()
            lhs = A.Binary(op, lhs, rhs, span=self.span_from(start))
        return lhs

    def parse_or(self):
        return self._binary_level(("||",), self.parse_and)

    def parse_and(self):
        return self._binary_level(("&&",), self.parse_comparison)

    def parse_comparison(self):
        start = self.tok
        lhs = self.parse_add()
        ops = _COMPARISONS
        if self.template_depth:
            ops = tuple(o for o in ops if o not in _ANGLE_OPS)
        if self.tok.is_op(*ops):
            op = self.advance().text
            rhs = self.parse_add()
            lhs = A.Binary(op, lhs, rhs, span=self.span_from(start))
            if self.tok.is_op(*ops):
                raise error("E001", "comparison operators do not chain", self.tok.span)
        return lhs

    def parse_add(self):
        return self._binary_level(("+", "-"), self.parse_mul)

    def parse_mul(self):
        return self._binary_level(("*", "/"), self.parse_power)

    def parse_power(self):
        start = self.tok
        base = self.parse_unary()
        if self.tok.is_op("^"):
            self.advance()
            exponent = self.parse_power()
            return A.Binary("^", base, exponent, span=self.span_from(start))
        return base

    def parse_unary(self):
        t = self.tok
        if t.is_op("-", "+", "!"):
            self.advance()
            operand = self.parse_unary()
            return A.Unary(t.text, operand, span=self.span_from(t))
        return self.parse_postfix()

    def parse_postfix(self):
        start = self.tok
        expr = self.parse_primary()
        while self.tok.is_op("["):
            self.advance()
            index = self.parse_nested_expr()
            self.expect_op("]")
            expr = A.Index(expr, index, span=self.span_from(start))
        return expr

    def parse_primary(self):
        t = self.tok
        if t.kind == "int":
            self.advance()
            return A.IntLit(t.value, span=t.span)
        if t.kind == "float":
            self.advance()
            return A.FloatLit(t.value, span=t.span)
        if t.kind == "string":
            self.advance()
            return A.StrLit(t.value, span=t.span)
        if t.is_kw("true", "false"):
            self.advance()
            return A.BoolLit(t.text == "true", span=t.span)
        if t.kind == "id":
            self.advance()
            if self.tok.is_op("("):
                self.advance()
                args = []
                if not self.tok.is_op(")"):
                    args.append(self.parse_nested_expr())
                    while self.accept_op(","):
                        args.append(self.parse_nested_expr())
                self.expect_op(")")
                return A.Call(t.text, tuple(args), span=self.span_from(t))
            return A.Name(t.text, span=t.span)
        if t.is_op("("):
            self.advance()
            expr = self.parse_nested_expr()
            self.expect_op(")")
            return expr
        if t.is_op("["):
            self.advance()
            items = []
            if not self.tok.is_op("]"):
                items.append(self.parse_nested_expr())
                while self.accept_op(","):
                    items.append(self.parse_nested_expr())
            self.expect_op("]")
            return A.ArrayLit(tuple(items), span=self.span_from(t))
        self.fail("an expression")


def parse(text: str, file: str = "<input>") -> A.Ast:
    """Parse a whole source file; raises :class:`~tydic.diagnostics.TydiError` (E001)."""
    return Parser(text, file).parse_file()


def parse_expr(text: str, file: str = "<expr>"):
    p = Parser(text, file)
    expr = p.parse_expr()
    if p.tok.kind != "eof":
        p.fail("end of expression")
    return expr


def parse_range(text: str, file: str = "<expr>") -> A.Range:
    expr = parse_expr(text, file)
    if not isinstance(expr, A.Range):
        raise error("E001", "expected a range start-step->end", expr.span)
    return expr
