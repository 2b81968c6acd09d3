"""Scopes, name resolution and compile-time expression evaluation."""

from __future__ import annotations

import math
import posixpath
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from .diagnostics import Diagnostic, SourceSpan, TydiError, error
from .syntax import ast as A
from .types import (DIRECTIONS, SYNCHRONICITIES, Bit, Group, NamedRef, Null, Stream,
                    TypeIdentity, Union)
from .values import ArrayValue, ClockDomain, is_value, kind_of

# largest integer power result we are willing to build, in bits
MAX_POW_BITS = 1 << 20

BUILTINS = ("ceil", "floor", "log2", "log10", "abs", "min", "max", "len")


# -- bindings ----------------------------------------------------------------

class Lazy:
    """A constant or named type evaluated on first use, with cycle detection."""

    __slots__ = ("decl", "scope", "state", "result")

    def __init__(self, decl, scope: "Scope"):
        self.decl = decl
        self.scope = scope
        self.state = "pending"
        self.result = None

    def force(self):
        if self.state == "done":
            return self.result
        if self.state == "running":
            raise error("E010", f"cyclic definition of '{self.decl.name}'", self.decl.span)
        self.state = "running"
        try:
            if isinstance(self.decl, A.ConstDecl):
                value = evaluate(self.decl.expr, self.scope)
                self.result = coerce_const(self.decl, value)
            else:
                self.result = eval_type_decl(self.decl, self.scope)
        finally:
            if self.state == "running":
                self.state = "pending"
        self.state = "done"
        return self.result


@dataclass(frozen=True)
class DeclRef:
    """A streamlet or impl declaration together with the scope it was declared in."""

    decl: object
    scope: "Scope"

    @property
    def file(self) -> str:
        return self.scope.file


class Scope:
    def __init__(self, parent: Optional["Scope"] = None, origin: str = "", file: str | None = None):
        self.parent = parent
        self.origin = origin
        self.file = file if file is not None else (parent.file if parent else "<none>")
        self.bindings: dict[str, object] = {}

    def bind(self, name: str, binding, span: SourceSpan | None = None):
        if name in self.bindings:
            raise error("E008", f"'{name}' is already defined in this scope (bindings are immutable)", span)
        self.bindings[name] = binding

    def lookup(self, name: str):
        scope = self
        while scope is not None:
            if name in scope.bindings:
                return scope.bindings[name]
            scope = scope.parent
        return None

    def __contains__(self, name):
        return self.lookup(name) is not None

    def child(self, origin: str) -> "Scope":
        return Scope(self, origin)


def force(binding):
    return binding.force() if isinstance(binding, Lazy) else binding


# -- values ------------------------------------------------------------------

def _num_kind(v, op, span):
    k = kind_of(v)
    if k not in ("int", "float"):
        raise error("E010", f"operator '{op}' needs numeric operands, got {k}", span)
    return k


def _int_div(a: int, b: int, span):
    if b == 0:
        raise error("E010", "division by zero", span)
    q, r = divmod(a, b)
    if r == 0:
        return q
    return float(Fraction(a, b))


def _power(a, b, span):
    ka, kb = _num_kind(a, "^", span), _num_kind(b, "^", span)
    if ka == "int" and kb == "int":
        if b >= 0:
            if abs(a) > 1 and b * a.bit_length() > MAX_POW_BITS:
                raise error("E010", "integer power result is too large", span)
            return a ** b
        if a == 0:
            raise error("E010", "division by zero (zero to a negative power)", span)
        return float(Fraction(1, a ** -b)) if -b * a.bit_length() <= MAX_POW_BITS else 0.0
    try:
        result = float(a) ** float(b)
    except ZeroDivisionError:
        raise error("E010", "division by zero (zero to a negative power)", span)
    except OverflowError:
        raise error("E010", "floating-point overflow in power", span)
    if isinstance(result, complex):
        raise error("E010", "negative base with fractional exponent", span)
    return result


def _arith(op, a, b, span):
    if op == "+" and kind_of(a) == "string" and kind_of(b) == "string":
        return a + b
    ka, kb = _num_kind(a, op, span), _num_kind(b, op, span)
    if op == "^":
        return _power(a, b, span)
    if op == "/":
        if ka == "int" and kb == "int":
            return _int_div(a, b, span)
        if b == 0:
            raise error("E010", "division by zero", span)
        return float(a) / float(b)
    if ka == "float" or kb == "float":
        a, b = float(a), float(b)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    raise AssertionError(op)


def _compare(op, a, b, span):
    ka, kb = kind_of(a), kind_of(b)
    numeric = ka in ("int", "float") and kb in ("int", "float")
    if op in ("==", "!="):
        if not numeric and ka != kb:
            raise error("E010", f"cannot compare {ka} with {kb}", span)
        if ka == "array":
            raise error("E010", "arrays cannot be compared", span)
        eq = a == b
        return eq if op == "==" else not eq
    if not numeric:
        raise error("E010", f"operator '{op}' needs numeric operands, got {ka} and {kb}", span)
    return {"<": a < b, ">": a > b, "<=": a <= b, ">=": a >= b}[op]


def _as_bool(v, what, span):
    if kind_of(v) != "bool":
        raise error("E010", f"{what} must be a bool, got {kind_of(v)}", span)
    return v


def _as_int(v, what, span):
    if kind_of(v) != "int":
        raise error("E010", f"{what} must be an int, got {kind_of(v)}", span)
    return v


def make_range(start, step, end, span=None) -> ArrayValue:
    start = _as_int(start, "range start", span)
    step = _as_int(step, "range step", span)
    end = _as_int(end, "range end", span)
    if step <= 0:
        raise error("E010", f"range step must be positive, got {step}", span)
    return ArrayValue("int", tuple(range(start, end, step)))


def make_array(items, span=None) -> ArrayValue:
    if not items:
        return ArrayValue(None, ())
    kinds = {kind_of(i) for i in items}
    if "array" in kinds:
        raise error("E010", "arrays cannot be nested", span)
    if kinds == {"int", "float"}:
        return ArrayValue("float", tuple(float(i) for i in items))
    if len(kinds) > 1:
        raise error("E010", f"array elements must share one kind, got {', '.join(sorted(kinds))}", span)
    return ArrayValue(kinds.pop(), tuple(items))


def ceil_log2_exact(n: int) -> int:
    """ceil(log2(n)) for a positive integer, without floating point."""
    return (n - 1).bit_length()


def ceil_log2_float(n) -> int:
    return math.ceil(math.log2(n))


def _decimal_digits(n: int) -> int:
    if n == 0:
        return 1
    d = max(1, int((n.bit_length() - 1) * 0.30102999566398119521))
    while 10 ** d <= n:
        d += 1
    while d > 1 and 10 ** (d - 1) > n:
        d -= 1
    return d


def _exact_log(func, outer, n):
    if func == "log2":
        return (n - 1).bit_length() if outer == "ceil" else n.bit_length() - 1
    if outer == "ceil":
        return _decimal_digits(n - 1) if n > 1 else 0
    return _decimal_digits(n) - 1


def _call(e: A.Call, scope):
    f = e.func
    if f not in BUILTINS:
        raise error("E002", f"unknown function '{f}'", e.span)
    # ceil/floor of an integer logarithm is computed exactly
    if f in ("ceil", "floor") and len(e.args) == 1:
        inner = e.args[0]
        if isinstance(inner, A.Call) and inner.func in ("log2", "log10") and len(inner.args) == 1:
            n = evaluate(inner.args[0], scope)
            if kind_of(n) == "int":
                if n <= 0:
                    raise error("E010", f"{inner.func} of non-positive number {n}", inner.span)
                return _exact_log(inner.func, f, n)
    args = [evaluate(a, scope) for a in e.args]
    if f in ("min", "max"):
        if len(args) == 1 and kind_of(args[0]) == "array":
            args = list(args[0].items)
        if not args:
            raise error("E010", f"{f} needs at least one value", e.span)
        kinds = {_num_kind(a, f, e.span) for a in args}
        result = min(args) if f == "min" else max(args)
        return float(result) if "float" in kinds else result
    if len(args) != 1:
        raise error("E010", f"{f} takes exactly one argument", e.span)
    (x,) = args
    if f == "len":
        if kind_of(x) not in ("array", "string"):
            raise error("E010", f"len needs an array or string, got {kind_of(x)}", e.span)
        return len(x)
    k = _num_kind(x, f, e.span)
    if f == "abs":
        return abs(x)
    if f in ("ceil", "floor"):
        if k == "int":
            return x
        if math.isinf(x) or math.isnan(x):
            raise error("E010", f"{f} of non-finite number", e.span)
        return math.ceil(x) if f == "ceil" else math.floor(x)
    if x <= 0:
        raise error("E010", f"{f} of non-positive number {x}", e.span)
    return math.log2(x) if f == "log2" else math.log10(x)


def evaluate(e, scope: Scope):
    """Evaluate an expression to a value."""
    if isinstance(e, (A.IntLit, A.FloatLit, A.StrLit, A.BoolLit)):
        return e.value
    if isinstance(e, A.Name):
        binding = scope.lookup(e.id)
        if binding is None:
            raise error("E002", f"unresolved name '{e.id}'", e.span)
        value = force(binding)
        if not is_value(value):
            raise error("E010", f"'{e.id}' is not a value", e.span)
        return value
    if isinstance(e, A.ArrayLit):
        return make_array([evaluate(i, scope) for i in e.items], e.span)
    if isinstance(e, A.Range):
        return make_range(evaluate(e.start, scope), evaluate(e.step, scope),
                          evaluate(e.end, scope), e.span)
    if isinstance(e, A.Unary):
        v = evaluate(e.operand, scope)
        if e.op == "!":
            return not _as_bool(v, "operand of '!'", e.span)
        _num_kind(v, e.op, e.span)
        return -v if e.op == "-" else v
    if isinstance(e, A.Binary):
        if e.op in ("&&", "||"):
            lhs = _as_bool(evaluate(e.lhs, scope), f"operand of '{e.op}'", e.span)
            if (e.op == "&&" and not lhs) or (e.op == "||" and lhs):
                return lhs
            return _as_bool(evaluate(e.rhs, scope), f"operand of '{e.op}'", e.span)
        a, b = evaluate(e.lhs, scope), evaluate(e.rhs, scope)
        if e.op in ("==", "!=", "<", ">", "<=", ">="):
            return _compare(e.op, a, b, e.span)
        return _arith(e.op, a, b, e.span)
    if isinstance(e, A.Index):
        target = evaluate(e.target, scope)
        if kind_of(target) != "array":
            raise error("E010", f"cannot index a {kind_of(target)}", e.span)
        i = _as_int(evaluate(e.index, scope), "index", e.span)
        if not 0 <= i < len(target):
            raise error("E010", f"index {i} out of bounds for array of length {len(target)}", e.span)
        return target.items[i]
    if isinstance(e, A.Call):
        return _call(e, scope)
    raise TypeError(f"not an expression: {e!r}")


def eval_assert(e, scope: Scope, span: SourceSpan | None = None):
    value = evaluate(e, scope)
    if kind_of(value) != "bool":
        raise error("E010", f"assert needs a bool, got {kind_of(value)}", getattr(e, "span", span))
    if not value:
        from .syntax.printer import expr as show_expr
        raise error("E007", f"assertion failed: {show_expr(e)}", span or e.span)


def coerce(kind: str, value, what: str, span):
    """Check ``value`` against a declared basic kind, applying the allowed promotions."""
    k = kind_of(value)
    if k == kind:
        return value
    if kind == "float" and k == "int":
        return float(value)
    if kind == "clockdomain" and k == "string":
        return ClockDomain(value)
    raise error("E010", f"{what} expects {kind}, got {k}", span)


def coerce_const(decl: A.ConstDecl, value):
    if decl.is_array:
        if kind_of(value) != "array":
            raise error("E010", f"'{decl.name}' is declared as [{decl.kind}] but got {kind_of(value)}", decl.span)
        items = tuple(coerce(decl.kind, v, f"'{decl.name}'", decl.span) for v in value.items)
        return ArrayValue(decl.kind, items)
    return coerce(decl.kind, value, f"'{decl.name}'", decl.span)


# -- logical types -------------------------------------------------------------

def eval_type_decl(decl, scope: Scope) -> NamedRef:
    ident = TypeIdentity(scope.file, decl.name)
    if isinstance(decl, A.TypeAlias):
        return NamedRef(ident, eval_type(decl.type, scope))
    seen = set()
    fields = []
    for f in decl.fields:
        if f.name in seen:
            raise error("E008", f"duplicate field '{f.name}' in '{decl.name}'", f.span)
        seen.add(f.name)
        fields.append((f.name, eval_type(f.type, scope)))
    cls = Group if isinstance(decl, A.GroupDecl) else Union
    return NamedRef(ident, cls(tuple(fields)))


def _is_type(v) -> bool:
    return isinstance(v, (Null, Bit, Group, Union, Stream, NamedRef))


def eval_type(t, scope: Scope):
    if isinstance(t, A.NullType):
        return Null()
    if isinstance(t, A.BitType):
        w = evaluate(t.width, scope)
        if kind_of(w) != "int" or w < 1:
            raise error("E011", f"Bit width must be a positive integer, got {w!r}", t.span)
        return Bit(w)
    if isinstance(t, A.StreamType):
        element = eval_type(t.element, scope)
        opts = {}
        for opt in t.options:
            if opt.key in opts:
                raise error("E011", f"stream option '{opt.key}' given twice", opt.span)
            opts[opt.key] = _stream_option(opt, scope)
        return Stream(element, **opts)
    if isinstance(t, A.TypeRef):
        binding = scope.lookup(t.name)
        if binding is None:
            raise error("E002", f"unresolved type '{t.name}'", t.span)
        if t.args is not None:
            raise error("E009", f"'{t.name}' is not a template (logical types cannot be templated)", t.span)
        value = force(binding)
        if not _is_type(value):
            raise error("E011", f"'{t.name}' is not a logical type", t.span)
        return value
    raise TypeError(f"not a type expression: {t!r}")


def _stream_option(opt: A.StreamOption, scope):
    key = opt.key
    if key == "direction":
        if opt.value not in DIRECTIONS:
            raise error("E011", f"invalid stream direction '{opt.value}'", opt.span)
        return opt.value
    if key == "synchronicity":
        if opt.value not in SYNCHRONICITIES:
            raise error("E011", f"invalid synchronicity '{opt.value}', expected one of "
                                + ", ".join(SYNCHRONICITIES), opt.span)
        return opt.value
    v = evaluate(opt.value, scope)
    k = kind_of(v)
    if key == "throughput":
        if k not in ("int", "float") or not v > 0 or (k == "float" and math.isinf(v)):
            raise error("E011", f"stream throughput must be a positive number, got {v!r}", opt.span)
        return Fraction(v) if k == "int" else Fraction(repr(v))
    if k != "int":
        raise error("E011", f"stream {key} must be an int, got {k}", opt.span)
    if key == "dimension" and v < 0:
        raise error("E011", f"stream dimension must be >= 0, got {v}", opt.span)
    if key == "complexity" and v < 1:
        raise error("E011", f"stream complexity must be >= 1, got {v}", opt.span)
    return v


# -- resolution ---------------------------------------------------------------

@dataclass
class Program:
    """File scopes for a set of parsed sources."""

    scopes: dict  # file id -> Scope
    asts: dict  # file id -> Ast
    diagnostics: list
    prelude_scope: Optional[Scope] = None

    def declarations(self, file: str):
        return self.asts[file].declarations


def _import_target(importer: str, path: str) -> str:
    return posixpath.normpath(posixpath.join(posixpath.dirname(importer), path))


def _bind_decls(tree: A.Ast, scope: Scope, diags: list):
    for d in tree.declarations:
        if isinstance(d, A.Import):
            continue
        if isinstance(d, (A.ConstDecl, A.TypeAlias, A.GroupDecl, A.UnionDecl)):
            binding = Lazy(d, scope)
        else:
            binding = DeclRef(d, scope)
        try:
            scope.bind(d.name, binding, d.span)
        except TydiError as exc:
            diags.extend(exc.diagnostics)


def resolve(asts: Iterable[A.Ast], prelude: Optional[A.Ast] = None) -> Program:
    """Build file scopes, wire imports and check that every name resolves.

    ``prelude`` (the standard library) becomes the outermost scope of every
    file; user declarations may shadow it.
    """
    asts = {a.file: a for a in asts}
    diags: list[Diagnostic] = []
    root = None
    if prelude is not None:
        root = Scope(None, "prelude", prelude.file)
        _bind_decls(prelude, root, diags)
    scopes = {}
    for file, tree in asts.items():
        imports = Scope(root, "imports", file)
        scope = Scope(imports, "file", file)
        _bind_decls(tree, scope, diags)
        scopes[file] = scope

    graph = {}
    for file, tree in asts.items():
        graph[file] = []
        imported_names = scopes[file].parent
        for d in tree.declarations:
            if not isinstance(d, A.Import):
                continue
            target = _import_target(file, d.path)
            if target not in asts:
                diags.append(Diagnostic("E002", f"cannot resolve import '{d.path}'", d.span))
                continue
            graph[file].append((target, d))
            for name, binding in scopes[target].bindings.items():
                if name in imported_names.bindings and imported_names.bindings[name] is not binding:
                    diags.append(Diagnostic(
                        "E008", f"'{name}' is imported from more than one file", d.span))
                    continue
                imported_names.bindings[name] = binding
    diags.extend(_import_cycles(graph))

    for file, tree in asts.items():
        checker = _NameChecker(scopes[file], diags)
        for d in tree.declarations:
            checker.declaration(d)
    if prelude is not None:
        checker = _NameChecker(root, diags)
        for d in prelude.declarations:
            checker.declaration(d)
    return Program(scopes, asts, diags, root)


def _import_cycles(graph) -> list[Diagnostic]:
    diags = []
    state = {}

    def visit(node, stack):
        state[node] = "active"
        for target, decl in graph.get(node, ()):
            if state.get(target) == "active":
                cycle = stack[stack.index(target):] + [target] if target in stack else [node, target]
                diags.append(Diagnostic("E002", "import cycle: " + " -> ".join(cycle), decl.span))
            elif target not in state:
                visit(target, stack + [target])
        state[node] = "done"

    for node in sorted(graph):
        if node not in state:
            visit(node, [node])
    return diags


class _NameChecker:
    """Static pass: every identifier must resolve somewhere up the scope chain."""

    def __init__(self, file_scope: Scope, diags: list):
        self.file_scope = file_scope
        self.diags = diags

    def report(self, code, msg, span):
        self.diags.append(Diagnostic(code, msg, span))

    def need(self, name, names: list, span, what="name"):
        for layer in reversed(names):
            if name in layer:
                return
        if self.file_scope.lookup(name) is None:
            self.report("E002", f"unresolved {what} '{name}'", span)

    def layer(self, items, names):
        """Collect the constants declared directly in a block."""
        layer = set()
        for item in items:
            if isinstance(item, A.ConstDecl):
                if item.name in layer:
                    self.report("E008", f"'{item.name}' is already defined in this scope "
                                        "(bindings are immutable)", item.span)
                layer.add(item.name)
        return layer

    def params(self, params):
        layer = set()
        for p in params:
            if p.name in layer:
                self.report("E008", f"duplicate template parameter '{p.name}'", p.span)
            layer.add(p.name)
            if p.kind == "impl":
                self.need(p.of_streamlet, [], p.span, "streamlet")
        return layer

    def declaration(self, d):
        if isinstance(d, A.ConstDecl):
            self.expr(d.expr, [])
        elif isinstance(d, A.TypeAlias):
            self.type(d.type, [])
        elif isinstance(d, (A.GroupDecl, A.UnionDecl)):
            seen = set()
            for f in d.fields:
                if f.name in seen:
                    self.report("E008", f"duplicate field '{f.name}' in '{d.name}'", f.span)
                seen.add(f.name)
                self.type(f.type, [])
        elif isinstance(d, A.StreamletDecl):
            names = [self.params(d.params)]
            seen = set()
            for p in d.ports:
                if p.name in seen:
                    self.report("E008", f"duplicate port '{p.name}'", p.span)
                seen.add(p.name)
                self.type(p.type, names)
                if p.array_size is not None:
                    self.expr(p.array_size, names)
                if p.clock is not None:
                    self.need(p.clock, names, p.span, "clock domain")
        elif isinstance(d, A.ImplDecl):
            names = [self.params(d.params)]
            self.need(d.streamlet, names, d.span, "streamlet")
            self.targs(d.streamlet_args, names)
            self.body(d.body, names)

    def body(self, items, names):
        names = names + [self.layer(items, names)]
        for item in items:
            if isinstance(item, A.ConstDecl):
                self.expr(item.expr, names)
            elif isinstance(item, A.InstanceDecl):
                self.need(item.impl, names, item.span, "implementation")
                self.targs(item.args, names)
                if item.array_size is not None:
                    self.expr(item.array_size, names)
            elif isinstance(item, A.Connection):
                for ref in (item.lhs, item.rhs):
                    for idx in (ref.owner_index, ref.port_index):
                        if idx is not None:
                            self.expr(idx, names)
            elif isinstance(item, A.ForBlock):
                self.expr(item.iterable, names)
                self.body(item.body, names + [{item.var}])
            elif isinstance(item, A.IfBlock):
                self.expr(item.cond, names)
                self.body(item.body, names)
            elif isinstance(item, A.AssertStmt):
                self.expr(item.expr, names)

    def targs(self, args, names):
        for a in args or ():
            if isinstance(a, A.TypeArg):
                self.type(a.type, names)
            elif isinstance(a, A.ImplArg):
                self.need(a.name, names, a.span, "implementation")
                self.targs(a.args, names)
            else:
                self.expr(a.expr, names)

    def type(self, t, names):
        if isinstance(t, A.BitType):
            self.expr(t.width, names)
        elif isinstance(t, A.StreamType):
            self.type(t.element, names)
            for opt in t.options:
                if not isinstance(opt.value, str):
                    self.expr(opt.value, names)
        elif isinstance(t, A.TypeRef):
            self.need(t.name, names, t.span, "type")
            self.targs(t.args, names)

    def expr(self, e, names):
        for node in A.walk(e):
            if isinstance(node, A.Name):
                self.need(node.id, names, node.span)
            elif isinstance(node, A.Call) and node.func not in BUILTINS:
                self.report("E002", f"unknown function '{node.func}'", node.span)
