"""Abstract syntax tree for Tydi-lang source files.

Every node carries a ``span``; spans are excluded from equality so that two
trees parsed from differently formatted text compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..diagnostics import NO_SPAN, SourceSpan


def _span():
    return field(default=NO_SPAN, compare=False, repr=False)


# -- expressions -------------------------------------------------------------

@dataclass(frozen=True)
class IntLit:
    value: int
    span: SourceSpan = _span()


@dataclass(frozen=True)
class FloatLit:
    value: float
    span: SourceSpan = _span()


@dataclass(frozen=True)
class StrLit:
    value: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Name:
    id: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ArrayLit:
    items: tuple
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Unary:
    op: str  # "-", "+", "!"
    operand: "Expr"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: "Expr"
    rhs: "Expr"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Range:
    start: "Expr"
    step: "Expr"
    end: "Expr"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Index:
    target: "Expr"
    index: "Expr"
    span: SourceSpan = _span()


Expr = Union[IntLit, FloatLit, StrLit, BoolLit, Name, ArrayLit, Unary, Binary, Range, Call, Index]


# -- logical type expressions ------------------------------------------------

@dataclass(frozen=True)
class NullType:
    span: SourceSpan = _span()


@dataclass(frozen=True)
class BitType:
    width: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class StreamOption:
    key: str  # canonical: dimension, throughput, complexity, synchronicity, direction
    value: object  # Expr, or str for synchronicity/direction
    span: SourceSpan = _span()


@dataclass(frozen=True)
class StreamType:
    element: "TypeExpr"
    options: tuple = ()
    span: SourceSpan = _span()


@dataclass(frozen=True)
class TypeRef:
    name: str
    args: Optional[tuple] = None
    span: SourceSpan = _span()


TypeExpr = Union[NullType, BitType, StreamType, TypeRef]


# -- templates ---------------------------------------------------------------

@dataclass(frozen=True)
class TemplateParam:
    name: str
    kind: str  # int, float, string, bool, clockdomain, type, impl
    of_streamlet: Optional[str] = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ValueArg:
    expr: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class TypeArg:
    type: TypeExpr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ImplArg:
    name: str
    args: Optional[tuple] = None
    span: SourceSpan = _span()


TemplateArg = Union[ValueArg, TypeArg, ImplArg]


# -- declarations ------------------------------------------------------------

@dataclass(frozen=True)
class Field:
    name: str
    type: TypeExpr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class TypeAlias:
    name: str
    type: TypeExpr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class GroupDecl:
    name: str
    fields: tuple
    span: SourceSpan = _span()


@dataclass(frozen=True)
class UnionDecl:
    name: str
    fields: tuple
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ConstDecl:
    kind: str
    name: str
    expr: Expr
    is_array: bool = False
    span: SourceSpan = _span()


@dataclass(frozen=True)
class PortDecl:
    name: str
    type: TypeExpr
    direction: str  # "in" | "out"
    array_size: Optional[Expr] = None
    clock: Optional[str] = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class StreamletDecl:
    name: str
    params: tuple
    ports: tuple
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ImplDecl:
    name: str
    params: tuple
    streamlet: str
    streamlet_args: Optional[tuple]
    external: bool
    body: tuple
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Import:
    path: str
    span: SourceSpan = _span()


Declaration = Union[TypeAlias, GroupDecl, UnionDecl, ConstDecl, StreamletDecl, ImplDecl, Import]


# -- implementation body items -----------------------------------------------

@dataclass(frozen=True)
class InstanceDecl:
    name: str
    impl: str
    args: Optional[tuple] = None
    array_size: Optional[Expr] = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class PortRef:
    port: str
    owner: Optional[str] = None
    owner_index: Optional[Expr] = None
    port_index: Optional[Expr] = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Connection:
    lhs: PortRef
    rhs: PortRef
    relax: bool = False
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ForBlock:
    var: str
    iterable: Expr
    body: tuple
    span: SourceSpan = _span()


@dataclass(frozen=True)
class IfBlock:
    cond: Expr
    body: tuple
    span: SourceSpan = _span()


@dataclass(frozen=True)
class AssertStmt:
    expr: Expr
    span: SourceSpan = _span()


ImplBodyItem = Union[InstanceDecl, Connection, ForBlock, IfBlock, AssertStmt, ConstDecl]


@dataclass(frozen=True)
class Ast:
    file: str
    declarations: tuple

    def __iter__(self):
        return iter(self.declarations)

    def __len__(self):
        return len(self.declarations)


def walk(node):
    """Yield ``node`` and every AST node below it, depth first."""
    yield node
    if isinstance(node, (tuple, list)):
        for item in node:
            yield from walk(item)
        return
    fields = getattr(node, "__dataclass_fields__", None)
    if not fields:
        return
    for name in fields:
        if name == "span":
            continue
        value = getattr(node, name)
        if isinstance(value, (tuple, list)) or hasattr(value, "__dataclass_fields__"):
            yield from walk(value)
