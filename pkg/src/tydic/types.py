"""Logical type algebra: Null, Bit, Group, Union and Stream.

Named declarations (``type A = ...``, ``Group G {...}``) are wrapped in
:class:`NamedRef` so the nominal identity survives evaluation; strict
equality compares those identities, hierarchy equality looks through them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union as _U

from .diagnostics import SourceSpan, error

SYNCHRONICITIES = ("Sync", "Flatten", "Desync", "FlatDesync")
DIRECTIONS = ("Forward", "Reverse")


@dataclass(frozen=True, order=True)
class TypeIdentity:
    """Identity of a declaration: file, name and canonical template arguments."""

    file: str
    name: str
    args: tuple = ()

    def key(self) -> str:
        args = "<" + ",".join(self.args) + ">" if self.args else ""
        return f"{self.name}{args}@{self.file}"

    def __str__(self):
        return self.key()


@dataclass(frozen=True)
class Null:
    pass


@dataclass(frozen=True)
class Bit:
    width: int


@dataclass(frozen=True)
class Group:
    fields: tuple  # ((name, LogicalType), ...)


@dataclass(frozen=True)
class Union:
    fields: tuple


@dataclass(frozen=True)
class Stream:
    element: "LogicalType"
    dimension: int = 0
    direction: str = "Forward"
    throughput: Fraction = Fraction(1)
    complexity: int = 1
    synchronicity: str = "Sync"

    @property
    def lanes(self) -> int:
        # fractional throughput below one still needs a lane
        return max(1, -(-self.throughput.numerator // self.throughput.denominator))


@dataclass(frozen=True)
class NamedRef:
    identity: TypeIdentity
    target: "LogicalType" = field(compare=True)


LogicalType = _U[Null, Bit, Group, Union, Stream, NamedRef]


def resolve(t: LogicalType) -> LogicalType:
    """Strip named references down to the structural type."""
    while isinstance(t, NamedRef):
        t = t.target
    return t


def trace(t: NamedRef) -> TypeIdentity:
    """Follow pure renames (``type B = A;``) to the identity they denote."""
    while isinstance(t.target, NamedRef):
        t = t.target
    return t.identity


def as_stream(t: LogicalType):
    t = resolve(t)
    return t if isinstance(t, Stream) else None


def bit_width(t: LogicalType, span: SourceSpan | None = None) -> int:
    """Number of hardware bits needed for one element of ``t``."""
    t = resolve(t)
    if isinstance(t, Null):
        return 0
    if isinstance(t, Bit):
        if not isinstance(t.width, int) or t.width < 1:
            raise error("E011", f"Bit width must be a positive integer, got {t.width!r}", span)
        return t.width
    if isinstance(t, Group):
        return sum(bit_width(c, span) for _, c in t.fields)
    if isinstance(t, Union):
        return max(bit_width(c, span) for _, c in t.fields)
    if isinstance(t, Stream):
        raise error("E011", "a Stream has no scalar bit width", span)
    raise TypeError(f"not a logical type: {t!r}")


def union_tag_width(t: LogicalType) -> int:
    """Discriminant bits for a Union element (zero for anything else)."""
    t = resolve(t)
    if isinstance(t, Union):
        return (len(t.fields) - 1).bit_length()
    return 0


def _stream_params(s: Stream):
    return (s.dimension, s.direction, s.throughput, s.synchronicity)


def strict_eq(a: LogicalType, b: LogicalType) -> bool:
    """Nominal equality: named types must trace to the same declaration."""
    if isinstance(a, NamedRef) or isinstance(b, NamedRef):
        if isinstance(a, NamedRef) and isinstance(b, NamedRef):
            return trace(a) == trace(b)
        return False
    if type(a) is not type(b):
        return False
    if isinstance(a, Null):
        return True
    if isinstance(a, Bit):
        return a.width == b.width
    if isinstance(a, (Group, Union)):
        return len(a.fields) == len(b.fields) and all(
            fa == fb and strict_eq(ta, tb) for (fa, ta), (fb, tb) in zip(a.fields, b.fields)
        )
    if isinstance(a, Stream):
        return _stream_params(a) == _stream_params(b) and strict_eq(a.element, b.element)
    raise TypeError(f"not a logical type: {a!r}")


def hierarchy_eq(a: LogicalType, b: LogicalType) -> bool:
    """Structural equality ignoring declaration names (field names still count)."""
    a, b = resolve(a), resolve(b)
    if type(a) is not type(b):
        return False
    if isinstance(a, Null):
        return True
    if isinstance(a, Bit):
        return a.width == b.width
    if isinstance(a, (Group, Union)):
        return len(a.fields) == len(b.fields) and all(
            fa == fb and hierarchy_eq(ta, tb) for (fa, ta), (fb, tb) in zip(a.fields, b.fields)
        )
    if isinstance(a, Stream):
        return _stream_params(a) == _stream_params(b) and hierarchy_eq(a.element, b.element)
    raise TypeError(f"not a logical type: {a!r}")


def complexity_compatible(source: LogicalType, sink: LogicalType) -> bool:
    """A source may feed a sink whose complexity is at least its own."""
    return as_stream(source).complexity <= as_stream(sink).complexity


def format_fraction(f: Fraction) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def type_key(t: LogicalType) -> str:
    """Canonical, injective text for a type (named types by identity)."""
    if isinstance(t, NamedRef):
        return t.identity.key()
    if isinstance(t, Null):
        return "Null"
    if isinstance(t, Bit):
        return f"Bit({t.width})"
    if isinstance(t, (Group, Union)):
        kw = "Group" if isinstance(t, Group) else "Union"
        return kw + "{" + ",".join(f"{n}:{type_key(c)}" for n, c in t.fields) + "}"
    if isinstance(t, Stream):
        return (f"Stream({type_key(t.element)},d={t.dimension},r={t.direction},"
                f"t={format_fraction(t.throughput)},c={t.complexity},s={t.synchronicity})")
    raise TypeError(f"not a logical type: {t!r}")


def describe(t: LogicalType) -> str:
    """Short human-readable rendering for diagnostics."""
    if isinstance(t, NamedRef):
        return t.identity.name
    if isinstance(t, Stream):
        opts = []
        if t.dimension:
            opts.append(f"d={t.dimension}")
        if t.direction != "Forward":
            opts.append(f"r={t.direction}")
        if t.throughput != 1:
            opts.append(f"t={format_fraction(t.throughput)}")
        if t.complexity != 1:
            opts.append(f"c={t.complexity}")
        if t.synchronicity != "Sync":
            opts.append(f"s={t.synchronicity}")
        return "Stream(" + ", ".join([describe(t.element)] + opts) + ")"
    return type_key(t)
