"""Compile-time values.

Plain Python objects stand in for most variants (``int``, ``float``, ``str``,
``bool``); clock domains and arrays get small wrapper classes.  Because
``bool`` subclasses ``int``, always classify with :func:`kind_of`.
"""

from __future__ import annotations

from dataclasses import dataclass
from urllib.parse import quote

BASIC_KINDS = ("int", "float", "string", "bool", "clockdomain")


@dataclass(frozen=True)
class ClockDomain:
    name: str

    def __str__(self):
        return f"@{self.name}"


DEFAULT_CLOCK = ClockDomain("!default")


@dataclass(frozen=True)
class ArrayValue:
    kind: str | None  # None only for the empty literal
    items: tuple

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)


def kind_of(v) -> str:
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, int):
        return "int"
    if isinstance(v, float):
        return "float"
    if isinstance(v, str):
        return "string"
    if isinstance(v, ClockDomain):
        return "clockdomain"
    if isinstance(v, ArrayValue):
        return "array"
    raise TypeError(f"not a value: {v!r}")


def is_value(v) -> bool:
    return isinstance(v, (bool, int, float, str, ClockDomain, ArrayValue))


def is_numeric(v) -> bool:
    return kind_of(v) in ("int", "float")


def canonical(v) -> str:
    """Injective text form used in template identities."""
    k = kind_of(v)
    if k == "bool":
        return "true" if v else "false"
    if k == "int":
        return str(v)
    if k == "float":
        text = repr(v)
        return text if any(c in text for c in ".en") else text + ".0"
    if k == "string":
        return '"' + quote(v, safe="") + '"'
    if k == "clockdomain":
        return "@" + quote(v.name, safe="")
    return "[" + ",".join(canonical(i) for i in v.items) + "]"


def mangle(v) -> str:
    """Name fragment for a value: base-10 ints, shortest floats, escaped strings."""
    k = kind_of(v)
    if k == "string":
        return quote(v, safe="")
    if k == "clockdomain":
        return quote(v.name, safe="")
    if k == "array":
        return "_".join(mangle(i) for i in v.items)
    return canonical(v)


def show(v) -> str:
    k = kind_of(v)
    if k == "string":
        return repr(v)
    if k == "array":
        return "[" + ", ".join(show(i) for i in v.items) + "]"
    return canonical(v) if k != "clockdomain" else str(v)
