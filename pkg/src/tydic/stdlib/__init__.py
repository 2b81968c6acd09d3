"""The bundled standard library, parsed once and shared by every compilation."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from ..syntax import parse
from ..syntax.ast import Ast

STDLIB_FILE = "<stdlib>"


def source() -> str:
    return resources.files(__package__).joinpath("std.td").read_text(encoding="utf-8")


def path():
    """Filesystem location of the library source (for line counting)."""
    return resources.files(__package__).joinpath("std.td")


@lru_cache(maxsize=None)
def prelude() -> Ast:
    return parse(source(), STDLIB_FILE)
