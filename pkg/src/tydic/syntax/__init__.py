"""Lexing, parsing and pretty-printing of Tydi-lang source."""

from .parser import parse, parse_expr, parse_range
from .printer import pretty

__all__ = ["parse", "parse_expr", "parse_range", "pretty"]
