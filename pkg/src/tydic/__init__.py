"""Compiler for Tydi-lang, a typed streaming-hardware description language."""

__version__ = "0.1.0"
