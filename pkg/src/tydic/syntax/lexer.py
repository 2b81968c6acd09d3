"""Tokenizer for Tydi-lang."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..diagnostics import SourceSpan, error

KEYWORDS = frozenset(
    """type Group Union Bit Null Stream streamlet impl external instance for in out if
    assert int float string bool clockdomain of true false import""".split()
)

BASIC_KINDS = ("int", "float", "string", "bool", "clockdomain")

# longest operators first
_PUNCT = [
    "=>", "->", "==", "!=", "<=", ">=", "&&", "||",
    "{", "}", "(", ")", "[", "]", "<", ">", "=", ",", ";", ":", ".",
    "+", "-", "*", "/", "^", "!", "@",
]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<float>\d+\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<punct>"""
    + "|".join(re.escape(p) for p in _PUNCT)
    + r")",
    re.VERBOSE | re.DOTALL,
)

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\", "0": "\0"}


@dataclass(frozen=True)
class Token:
    kind: str  # "id", "kw", "int", "float", "string", "op", "eof"
    text: str
    value: object
    span: SourceSpan

    def is_op(self, *ops) -> bool:
        return self.kind == "op" and self.text in ops

    def is_kw(self, *kws) -> bool:
        return self.kind == "kw" and self.text in kws


def unescape(body: str, span: SourceSpan) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            nxt = body[i + 1]
            if nxt not in _ESCAPES:
                raise error("E001", f"unknown escape sequence '\\{nxt}'", span)
            out.append(_ESCAPES[nxt])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def escape(text: str) -> str:
    rev = {v: k for k, v in _ESCAPES.items()}
    return '"' + "".join("\\" + rev[c] if c in rev else c for c in text) + '"'


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    n = len(text)
    while pos < n:
        col = pos - line_start + 1
        if text.startswith("/*", pos) and text.find("*/", pos + 2) < 0:
            raise error("E001", "unterminated block comment", SourceSpan(file, line, col, 2))
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos] == '"':
                raise error("E001", "unterminated string literal", SourceSpan(file, line, col, 1))
            raise error("E001", f"unexpected character {text[pos]!r}", SourceSpan(file, line, col, 1))
        kind = m.lastgroup
        lexeme = m.group()
        span = SourceSpan(file, line, col, len(lexeme))
        if kind == "id":
            tokens.append(Token("kw" if lexeme in KEYWORDS else "id", lexeme, lexeme, span))
        elif kind == "int":
            tokens.append(Token("int", lexeme, int(lexeme), span))
        elif kind == "float":
            tokens.append(Token("float", lexeme, float(lexeme), span))
        elif kind == "string":
            tokens.append(Token("string", lexeme, unescape(lexeme[1:-1], span), span))
        elif kind == "punct":
            tokens.append(Token("op", lexeme, lexeme, span))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            line_start = pos + lexeme.rindex("\n") + 1
        pos = m.end()
    col = pos - line_start + 1
    tokens.append(Token("eof", "", None, SourceSpan(file, line, col, 0)))
    return tokens
