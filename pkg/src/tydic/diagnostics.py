"""Source spans, diagnostics and the error type raised by every compiler stage."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

#: Stable diagnostic codes.
CODES = {
    "E001": "syntax error",
    "E002": "unresolved name",
    "E003": "connection type or direction error",
    "E004": "port usage count",
    "E005": "clock domain mismatch",
    "E006": "incompatible protocol complexity",
    "E007": "assertion failed",
    "E008": "duplicate binding",
    "E009": "template instantiation error",
    "E010": "evaluation error",
    "E011": "invalid logical type",
}


@dataclass(frozen=True, order=True)
class SourceSpan:
    file: str
    line: int = 1
    column: int = 1
    length: int = 0

    def __post_init__(self):
        if self.line < 1 or self.column < 1 or self.length < 0:
            raise ValueError(f"invalid span {self!r}")

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}"


NO_SPAN = SourceSpan("<internal>")


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: SourceSpan = NO_SPAN
    severity: str = "error"
    related: tuple = field(default=())

    @property
    def is_error(self) -> bool:
        return self.severity == "error"

    def sort_key(self):
        return (self.span.file, self.span.line, self.span.column, self.code, self.message)

    def render(self) -> str:
        s = self.span
        return f"{s.file}:{s.line}:{s.column}: {self.severity}[{self.code}]: {self.message}"


class TydiError(Exception):
    """Raised by a stage that cannot continue; carries one or more diagnostics."""

    def __init__(self, *diagnostics: Diagnostic):
        if not diagnostics:
            raise ValueError("TydiError needs at least one diagnostic")
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(d.render() for d in diagnostics))

    @property
    def code(self) -> str:
        return self.diagnostics[0].code


def error(code: str, message: str, span: Optional[SourceSpan] = None, related=()) -> TydiError:
    return TydiError(Diagnostic(code, message, span or NO_SPAN, "error", tuple(related)))


def sort_diagnostics(diags: Iterable[Diagnostic]) -> list[Diagnostic]:
    # identical diagnostics reached along several instantiation paths are reported once
    unique = {(d.sort_key(), d.severity): d for d in diags}
    return [unique[k] for k in sorted(unique)]


def render_all(diags: Iterable[Diagnostic]) -> str:
    return "".join(d.render() + "\n" for d in sort_diagnostics(diags))
