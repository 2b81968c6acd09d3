"""Line-of-code accounting for query designs.

``LoC_a = LoC_q + LoC_f + LoC_s``, ``R_q = LoC_vhdl / LoC_q`` and
``R_a = LoC_vhdl / LoC_a``.  Ratios are rounded half-up to two decimals.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from .vhdl import loc_count

TWO_PLACES = Decimal("0.01")


class MetricsError(ValueError):
    pass


def ratio(num: int, den: int) -> Decimal:
    if den == 0:
        raise MetricsError("ratio with a zero line count in the denominator")
    return (Decimal(num) / Decimal(den)).quantize(TWO_PLACES, rounding=ROUND_HALF_UP)


@dataclass(frozen=True)
class LocReport:
    loc_q: int
    loc_f: int
    loc_s: int
    loc_vhdl: int

    def __post_init__(self):
        for name in ("loc_q", "loc_f", "loc_s", "loc_vhdl"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise MetricsError(f"{name} must be a non-negative int, got {v!r}")
        if self.loc_q == 0:
            raise MetricsError("LoC_q is 0: no query logic to compare against")

    @property
    def loc_a(self) -> int:
        return self.loc_q + self.loc_f + self.loc_s

    @property
    def r_q(self) -> Decimal:
        return ratio(self.loc_vhdl, self.loc_q)

    @property
    def r_a(self) -> Decimal:
        return ratio(self.loc_vhdl, self.loc_a)

    def rows(self) -> list[tuple[str, str]]:
        return [("LoC_q", str(self.loc_q)), ("LoC_f", str(self.loc_f)), ("LoC_s", str(self.loc_s)),
                ("LoC_a", str(self.loc_a)), ("LoC_vhdl", str(self.loc_vhdl)),
                ("R_q", str(self.r_q)), ("R_a", str(self.r_a))]


def _files(path: str | Path, pattern: str) -> list[Path]:
    p = Path(path)
    if p.is_dir():
        return sorted(p.rglob(pattern))
    if p.is_file():
        return [p]
    raise FileNotFoundError(f"no such file or directory: {path}")


def count_lines(paths, style: str) -> int:
    """Sum of :func:`loc_count` over files and directories (searched recursively)."""
    pattern = "*.vhd" if style == "vhdl" else "*.td"
    total = 0
    for path in paths:
        for f in _files(path, pattern):
            total += loc_count(f.read_text(encoding="utf-8"), style)
    return total


def loc_metrics(query, fletcher, stdlib, vhdl) -> LocReport:
    """Each argument is a list of files or directories."""
    return LocReport(count_lines(query, "td"), count_lines(fletcher, "td"),
                     count_lines(stdlib, "td"), count_lines(vhdl, "vhdl"))
