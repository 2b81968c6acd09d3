"""Design rule check over an elaborated (and usually sugared) design.

Two rules: connected ports must carry the same logical type, on the same
clock domain, flowing from a local source to a local sink; and every port
element is used by exactly one connection.  The design is never modified.
"""

from __future__ import annotations

from collections import Counter, defaultdict

from .diagnostics import Diagnostic
from .elaborate import ElaboratedConnection, ElaboratedDesign, ElaboratedImpl
from .types import complexity_compatible, describe, hierarchy_eq, strict_eq

MODES = ("strict", "hierarchy")


def _owner(ep) -> str:
    if ep.owner is None:
        return "this implementation"
    idx = "" if ep.owner_index is None else f"[{ep.owner_index}]"
    return f"instance '{ep.owner}{idx}'"


def check_connection(design: ElaboratedDesign, impl: ElaboratedImpl, conn: ElaboratedConnection,
                     mode: str = "strict") -> list[Diagnostic]:
    """At most one diagnostic: the first failing check in type, direction, clock, complexity order."""
    if mode not in MODES:
        raise ValueError(f"unknown DRC mode {mode!r}")
    src = design.port_of(impl, conn.src)
    dst = design.port_of(impl, conn.dst)
    span = conn.span

    same = hierarchy_eq if (conn.relax or mode == "hierarchy") else strict_eq
    if not same(src.type, dst.type):
        how = "structurally" if same is hierarchy_eq else "strictly"
        return [Diagnostic("E003", f"type mismatch in '{conn.src} => {conn.dst}': "
                                   f"{describe(src.type)} is not {how} equal to {describe(dst.type)}", span)]

    if not design.is_local_source(impl, conn.src):
        return [Diagnostic("E003", f"'{conn.src}' cannot drive a connection: it is an "
                                   f"'{src.direction}' port of {_owner(conn.src)}", span)]
    if design.is_local_source(impl, conn.dst):
        return [Diagnostic("E003", f"'{conn.dst}' cannot receive a connection: it is an "
                                   f"'{dst.direction}' port of {_owner(conn.dst)}", span)]
    if src.stream.direction != "Forward" or dst.stream.direction != "Forward":
        return [Diagnostic("E003", f"unsupported reverse stream in '{conn.src} => {conn.dst}'", span)]

    if src.clock != dst.clock:
        return [Diagnostic("E005", f"clock domain mismatch in '{conn.src} => {conn.dst}': "
                                   f"{src.clock} vs {dst.clock}", span)]

    if not complexity_compatible(src.type, dst.type):
        return [Diagnostic("E006", f"complexity {src.stream.complexity} source '{conn.src}' cannot feed "
                                   f"complexity {dst.stream.complexity} sink '{conn.dst}'", span)]
    return []


def check_port_usage(design: ElaboratedDesign, impl: ElaboratedImpl) -> list[Diagnostic]:
    """Every port element of the impl and of its instances is used exactly once."""
    if impl.external:
        return []
    counts = Counter()
    where = defaultdict(list)
    for c in impl.connections:
        for ep in (c.src, c.dst):
            counts[ep] += 1
            where[ep].append(c.span)
    diags = []
    for ep in design.endpoints(impl):
        n = counts[ep]
        if n == 1:
            continue
        if n == 0:
            if ep.owner is None:
                span = design.port_of(impl, ep).span
            else:
                span = impl.instance(ep.owner, ep.owner_index).span
            diags.append(Diagnostic("E004", f"port '{ep}' in '{impl.identity.name}' is used 0 times "
                                            "(must be used exactly once)", span))
        else:
            diags.append(Diagnostic("E004", f"port '{ep}' in '{impl.identity.name}' is used {n} times "
                                            "(must be used exactly once)", where[ep][1]))
    return diags


def run_drc(design: ElaboratedDesign, mode: str = "strict") -> list[Diagnostic]:
    diags = []
    for identity in sorted(design.impls):
        impl = design.impls[identity]
        if impl.external:
            continue
        for conn in impl.connections:
            diags.extend(check_connection(design, impl, conn, mode))
        diags.extend(check_port_usage(design, impl))
    return diags
