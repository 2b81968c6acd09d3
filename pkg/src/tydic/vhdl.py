"""Structural VHDL-93 emission.

Every impl becomes one file holding an entity (the port map of its
streamlet) and an architecture.  A stream port element ``p`` expands to::

    p_data   lanes * bit_width(element)   same direction as the stream (omitted if 0 bits)
    p_valid  1                            same direction
    p_ready  1                            opposite direction
    p_last   dimension bits               same direction (omitted if d = 0)
    p_tag    tag bits                     same direction, Union elements only

Clock and reset inputs are generated per clock domain used by the impl or by
anything it instantiates.  Connections become one group of signals each.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional
from urllib.parse import unquote

from .elaborate import ElaboratedDesign, ElaboratedImpl, ElaboratedPort, Endpoint
from .types import bit_width, describe, format_fraction, union_tag_width
from .values import DEFAULT_CLOCK, ClockDomain

RESERVED = frozenset("""
abs access after alias all and architecture array assert attribute begin block body buffer bus
case component configuration constant disconnect downto else elsif end entity exit file for
function generate generic group guarded if impure in inertial inout is label library linkage
literal loop map mod nand new next nor not null of on open or others out package port postponed
procedure process pure range record register reject rem report return rol ror select severity
signal shared sla sll sra srl subtype then to transport type unaffected units until use variable
wait when while with xnor xor
assume assert_always context cover default fairness force parameter property protected release
restrict restrict_guarantee sequence strong vmode vprop vunit
std_logic std_logic_vector ieee std work
""".split())


def sanitize(name: str, reserved_check: bool = True) -> str:
    """A legal basic VHDL identifier close to ``name`` (not yet collision-free)."""
    s = re.sub(r"[^A-Za-z0-9]+", "_", name).strip("_")
    if not s:
        s = "x"
    if not s[0].isalpha():
        s = "x_" + s
    if reserved_check and s.lower() in RESERVED:
        s += "_x"
    return s


class NameAllocator:
    """Hands out case-insensitively unique identifiers, suffixing on collision."""

    def __init__(self, taken=()):
        self.taken = {t.lower() for t in taken}

    def _free(self, names) -> bool:
        return not any(n.lower() in self.taken or n.lower() in RESERVED for n in names)

    def claim(self, base: str, suffixes=("",)) -> str:
        """Allocate ``base`` such that every ``base + suffix`` is unused."""
        base = sanitize(base, reserved_check=("" in suffixes))
        name, n = base, 2
        while not self._free([name + s for s in suffixes]):
            name = f"{base}_{n}"
            n += 1
        self.taken.update((name + s).lower() for s in suffixes)
        return name


# -- physical stream mapping ------------------------------------------------------

@dataclass(frozen=True)
class Signal:
    suffix: str  # data | valid | ready | last | tag
    forward: bool  # flows with the data (False only for ready)
    width: Optional[int]  # None for a scalar std_logic


def stream_signals(port: ElaboratedPort) -> list[Signal]:
    s = port.stream
    width = s.lanes * bit_width(s.element)
    out = []
    if width > 0:
        out.append(Signal("data", True, width))
    out.append(Signal("valid", True, None))
    out.append(Signal("ready", False, None))
    if s.dimension > 0:
        out.append(Signal("last", True, s.dimension))
    tag = union_tag_width(s.element)
    if tag > 0:
        out.append(Signal("tag", True, tag))
    return out


SIGNAL_SUFFIXES = ("_data", "_valid", "_ready", "_last", "_tag")


def vhdl_type(width: Optional[int]) -> str:
    return "std_logic" if width is None else f"std_logic_vector({width - 1} downto 0)"


def clock_names(domain: ClockDomain) -> tuple[str, str]:
    if domain == DEFAULT_CLOCK:
        return "clk", "rst"
    return "clk_" + domain.name, "rst_" + domain.name


def entity_base_name(impl: ElaboratedImpl) -> str:
    """``<decl>__<arg1>_<arg2>``; type and impl arguments by their declaration name."""
    parts = []
    for a in impl.identity.args:
        if a.startswith(("type:", "impl:")):
            a = a[5:]
            if not a.startswith(("Stream(", "Group{", "Union{", "Bit(", "Null")):
                a = re.split(r"[<@]", a, maxsplit=1)[0]
        parts.append(unquote(a))
    base = impl.identity.name
    return base + ("__" + "_".join(parts) if parts else "")


class VhdlEmitter:
    def __init__(self, design: ElaboratedDesign):
        self.design = design
        self.entities = {}
        names = NameAllocator()
        for ident in sorted(design.impls, key=lambda i: i.key()):
            self.entities[ident] = names.claim(entity_base_name(design.impls[ident]))
        self._domains = {}
        self._ports = {}

    # -- entity interface ---------------------------------------------------

    def domains(self, ident) -> list[ClockDomain]:
        """Clock domains an impl needs: its own ports' plus everything below it."""
        if ident not in self._domains:
            impl = self.design.impls[ident]
            found = {p.clock for p in self.design.streamlet_of(impl).ports}
            for inst in impl.instances:
                found.update(self.domains(inst.impl))
            self._domains[ident] = sorted(found, key=lambda d: (d != DEFAULT_CLOCK, d.name))
        return self._domains[ident]

    def interface(self, ident):
        """(clock signal names per domain, {(port, index): base name}) for an entity."""
        if ident not in self._ports:
            names = NameAllocator()
            clocks = {}
            for d in self.domains(ident):
                clk, rst = clock_names(d)
                clocks[d] = (names.claim(clk), names.claim(rst))
            bases = {}
            for p in self.design.streamlet_of(ident).ports:
                for i in p.indices():
                    raw = p.name if i is None else f"{p.name}_{i}"
                    bases[(p.name, i)] = names.claim(raw, SIGNAL_SUFFIXES)
            self._ports[ident] = (clocks, bases)
        return self._ports[ident]

    def port_lines(self, ident) -> list[str]:
        clocks, bases = self.interface(ident)
        lines = []
        for d, (clk, rst) in clocks.items():
            lines.append(f"    {clk} : in std_logic;")
            lines.append(f"    {rst} : in std_logic;")
        for p in self.design.streamlet_of(ident).ports:
            s = p.stream
            lines.append(f"    -- {p.name}: {describe(p.type)} {p.direction} {p.clock}, "
                         f"c={s.complexity}, s={s.synchronicity}, t={format_fraction(s.throughput)}")
            for i in p.indices():
                for sig in stream_signals(p):
                    mode = "in" if sig.forward == (p.direction == "in") else "out"
                    lines.append(f"    {bases[(p.name, i)]}_{sig.suffix} : {mode} {vhdl_type(sig.width)};")
        # the last declaration takes no semicolon; comments may follow it
        for k in range(len(lines) - 1, -1, -1):
            if not lines[k].lstrip().startswith("--"):
                lines[k] = lines[k][:-1]
                break
        return lines

    # -- files ----------------------------------------------------------------

    def emit(self) -> dict[str, str]:
        files = {}
        for ident in sorted(self.entities, key=lambda i: self.entities[i].lower()):
            name = self.entities[ident]
            files[name + ".vhd"] = self.emit_impl(ident)
        return files

    def emit_impl(self, ident) -> str:
        impl = self.design.impls[ident]
        name = self.entities[ident]
        out = [f"-- {ident.key()}", "library ieee;", "use ieee.std_logic_1164.all;", "",
               f"entity {name} is"]
        ports = self.port_lines(ident)
        if any(not line.lstrip().startswith("--") for line in ports):
            out.append("  port (")
            out.extend(ports)
            out.append("  );")
        out.append(f"end entity {name};")
        out.append("")
        if impl.external:
            out.extend(self.shell(impl, name))
        else:
            out.extend(self.architecture(impl, name))
        return "\n".join(out) + "\n"

    def shell(self, impl: ElaboratedImpl, name: str) -> list[str]:
        what = impl.intrinsic or impl.identity.name
        return [
            f"-- {what}: external implementation, behaviour supplied outside this design.",
            "-- Handshake contract for every stream port element:",
            "--   a transfer happens on a rising clock edge where valid and ready are both '1';",
            "--   a source keeps data, last and tag stable while valid is '1' and ready is '0';",
            "--   a source must not wait for ready before asserting valid.",
            f"architecture shell of {name} is",
            "begin",
            "end architecture shell;",
        ]

    def architecture(self, impl: ElaboratedImpl, name: str) -> list[str]:
        design = self.design
        own_clocks, own_bases = self.interface(impl.identity)
        names = NameAllocator(self._taken(impl.identity))
        labels = {}
        for inst in impl.instances:
            raw = inst.name if inst.index is None else f"{inst.name}_{inst.index}"
            labels[(inst.name, inst.index)] = names.claim(raw)

        decls, body = [], []
        wires = {}  # endpoint -> connection signal base
        for conn in impl.connections:
            port = design.port_of(impl, conn.src)
            base = names.claim(str(conn.src), SIGNAL_SUFFIXES)
            for ep in (conn.src, conn.dst):
                wires[ep] = base
            body.append(f"  -- {conn.src} => {conn.dst}")
            for sig in stream_signals(port):
                decls.append(f"  signal {base}_{sig.suffix} : {vhdl_type(sig.width)};")
            # the impl's own ports are tied to the connection signals by assignment
            for ep in (conn.src, conn.dst):
                if ep.owner is not None:
                    continue
                own = own_bases[(ep.port, ep.port_index)]
                for sig in stream_signals(port):
                    into_impl = sig.forward == (ep is conn.src)
                    if into_impl:
                        body.append(f"  {base}_{sig.suffix} <= {own}_{sig.suffix};")
                    else:
                        body.append(f"  {own}_{sig.suffix} <= {base}_{sig.suffix};")

        for inst in impl.instances:
            clocks, bases = self.interface(inst.impl)
            maps = []
            for d, (clk, rst) in clocks.items():
                oclk, orst = own_clocks[d]
                maps.append(f"      {clk} => {oclk}")
                maps.append(f"      {rst} => {orst}")
            for p in design.streamlet_of(inst.impl).ports:
                for i in p.indices():
                    ep = Endpoint(inst.name, inst.index, p.name, i)
                    wire = wires.get(ep)
                    for sig in stream_signals(p):
                        formal = f"{bases[(p.name, i)]}_{sig.suffix}"
                        if wire is not None:
                            actual = f"{wire}_{sig.suffix}"
                        else:
                            actual = "open" if (sig.forward == (p.direction == "out")) else \
                                ("'0'" if sig.width is None else "(others => '0')")
                        maps.append(f"      {formal} => {actual}")
            label = labels[(inst.name, inst.index)]
            body.append(f"  {label}: entity work.{self.entities[inst.impl]}")
            if maps:
                body.append("    port map (")
                body.append(",\n".join(maps))
                body.append("    );")
            else:
                body[-1] += ";"

        return ([f"architecture structural of {name} is"] + decls + ["begin"] + body
                + ["end architecture structural;"])

    def _taken(self, ident):
        clocks, bases = self.interface(ident)
        taken = [n for pair in clocks.values() for n in pair]
        taken += [b + s for b in bases.values() for s in SIGNAL_SUFFIXES]
        taken += [self.entities[ident], "structural", "shell"]
        return taken


def emit_vhdl(design: ElaboratedDesign) -> dict[str, str]:
    """File name -> VHDL text, one entity/architecture pair per impl."""
    return VhdlEmitter(design).emit()


# -- line counting ---------------------------------------------------------------

def loc_count(text: str, style: str = "vhdl") -> int:
    """Non-blank lines that hold something besides comments.

    ``style`` is ``"vhdl"`` (``--`` comments) or ``"td"`` (``//`` and ``/* */``).
    """
    if style not in ("vhdl", "td"):
        raise ValueError(f"unknown comment style {style!r}")
    count = 0
    in_block = False
    for line in text.splitlines():
        code = False
        i, n = 0, len(line)
        in_string = False
        while i < n:
            ch = line[i]
            if in_block:
                if line.startswith("*/", i):
                    in_block = False
                    i += 2
                else:
                    i += 1
                continue
            if in_string:
                code = True
                if ch == "\\" and style == "td":
                    i += 2
                    continue
                if ch == '"':
                    in_string = False
                i += 1
                continue
            if style == "vhdl" and line.startswith("--", i):
                break
            if style == "td" and line.startswith("//", i):
                break
            if style == "td" and line.startswith("/*", i):
                in_block = True
                i += 2
                continue
            if ch == '"':
                in_string = True
                code = True
            elif not ch.isspace():
                code = True
            i += 1
        if code:
            count += 1
    return count
