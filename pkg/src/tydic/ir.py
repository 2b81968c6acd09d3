"""Textual intermediate representation: emitter and reader.

Layout (one item per line, two-space indent inside braces)::

    tydi-ir 1
    type ["file.td","Byte",[]] = Stream(Bit(8), d=0, r=Forward, t=1, c=1, s=Sync)
    streamlet ["file.td","s",[]] {
      port input in ref ["file.td","Byte",[]] @"!default"
      port outs out ref ["file.td","Byte",[]] @"!default" [4]
    }
    external impl ["<stdlib>","voider_i",[...]] of [...] intrinsic "voider_i"
    impl ["file.td","top_i",[]] of ["file.td","top_s",[]] {
      instance a: ["file.td","a_i",[]]
      instance b[0]: ["file.td","b_i",[]]
      connect a.out => b[0].in relax
    }
    top ["file.td","top_i",[]]
    end

Identities are JSON triples (file, name, canonical args).  Entities come in
sections (types, streamlets, impls), each topologically ordered and
lexicographic within a level.  The trailing ``end`` makes truncation
detectable.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction

from .diagnostics import SourceSpan, error
from .elaborate import (ElaboratedConnection, ElaboratedDesign, ElaboratedImpl, ElaboratedPort,
                        ElaboratedStreamlet, Endpoint, Instance)
from .types import Bit, Group, NamedRef, Null, Stream, TypeIdentity, Union, format_fraction
from .values import ClockDomain

MAGIC = "tydi-ir 1"
IR_FILE = "<ir>"


# -- emission ----------------------------------------------------------------

def _ident(i: TypeIdentity) -> str:
    return json.dumps([i.file, i.name, list(i.args)], ensure_ascii=False, separators=(",", ":"))


def _type(t) -> str:
    if isinstance(t, NamedRef):
        return "ref " + _ident(t.identity)
    if isinstance(t, Null):
        return "Null"
    if isinstance(t, Bit):
        return f"Bit({t.width})"
    if isinstance(t, (Group, Union)):
        kw = "Group" if isinstance(t, Group) else "Union"
        return kw + "{" + ", ".join(f"{n}: {_type(c)}" for n, c in t.fields) + "}"
    if isinstance(t, Stream):
        return (f"Stream({_type(t.element)}, d={t.dimension}, r={t.direction}, "
                f"t={format_fraction(t.throughput)}, c={t.complexity}, s={t.synchronicity})")
    raise TypeError(f"not a logical type: {t!r}")


def _named_types(t, out: dict):
    """Collect every NamedRef reachable from ``t`` (identity -> target)."""
    if isinstance(t, NamedRef):
        prev = out.get(t.identity)
        if prev is not None and prev != t.target:
            raise AssertionError(f"two different types share identity {t.identity.key()}")
        out[t.identity] = t.target
        _named_types(t.target, out)
    elif isinstance(t, (Group, Union)):
        for _, c in t.fields:
            _named_types(c, out)
    elif isinstance(t, Stream):
        _named_types(t.element, out)


def _direct_refs(t) -> set:
    if isinstance(t, NamedRef):
        return {t.identity}
    if isinstance(t, (Group, Union)):
        return set().union(*(_direct_refs(c) for _, c in t.fields))
    if isinstance(t, Stream):
        return _direct_refs(t.element)
    return set()


def _topological(deps: dict) -> list:
    """Order keys so dependencies come first; lexicographic within a level."""
    level = {}

    def depth(k, stack=()):
        if k in level:
            return level[k]
        if k in stack:
            raise AssertionError(f"dependency cycle through {k}")
        level[k] = 1 + max((depth(d, stack + (k,)) for d in deps[k] if d in deps), default=-1)
        return level[k]

    for k in deps:
        depth(k)
    return sorted(deps, key=lambda k: (level[k], k.key()))


def _endpoint(ep: Endpoint) -> str:
    return str(ep)


def emit_ir(design: ElaboratedDesign) -> str:
    named = {}
    for s in design.streamlets.values():
        for p in s.ports:
            _named_types(p.type, named)

    lines = [MAGIC]
    for ident in _topological({k: _direct_refs(v) for k, v in named.items()}):
        lines.append(f"type {_ident(ident)} = {_type(named[ident])}")

    for ident in sorted(design.streamlets, key=TypeIdentity.key):
        s = design.streamlets[ident]
        lines.append(f"streamlet {_ident(ident)} {{")
        for p in s.ports:
            size = "" if p.size is None else f" [{p.size}]"
            lines.append(f"  port {p.name} {p.direction} {_type(p.type)} "
                         f"@{json.dumps(p.clock.name, ensure_ascii=False)}{size}")
        lines.append("}")

    deps = {k: {i.impl for i in v.instances} for k, v in design.impls.items()}
    for ident in _topological(deps):
        impl = design.impls[ident]
        head = f"impl {_ident(ident)} of {_ident(impl.streamlet)}"
        if impl.external:
            tail = "" if impl.intrinsic is None else f" intrinsic {json.dumps(impl.intrinsic)}"
            lines.append("external " + head + tail)
            continue
        lines.append(head + " {")
        for inst in impl.instances:
            idx = "" if inst.index is None else f"[{inst.index}]"
            lines.append(f"  instance {inst.name}{idx}: {_ident(inst.impl)}")
        for c in impl.connections:
            relax = " relax" if c.relax else ""
            lines.append(f"  connect {_endpoint(c.src)} => {_endpoint(c.dst)}{relax}")
        lines.append("}")
    lines.append("top " + _ident(design.top))
    lines.append("end")
    return "\n".join(lines) + "\n"


# -- reading -----------------------------------------------------------------

_TOKEN = re.compile(r'''
    (?P<ws>[ \t]+)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<arrow>=>)
  | (?P<num>-?\d+(?:/\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[\[\](){},=:.@])
''', re.VERBOSE)


class _Line:
    def __init__(self, text: str, lineno: int):
        self.lineno = lineno
        self.toks = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None:
                raise error("E001", f"unexpected character {text[pos]!r} in IR", SourceSpan(IR_FILE, lineno, pos + 1))
            if m.lastgroup != "ws":
                self.toks.append((m.lastgroup, m.group(), pos + 1))
            pos = m.end()
        self.i = 0

    def fail(self, what):
        col = self.toks[self.i][2] if self.i < len(self.toks) else len(self.toks) + 1
        found = self.toks[self.i][1] if self.i < len(self.toks) else "end of line"
        raise error("E001", f"malformed IR: expected {what}, found {found!r}", SourceSpan(IR_FILE, self.lineno, max(col, 1)))

    def peek(self):
        return self.toks[self.i][1] if self.i < len(self.toks) else None

    def take(self, kind=None, text=None):
        if self.i >= len(self.toks):
            self.fail(text or kind)
        k, t, _ = self.toks[self.i]
        if (kind and k != kind) or (text is not None and t != text):
            self.fail(text or kind)
        self.i += 1
        return t

    def accept(self, text):
        if self.peek() == text:
            self.i += 1
            return True
        return False

    def done(self):
        if self.i != len(self.toks):
            self.fail("end of line")

    def string(self) -> str:
        return json.loads(self.take("string"))

    def integer(self) -> int:
        t = self.take("num")
        if "/" in t:
            self.fail("integer")
        return int(t)

    def ident(self) -> TypeIdentity:
        self.take(text="[")
        file = self.string()
        self.take(text=",")
        name = self.string()
        self.take(text=",")
        self.take(text="[")
        args = []
        if not self.accept("]"):
            args.append(self.string())
            while self.accept(","):
                args.append(self.string())
            self.take(text="]")
        self.take(text="]")
        return TypeIdentity(file, name, tuple(args))

    def logical_type(self, named: dict):
        t = self.take("id")
        if t == "ref":
            ident = self.ident()
            if ident not in named:
                self.fail(f"a declared type (forward reference to {ident.key()})")
            return named[ident]
        if t == "Null":
            return Null()
        if t == "Bit":
            self.take(text="(")
            w = self.integer()
            self.take(text=")")
            return Bit(w)
        if t in ("Group", "Union"):
            self.take(text="{")
            fields = []
            while True:
                name = self.take("id")
                self.take(text=":")
                fields.append((name, self.logical_type(named)))
                if not self.accept(","):
                    break
            self.take(text="}")
            return (Group if t == "Group" else Union)(tuple(fields))
        if t == "Stream":
            self.take(text="(")
            element = self.logical_type(named)
            opts = {}
            for key in ("d", "r", "t", "c", "s"):
                self.take(text=",")
                self.take(text=key)
                self.take(text="=")
                opts[key] = self.take()
            self.take(text=")")
            try:
                return Stream(element, int(opts["d"]), opts["r"], Fraction(opts["t"]),
                              int(opts["c"]), opts["s"])
            except ValueError:
                self.fail("stream options")
        self.i -= 1
        self.fail("a logical type")

    def endpoint(self) -> Endpoint:
        first = self.take("id")
        first_idx = self.integer() if self.accept("[") else None
        if first_idx is not None:
            self.take(text="]")
        if not self.accept("."):
            return Endpoint(None, None, first, first_idx)
        port = self.take("id")
        idx = None
        if self.accept("["):
            idx = self.integer()
            self.take(text="]")
        return Endpoint(first, first_idx, port, idx)


def read_ir(text: str) -> ElaboratedDesign:
    """Parse text produced by :func:`emit_ir` back into a design (spans are not kept)."""
    raw = text.split("\n")
    if raw and raw[-1] == "":
        raw.pop()
    if not raw or raw[0] != MAGIC:
        raise error("E001", "not a Tydi IR document (missing header)", SourceSpan(IR_FILE, 1, 1))
    if raw[-1] != "end":
        raise error("E001", "truncated IR document (missing 'end')", SourceSpan(IR_FILE, len(raw), 1))
    lines = [None] + [_Line(t, n + 2) for n, t in enumerate(raw[1:])]

    named, streamlets, impls = {}, {}, {}
    top = None
    pos = 1

    def block_lines():
        nonlocal pos
        body = []
        while True:
            if pos >= len(lines) - 1:
                raise error("E001", "unterminated block in IR", SourceSpan(IR_FILE, len(raw), 1))
            ln = lines[pos]
            pos += 1
            if ln.peek() == "}":
                ln.take(text="}")
                ln.done()
                return body
            body.append(ln)

    while pos < len(lines) - 1:
        ln = lines[pos]
        pos += 1
        kw = ln.take("id")
        if kw == "top":
            top = ln.ident()
            ln.done()
        elif kw == "type":
            ident = ln.ident()
            ln.take(text="=")
            named[ident] = NamedRef(ident, ln.logical_type(named))
            ln.done()
        elif kw == "streamlet":
            ident = ln.ident()
            ln.take(text="{")
            ln.done()
            ports = []
            for pl in block_lines():
                pl.take(text="port")
                name = pl.take("id")
                direction = pl.take("id")
                if direction not in ("in", "out"):
                    pl.i -= 1
                    pl.fail("'in' or 'out'")
                ptype = pl.logical_type(named)
                pl.take(text="@")
                clock = ClockDomain(pl.string())
                size = None
                if pl.accept("["):
                    size = pl.integer()
                    pl.take(text="]")
                pl.done()
                ports.append(ElaboratedPort(name, direction, ptype, clock, size))
            streamlets[ident] = ElaboratedStreamlet(ident, tuple(ports))
        elif kw in ("impl", "external"):
            external = kw == "external"
            if external:
                ln.take(text="impl")
            ident = ln.ident()
            ln.take(text="of")
            streamlet = ln.ident()
            if streamlet not in streamlets:
                ln.fail("a declared streamlet")
            if external:
                intrinsic = ln.string() if ln.accept("intrinsic") else None
                ln.done()
                impls[ident] = ElaboratedImpl(ident, streamlet, True, intrinsic)
                continue
            ln.take(text="{")
            ln.done()
            instances, conns = [], []
            for bl in block_lines():
                item = bl.take("id")
                if item == "instance":
                    name = bl.take("id")
                    idx = None
                    if bl.accept("["):
                        idx = bl.integer()
                        bl.take(text="]")
                    bl.take(text=":")
                    target = bl.ident()
                    if target not in impls:
                        bl.fail("a declared implementation")
                    instances.append(Instance(name, idx, target))
                elif item == "connect":
                    src = bl.endpoint()
                    bl.take("arrow")
                    dst = bl.endpoint()
                    relax = bl.accept("relax")
                    conns.append(ElaboratedConnection(src, dst, relax))
                else:
                    bl.i -= 1
                    bl.fail("'instance' or 'connect'")
                bl.done()
            impls[ident] = ElaboratedImpl(ident, streamlet, False, None, tuple(instances), tuple(conns))
        else:
            ln.i -= 1
            ln.fail("a declaration keyword")
    if top is None or top not in impls:
        raise error("E001", "IR document has no valid 'top' line", SourceSpan(IR_FILE, len(raw), 1))
    return ElaboratedDesign(streamlets, impls, top)
