"""Duplicator and voider insertion.

A local source that feeds several sinks is routed through a
``duplicator_i`` from the stdlib; a local source that feeds nothing is
terminated by a ``voider_i``.  Sinks are never touched: an unused input stays
an E004 for the DRC to report.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import replace

from .elaborate import ElaboratedConnection, ElaboratedDesign, ElaboratedImpl, Elaborator, Endpoint, Instance

DUPLICATOR = "duplicator_i"
VOIDER = "voider_i"


def _fragment(ep: Endpoint) -> str:
    owner = "self" if ep.owner is None else ep.owner
    if ep.owner_index is not None:
        owner += f"_{ep.owner_index}"
    text = f"{owner}_{ep.port}"
    if ep.port_index is not None:
        text += f"_{ep.port_index}"
    return text


def _fresh(base: str, taken: set) -> str:
    name, n = base, 2
    while name in taken:
        name = f"{base}_{n}"
        n += 1
    taken.add(name)
    return name


def _local_sources(design: ElaboratedDesign, impl: ElaboratedImpl):
    return [ep for ep in design.endpoints(impl) if design.is_local_source(impl, ep)]


def insert_duplicators(design: ElaboratedDesign, impl: ElaboratedImpl, elab: Elaborator) -> ElaboratedImpl:
    """Route every local source with fan-out >= 2 through a duplicator."""
    sources = set(_local_sources(design, impl))
    fanout = defaultdict(list)
    for i, c in enumerate(impl.connections):
        if c.src in sources:
            fanout[c.src].append(i)
    groups = {ep: idx for ep, idx in fanout.items() if len(idx) >= 2}
    if not groups:
        return impl

    taken = {inst.name for inst in impl.instances}
    instances = list(impl.instances)
    replacement = {}  # index of the first connection in a group -> new connections
    dropped = set()
    for ep in sorted(groups, key=Endpoint.sort_key):
        idx = groups[ep]
        port = design.port_of(impl, ep)
        first = impl.connections[idx[0]]
        dup_impl = elab.instantiate_stdlib(DUPLICATOR, [port.type, len(idx), port.clock])
        name = _fresh("__dup_" + _fragment(ep), taken)
        instances.append(Instance(name, None, dup_impl, span=first.span))
        new = [ElaboratedConnection(ep, Endpoint(name, None, "in", None), False, span=first.span)]
        for j, i in enumerate(idx):
            c = impl.connections[i]
            new.append(ElaboratedConnection(Endpoint(name, None, "out", j), c.dst, c.relax, span=c.span))
        replacement[idx[0]] = new
        dropped.update(idx[1:])

    conns = []
    for i, c in enumerate(impl.connections):
        if i in replacement:
            conns.extend(replacement[i])
        elif i not in dropped:
            conns.append(c)
    return replace(impl, instances=tuple(instances), connections=tuple(conns))


def insert_voiders(design: ElaboratedDesign, impl: ElaboratedImpl, elab: Elaborator) -> ElaboratedImpl:
    """Terminate every local source that appears in no connection."""
    used = set()
    for c in impl.connections:
        used.add(c.src)
        used.add(c.dst)
    unused = [ep for ep in _local_sources(design, impl) if ep not in used]
    if not unused:
        return impl
    taken = {inst.name for inst in impl.instances}
    instances = list(impl.instances)
    conns = list(impl.connections)
    for ep in unused:
        port = design.port_of(impl, ep)
        void_impl = elab.instantiate_stdlib(VOIDER, [port.type, port.clock])
        name = _fresh("__void_" + _fragment(ep), taken)
        span = impl.instance(ep.owner, ep.owner_index).span if ep.owner is not None else port.span
        instances.append(Instance(name, None, void_impl, span=span))
        conns.append(ElaboratedConnection(ep, Endpoint(name, None, "in", None), False, span=span))
    return replace(impl, instances=tuple(instances), connections=tuple(conns))


def _view(elab: Elaborator, impls: dict, top) -> ElaboratedDesign:
    # stdlib impls instantiated on the fly live in the elaborator until merged
    return ElaboratedDesign(dict(elab.streamlets), {**elab.impls, **impls}, top)


def apply_sugar(design: ElaboratedDesign, elab: Elaborator, enabled: bool = True) -> ElaboratedDesign:
    """Both transforms over every impl with a body; identity when disabled."""
    if not enabled:
        return design
    impls = dict(design.impls)
    for identity in sorted(design.impls):
        impl = impls[identity]
        if impl.external:
            continue
        impl = insert_duplicators(_view(elab, impls, design.top), impl, elab)
        impls[identity] = impl
        impl = insert_voiders(_view(elab, impls, design.top), impl, elab)
        impls[identity] = impl
    # stdlib instances created above are external, so they need no sugaring themselves
    for identity, impl in elab.impls.items():
        impls.setdefault(identity, impl)
    return ElaboratedDesign(dict(elab.streamlets), impls, design.top)
