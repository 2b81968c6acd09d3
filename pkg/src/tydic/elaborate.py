"""Template instantiation and flattening into a concrete design graph."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .diagnostics import NO_SPAN, SourceSpan, TydiError, error
from .scope_eval import (DeclRef, Lazy, Program, Scope, coerce, eval_assert, eval_type,
                         evaluate, force)
from .stdlib import STDLIB_FILE
from .syntax import ast as A
from .types import (Bit, Group, NamedRef, Null, Stream, TypeIdentity, Union, as_stream,
                    bit_width, describe, type_key)
from .values import DEFAULT_CLOCK, ArrayValue, ClockDomain, canonical, is_value, kind_of

DEFAULT_DEPTH_LIMIT = 64


def _nospan():
    return field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class ElaboratedPort:
    name: str
    direction: str  # "in" | "out"
    type: object  # a Stream, possibly behind NamedRef
    clock: ClockDomain = DEFAULT_CLOCK
    size: Optional[int] = None  # element count for port arrays
    span: SourceSpan = _nospan()

    @property
    def stream(self) -> Stream:
        return as_stream(self.type)

    def indices(self):
        return [None] if self.size is None else list(range(self.size))


@dataclass(frozen=True)
class ElaboratedStreamlet:
    identity: TypeIdentity
    ports: tuple
    span: SourceSpan = _nospan()

    def port(self, name: str) -> Optional[ElaboratedPort]:
        for p in self.ports:
            if p.name == name:
                return p
        return None


@dataclass(frozen=True)
class Instance:
    name: str
    index: Optional[int]
    impl: TypeIdentity
    span: SourceSpan = _nospan()

    @property
    def label(self) -> str:
        return self.name if self.index is None else f"{self.name}[{self.index}]"


@dataclass(frozen=True, order=True)
class Endpoint:
    """A port element seen from inside an impl; ``owner`` None means the impl itself."""

    owner: Optional[str]
    owner_index: Optional[int]
    port: str
    port_index: Optional[int]

    def __str__(self):
        s = ""
        if self.owner is not None:
            s = self.owner + ("" if self.owner_index is None else f"[{self.owner_index}]") + "."
        return s + self.port + ("" if self.port_index is None else f"[{self.port_index}]")

    def sort_key(self):
        none_first = lambda v: (-1, "") if v is None else (0, v)  # noqa: E731
        return (none_first(self.owner), none_first(self.owner_index), self.port,
                none_first(self.port_index))


@dataclass(frozen=True)
class ElaboratedConnection:
    src: Endpoint
    dst: Endpoint
    relax: bool = False
    span: SourceSpan = _nospan()


@dataclass(frozen=True)
class ElaboratedImpl:
    identity: TypeIdentity
    streamlet: TypeIdentity
    external: bool = False
    intrinsic: Optional[str] = None  # stdlib component whose body the backend knows
    instances: tuple = ()
    connections: tuple = ()
    span: SourceSpan = _nospan()

    def instance(self, name: str, index: Optional[int]) -> Optional[Instance]:
        for inst in self.instances:
            if inst.name == name and inst.index == index:
                return inst
        return None


@dataclass
class ElaboratedDesign:
    streamlets: dict  # TypeIdentity -> ElaboratedStreamlet
    impls: dict  # TypeIdentity -> ElaboratedImpl
    top: TypeIdentity

    def streamlet_of(self, impl: ElaboratedImpl | TypeIdentity) -> ElaboratedStreamlet:
        if isinstance(impl, TypeIdentity):
            impl = self.impls[impl]
        return self.streamlets[impl.streamlet]

    def port_of(self, impl: ElaboratedImpl, ep: Endpoint) -> ElaboratedPort:
        """The declaration behind an endpoint of a connection inside ``impl``."""
        if ep.owner is None:
            return self.streamlet_of(impl).port(ep.port)
        inst = impl.instance(ep.owner, ep.owner_index)
        return self.streamlet_of(inst.impl).port(ep.port)

    def endpoints(self, impl: ElaboratedImpl):
        """Every port element usable inside ``impl``, in declaration order."""
        out = []
        for p in self.streamlet_of(impl).ports:
            for i in p.indices():
                out.append(Endpoint(None, None, p.name, i))
        for inst in impl.instances:
            for p in self.streamlet_of(inst.impl).ports:
                for i in p.indices():
                    out.append(Endpoint(inst.name, inst.index, p.name, i))
        return out

    def is_local_source(self, impl: ElaboratedImpl, ep: Endpoint) -> bool:
        port = self.port_of(impl, ep)
        return (port.direction == "in") == (ep.owner is None)

    def replace_impl(self, impl: ElaboratedImpl) -> "ElaboratedDesign":
        impls = dict(self.impls)
        impls[impl.identity] = impl
        return ElaboratedDesign(dict(self.streamlets), impls, self.top)


# -- template argument bindings --------------------------------------------------

@dataclass(frozen=True)
class ImplRef:
    """An elaborated implementation bound to an ``impl of`` template parameter."""

    identity: TypeIdentity


def _is_type(v) -> bool:
    return isinstance(v, (Null, Bit, Group, Union, Stream, NamedRef))


def arg_canonical(v) -> str:
    if isinstance(v, ImplRef):
        return "impl:" + v.identity.key()
    if _is_type(v):
        return "type:" + type_key(v)
    return canonical(v)


def depth_limit_from_env(default: int = DEFAULT_DEPTH_LIMIT) -> int:
    raw = os.environ.get("TYDIC_TEMPLATE_DEPTH")
    if not raw:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"TYDIC_TEMPLATE_DEPTH must be an integer, got {raw!r}")
    if value < 1:
        raise ValueError("TYDIC_TEMPLATE_DEPTH must be at least 1")
    return value


class _BodyContext:
    def __init__(self):
        self.instances: list[Instance] = []
        self.shapes: dict[str, tuple] = {}  # name -> ("scalar"|"array"|"loop", size)
        self.connections: list[tuple] = []  # (A.Connection, src Endpoint, dst Endpoint)


class Elaborator:
    def __init__(self, program: Program, depth_limit: int = DEFAULT_DEPTH_LIMIT):
        self.program = program
        self.depth_limit = depth_limit
        self.streamlets: dict[TypeIdentity, ElaboratedStreamlet] = {}
        self.impls: dict[TypeIdentity, ElaboratedImpl] = {}
        self._active: set = set()
        self._depth = 0

    # -- template arguments ------------------------------------------------------

    def eval_args(self, args, scope: Scope) -> list:
        """Evaluate template argument syntax in the caller's scope."""
        out = []
        for a in args or ():
            if isinstance(a, A.TypeArg):
                out.append((eval_type(a.type, scope), a.span))
            elif isinstance(a, A.ImplArg):
                out.append((self.impl_ref(a.name, a.args, scope, a.span), a.span))
            else:
                out.append((self._value_arg(a.expr, scope), a.span))
        return out

    def _value_arg(self, expr, scope: Scope):
        # a bare name may denote a type or impl; bind_params reports the kind mismatch
        if isinstance(expr, A.Name):
            binding = scope.lookup(expr.id)
            if binding is not None:
                value = force(binding)
                if not is_value(value):
                    return value
        return evaluate(expr, scope)

    def impl_ref(self, name: str, args, scope: Scope, span) -> ImplRef:
        binding = scope.lookup(name)
        if binding is None:
            raise error("E002", f"unresolved implementation '{name}'", span)
        binding = force(binding)
        if isinstance(binding, ImplRef):
            if args is not None:
                raise error("E009", f"'{name}' is already an instantiated implementation", span)
            return binding
        if isinstance(binding, DeclRef) and isinstance(binding.decl, A.ImplDecl):
            return ImplRef(self.instantiate_impl(binding, self.eval_args(args, scope), span))
        raise error("E009", f"'{name}' is not an implementation", span)

    def bind_params(self, decl, decl_scope: Scope, args: list, span) -> tuple[Scope, tuple]:
        params = decl.params
        if len(args) != len(params):
            raise error("E009", f"'{decl.name}' expects {len(params)} template argument(s), "
                                f"got {len(args)}", span)
        scope = Scope(decl_scope, decl.name)
        canon = []
        for p, (value, aspan) in zip(params, args):
            aspan = aspan if aspan is not NO_SPAN else span
            if p.kind == "type":
                if not _is_type(value):
                    raise error("E009", f"template parameter '{p.name}' of '{decl.name}' expects "
                                        "a type argument (write 'type T')", aspan)
            elif p.kind == "impl":
                if not isinstance(value, ImplRef):
                    raise error("E009", f"template parameter '{p.name}' of '{decl.name}' expects "
                                        f"an implementation of '{p.of_streamlet}' (write 'impl X')", aspan)
                self._check_impl_of(value, p, decl_scope, aspan)
            else:
                if not is_value(value) or kind_of(value) == "array":
                    raise error("E009", f"template parameter '{p.name}' of '{decl.name}' expects "
                                        f"a {p.kind} value", aspan)
                try:
                    value = coerce(p.kind, value, f"template parameter '{p.name}'", aspan)
                except TydiError as exc:
                    raise error("E009", exc.diagnostics[0].message, aspan)
            scope.bind(p.name, value, p.span)
            canon.append(arg_canonical(value))
        return scope, tuple(canon)

    def _check_impl_of(self, ref: ImplRef, param, decl_scope: Scope, span):
        required = decl_scope.lookup(param.of_streamlet)
        if not (isinstance(required, DeclRef) and isinstance(required.decl, A.StreamletDecl)):
            raise error("E009", f"'{param.of_streamlet}' is not a streamlet", param.span)
        actual = self.impls[ref.identity].streamlet
        if (actual.file, actual.name) != (required.file, required.decl.name):
            raise error("E009", f"implementation '{ref.identity.name}' is derived from "
                                f"'{actual.name}', not from '{param.of_streamlet}'", span)

    # -- streamlets ----------------------------------------------------------

    def instantiate_streamlet(self, ref: DeclRef, args: list, span) -> TypeIdentity:
        decl = ref.decl
        if not decl.params and args:
            raise error("E009", f"'{decl.name}' is not a template", span)
        scope, canon = self.bind_params(decl, ref.scope, args, span)
        identity = TypeIdentity(ref.file, decl.name, canon)
        if identity in self.streamlets:
            return identity
        ports = []
        for p in decl.ports:
            ptype = eval_type(p.type, scope)
            stream = as_stream(ptype)
            if stream is None:
                raise error("E011", f"port '{p.name}' must have a Stream type, got {describe(ptype)}", p.span)
            bit_width(stream.element, p.span)
            size = None
            if p.array_size is not None:
                size = evaluate(p.array_size, scope)
                if kind_of(size) != "int" or size < 0:
                    raise error("E010", f"port array size must be a non-negative int, got {size!r}", p.span)
            clock = DEFAULT_CLOCK
            if p.clock is not None:
                clock = force(scope.lookup(p.clock))
                if not isinstance(clock, ClockDomain):
                    raise error("E010", f"'{p.clock}' is not a clock domain", p.span)
            ports.append(ElaboratedPort(p.name, p.direction, ptype, clock, size, span=p.span))
        self.streamlets[identity] = ElaboratedStreamlet(identity, tuple(ports), span=decl.span)
        return identity

    # -- implementations -----------------------------------------------------

    def instantiate_impl(self, ref: DeclRef, args: list, span) -> TypeIdentity:
        decl = ref.decl
        if not decl.params and args:
            raise error("E009", f"'{decl.name}' is not a template", span)
        scope, canon = self.bind_params(decl, ref.scope, args, span)
        identity = TypeIdentity(ref.file, decl.name, canon)
        if identity in self.impls:
            return identity
        if identity in self._active:
            raise error("E009", f"'{decl.name}' instantiates itself", span)
        if self._depth >= self.depth_limit:
            raise error("E009", f"template recursion deeper than {self.depth_limit} "
                                f"while instantiating '{decl.name}'", span)
        self._active.add(identity)
        self._depth += 1
        try:
            impl = self._build_impl(ref, scope, identity)
        finally:
            self._depth -= 1
            self._active.discard(identity)
        self.impls[identity] = impl
        return identity

    def _build_impl(self, ref: DeclRef, scope: Scope, identity: TypeIdentity) -> ElaboratedImpl:
        decl = ref.decl
        sref = scope.lookup(decl.streamlet)
        if not (isinstance(sref, DeclRef) and isinstance(sref.decl, A.StreamletDecl)):
            raise error("E009", f"'{decl.streamlet}' is not a streamlet", decl.span)
        streamlet = self.instantiate_streamlet(sref, self.eval_args(decl.streamlet_args, scope), decl.span)
        ctx = _BodyContext()
        self.expand(decl.body, scope, ctx, None)
        intrinsic = decl.name if (decl.external and ref.file == STDLIB_FILE) else None
        if decl.external:
            return ElaboratedImpl(identity, streamlet, True, intrinsic, span=decl.span)
        conns = tuple(self._connection(identity, streamlet, ctx, c, src, dst)
                      for c, src, dst in ctx.connections)
        return ElaboratedImpl(identity, streamlet, False, None, tuple(ctx.instances), conns,
                              span=decl.span)

    def expand(self, items, scope: Scope, ctx: _BodyContext, ordinal: Optional[int]):
        """Expand a body block: constants, asserts, instances, connections, for/if."""
        scope = scope.child("block")
        for item in items:
            if isinstance(item, A.ConstDecl):
                scope.bind(item.name, Lazy(item, scope), item.span)
        for item in items:
            if isinstance(item, A.ConstDecl):
                force(scope.lookup(item.name))
            elif isinstance(item, A.AssertStmt):
                eval_assert(item.expr, scope, item.span)
            elif isinstance(item, A.InstanceDecl):
                self._instance(item, scope, ctx, ordinal)
            elif isinstance(item, A.Connection):
                src = self._endpoint(item.lhs, scope)
                dst = self._endpoint(item.rhs, scope)
                ctx.connections.append((item, src, dst))
            elif isinstance(item, A.ForBlock):
                self.expand_for(item, scope, ctx)
            elif isinstance(item, A.IfBlock):
                self.expand_if(item, scope, ctx, ordinal)
            else:
                raise TypeError(f"unexpected body item {item!r}")

    def expand_for(self, block: A.ForBlock, scope: Scope, ctx: _BodyContext):
        values = evaluate(block.iterable, scope)
        if not isinstance(values, ArrayValue):
            raise error("E010", f"for needs an array to iterate over, got {kind_of(values)}",
                        block.iterable.span)
        for ordinal, v in enumerate(values.items):
            inner = scope.child("for")
            inner.bind(block.var, v, block.span)
            self.expand(block.body, inner, ctx, ordinal)

    def expand_if(self, block: A.IfBlock, scope: Scope, ctx: _BodyContext, ordinal):
        cond = evaluate(block.cond, scope)
        if kind_of(cond) != "bool":
            raise error("E010", f"if condition must be a bool, got {kind_of(cond)}", block.cond.span)
        if cond:
            self.expand(block.body, scope, ctx, ordinal)

    def _instance(self, item: A.InstanceDecl, scope, ctx: _BodyContext, ordinal):
        ref = self.impl_ref(item.impl, item.args, scope, item.span)
        if item.array_size is not None:
            if ordinal is not None:
                raise error("E010", "an instance array cannot be declared inside a for block", item.span)
            n = evaluate(item.array_size, scope)
            if kind_of(n) != "int" or n < 0:
                raise error("E010", f"instance array size must be a non-negative int, got {n!r}", item.span)
            shape, indices = ("array", n), list(range(n))
        elif ordinal is not None:
            shape, indices = ("loop", None), [ordinal]
        else:
            shape, indices = ("scalar", None), [None]
        prev = ctx.shapes.get(item.name)
        if prev is not None and (prev[0] != "loop" or shape[0] != "loop"):
            raise error("E008", f"instance '{item.name}' is already declared", item.span)
        ctx.shapes[item.name] = shape
        for i in indices:
            if any(x.name == item.name and x.index == i for x in ctx.instances):
                raise error("E008", f"instance '{item.name}[{i}]' is declared twice "
                                    "(nested loops reuse the inner loop index)", item.span)
            ctx.instances.append(Instance(item.name, i, ref.identity, span=item.span))

    def _index(self, expr, scope):
        if expr is None:
            return None
        v = evaluate(expr, scope)
        if kind_of(v) != "int":
            raise error("E010", f"index must be an int, got {kind_of(v)}", expr.span)
        return v

    def _endpoint(self, ref: A.PortRef, scope) -> Endpoint:
        return Endpoint(ref.owner, self._index(ref.owner_index, scope), ref.port,
                        self._index(ref.port_index, scope))

    def _check_port(self, streamlet: ElaboratedStreamlet, ep: Endpoint, span, owner_desc) -> ElaboratedPort:
        port = streamlet.port(ep.port)
        if port is None:
            raise error("E002", f"{owner_desc} has no port '{ep.port}'", span)
        if port.size is None and ep.port_index is not None:
            raise error("E002", f"port '{ep.port}' is not a port array", span)
        if port.size is not None:
            if ep.port_index is None:
                raise error("E002", f"port array '{ep.port}' needs an index", span)
            if not 0 <= ep.port_index < port.size:
                raise error("E002", f"index {ep.port_index} out of bounds for port array "
                                    f"'{ep.port}' of size {port.size}", span)
        return port

    def _resolve_endpoint(self, streamlet_id, ctx: _BodyContext, ep: Endpoint, span):
        if ep.owner is None:
            return self._check_port(self.streamlets[streamlet_id], ep, span, "this implementation")
        shape = ctx.shapes.get(ep.owner)
        if shape is None:
            raise error("E002", f"unknown instance '{ep.owner}'", span)
        if shape[0] == "scalar" and ep.owner_index is not None:
            raise error("E002", f"instance '{ep.owner}' is not an array", span)
        if shape[0] != "scalar" and ep.owner_index is None:
            raise error("E002", f"instance array '{ep.owner}' needs an index", span)
        inst = next((x for x in ctx.instances if x.name == ep.owner and x.index == ep.owner_index), None)
        if inst is None:
            raise error("E002", f"index {ep.owner_index} out of bounds for instance '{ep.owner}'", span)
        streamlet = self.streamlets[self.impls[inst.impl].streamlet]
        return self._check_port(streamlet, ep, span, f"instance '{inst.label}'")

    def _connection(self, impl_id, streamlet_id, ctx, conn: A.Connection, src, dst):
        self._resolve_endpoint(streamlet_id, ctx, src, conn.lhs.span)
        self._resolve_endpoint(streamlet_id, ctx, dst, conn.rhs.span)
        return ElaboratedConnection(src, dst, conn.relax, span=conn.span)

    # -- entry points ----------------------------------------------------------

    def find_top(self, name: str) -> DeclRef:
        found = []
        for file in sorted(self.program.scopes):
            binding = self.program.scopes[file].bindings.get(name)
            if isinstance(binding, DeclRef) and isinstance(binding.decl, A.ImplDecl):
                found.append(binding)
        if not found:
            raise error("E002", f"top-level implementation '{name}' not found")
        if len(found) > 1:
            raise error("E008", f"top-level implementation '{name}' is defined in several files: "
                        + ", ".join(r.file for r in found))
        ref = found[0]
        if ref.decl.params:
            raise error("E009", f"top-level implementation '{name}' must not be a template", ref.decl.span)
        return ref

    def instantiate_stdlib(self, name: str, args: list) -> TypeIdentity:
        ref = self.program.prelude_scope.bindings[name]
        return self.instantiate_impl(ref, [(a, NO_SPAN) for a in args], NO_SPAN)

    def design(self, top: TypeIdentity) -> ElaboratedDesign:
        return ElaboratedDesign(dict(self.streamlets), dict(self.impls), top)


def elaborate(program: Program, top: str,
              depth_limit: int = DEFAULT_DEPTH_LIMIT) -> tuple[ElaboratedDesign, Elaborator]:
    elab = Elaborator(program, depth_limit)
    ref = elab.find_top(top)
    identity = elab.instantiate_impl(ref, [], ref.decl.span)
    design = elab.design(identity)
    check_elaborated(design)
    return design, elab


def check_elaborated(design: ElaboratedDesign):
    """Post-pass: nothing but concrete values may remain in the design."""
    def check_type(t):
        if isinstance(t, NamedRef):
            check_type(t.target)
        elif isinstance(t, (Group, Union)):
            for _, c in t.fields:
                check_type(c)
        elif isinstance(t, Stream):
            check_type(t.element)
            assert isinstance(t.dimension, int) and isinstance(t.complexity, int)
            assert isinstance(t.throughput, Fraction)
        elif isinstance(t, Bit):
            assert isinstance(t.width, int) and not isinstance(t.width, bool)
        else:
            assert isinstance(t, Null), f"unevaluated type {t!r}"

    for s in design.streamlets.values():
        for p in s.ports:
            check_type(p.type)
            assert isinstance(p.clock, ClockDomain)
            assert p.size is None or isinstance(p.size, int)
    for impl in design.impls.values():
        assert impl.streamlet in design.streamlets
        for inst in impl.instances:
            assert inst.impl in design.impls, f"dangling instance {inst.label}"
        for c in impl.connections:
            for ep in (c.src, c.dst):
                assert isinstance(ep, Endpoint)
                for v in (ep.owner_index, ep.port_index):
                    assert v is None or isinstance(v, int)
        if impl.external:
            assert not impl.instances and not impl.connections
