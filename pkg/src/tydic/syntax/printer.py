"""Pretty printer; ``parse(pretty(ast))`` reproduces ``ast``."""

from __future__ import annotations

from . import ast as A
from .lexer import escape


def expr(e) -> str:
    if isinstance(e, A.IntLit):
        return str(e.value)
    if isinstance(e, A.FloatLit):
        text = repr(e.value)
        if "e" in text and "." not in text.split("e")[0]:
            mant, exp = text.split("e")
            text = f"{mant}.0e{exp}"
        return text
    if isinstance(e, A.StrLit):
        return escape(e.value)
    if isinstance(e, A.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, A.Name):
        return e.id
    if isinstance(e, A.ArrayLit):
        return "[" + ", ".join(expr(i) for i in e.items) + "]"
    if isinstance(e, A.Unary):
        inner = expr(e.operand)
        if isinstance(e.operand, (A.Unary, A.Binary, A.Range)):
            inner = f"({inner})"
        return f"{e.op}{inner}"
    if isinstance(e, A.Binary):
        return f"({_operand(e.lhs)} {e.op} {_operand(e.rhs)})"
    if isinstance(e, A.Range):
        return f"({_operand(e.start)} - {_operand(e.step)} -> {_operand(e.end)})"
    if isinstance(e, A.Call):
        return f"{e.func}(" + ", ".join(expr(a) for a in e.args) + ")"
    if isinstance(e, A.Index):
        target = expr(e.target)
        if isinstance(e.target, A.Unary):
            target = f"({target})"
        return f"{target}[{expr(e.index)}]"
    raise TypeError(f"not an expression: {e!r}")


def _operand(e) -> str:
    # binaries and ranges already carry their own parentheses
    return expr(e)


def type_expr(t) -> str:
    if isinstance(t, A.NullType):
        return "Null"
    if isinstance(t, A.BitType):
        return f"Bit({expr(t.width)})"
    if isinstance(t, A.StreamType):
        parts = [type_expr(t.element)]
        for opt in t.options:
            if opt.key == "synchronicity":
                parts.append(f"synchronicity={escape(opt.value)}")
            elif opt.key == "direction":
                parts.append(f"direction={opt.value}")
            else:
                parts.append(f"{opt.key}={expr(opt.value)}")
        return "Stream(" + ", ".join(parts) + ")"
    if isinstance(t, A.TypeRef):
        return t.name + template_args(t.args)
    raise TypeError(f"not a type expression: {t!r}")


def template_args(args) -> str:
    if args is None:
        return ""
    out = []
    for a in args:
        if isinstance(a, A.TypeArg):
            out.append("type " + type_expr(a.type))
        elif isinstance(a, A.ImplArg):
            out.append("impl " + a.name + template_args(a.args))
        else:
            out.append(expr(a.expr))
    return "<" + ", ".join(out) + ">"


def template_params(params) -> str:
    if not params:
        return ""
    out = []
    for p in params:
        if p.kind == "impl":
            out.append(f"{p.name}: impl of {p.of_streamlet}")
        else:
            out.append(f"{p.name}: {p.kind}")
    return "<" + ", ".join(out) + ">"


def port_ref(r: A.PortRef) -> str:
    s = ""
    if r.owner is not None:
        s = r.owner
        if r.owner_index is not None:
            s += f"[{expr(r.owner_index)}]"
        s += "."
    s += r.port
    if r.port_index is not None:
        s += f"[{expr(r.port_index)}]"
    return s


def _const(d: A.ConstDecl) -> str:
    kind = f"[{d.kind}]" if d.is_array else d.kind
    return f"{kind} {d.name} = {expr(d.expr)}"


def _body(items, indent: int) -> list[str]:
    pad = "  " * indent
    lines = []
    for item in items:
        if isinstance(item, A.InstanceDecl):
            size = f" [{expr(item.array_size)}]" if item.array_size is not None else ""
            lines.append(f"{pad}instance {item.name}({item.impl}{template_args(item.args)}){size},")
        elif isinstance(item, A.Connection):
            attr = " @NoStrictType" if item.relax else ""
            lines.append(f"{pad}{port_ref(item.lhs)} => {port_ref(item.rhs)}{attr},")
        elif isinstance(item, A.ForBlock):
            lines.append(f"{pad}for {item.var} in {expr(item.iterable)} {{")
            lines += _body(item.body, indent + 1)
            lines.append(f"{pad}}}")
        elif isinstance(item, A.IfBlock):
            lines.append(f"{pad}if ({expr(item.cond)}) {{")
            lines += _body(item.body, indent + 1)
            lines.append(f"{pad}}}")
        elif isinstance(item, A.AssertStmt):
            lines.append(f"{pad}assert({expr(item.expr)}),")
        elif isinstance(item, A.ConstDecl):
            lines.append(f"{pad}{_const(item)},")
        else:
            raise TypeError(f"not an implementation item: {item!r}")
    return lines


def declaration(d) -> str:
    if isinstance(d, A.TypeAlias):
        return f"type {d.name} = {type_expr(d.type)};"
    if isinstance(d, (A.GroupDecl, A.UnionDecl)):
        kw = "Group" if isinstance(d, A.GroupDecl) else "Union"
        lines = [f"{kw} {d.name} {{"]
        lines += [f"  {f.name}: {type_expr(f.type)}," for f in d.fields]
        lines.append("}")
        return "\n".join(lines)
    if isinstance(d, A.ConstDecl):
        return _const(d) + ";"
    if isinstance(d, A.StreamletDecl):
        lines = [f"streamlet {d.name}{template_params(d.params)} {{"]
        for p in d.ports:
            size = f" [{expr(p.array_size)}]" if p.array_size is not None else ""
            clock = f" @{p.clock}" if p.clock else ""
            lines.append(f"  {p.name}: {type_expr(p.type)} {p.direction}{size}{clock},")
        lines.append("}")
        return "\n".join(lines)
    if isinstance(d, A.ImplDecl):
        ext = "external " if d.external else ""
        head = (f"{ext}impl {d.name}{template_params(d.params)} of "
                f"{d.streamlet}{template_args(d.streamlet_args)} {{")
        return "\n".join([head] + _body(d.body, 1) + ["}"])
    if isinstance(d, A.Import):
        return f"import {escape(d.path)};"
    raise TypeError(f"not a declaration: {d!r}")


def pretty(tree: A.Ast) -> str:
    return "\n\n".join(declaration(d) for d in tree.declarations) + "\n"
