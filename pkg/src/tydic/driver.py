"""Compiler driver: parse, resolve, elaborate, sugar, DRC, emit."""

from __future__ import annotations

import logging
import os
import posixpath
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from .diagnostics import Diagnostic, TydiError, sort_diagnostics
from .drc import MODES, run_drc
from .elaborate import DEFAULT_DEPTH_LIMIT, ElaboratedDesign, depth_limit_from_env, elaborate
from .ir import emit_ir
from .scope_eval import resolve
from .stdlib import prelude
from .sugar import apply_sugar
from .syntax import ast as A
from .syntax import parse
from .vhdl import emit_vhdl

log = logging.getLogger("tydic")

STAGES = ("parse", "resolve", "elaborate", "sugar", "drc", "emit")
EMIT_CHOICES = ("ir", "vhdl", "both")


class ConfigError(ValueError):
    """Bad configuration or unreadable input (exit status 2)."""


@dataclass
class BuildConfig:
    inputs: list = field(default_factory=list)
    top: Optional[str] = None
    drc: str = "strict"
    sugar: bool = True
    emit: str = "both"
    outdir: Optional[str] = None
    depth_limit: int = DEFAULT_DEPTH_LIMIT

    def validate(self):
        if not self.inputs:
            raise ConfigError("no input files")
        if not self.top:
            raise ConfigError("no top-level implementation given (--top)")
        if self.drc not in MODES:
            raise ConfigError(f"drc must be one of {', '.join(MODES)}, got {self.drc!r}")
        if self.emit not in EMIT_CHOICES:
            raise ConfigError(f"emit must be one of {', '.join(EMIT_CHOICES)}, got {self.emit!r}")
        if not isinstance(self.depth_limit, int) or self.depth_limit < 1:
            raise ConfigError("template depth limit must be a positive int")
        return self


_BOOL = {"true": True, "yes": True, "on": True, "1": True,
         "false": False, "no": False, "off": False, "0": False}


def read_config(path) -> dict:
    """Parse a ``key=value`` file; ``#`` starts a comment.  Returns BuildConfig field values."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}")
    known = {f.name for f in fields(BuildConfig)}
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip().replace("-", "_"), value.strip()
        if not sep or key not in known:
            raise ConfigError(f"{path}:{n}: expected 'key = value' with a known key, got {raw!r}")
        if key == "inputs":
            out[key] = value.split()
        elif key == "sugar":
            if value.lower() not in _BOOL:
                raise ConfigError(f"{path}:{n}: sugar must be a boolean")
            out[key] = _BOOL[value.lower()]
        elif key == "depth_limit":
            try:
                out[key] = int(value)
            except ValueError:
                raise ConfigError(f"{path}:{n}: depth_limit must be an int")
        else:
            out[key] = value
    return out


def file_id(path: str) -> str:
    """Stable, slash-separated name for a source file (relative when below the cwd)."""
    p = os.path.normpath(path)
    if os.path.isabs(p):
        rel = os.path.relpath(p)
        if not rel.startswith(".."):
            p = rel
    return p.replace(os.sep, "/")


def expand_inputs(inputs) -> list[str]:
    out = []
    for item in inputs:
        if os.path.isdir(item):
            found = sorted(f for f in os.listdir(item) if f.endswith(".td"))
            out.extend(file_id(os.path.join(item, f)) for f in found)
        elif os.path.isfile(item):
            out.append(file_id(item))
        else:
            raise ConfigError(f"no such input: {item}")
    return out


def load_sources(inputs) -> tuple[dict, list]:
    """Parse the inputs and every file they import, transitively.

    Returns ({file id: Ast}, diagnostics).  Missing import targets are left to
    name resolution, which reports them against the import statement.
    """
    asts, diags = {}, []
    pending = list(expand_inputs(inputs))
    seen = set()
    while pending:
        fid = pending.pop(0)
        if fid in seen:
            continue
        seen.add(fid)
        try:
            text = Path(fid).read_text(encoding="utf-8")
        except FileNotFoundError:
            continue
        except (OSError, UnicodeDecodeError) as exc:
            raise ConfigError(f"cannot read {fid}: {exc}")
        try:
            tree = parse(text, fid)
        except TydiError as exc:
            diags.extend(exc.diagnostics)
            continue
        asts[fid] = tree
        for d in tree.declarations:
            if isinstance(d, A.Import):
                pending.append(posixpath.normpath(posixpath.join(posixpath.dirname(fid), d.path)))
    return asts, diags


@dataclass
class BuildResult:
    status: int
    diagnostics: list
    design: Optional[ElaboratedDesign] = None
    outputs: dict = field(default_factory=dict)  # relative path -> text
    stages: list = field(default_factory=list)


def _errors(diags) -> bool:
    return any(d.is_error for d in diags)


def compile(config: BuildConfig) -> BuildResult:
    """Run the pipeline.  Writes outputs only when there are no errors."""
    config.validate()
    stages = []

    def stage(name):
        stages.append(name)
        log.info("stage: %s", name)

    def failed(diags, design=None):
        return BuildResult(1, sort_diagnostics(diags), design, {}, stages)

    stage("parse")
    asts, diags = load_sources(config.inputs)
    if _errors(diags):
        return failed(diags)

    stage("resolve")
    program = resolve(asts.values(), prelude())
    diags.extend(program.diagnostics)
    if _errors(diags):
        return failed(diags)

    stage("elaborate")
    try:
        design, elab = elaborate(program, config.top, config.depth_limit)
    except TydiError as exc:
        return failed(diags + exc.diagnostics)

    stage("sugar")
    try:
        design = apply_sugar(design, elab, config.sugar)
    except TydiError as exc:
        return failed(diags + exc.diagnostics, design)

    stage("drc")
    diags.extend(run_drc(design, config.drc))
    if _errors(diags):
        return failed(diags, design)

    stage("emit")
    outputs = {}
    if config.emit in ("ir", "both"):
        outputs[f"{config.top}.tir"] = emit_ir(design)
    if config.emit in ("vhdl", "both"):
        for name, text in emit_vhdl(design).items():
            outputs[f"vhdl/{name}"] = text
    if config.outdir is not None:
        write_outputs(config.outdir, outputs)
    return BuildResult(0, sort_diagnostics(diags), design, outputs, stages)


def write_outputs(outdir, outputs: dict):
    try:
        for rel, text in outputs.items():
            target = Path(outdir, rel)
            target.parent.mkdir(parents=True, exist_ok=True)
            with open(target, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write to {outdir}: {exc.strerror}")


def render(diags: list[Diagnostic]) -> str:
    return "".join(d.render() + "\n" for d in diags)


def default_depth_limit() -> int:
    try:
        return depth_limit_from_env()
    except ValueError as exc:
        raise ConfigError(str(exc))
