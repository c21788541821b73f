"""Verification spec files.

Grammar (UTF-8, line oriented; ``#`` starts a comment, blank lines are ignored)::

    file      := section*
    section   := "[" name "]" NEWLINE line*
    [spec]      name = ID | program = PATH | entry = ID | mode = static|concolic|selective
                segment = INT ":" INT | word_bits = INT | memory_size = INT
                send_policy = true|false|symbolic
    [symbols]   ID ":" TYPE [ "=" LITERAL ]          TYPE := bool | address | uintN | intN | uint | int
    [pre]       LOCATION "=" EXPR                     LOCATION := ID ("." ID | "[" LITERAL "]")*
                constraint "=" EXPR                   (at most one)
    [post]      result = rollback | out_of_gas        (exclusive with assert lines)
                assert LOCATION "==" EXPR
    [fuel]      k_stmt = INT | k_val = INT | gas_limit = INT

``name``, ``program`` and ``entry`` are required.  A symbol with a value is
bound (concolic mode).  ``msg.value``, ``msg.sender``, ``this.balance``,
``block.number`` and ``block.timestamp`` are locations too.  Expressions use
Solidity operators over the declared symbols; integer literals take the type
of the location or of the other operand.  ``PATH`` is relative to the spec
file and names a ``.sol`` or ``.lolisa`` program.
"""

from __future__ import annotations

import os
import re
from dataclasses import replace
from typing import Optional

from .fether import Fuel, Machine
from .frontend import FrontendError, compile_source
from .germ import DEFAULT_SPACE
from .irtext import read_program
from .program import Program
from .stdlib import StdLib
from .symexec.hoare import (
    MODES, POLICIES, Assertions, HoareSpec, OutOfGasPost, Rollback, SpecError, SymbolDecl,
    initial_state, parse_target, target_type,
)
from .symexec.notation import parse_expr, parse_literal, parse_type, show_expr, show_type, show_value
from .symexec.symvalue import TRUE, type_of
from .values import zero_value

SECTIONS = ("spec", "symbols", "pre", "post", "fuel")
SPEC_KEYS = ("name", "program", "entry", "mode", "segment", "word_bits", "memory_size", "send_policy")
FUEL_KEYS = ("k_stmt", "k_val", "gas_limit")

_SECTION = re.compile(r"\[\s*([A-Za-z_]+)\s*\]$")
_SYMBOL = re.compile(r"([A-Za-z_]\w*)\s*:\s*([A-Za-z_]\w*)\s*(?:=\s*(.+))?$")
_ASSERT = re.compile(r"assert\s+(.+?)\s*==\s*(.+)$")


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line


def _err(no: int, msg: str) -> SpecError:
    return SpecError(f"line {no}: {msg}")


def parse_sections(text: str) -> dict:
    """Raw sections: name -> list of (line number, text); unknown sections are errors."""
    out = {}
    current = None
    for no, line in _lines(text):
        m = _SECTION.match(line)
        if m:
            current = m.group(1)
            if current not in SECTIONS:
                raise _err(no, f"unknown section [{current}]")
            if current in out:
                raise _err(no, f"section [{current}] appears twice")
            out[current] = []
            continue
        if current is None:
            raise _err(no, "text before the first section header")
        out[current].append((no, line))
    return out


def _key_values(entries, allowed) -> dict:
    out = {}
    for no, line in entries:
        key, eq, value = line.partition("=")
        key = key.strip()
        if not eq:
            raise _err(no, f"expected key = value, found {line!r}")
        if key not in allowed:
            raise _err(no, f"unknown key {key}")
        if key in out:
            raise _err(no, f"key {key} given twice")
        out[key] = (no, value.strip())
    return out


def _int(no, text) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise _err(no, f"expected an integer, found {text!r}") from None


def load_program(path: str, word_bits: int = 256, memory_size: Optional[int] = None) -> Program:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise SpecError(f"cannot read program {path}: {err.strerror}") from None
    lib = StdLib(word_bits)
    if path.endswith(".lolisa"):
        return Program.from_statements(read_program(text), lib, limit=memory_size,
                                       source_name=os.path.basename(path))
    return compile_source(text, os.path.basename(path), lib, memory_size)


def parse_spec(text: str, source_dir: str = ".", program: Optional[Program] = None) -> tuple:
    """(HoareSpec, Program) from spec-file text; the program is compiled unless given."""
    sections = parse_sections(text)
    head = _key_values(sections.get("spec", []), SPEC_KEYS)
    for key in ("name", "program", "entry"):
        if key not in head:
            raise SpecError(f"[spec] needs a {key} key")
    name = head["name"][1]
    program_path = head["program"][1]
    entry = head["entry"][1]
    mode = head.get("mode", (0, "static"))
    if mode[1] not in MODES:
        raise _err(mode[0], f"mode must be one of {', '.join(MODES)}")
    policy = head.get("send_policy", (0, "symbolic"))
    if policy[1] not in POLICIES:
        raise _err(policy[0], f"send_policy must be one of {', '.join(POLICIES)}")
    word_bits = _int(*head["word_bits"]) if "word_bits" in head else 256
    memory_size = _int(*head["memory_size"]) if "memory_size" in head else DEFAULT_SPACE
    segment = None
    if "segment" in head:
        no, text_seg = head["segment"]
        a, colon, b = text_seg.partition(":")
        if not colon:
            raise _err(no, "segment must be START:END")
        segment = (_int(no, a.strip()), _int(no, b.strip()))

    fuel_kv = _key_values(sections.get("fuel", []), FUEL_KEYS)
    defaults = Fuel()
    try:
        fuel = Fuel(*(_int(*fuel_kv[k]) if k in fuel_kv else getattr(defaults, k) for k in FUEL_KEYS))
    except ValueError as err:
        raise SpecError(str(err)) from None

    if program is None:
        program = load_program(os.path.join(source_dir, program_path), word_bits, memory_size)

    decls, syms = [], {}
    for no, line in sections.get("symbols", []):
        m = _SYMBOL.match(line)
        if not m:
            raise _err(no, f"expected NAME : TYPE [= VALUE], found {line!r}")
        sname, tname, value = m.groups()
        if sname in syms:
            raise _err(no, f"symbol {sname} declared twice")
        ty = parse_type(tname, word_bits)
        bound = parse_literal(value, ty) if value is not None else None
        syms[sname] = ty
        decls.append(SymbolDecl(sname, ty, bound))

    spec = HoareSpec(name, program_path, entry, tuple(decls), mode=mode[1], fuel=fuel,
                     segment=segment, word_bits=word_bits, memory_size=memory_size,
                     send_policy=policy[1], source_dir=source_dir)
    mc = Machine(program)
    m_fresh, _ = initial_state(mc, spec, {})
    assigns, constraint = [], TRUE
    seen_constraint = False
    for no, line in sections.get("pre", []):
        lhs, eq, rhs = line.partition("=")
        if not eq or rhs.startswith("="):
            raise _err(no, f"expected LOCATION = EXPR, found {line!r}")
        lhs, rhs = lhs.strip(), rhs.strip()
        try:
            if lhs == "constraint":
                if seen_constraint:
                    raise SpecError("constraint given twice")
                seen_constraint = True
                constraint = parse_expr(rhs, syms, parse_type("bool"))
                continue
            target = parse_target(lhs)
            ty = _location_type(mc, m_fresh, spec, target)
            assigns.append((target, parse_expr(rhs, syms, ty)))
        except SpecError as err:
            raise _err(no, str(err)) from None

    post = None
    items = []
    for no, line in sections.get("post", []):
        try:
            m = _ASSERT.match(line)
            if m:
                target = parse_target(m.group(1))
                ty = _location_type(mc, m_fresh, spec, target)
                items.append((target, parse_expr(m.group(2), syms, ty)))
                continue
            key, eq, value = line.partition("=")
            if key.strip() != "result" or not eq:
                raise SpecError(f"expected result = ... or assert ..., found {line!r}")
            if post is not None:
                raise SpecError("result given twice")
            value = value.strip()
            if value == "rollback":
                post = Rollback()
            elif value == "out_of_gas":
                post = OutOfGasPost()
            else:
                raise SpecError(f"result must be rollback or out_of_gas, not {value!r}")
        except SpecError as err:
            raise _err(no, str(err)) from None
    if post is not None and items:
        raise SpecError("[post] mixes result = and assert lines")
    if post is None and not items:
        raise SpecError("[post] is empty")
    if post is None:
        post = Assertions(tuple(items))

    spec = replace(spec, assignments=tuple(assigns), constraint=constraint, post=post)
    spec.validate()
    return spec, program


def _location_type(mc, m, spec, target):
    """Type held at a location in the entry's scope (parameters included)."""
    f = mc.prog.function(spec.entry)
    if f is not None and not target.path and target.special is None:
        for p in f.params:
            if p.name == target.root:
                return type_of(zero_value(p.ty, mc.prog.structs()))
    return target_type(mc, m, target, spec.entry)


def load_spec(path: str, program: Optional[Program] = None) -> tuple:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise SpecError(f"cannot read spec {path}: {err.strerror}") from None
    try:
        return parse_spec(text, os.path.dirname(os.path.abspath(path)), program)
    except FrontendError as err:
        raise SpecError(f"program of {path}: {err}") from None


def dump_spec(spec: HoareSpec) -> str:
    out = ["[spec]", f"name = {spec.name}", f"program = {spec.program_path}",
           f"entry = {spec.entry}", f"mode = {spec.mode}"]
    if spec.segment is not None:
        out.append(f"segment = {spec.segment[0]}:{spec.segment[1]}")
    out.append(f"word_bits = {spec.word_bits}")
    out.append(f"memory_size = {spec.memory_size}")
    out.append(f"send_policy = {spec.send_policy}")
    out += ["", "[symbols]"]
    for d in spec.symbols:
        line = f"{d.name} : {show_type(d.ty)}"
        if d.value is not None:
            line += f" = {show_value(d.value)}"
        out.append(line)
    out += ["", "[pre]"]
    for t, v in spec.assignments:
        out.append(f"{t} = {show_expr(v)}")
    out.append(f"constraint = {show_expr(spec.constraint)}")
    out += ["", "[post]"]
    if isinstance(spec.post, Assertions):
        for t, v in spec.post.items:
            out.append(f"assert {t} == {show_expr(v)}")
    else:
        out.append(f"result = {spec.post}")
    out += ["", "[fuel]", f"k_stmt = {spec.fuel.k_stmt}", f"k_val = {spec.fuel.k_val}",
            f"gas_limit = {spec.fuel.gas_limit}"]
    return "\n".join(out) + "\n"


__all__ = ["dump_spec", "load_program", "load_spec", "parse_sections", "parse_spec"]
