"""Canonical s-expression text for types, values, expressions and statements.

``pretty`` and ``read_program`` round-trip: ``read_program(pretty(p)) == p``.
Compound statements open a line and indent their children two spaces, so
every simple statement sits on its own line.
"""

from __future__ import annotations

import re

from . import ir
from .types import (
    ADDRESS_BITS, Special, TAddress, TArray, TBool, TBytes, TContract, TFloat,
    TFun, TInt, TMapping, TString, TStruct, TUndef, parse_label,
)
from .values import (
    VArray, VBool, VBytes, VFloat, VInt, VMapping, VPtrContract, VPtrFun, VPtrPar,
    VPtrVar, VStatement, VString, VStruct, VUndef,
)
from pyrsistent import pmap


class IRSyntaxError(ValueError):
    pass


# -- rendering ---------------------------------------------------------------

def show_type(t) -> str:
    if isinstance(t, TInt):
        return str(t)
    if isinstance(t, (TBool, TString, TAddress, TBytes)):
        return str(t)
    if isinstance(t, TUndef):
        return "Tundef"
    if isinstance(t, TFloat):
        return "Tfloat"
    if isinstance(t, TArray):
        return f"(Tarray {show_type(t.elem)} {'_' if t.length is None else t.length})"
    if isinstance(t, TMapping):
        return f"(Tmapping {show_type(t.key)} {show_type(t.val)})"
    if isinstance(t, TStruct):
        return f"(Tstruct {t.name})"
    if isinstance(t, TContract):
        return f"(Tcontract {t.name})"
    if isinstance(t, TFun):
        return f"(Tfun ({' '.join(map(show_type, t.params))}) {show_type(t.ret)})"
    raise TypeError(f"not a type: {t!r}")


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def show_value(v) -> str:
    if isinstance(v, VUndef):
        return "Vundef"
    if isinstance(v, VInt):
        if v.is_address:
            return f"(Vaddress 0x{v.bits:x})"
        return f"(Vint {show_type(TInt(v.width, v.signed))} {v.value})"
    if isinstance(v, VBool):
        return f"(Vbool {'true' if v.value else 'false'})"
    if isinstance(v, VString):
        return f"(Vstring {_quote(v.value)})"
    if isinstance(v, VBytes):
        return f"(Vbytes 0x{v.data.hex()})"
    if isinstance(v, VFloat):
        return f"(Vfloat 0x{v.bits64:016x})"
    if isinstance(v, VStruct):
        inner = "".join(f" ({k} {show_value(m)})" for k, m in v.members)
        return f"(Vstruct {v.name}{inner})"
    if isinstance(v, VArray):
        inner = "".join(" " + show_value(x) for x in v.items)
        return f"(Varray {show_type(v.elem)}{inner})"
    if isinstance(v, VMapping):
        entries = sorted((show_value(k), show_value(x)) for k, x in v.entries.items())
        inner = "".join(f" ({k} {x})" for k, x in entries)
        return (f"(Vmapping {show_type(v.key)} {show_type(v.val)} "
                f"(default {show_value(v.default)}){inner})")
    if isinstance(v, VStatement):
        return f"(Vstatement {show_stmt_inline(v.stmt)})"
    for cls, tag in _PTRS:
        if isinstance(v, cls):
            return f"({tag} {v.addr})"
    return str(v)  # symbolic payloads render themselves


_PTRS = ((VPtrVar, "VptrVar"), (VPtrPar, "VptrPar"), (VPtrFun, "VptrFun"),
         (VPtrContract, "VptrContract"))


def show_expr(e) -> str:
    if isinstance(e, ir.Econst):
        return f"(Econst {show_value(e.value)})"
    if isinstance(e, ir.Evar):
        return f"(Evar {e.name} {show_type(e.ty)})"
    if isinstance(e, ir.Epar):
        return f"(Epar {e.name} {show_type(e.ty)})"
    if isinstance(e, ir.Efun):
        return f"(Efun {e.name} {show_type(e.ret)})"
    if isinstance(e, ir.Ebinop):
        return f"(Ebinop {e.op} {show_expr(e.lhs)} {show_expr(e.rhs)})"
    if isinstance(e, ir.Eunop):
        return f"(Eunop {e.op} {show_expr(e.arg)})"
    if isinstance(e, ir.Efield):
        base = (f"(Special {e.base.which.value})" if isinstance(e.base, ir.SpecialRef)
                else show_expr(e.base))
        return f"(Efield {base} ({' '.join(e.path)}) {show_type(e.ty)})"
    if isinstance(e, ir.Eindex):
        return f"(Eindex {show_expr(e.base)} {show_expr(e.key)})"
    if isinstance(e, ir.Estruct):
        inner = "".join(f" ({f} {show_expr(m)})" for f, m in e.members)
        return f"(Estruct {e.name}{inner})"
    raise TypeError(f"not an expression: {e!r}")


def _stmt_lines(s, depth: int) -> list:
    pad = "  " * depth

    def block(head: str, kids) -> list:
        lines = [pad + head]
        for k in kids:
            lines.extend(_stmt_lines(k, depth + 1))
        lines[-1] += ")"
        return lines

    if isinstance(s, ir.Snil):
        return [pad + "Snil"]
    if isinstance(s, ir.Throw):
        return [pad + "Throw"]
    if isinstance(s, ir.Seq):
        if not s.stmts:
            return [pad + "(Seq)"]
        return block("(Seq", s.stmts)
    if isinstance(s, ir.Var):
        return [pad + f"(Var {s.vis or '_'} {show_expr(s.decl)})"]
    if isinstance(s, ir.StructDecl):
        inner = "".join(f" ({show_type(t)} {f})" for t, f in s.members)
        return [pad + f"(StructDecl {s.name}{inner})"]
    if isinstance(s, ir.Assign):
        return [pad + f"(Assign {show_expr(s.lhs)} {show_expr(s.rhs)})"]
    if isinstance(s, ir.If):
        return block(f"(If {show_expr(s.cond)}", (s.then, s.else_))
    if isinstance(s, ir.While):
        return block(f"(While {show_expr(s.cond)}", (s.body,))
    if isinstance(s, ir.For):
        lines = [pad + "(For"]
        lines += _stmt_lines(s.init, depth + 1)
        lines.append("  " * (depth + 1) + show_expr(s.cond))
        lines += _stmt_lines(s.step, depth + 1)
        lines += _stmt_lines(s.body, depth + 1)
        lines[-1] += ")"
        return lines
    if isinstance(s, ir.Fun):
        params = " ".join(show_expr(p) for p in s.params)
        head = f"(Fun {s.vis or '_'} {show_expr(s.sig)} (params{' ' if params else ''}{params})"
        if not s.body:
            return [pad + head + " (body))"]
        lines = [pad + head, "  " * (depth + 1) + "(body"]
        for k in s.body:
            lines.extend(_stmt_lines(k, depth + 2))
        lines[-1] += "))"
        return lines
    if isinstance(s, ir.FunCall):
        args = "".join(" " + show_expr(a) for a in s.args)
        return [pad + f"(FunCall {show_expr(s.callee)}{args})"]
    if isinstance(s, ir.Return):
        return [pad + ("(Return)" if s.e is None else f"(Return {show_expr(s.e)})")]
    if isinstance(s, ir.Contract):
        parents = " ".join(s.parents)
        head = f"(Contract {show_expr(s.name)} (parents{' ' if parents else ''}{parents})"
        if not s.body:
            return [pad + head + " (body))"]
        lines = [pad + head, "  " * (depth + 1) + "(body"]
        for k in s.body:
            lines.extend(_stmt_lines(k, depth + 2))
        lines[-1] += "))"
        return lines
    raise TypeError(f"not a statement: {s!r}")


def show_stmt(s) -> str:
    return "\n".join(_stmt_lines(s, 0))


def show_stmt_inline(s) -> str:
    return " ".join(line.strip() for line in _stmt_lines(s, 0))


def pretty(prog) -> str:
    """Canonical text of a statement list (or of one statement)."""
    if not isinstance(prog, (list, tuple)):
        return show_stmt(prog)
    return "".join(show_stmt(s) + "\n" for s in prog)


# -- reading -----------------------------------------------------------------

class _Str(str):
    """A quoted string atom."""


_TOKEN = re.compile(r'\s*(?:(\()|(\))|"((?:[^"\\]|\\.)*)"|([^\s()"]+))')


def _sexprs(text: str) -> list:
    stack: list = [[]]
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise IRSyntaxError(f"bad token at offset {pos}")
        pos = m.end()
        if m.group(1):
            stack.append([])
        elif m.group(2):
            if len(stack) == 1:
                raise IRSyntaxError(f"unbalanced ')' at offset {pos}")
            done = stack.pop()
            stack[-1].append(done)
        elif m.group(3) is not None:
            raw = m.group(3)
            stack[-1].append(_Str(re.sub(r"\\(.)", lambda mm: "\n" if mm.group(1) == "n" else mm.group(1), raw)))
        else:
            stack[-1].append(m.group(4))
    if len(stack) != 1:
        raise IRSyntaxError("unbalanced '('")
    return stack[0]


_INT_ATOM = re.compile(r"(u?)int(\d+)$")
_BYTES_ATOM = re.compile(r"bytes(\d+)$")


def _type(x):
    if isinstance(x, str):
        m = _INT_ATOM.match(x)
        if m:
            return TInt(int(m.group(2)), not m.group(1))
        m = _BYTES_ATOM.match(x)
        if m:
            return TBytes(int(m.group(1)))
        simple = {"bool": TBool(), "address": TAddress(), "string": TString(),
                  "Tundef": TUndef(), "Tfloat": TFloat()}
        if x in simple:
            return simple[x]
        raise IRSyntaxError(f"unknown type {x}")
    head = x[0]
    if head == "Tarray":
        return TArray(_type(x[1]), None if x[2] == "_" else int(x[2]))
    if head == "Tmapping":
        return TMapping(_type(x[1]), _type(x[2]))
    if head == "Tstruct":
        return TStruct(x[1])
    if head == "Tcontract":
        return TContract(x[1])
    if head == "Tfun":
        return TFun(tuple(_type(p) for p in x[1]), _type(x[2]))
    raise IRSyntaxError(f"unknown type form {head}")


def _value(x):
    if x == "Vundef":
        return VUndef()
    if isinstance(x, str):
        raise IRSyntaxError(f"unknown value {x}")
    head = x[0]
    if head == "Vint":
        t = _type(x[1])
        return VInt.of(t, int(x[2]))
    if head == "Vaddress":
        return VInt(ADDRESS_BITS, False, int(x[1], 16))
    if head == "Vbool":
        return VBool(x[1] == "true")
    if head == "Vstring":
        return VString(str(x[1]))
    if head == "Vbytes":
        return VBytes(bytes.fromhex(x[1][2:]))
    if head == "Vfloat":
        return VFloat(int(x[1], 16))
    if head == "Vstruct":
        return VStruct(x[1], tuple((k, _value(v)) for k, v in x[2:]))
    if head == "Varray":
        return VArray(_type(x[1]), tuple(_value(v) for v in x[2:]))
    if head == "Vmapping":
        default = _value(x[3][1])
        entries = pmap({_value(k): _value(v) for k, v in x[4:]})
        return VMapping(_type(x[1]), _type(x[2]), default, entries)
    if head == "Vstatement":
        return VStatement(_stmt(x[1]))
    for cls, tag in _PTRS:
        if head == tag:
            return cls(parse_label(x[1]))
    raise IRSyntaxError(f"unknown value form {head}")


def _expr(x):
    if isinstance(x, str):
        raise IRSyntaxError(f"expected expression, got {x}")
    head = x[0]
    if head == "Econst":
        return ir.Econst(_value(x[1]))
    if head == "Evar":
        return ir.Evar(x[1], _type(x[2]))
    if head == "Epar":
        return ir.Epar(x[1], _type(x[2]))
    if head == "Efun":
        return ir.Efun(x[1], _type(x[2]))
    if head == "Ebinop":
        return ir.Ebinop(x[1], _expr(x[2]), _expr(x[3]))
    if head == "Eunop":
        return ir.Eunop(x[1], _expr(x[2]))
    if head == "Efield":
        b = x[1]
        base = (ir.SpecialRef(Special(b[1])) if isinstance(b, list) and b[0] == "Special"
                else _expr(b))
        return ir.Efield(base, tuple(x[2]), _type(x[3]))
    if head == "Eindex":
        return ir.Eindex(_expr(x[1]), _expr(x[2]))
    if head == "Estruct":
        return ir.Estruct(x[1], tuple((f, _expr(m)) for f, m in x[2:]))
    raise IRSyntaxError(f"unknown expression form {head}")


def _vis(a):
    return None if a == "_" else a


def _tagged(x, tag):
    if not isinstance(x, list) or not x or x[0] != tag:
        raise IRSyntaxError(f"expected ({tag} ...)")
    return x[1:]


def _stmt(x):
    if x == "Snil":
        return ir.Snil()
    if x == "Throw":
        return ir.Throw()
    if isinstance(x, str) or not x:
        raise IRSyntaxError(f"expected statement, got {x!r}")
    head = x[0]
    if head == "Seq":
        return ir.Seq(tuple(_stmt(s) for s in x[1:]))
    if head == "Var":
        return ir.Var(_vis(x[1]), _expr(x[2]))
    if head == "StructDecl":
        return ir.StructDecl(x[1], tuple((_type(t), f) for t, f in x[2:]))
    if head == "Assign":
        return ir.Assign(_expr(x[1]), _expr(x[2]))
    if head == "If":
        return ir.If(_expr(x[1]), _stmt(x[2]), _stmt(x[3]))
    if head == "While":
        return ir.While(_expr(x[1]), _stmt(x[2]))
    if head == "For":
        return ir.For(_stmt(x[1]), _expr(x[2]), _stmt(x[3]), _stmt(x[4]))
    if head == "Fun":
        params = tuple(_expr(p) for p in _tagged(x[3], "params"))
        body = tuple(_stmt(s) for s in _tagged(x[4], "body"))
        return ir.Fun(_vis(x[1]), _expr(x[2]), params, body)
    if head == "FunCall":
        return ir.FunCall(_expr(x[1]), tuple(_expr(a) for a in x[2:]))
    if head == "Return":
        return ir.Return(_expr(x[1]) if len(x) > 1 else None)
    if head == "Contract":
        parents = tuple(_tagged(x[2], "parents"))
        body = tuple(_stmt(s) for s in _tagged(x[3], "body"))
        return ir.Contract(_expr(x[1]), parents, body)
    raise IRSyntaxError(f"unknown statement form {head}")


def read_program(text: str) -> list:
    """Parse canonical IR text back into a statement list."""
    try:
        return [_stmt(x) for x in _sexprs(text)]
    except (IndexError, ValueError) as err:
        if isinstance(err, IRSyntaxError):
            raise
        raise IRSyntaxError(str(err)) from err


def read_expr(text: str):
    forms = _sexprs(text)
    if len(forms) != 1:
        raise IRSyntaxError("expected exactly one expression")
    return _expr(forms[0])
