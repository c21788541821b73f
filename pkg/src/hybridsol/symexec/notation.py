"""Text form of symbol types and symbolic expressions.

Expressions use the Solidity operator syntax (parsed by the frontend's
expression parser) with identifiers standing for declared symbols.  Integer
literals take the type of the other operand, or the type expected by the
context.  ``show_expr`` prints fully parenthesised text that parses back to
the same tree.
"""

from __future__ import annotations

import re
from typing import Mapping, Optional

from ..frontend import FrontendError, parse_expression
from ..frontend.ast import Binary, BoolLit, Ident, NumberLit, Unary
from ..types import TAddress, TBool, TInt
from ..values import VBool, VInt
from .hoare import SpecError
from .symvalue import UNARY, App, Sym, SymTypeError, const_of, mk, type_of

_INT = re.compile(r"(u?)int(\d*)$")


def parse_type(text: str, word_bits: int = 256):
    t = text.strip()
    if t == "bool":
        return TBool()
    if t == "address":
        return TAddress()
    m = _INT.match(t)
    if m:
        width = int(m.group(2)) if m.group(2) else word_bits
        try:
            return TInt(width, m.group(1) != "u")
        except ValueError as err:
            raise SpecError(str(err)) from None
    raise SpecError(f"unsupported symbol type {t!r}")


def show_type(ty) -> str:
    return str(ty) if not isinstance(ty, TAddress) else "address"


class _Lit:
    """An integer literal whose type is not known yet."""

    def __init__(self, n: int):
        self.n = n


def _typed(x, ty):
    if not isinstance(x, _Lit):
        return x
    if ty is None:
        raise SpecError(f"cannot infer the type of literal {x.n}")
    if isinstance(ty, TBool):
        raise SpecError(f"integer literal {x.n} used as a boolean")
    if isinstance(ty, TInt) and not ty.lo <= x.n <= ty.hi:
        raise SpecError(f"literal {x.n} does not fit {ty}")
    return const_of(ty, x.n)


def _convert(node, syms: Mapping):
    if isinstance(node, Ident):
        if node.name not in syms:
            raise SpecError(f"undeclared symbol {node.name}")
        return Sym(node.name, syms[node.name])
    if isinstance(node, BoolLit):
        return VBool(node.value)
    if isinstance(node, NumberLit):
        return _Lit(node.value)
    if isinstance(node, Unary) and node.op in UNARY:
        a = _convert(node.arg, syms)
        if isinstance(a, _Lit):
            if node.op == "-":
                return _Lit(-a.n)
            raise SpecError(f"cannot infer the type of {node.op}{a.n}")
        return _apply(UNARY[node.op], a)
    if isinstance(node, Binary):
        a = _convert(node.lhs, syms)
        b = _convert(node.rhs, syms)
        if isinstance(a, _Lit) and not isinstance(b, _Lit):
            a = _typed(a, _lit_context(node.op, b))
        elif isinstance(b, _Lit) and not isinstance(a, _Lit):
            b = _typed(b, _lit_context(node.op, a))
        elif isinstance(a, _Lit):
            raise SpecError(f"cannot infer the types of {a.n} {node.op} {b.n}")
        return _apply(node.op, a, b)
    raise SpecError(f"unsupported expression form {type(node).__name__}")


def _lit_context(op, other):
    return type_of(other)


def _apply(op, *args):
    try:
        return mk(op, *args)
    except SymTypeError as err:
        raise SpecError(str(err)) from None


def parse_expr(text: str, syms: Mapping, expected=None):
    """SymValue for ``text`` over the declared symbols ``syms`` (name -> type)."""
    try:
        node = parse_expression(text)
    except FrontendError as err:
        raise SpecError(f"bad expression {text!r}: {err}") from None
    v = _typed(_convert(node, syms), expected)
    if expected is not None and type_of(v) != expected:
        raise SpecError(f"{text!r} has type {show_type(type_of(v))}, expected {show_type(expected)}")
    return v


def parse_literal(text: str, ty):
    """A concrete value of type ``ty`` written as a literal."""
    v = parse_expr(text, {}, ty)
    if not isinstance(v, (VInt, VBool)):
        raise SpecError(f"{text!r} is not a literal")
    return v


def show_value(v) -> str:
    if isinstance(v, VBool):
        return "true" if v.value else "false"
    if isinstance(v, VInt):
        return f"0x{v.bits:x}" if v.is_address else str(v.value)
    raise SpecError(f"cannot print {v!r}")


_SHOW_UNARY = {"!": "!", "neg": "-", "~": "~"}


def show_expr(v) -> str:
    if isinstance(v, Sym):
        return v.name
    if isinstance(v, App):
        if len(v.args) == 1:
            inner = show_expr(v.args[0])
            if isinstance(v.args[0], App) and len(v.args[0].args) == 1:
                inner = f"({inner})"
            return f"{_SHOW_UNARY[v.op]}{inner}"
        a, b = v.args
        return f"({show_expr(a)} {v.op} {show_expr(b)})"
    return show_value(v)


def show_model(model: Mapping, order: Optional[list] = None) -> str:
    names = order if order is not None else sorted(model)
    return ", ".join(f"{k} = {show_value(model[k])}" for k in names if k in model)


__all__ = [
    "parse_expr", "parse_literal", "parse_type", "show_expr", "show_model", "show_type",
    "show_value",
]
