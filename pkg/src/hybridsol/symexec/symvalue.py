"""Symbolic payloads: expression trees over typed symbols.

Concrete values are plain ``VInt``/``VBool`` payloads, so a symbolic memory is
an ordinary cell memory whose cells may also hold ``Sym`` or ``App`` nodes.
``mk`` builds an ``App`` and folds it whenever the operands allow.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

from ..fether import EvalFailure, compare, int_binop, unop
from ..ir import ARITH_OPS, BOOL_OPS, CMP_OPS, EQ_OPS, SHIFT_OPS
from ..types import ADDRESS_BITS, TAddress, TBool, TInt
from ..values import FALSE, TRUE, VBool, VInt

UNARY = {"!": "!", "-": "neg", "~": "~"}


class SymTypeError(TypeError):
    pass


def _sym_type_ok(ty) -> bool:
    return isinstance(ty, (TInt, TBool, TAddress))


@dataclass(frozen=True)
class Sym:
    name: str
    ty: object

    def __post_init__(self):
        if not _sym_type_ok(self.ty):
            raise SymTypeError(f"symbol {self.name} has type {self.ty}; only int, bool and address symbols exist")

    def __str__(self) -> str:
        return f"?{self.name}"


@dataclass(frozen=True)
class App:
    op: str
    args: tuple
    ty: object

    def __str__(self) -> str:
        if len(self.args) == 1:
            return f"({self.op} {self.args[0]})"
        return "(" + f" {self.op} ".join(str(a) for a in self.args) + ")"


SymValue = Union[VInt, VBool, Sym, App]


def is_symbolic(v) -> bool:
    return isinstance(v, (Sym, App))


def contains_symbol(v) -> bool:
    """True when ``v`` (possibly a struct or container payload) holds a symbol."""
    if is_symbolic(v):
        return True
    members = getattr(v, "members", None)
    if members is not None:
        return any(contains_symbol(x) for _, x in members)
    items = getattr(v, "items", None)
    if isinstance(items, tuple):
        return any(contains_symbol(x) for x in items)
    entries = getattr(v, "entries", None)
    if entries is not None:
        return any(contains_symbol(k) or contains_symbol(x) for k, x in entries.items())
    return False


def type_of(v):
    if isinstance(v, (Sym, App)):
        return v.ty
    if isinstance(v, VBool):
        return TBool()
    if isinstance(v, VInt):
        return TAddress() if v.is_address else TInt(v.width, v.signed)
    raise SymTypeError(f"{type(v).__name__} is not a scalar")


def const_of(ty, n) -> SymValue:
    if isinstance(ty, TBool):
        return VBool(bool(n))
    if isinstance(ty, TAddress):
        return VInt.address(n)
    return VInt.of(ty, n)


def domain_bounds(ty) -> tuple:
    if isinstance(ty, TBool):
        return 0, 1
    if isinstance(ty, TAddress):
        return 0, (1 << ADDRESS_BITS) - 1
    return ty.lo, ty.hi


def symbols(v) -> set:
    out = set()

    def visit(x):
        if isinstance(x, Sym):
            out.add(x)
        elif isinstance(x, App):
            for a in x.args:
                visit(a)
    visit(v)
    return out


def constants(v) -> set:
    out = set()

    def visit(x):
        if isinstance(x, VInt):
            out.add(x)
        elif isinstance(x, App):
            for a in x.args:
                visit(a)
    visit(v)
    return out


def _check(op, args):
    tys = [type_of(a) for a in args]
    if op in UNARY.values():
        (t,) = tys
        if op == "!" and not isinstance(t, TBool):
            raise SymTypeError(f"! applied to {t}")
        if op != "!" and not isinstance(t, TInt):
            raise SymTypeError(f"{op} applied to {t}")
        return t
    lt, rt = tys
    if op in BOOL_OPS:
        if not (isinstance(lt, TBool) and isinstance(rt, TBool)):
            raise SymTypeError(f"{op} on {lt}, {rt}")
        return TBool()
    if op in EQ_OPS:
        if lt != rt:
            raise SymTypeError(f"{op} on {lt}, {rt}")
        return TBool()
    if op in CMP_OPS:
        if lt != rt or isinstance(lt, TBool):
            raise SymTypeError(f"{op} on {lt}, {rt}")
        return TBool()
    if op in SHIFT_OPS:
        if not (isinstance(lt, TInt) and isinstance(rt, TInt)):
            raise SymTypeError(f"{op} on {lt}, {rt}")
        return lt
    if op in ARITH_OPS:
        if lt != rt or not isinstance(lt, TInt):
            raise SymTypeError(f"{op} on {lt}, {rt}")
        return lt
    raise SymTypeError(f"unknown operator {op}")


def fold(op: str, args: tuple):
    """Concrete result of ``op``; raises EvalFailure like the interpreter."""
    if op == "neg":
        return unop("-", args[0])
    if op in ("!", "~"):
        return unop(op, args[0])
    a, b = args
    if op == "&&":
        return VBool(a.value and b.value)
    if op == "||":
        return VBool(a.value or b.value)
    if op in EQ_OPS or op in CMP_OPS:
        return VBool(compare(op, a, b))
    return int_binop(op, a, b)[0]


def mk(op: str, *args) -> SymValue:
    ty = _check(op, args)
    if not any(is_symbolic(a) for a in args):
        return fold(op, args)
    if op == "!":
        (a,) = args
        if isinstance(a, App) and a.op == "!":
            return a.args[0]
        return App("!", args, ty)
    if op in ("&&", "||"):
        a, b = args
        absorb = op == "||"
        for x, y in ((a, b), (b, a)):
            if isinstance(x, VBool):
                # operands are pure here; side conditions were split off by the evaluator
                return x if x.value == absorb else y
        if a == b:
            return a
    if op in EQ_OPS and args[0] == args[1]:
        return VBool(op == "==")
    return App(op, args, ty)


def negate(c) -> SymValue:
    return mk("!", c)


def conj(*cs) -> SymValue:
    out = TRUE
    for c in cs:
        out = mk("&&", out, c)
    return out


def substitute(v, model: Mapping):
    """Replace symbols by model values (by name) and fold what becomes concrete."""
    if isinstance(v, Sym):
        return model.get(v.name, v)
    if isinstance(v, App):
        args = tuple(substitute(a, model) for a in v.args)
        if args == v.args:
            return v
        return mk(v.op, *args)
    return v


def evaluate(v, model: Mapping):
    """Concrete value of ``v`` under a total model; EvalFailure propagates."""
    r = substitute(v, model)
    if is_symbolic(r):
        missing = sorted(s.name for s in symbols(r))
        raise KeyError(f"model lacks {', '.join(missing)}")
    return r


def holds(c, model: Mapping) -> bool:
    """Truth of a constraint; a constraint whose evaluation faults is false."""
    try:
        return bool(evaluate(c, model).value)
    except EvalFailure:
        return False


__all__ = [
    "App", "FALSE", "Sym", "SymTypeError", "SymValue", "TRUE", "conj", "const_of",
    "constants", "contains_symbol", "domain_bounds", "evaluate", "fold", "holds",
    "is_symbolic", "mk", "negate", "substitute", "symbols", "type_of",
]
