"""Typed intermediate representation: expressions, statements and the type checker.

Every expression node carries an optional ``ann`` pair ``(input_ty, output_ty)``.
Annotations do not take part in structural equality; ``typecheck_expr`` verifies
them against the typing rule of the node's constructor when present and
``annotate`` fills them in.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Union

from .stdlib import BUILTINS, DEFAULT_LIB, StdLib
from .types import (
    LType, Special, TAddress, TArray, TBool, TBytes, TFun, TInt,
    TMapping, TStruct, TUndef,
)
from .values import value_type

ARITH_OPS = frozenset({"+", "-", "*", "/", "%", "**", "&", "|", "^"})
SHIFT_OPS = frozenset({"<<", ">>"})
CMP_OPS = frozenset({"<", "<=", ">", ">="})
EQ_OPS = frozenset({"==", "!="})
BOOL_OPS = frozenset({"&&", "||"})
BINOPS = ARITH_OPS | SHIFT_OPS | CMP_OPS | EQ_OPS | BOOL_OPS
UNOPS = frozenset({"!", "-", "~"})

_ann = dict(default=None, compare=False, repr=False)
_line = dict(default=0, compare=False, repr=False)


# -- expressions -------------------------------------------------------------

@dataclass(frozen=True)
class SpecialRef:
    which: Special


@dataclass(frozen=True)
class Econst:
    value: object
    ann: Optional[tuple] = field(**_ann)


@dataclass(frozen=True)
class Evar:
    name: str
    ty: LType
    ann: Optional[tuple] = field(**_ann)


@dataclass(frozen=True)
class Efun:
    name: str
    ret: LType = TUndef()
    ann: Optional[tuple] = field(**_ann)


@dataclass(frozen=True)
class Epar:
    name: str
    ty: LType
    ann: Optional[tuple] = field(**_ann)


@dataclass(frozen=True)
class Ebinop:
    op: str
    lhs: "Expr"
    rhs: "Expr"
    ann: Optional[tuple] = field(**_ann)


@dataclass(frozen=True)
class Eunop:
    op: str
    arg: "Expr"
    ann: Optional[tuple] = field(**_ann)


@dataclass(frozen=True)
class Efield:
    base: Union["Expr", SpecialRef]
    path: tuple
    ty: LType
    ann: Optional[tuple] = field(**_ann)


@dataclass(frozen=True)
class Eindex:
    base: "Expr"
    key: "Expr"
    ann: Optional[tuple] = field(**_ann)


@dataclass(frozen=True)
class Estruct:
    name: str
    members: tuple  # ((field, Expr), ...)
    ann: Optional[tuple] = field(**_ann)


Expr = Union[Econst, Evar, Efun, Epar, Ebinop, Eunop, Efield, Eindex, Estruct]


# -- statements ---------------------------------------------------------------

@dataclass(frozen=True)
class Snil:
    line: int = field(**_line)


@dataclass(frozen=True)
class Seq:
    stmts: tuple
    line: int = field(**_line)


@dataclass(frozen=True)
class Var:
    vis: Optional[str]
    decl: Evar
    line: int = field(**_line)


@dataclass(frozen=True)
class StructDecl:
    name: str
    members: tuple  # ((LType, field), ...)
    line: int = field(**_line)


@dataclass(frozen=True)
class Assign:
    lhs: Expr
    rhs: Expr
    line: int = field(**_line)


@dataclass(frozen=True)
class If:
    cond: Expr
    then: "Statement"
    else_: "Statement"
    line: int = field(**_line)


@dataclass(frozen=True)
class While:
    cond: Expr
    body: "Statement"
    line: int = field(**_line)


@dataclass(frozen=True)
class For:
    init: "Statement"
    cond: Expr
    step: "Statement"
    body: "Statement"
    line: int = field(**_line)


@dataclass(frozen=True)
class Fun:
    vis: Optional[str]
    sig: Efun
    params: tuple  # (Epar, ...)
    body: tuple
    line: int = field(**_line)

    @property
    def name(self) -> str:
        return self.sig.name

    @property
    def type(self) -> TFun:
        return TFun(tuple(p.ty for p in self.params), self.sig.ret)


@dataclass(frozen=True)
class FunCall:
    callee: Efun
    args: tuple
    line: int = field(**_line)


@dataclass(frozen=True)
class Return:
    e: Optional[Expr] = None
    line: int = field(**_line)


@dataclass(frozen=True)
class Throw:
    line: int = field(**_line)


@dataclass(frozen=True)
class Contract:
    name: Evar
    parents: tuple
    body: tuple
    line: int = field(**_line)


Statement = Union[Snil, Seq, Var, StructDecl, Assign, If, While, For, Fun,
                  FunCall, Return, Throw, Contract]

STATEMENT_VARIANTS = (Snil, Seq, Var, StructDecl, Assign, If, While, For, Fun,
                      FunCall, Return, Throw, Contract)
EXPR_VARIANTS = (Econst, Evar, Efun, Epar, Ebinop, Eunop, Efield, Eindex, Estruct)


def children(s) -> tuple:
    """Direct sub-statements of ``s`` in program order."""
    if isinstance(s, Seq):
        return s.stmts
    if isinstance(s, If):
        return (s.then, s.else_)
    if isinstance(s, While):
        return (s.body,)
    if isinstance(s, For):
        return (s.init, s.body, s.step)
    if isinstance(s, (Fun, Contract)):
        return s.body
    return ()


def walk(stmts):
    """Pre-order traversal over statements."""
    for s in stmts:
        yield s
        yield from walk(children(s))


def iter_functions(stmts):
    for s in walk(stmts):
        if isinstance(s, Fun):
            yield s


def find_function(stmts, name: str) -> Optional[Fun]:
    for f in iter_functions(stmts):
        if f.name == name:
            return f
    return None


# -- typing ------------------------------------------------------------------

@dataclass(frozen=True)
class WellTyped:
    ok = True


@dataclass(frozen=True)
class IllTyped:
    kind: str
    location: tuple
    expected: Optional[LType]
    found: Optional[LType]
    message: str
    ok = False

    @property
    def where(self) -> str:
        return "/".join(str(p) for p in self.location) or "<root>"

    def __str__(self) -> str:
        return f"{self.kind} at {self.where}: {self.message}"


TypeReport = Union[WellTyped, IllTyped]


class TypeCheckError(Exception):
    def __init__(self, report: IllTyped):
        super().__init__(str(report))
        self.report = report


@dataclass
class TypeContext:
    vars: dict = field(default_factory=dict)
    structs: dict = field(default_factory=dict)
    funcs: dict = field(default_factory=dict)
    lib: StdLib = DEFAULT_LIB
    ret: Optional[LType] = None

    def child(self, **kw) -> "TypeContext":
        return TypeContext(dict(self.vars), self.structs, self.funcs, self.lib,
                           kw.get("ret", self.ret))

    def all_structs(self) -> dict:
        return {**self.lib.structs(), **self.structs}


def _fail(kind, path, expected, found, message):
    raise TypeCheckError(IllTyped(kind, tuple(path), expected, found, message))


def _struct_field(ctx, sname, fname, path):
    layout = ctx.all_structs().get(sname)
    if layout is None:
        _fail("UnboundIdentifier", path, None, None, f"unknown struct {sname}")
    for ty, f in layout:
        if f == fname:
            return ty
    _fail("TypeMismatch", path, None, TStruct(sname), f"struct {sname} has no member {fname}")


def typecheck_expr(e, ctx: TypeContext, path=()) -> LType:
    """Output type of ``e``; raises TypeCheckError at the leftmost-innermost violation."""
    path = tuple(path)
    if isinstance(e, Econst):
        out, inp = value_type(e.value), TUndef()
    elif isinstance(e, (Evar, Epar)):
        if e.name not in ctx.vars:
            _fail("UnboundIdentifier", path, e.ty, None, f"unbound identifier {e.name}")
        if ctx.vars[e.name] != e.ty:
            _fail("TypeMismatch", path, ctx.vars[e.name], e.ty,
                  f"{e.name} declared {ctx.vars[e.name]}, used as {e.ty}")
        inp = out = e.ty
    elif isinstance(e, Efun):
        if e.name in BUILTINS:
            sig = ctx.lib.signature(e.name)
        elif e.name in ctx.funcs:
            sig = ctx.funcs[e.name]
        else:
            _fail("UnboundIdentifier", path, None, None, f"unbound function {e.name}")
        if sig.ret != e.ret:
            _fail("TypeMismatch", path, sig.ret, e.ret, f"{e.name} returns {sig.ret}")
        inp, out = e.ret, sig
    elif isinstance(e, Ebinop):
        lt = typecheck_expr(e.lhs, ctx, path + ("lhs",))
        rt = typecheck_expr(e.rhs, ctx, path + ("rhs",))
        inp, out = lt, _binop_type(e.op, lt, rt, path)
    elif isinstance(e, Eunop):
        at = typecheck_expr(e.arg, ctx, path + ("arg",))
        if e.op == "!" and at != TBool():
            _fail("TypeMismatch", path + ("arg",), TBool(), at, "operand of ! must be bool")
        if e.op in ("-", "~") and not isinstance(at, TInt):
            _fail("TypeMismatch", path + ("arg",), TInt(), at, f"operand of {e.op} must be an integer")
        if e.op not in UNOPS:
            _fail("TypeMismatch", path, None, None, f"unknown unary operator {e.op}")
        inp = out = at
    elif isinstance(e, Efield):
        if isinstance(e.base, SpecialRef):
            try:
                ft = ctx.lib.field_type(e.base.which, tuple(e.path))
            except KeyError:
                _fail("TypeMismatch", path, e.ty, None,
                      f"{e.base.which} has no member {'.'.join(e.path)}")
            inp = ctx.lib.cell_type(e.base.which)
        else:
            bt = typecheck_expr(e.base, ctx, path + ("base",))
            inp, ft = bt, bt
            for name in e.path:
                if not isinstance(ft, TStruct):
                    _fail("TypeMismatch", path, None, ft, f"member access .{name} on non-struct {ft}")
                ft = _struct_field(ctx, ft.name, name, path)
        if ft != e.ty:
            _fail("TypeMismatch", path, ft, e.ty, f"field has type {ft}, annotated {e.ty}")
        out = ft
    elif isinstance(e, Eindex):
        bt = typecheck_expr(e.base, ctx, path + ("base",))
        kt = typecheck_expr(e.key, ctx, path + ("key",))
        if isinstance(bt, TMapping):
            if kt != bt.key:
                _fail("TypeMismatch", path + ("key",), bt.key, kt, "mapping key type mismatch")
            out = bt.val
        elif isinstance(bt, TArray):
            if not isinstance(kt, TInt):
                _fail("TypeMismatch", path + ("key",), TInt(), kt, "array index must be an integer")
            out = bt.elem
        else:
            _fail("TypeMismatch", path + ("base",), None, bt, f"cannot index {bt}")
        inp = bt
    elif isinstance(e, Estruct):
        layout = ctx.all_structs().get(e.name)
        if layout is None:
            _fail("UnboundIdentifier", path, None, None, f"unknown struct {e.name}")
        got = tuple(f for f, _ in e.members)
        want = tuple(f for _, f in layout)
        if got != want:
            _fail("ArityMismatch", path, TStruct(e.name), None,
                  f"struct {e.name} expects members {want}, got {got}")
        for (f, me), (ft, _) in zip(e.members, layout):
            mt = typecheck_expr(me, ctx, path + (f,))
            if mt != ft:
                _fail("TypeMismatch", path + (f,), ft, mt, f"member {f} expects {ft}")
        inp = out = TStruct(e.name)
    else:
        _fail("TypeMismatch", path, None, None, f"not an expression: {e!r}")
    if e.ann is not None:
        if e.ann[1] != out:
            _fail("TypeMismatch", path, out, e.ann[1], f"annotation {e.ann[1]} disagrees with {out}")
        if e.ann[0] != inp:
            _fail("TypeMismatch", path, inp, e.ann[0], f"input annotation {e.ann[0]} disagrees with {inp}")
    return out


def _binop_type(op, lt, rt, path) -> LType:
    if op in ARITH_OPS:
        if not isinstance(lt, TInt):
            _fail("TypeMismatch", path + ("lhs",), TInt(), lt, f"operand of {op} must be an integer")
        if rt != lt:
            _fail("TypeMismatch", path + ("rhs",), lt, rt, f"operands of {op} differ")
        return lt
    if op in SHIFT_OPS:
        if not isinstance(lt, TInt):
            _fail("TypeMismatch", path + ("lhs",), TInt(), lt, f"operand of {op} must be an integer")
        if not isinstance(rt, TInt):
            _fail("TypeMismatch", path + ("rhs",), TInt(), rt, "shift amount must be an integer")
        return lt
    if op in CMP_OPS:
        if not isinstance(lt, TInt):
            _fail("TypeMismatch", path + ("lhs",), TInt(), lt, f"operand of {op} must be an integer")
        if rt != lt:
            _fail("TypeMismatch", path + ("rhs",), lt, rt, f"operands of {op} differ")
        return TBool()
    if op in EQ_OPS:
        if not isinstance(lt, (TInt, TBool, TAddress, TBytes)):
            _fail("TypeMismatch", path + ("lhs",), None, lt, f"{lt} is not comparable")
        if rt != lt:
            _fail("TypeMismatch", path + ("rhs",), lt, rt, f"operands of {op} differ")
        return TBool()
    if op in BOOL_OPS:
        if lt != TBool():
            _fail("TypeMismatch", path + ("lhs",), TBool(), lt, f"operand of {op} must be bool")
        if rt != TBool():
            _fail("TypeMismatch", path + ("rhs",), TBool(), rt, f"operand of {op} must be bool")
        return TBool()
    _fail("TypeMismatch", path, None, None, f"unknown operator {op}")


def is_lvalue(e) -> bool:
    if isinstance(e, (Evar, Epar)):
        return True
    if isinstance(e, Eindex):
        return is_lvalue(e.base)
    if isinstance(e, Efield):
        return not isinstance(e.base, SpecialRef) and is_lvalue(e.base)
    return False


def _check_stmt(s, ctx: TypeContext, path: tuple):
    if isinstance(s, (Snil, Throw, StructDecl)):
        return
    if isinstance(s, Seq):
        for i, c in enumerate(s.stmts):
            _check_stmt(c, ctx, path + (i,))
    elif isinstance(s, Var):
        if isinstance(s.decl.ty, TUndef):
            _fail("TypeMismatch", path + ("decl",), None, TUndef(), "variable of type Tundef")
        ctx.vars[s.decl.name] = s.decl.ty
    elif isinstance(s, Assign):
        lt = typecheck_expr(s.lhs, ctx, path + ("lhs",))
        rt = typecheck_expr(s.rhs, ctx, path + ("rhs",))
        if not is_lvalue(s.lhs):
            _fail("NotAssignable", path + ("lhs",), None, lt, "left side is not assignable")
        if lt != rt:
            _fail("AssignTypeMismatch", path + ("rhs",), lt, rt,
                  f"cannot assign {rt} to {lt}")
    elif isinstance(s, (If, While)):
        ct = typecheck_expr(s.cond, ctx, path + ("cond",))
        if ct != TBool():
            _fail("ConditionNotBool", path + ("cond",), TBool(), ct,
                  f"condition has type {ct}, expected bool")
        if isinstance(s, If):
            _check_stmt(s.then, ctx, path + ("then",))
            _check_stmt(s.else_, ctx, path + ("else",))
        else:
            _check_stmt(s.body, ctx, path + ("body",))
    elif isinstance(s, For):
        _check_stmt(s.init, ctx, path + ("init",))
        ct = typecheck_expr(s.cond, ctx, path + ("cond",))
        if ct != TBool():
            _fail("ConditionNotBool", path + ("cond",), TBool(), ct,
                  f"condition has type {ct}, expected bool")
        _check_stmt(s.body, ctx, path + ("body",))
        _check_stmt(s.step, ctx, path + ("step",))
    elif isinstance(s, Fun):
        inner = ctx.child(ret=s.sig.ret)
        for p in s.params:
            inner.vars[p.name] = p.ty
        for i, c in enumerate(s.body):
            _check_stmt(c, inner, path + ("body", i))
    elif isinstance(s, FunCall):
        ft = typecheck_expr(s.callee, ctx, path + ("callee",))
        if not isinstance(ft, TFun):
            _fail("TypeMismatch", path + ("callee",), None, ft, "callee is not a function")
        if len(ft.params) != len(s.args):
            _fail("ArityMismatch", path + ("args",), None, None,
                  f"{s.callee.name} expects {len(ft.params)} arguments, got {len(s.args)}")
        for i, (pt, a) in enumerate(zip(ft.params, s.args)):
            at = typecheck_expr(a, ctx, path + ("args", i))
            if at != pt:
                _fail("TypeMismatch", path + ("args", i), pt, at, f"argument {i} expects {pt}")
    elif isinstance(s, Return):
        if s.e is not None:
            rt = typecheck_expr(s.e, ctx, path + ("e",))
            if ctx.ret is not None and rt != ctx.ret:
                _fail("TypeMismatch", path + ("e",), ctx.ret, rt, f"function returns {ctx.ret}")
    elif isinstance(s, Contract):
        for i, c in enumerate(s.body):
            _check_stmt(c, ctx, path + ("body", i))
    else:
        _fail("TypeMismatch", path, None, None, f"not a statement: {s!r}")


def build_context(prog, lib: StdLib = DEFAULT_LIB) -> TypeContext:
    """Context of program-level declarations (state variables, structs, functions)."""
    ctx = TypeContext(lib=lib)

    def visit(stmts):
        for s in stmts:
            if isinstance(s, Var):
                ctx.vars[s.decl.name] = s.decl.ty
            elif isinstance(s, StructDecl):
                ctx.structs[s.name] = tuple(s.members)
            elif isinstance(s, Fun):
                ctx.funcs[s.name] = s.type
            elif isinstance(s, Contract):
                visit(s.body)
    visit(prog)
    return ctx


def typecheck_stmt(s, ctx: TypeContext, path=()) -> TypeReport:
    try:
        _check_stmt(s, ctx, tuple(path))
    except TypeCheckError as err:
        return err.report
    return WellTyped()


def typecheck_program(prog, lib: StdLib = DEFAULT_LIB, ctx: Optional[TypeContext] = None) -> TypeReport:
    ctx = ctx if ctx is not None else build_context(prog, lib)
    for i, s in enumerate(prog):
        report = typecheck_stmt(s, ctx, (i,))
        if not report.ok:
            return report
    return WellTyped()


def annotate(e, ctx: TypeContext):
    """Copy of ``e`` with the (input, output) annotation filled in on every node."""
    if isinstance(e, Ebinop):
        e = replace(e, lhs=annotate(e.lhs, ctx), rhs=annotate(e.rhs, ctx))
    elif isinstance(e, Eunop):
        e = replace(e, arg=annotate(e.arg, ctx))
    elif isinstance(e, Efield) and not isinstance(e.base, SpecialRef):
        e = replace(e, base=annotate(e.base, ctx))
    elif isinstance(e, Eindex):
        e = replace(e, base=annotate(e.base, ctx), key=annotate(e.key, ctx))
    elif isinstance(e, Estruct):
        e = replace(e, members=tuple((f, annotate(m, ctx)) for f, m in e.members))
    out = typecheck_expr(e, ctx)
    inp = _input_type(e, ctx, out)
    return replace(e, ann=(inp, out))


def _input_type(e, ctx, out):
    if isinstance(e, Ebinop):
        return e.lhs.ann[1]
    if isinstance(e, Eunop):
        return e.arg.ann[1]
    if isinstance(e, Eindex):
        return e.base.ann[1]
    if isinstance(e, Efield):
        if isinstance(e.base, SpecialRef):
            return ctx.lib.cell_type(e.base.which)
        return e.base.ann[1]
    if isinstance(e, Econst):
        return TUndef()
    if isinstance(e, Efun):
        return e.ret
    return out

