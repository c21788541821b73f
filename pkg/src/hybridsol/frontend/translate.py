"""Statement-by-statement translation from the Solidity syntax tree to the IR."""

from __future__ import annotations

from typing import Optional

from .. import ir
from ..ir import (
    Assign, Contract, Ebinop, Econst, Efield, Efun, Eindex, Epar, Estruct, Eunop, Evar,
    For, Fun, FunCall, If, Return, Seq, Snil, SpecialRef, StructDecl, Throw, TypeCheckError,
    TypeContext, Var, While,
)
from ..program import AddressError, allocate_addresses
from ..stdlib import DEFAULT_LIB, REQUIRES, StdLib
from ..types import (
    INT_WIDTHS, Special, TAddress, TArray, TBool, TBytes, TContract, TInt, TMapping,
    TString, TStruct, TUndef, SCALAR_TYPES,
)
from ..values import TRUE, FALSE, VInt, VString
from . import ast as A
from .lexer import TranslateError, UnsupportedConstruct

SEND_METHODS = {"send": "_0xsend", "transfer": "_0xtransfer"}
REQUIRE_NAMES = ("require", "assert")


def _is_literal(e) -> bool:
    if isinstance(e, A.NumberLit):
        return True
    return isinstance(e, A.Unary) and e.op == "-" and isinstance(e.arg, A.NumberLit)


class Translator:
    def __init__(self, lib: StdLib = DEFAULT_LIB, memory_size: Optional[int] = None):
        self.lib = lib
        self.memory_size = memory_size
        self.structs: dict = {}
        self.globals: dict = {}
        self.funcs: dict = {}
        self.contracts: set = set()
        self.scope: dict = {}
        self.params: dict = {}
        self.fn_ret = None
        self.hoisted: list = []
        self.conditional = 0
        self.ctx = TypeContext(lib=lib)

    # -- errors ---------------------------------------------------------------

    def fail(self, message: str, node=None):
        raise TranslateError(message, getattr(node, "line", 0))

    # -- types ----------------------------------------------------------------

    def ltype(self, t, node=None):
        if isinstance(t, A.ElementaryType):
            n = t.name
            if n == "uint":
                return TInt(self.lib.word_bits, False)
            if n == "int":
                return TInt(self.lib.word_bits, True)
            if n.startswith("uint") or n.startswith("int"):
                signed = n.startswith("int")
                width = int(n[3:] if signed else n[4:])
                if width not in INT_WIDTHS:
                    self.fail(f"integer width {width} has no IR type", node)
                return TInt(width, signed)
            if n == "bool":
                return TBool()
            if n == "address":
                return TAddress()
            if n == "string":
                return TString()
            if n == "byte":
                return TBytes(1)
            if n.startswith("bytes") and n != "bytes":
                return TBytes(int(n[5:]))
            raise UnsupportedConstruct(f"unsupported construct: dynamic {n}", getattr(node, "line", 0))
        if isinstance(t, A.MappingType):
            key = self.ltype(t.key, node)
            if not isinstance(key, SCALAR_TYPES):
                self.fail(f"mapping key {key} is not a scalar type", node)
            return TMapping(key, self.ltype(t.val, node))
        if isinstance(t, A.ArrayType):
            return TArray(self.ltype(t.elem, node), t.length)
        if isinstance(t, A.UserType):
            if t.name in self.structs:
                return TStruct(t.name)
            if t.name in self.contracts:
                return TContract(t.name)
            self.fail(f"unknown type {t.name}", node)
        self.fail(f"not a type: {t!r}", node)

    # -- typing helpers ---------------------------------------------------------

    def type_of(self, e, node=None):
        try:
            return ir.typecheck_expr(e, self.ctx)
        except TypeCheckError as err:
            self.fail(err.report.message, node)

    def _reset_ctx(self):
        self.ctx = TypeContext({**self.globals, **self.params, **self.scope},
                               self.structs, self.funcs, self.lib, self.fn_ret)

    # -- expressions ----------------------------------------------------------

    def literal(self, n: int, expected, node):
        if expected is None:
            expected = self.lib.word
        if isinstance(expected, TInt):
            if not expected.lo <= n <= expected.hi:
                self.fail(f"literal {n} does not fit {expected}", node)
            return Econst(VInt.of(expected, n))
        if isinstance(expected, TAddress):
            if not 0 <= n < 2 ** 160:
                self.fail(f"literal {n} is not an address", node)
            return Econst(VInt.address(n))
        self.fail(f"integer literal where {expected} is expected", node)

    def expr(self, e, expected=None):
        if isinstance(e, A.NumberLit):
            return self.literal(e.value, expected, e)
        if isinstance(e, A.BoolLit):
            return Econst(TRUE if e.value else FALSE)
        if isinstance(e, A.StringLit):
            return Econst(VString(e.value))
        if isinstance(e, A.Ident):
            return self.ident(e)
        if isinstance(e, A.Unary):
            if e.op in ("++", "--"):
                self.fail("increment inside an expression has no IR image", e)
            if e.op == "-" and isinstance(e.arg, A.NumberLit):
                return self.literal(-e.arg.value, expected, e)
            if e.op == "!":
                return Eunop("!", self.expr(e.arg, TBool()))
            return Eunop(e.op, self.expr(e.arg, expected))
        if isinstance(e, A.Postfix):
            self.fail("increment inside an expression has no IR image", e)
        if isinstance(e, A.Binary):
            return self.binary(e, expected)
        if isinstance(e, A.Member):
            return self.member(e)
        if isinstance(e, A.Index):
            base = self.expr(e.base)
            bt = self.type_of(base, e)
            if isinstance(bt, TMapping):
                key = self.expr(e.key, bt.key)
            elif isinstance(bt, TArray):
                key = self.expr(e.key, self.lib.word)
            else:
                self.fail(f"cannot index a value of type {bt}", e)
            return Eindex(base, key)
        if isinstance(e, A.Call):
            return self.call_expr(e)
        if isinstance(e, A.AssignExpr):
            self.fail("assignment inside an expression has no IR image", e)
        self.fail(f"unsupported expression {type(e).__name__}", e)

    def ident(self, e: A.Ident):
        n = e.name
        if n in self.scope:
            return Evar(n, self.scope[n])
        if n in self.params:
            return Epar(n, self.params[n])
        if n in self.globals:
            return Evar(n, self.globals[n])
        if n == "now":
            return Efield(SpecialRef(Special.BLOCK), ("timestamp",), self.lib.word)
        self.fail(f"unbound identifier {n}", e)

    def binary(self, e: A.Binary, expected):
        op = e.op
        if op in ir.BOOL_OPS:
            lhs = self.expr(e.lhs, TBool())
            self.conditional += 1
            try:
                rhs = self.expr(e.rhs, TBool())
            finally:
                self.conditional -= 1
            return Ebinop(op, lhs, rhs)
        hint = expected if op in ir.ARITH_OPS or op in ir.SHIFT_OPS else None
        if _is_literal(e.lhs) and not _is_literal(e.rhs) and op not in ir.SHIFT_OPS:
            rhs = self.expr(e.rhs, hint)
            lhs = self.expr(e.lhs, self.type_of(rhs, e))
        else:
            lhs = self.expr(e.lhs, hint)
            lt = self.type_of(lhs, e)
            rhs = self.expr(e.rhs, lt if isinstance(lt, (TInt, TAddress)) else None)
        out = Ebinop(op, lhs, rhs)
        self.type_of(out, e)
        return out

    def member(self, e: A.Member):
        base = e.base
        if isinstance(base, A.Ident) and base.name not in self.scope and base.name not in self.params \
                and base.name not in self.globals:
            w = self.lib.word
            special = {
                ("msg", "sender"): (Special.MSG, "sender", TAddress()),
                ("msg", "value"): (Special.MSG, "values", w),
                ("this", "balance"): (Special.ADDRESS, "balance", w),
                ("block", "number"): (Special.BLOCK, "number", w),
                ("block", "timestamp"): (Special.BLOCK, "timestamp", w),
            }.get((base.name, e.name))
            if special is not None:
                which, fname, ty = special
                return Efield(SpecialRef(which), (fname,), ty)
            if base.name in ("msg", "this", "block", "tx"):
                self.fail(f"{base.name}.{e.name} has no IR image", e)
        b = self.expr(base)
        bt = self.type_of(b, e)
        if isinstance(bt, TStruct):
            for fty, fname in self.ctx.all_structs().get(bt.name, ()):
                if fname == e.name:
                    return Efield(b, (e.name,), fty)
            self.fail(f"struct {bt.name} has no member {e.name}", e)
        self.fail(f"member {e.name} of {bt} has no IR image", e)

    def call_expr(self, e: A.Call):
        f = e.func
        send = self.send_call(e)
        if send is not None:
            if self.conditional:
                self.fail("call under a short-circuit operator has no IR image", e)
            if self.hoisted:
                self.fail("more than one call in a single statement", e)
            self.hoisted.append(send)
            return Efield(SpecialRef(Special.SEND_RE), (), TBool())
        if isinstance(f, A.Ident) and f.name in self.structs:
            layout = self.structs[f.name]
            if len(e.args) != len(layout):
                self.fail(f"struct {f.name} takes {len(layout)} members, got {len(e.args)}", e)
            return Estruct(f.name, tuple((fname, self.expr(a, fty)) for (fty, fname), a in zip(layout, e.args)))
        if isinstance(f, A.Ident) and f.name == "address" and len(e.args) == 1 and isinstance(e.args[0], A.NumberLit):
            return self.literal(e.args[0].value, TAddress(), e)
        if isinstance(f, A.Ident) and f.name in self.funcs:
            self.fail(f"call of {f.name} inside an expression has no IR image", e)
        self.fail("call expression has no IR image", e)

    def send_call(self, e: A.Call):
        """FunCall for x.send(v) / x.transfer(v) / x.call.value(v)(), else None."""
        f = e.func
        if isinstance(f, A.Member) and f.name in SEND_METHODS and len(e.args) == 1:
            name, target, amount = SEND_METHODS[f.name], f.base, e.args[0]
        elif (isinstance(f, A.Call) and not e.args and isinstance(f.func, A.Member)
              and f.func.name == "value" and isinstance(f.func.base, A.Member)
              and f.func.base.name == "call" and len(f.args) == 1):
            name, target, amount = "_0xcall", f.func.base.base, f.args[0]
        else:
            return None
        t = self.expr(target)
        if self.type_of(t, e) != TAddress():
            self.fail(f"{name[3:]} target is not an address", e)
        a = self.expr(amount, self.lib.word)
        return FunCall(Efun(name, TBool()), (t, a), line=e.line)

    # -- statements -----------------------------------------------------------

    def stmt(self, s):
        saved, self.hoisted = self.hoisted, []
        try:
            out = self._stmt(s)
            if self.hoisted:
                out = Seq(tuple(self.hoisted) + (out,), line=s.line)
        finally:
            self.hoisted = saved
        return out

    def _stmt(self, s):
        line = s.line
        if isinstance(s, A.Block):
            if not s.stmts:
                return Snil(line=line)
            return Seq(tuple(self.stmt(c) for c in s.stmts), line=line)
        if isinstance(s, A.IfStmt):
            cond = self.expr(s.cond, TBool())
            self.check_cond(cond, s)
            hoisted, self.hoisted = self.hoisted, []
            then = self.stmt(s.then)
            else_ = self.stmt(s.else_) if s.else_ is not None else Snil(line=line)
            self.hoisted = hoisted
            return If(cond, then, else_, line=line)
        if isinstance(s, A.WhileStmt):
            cond = self.expr(s.cond, TBool())
            if self.hoisted:
                self.fail("call in a loop condition has no IR image", s)
            self.check_cond(cond, s)
            return While(cond, self.stmt(s.body), line=line)
        if isinstance(s, A.ForStmt):
            init = self.stmt(s.init) if s.init is not None else Snil(line=line)
            cond = self.expr(s.cond, TBool()) if s.cond is not None else Econst(TRUE)
            if self.hoisted:
                self.fail("call in a loop condition has no IR image", s)
            self.check_cond(cond, s)
            step = self.stmt(s.step) if s.step is not None else Snil(line=line)
            return For(init, cond, step, self.stmt(s.body), line=line)
        if isinstance(s, A.VarDeclStmt):
            ty = self.ltype(s.type, s)
            init = self.expr(s.init, ty) if s.init is not None else None
            if s.name in self.scope or s.name in self.params:
                self.fail(f"identifier {s.name} declared twice", s)
            self.scope[s.name] = ty
            self._reset_ctx()
            decl = Var(None, Evar(s.name, ty), line=line)
            if init is None:
                return decl
            self.assign_check(Evar(s.name, ty), init, s)
            return Seq((decl, Assign(Evar(s.name, ty), init, line=line)), line=line)
        if isinstance(s, A.ThrowStmt):
            return Throw(line=line)
        if isinstance(s, A.ReturnStmt):
            if s.expr is None:
                return Return(None, line=line)
            e = self.expr(s.expr, self.fn_ret)
            t = self.type_of(e, s)
            if self.fn_ret is not None and t != self.fn_ret:
                self.fail(f"returning {t} from a function declared {self.fn_ret}", s)
            return Return(e, line=line)
        if isinstance(s, A.ExprStmt):
            return self.expr_stmt(s.expr, line)
        self.fail(f"unsupported statement {type(s).__name__}", s)

    def check_cond(self, cond, node):
        t = self.type_of(cond, node)
        if t != TBool():
            self.fail(f"condition has type {t}, expected bool", node)

    def assign_check(self, lhs, rhs, node):
        lt, rt = self.type_of(lhs, node), self.type_of(rhs, node)
        if lt != rt:
            self.fail(f"cannot assign {rt} to {lt}", node)

    def expr_stmt(self, e, line):
        if isinstance(e, A.AssignExpr):
            lhs = self.expr(e.target)
            if not ir.is_lvalue(lhs):
                self.fail("left side is not assignable", e)
            lt = self.type_of(lhs, e)
            rhs = self.expr(e.value, lt)
            if e.op != "=":
                rhs = Ebinop(e.op[:-1], lhs, rhs)
            self.assign_check(lhs, rhs, e)
            return Assign(lhs, rhs, line=line)
        if isinstance(e, (A.Postfix, A.Unary)) and e.op in ("++", "--"):
            target = self.expr(e.arg)
            if not ir.is_lvalue(target):
                self.fail(f"operand of {e.op} is not assignable", e)
            t = self.type_of(target, e)
            if not isinstance(t, TInt):
                self.fail(f"operand of {e.op} must be an integer", e)
            return Assign(target, Ebinop(e.op[0], target, Econst(VInt.of(t, 1))), line=line)
        if isinstance(e, A.Call):
            send = self.send_call(e)
            if send is not None:
                return send
            f = e.func
            if isinstance(f, A.Ident) and f.name in REQUIRE_NAMES and f.name not in self.funcs:
                if len(e.args) != 1:
                    self.fail(f"{f.name} takes exactly one condition", e)
                c = self.expr(e.args[0], TBool())
                self.check_cond(c, e)
                return FunCall(Efun(REQUIRES, TUndef()), (c,), line=line)
            if isinstance(f, A.Ident) and f.name in self.funcs:
                sig = self.funcs[f.name]
                if len(sig.params) != len(e.args):
                    self.fail(f"{f.name} expects {len(sig.params)} arguments, got {len(e.args)}", e)
                args = tuple(self.expr(a, pt) for pt, a in zip(sig.params, e.args))
                return FunCall(Efun(f.name, sig.ret), args, line=line)
            self.fail("call statement has no IR image", e)
        self.fail("expression statement has no IR image", e)

    # -- declarations ---------------------------------------------------------

    def contract(self, c: A.ContractDef) -> Contract:
        self.structs, self.globals, self.funcs = {}, {}, {}
        for m in c.members:
            if isinstance(m, A.StructDef):
                if m.name in self.structs:
                    self.fail(f"struct {m.name} declared twice", m)
                self.structs[m.name] = ()
        for m in c.members:
            if isinstance(m, A.StructDef):
                self.structs[m.name] = tuple((self.ltype(t, m), n) for t, n in m.members)
        for m in c.members:
            if isinstance(m, A.StateVarDecl):
                if m.name in self.globals:
                    self.fail(f"identifier {m.name} declared twice", m)
                self.globals[m.name] = self.ltype(m.type, m)
            elif isinstance(m, A.FunctionDef):
                name = self.fun_name(c, m)
                if name in self.funcs:
                    self.fail(f"function {name} declared twice", m)
                ret = self.ltype(m.returns, m) if m.returns is not None else TUndef()
                self.funcs[name] = ir.TFun(tuple(self.ltype(t, m) for t, _ in m.params), ret)
        body = []
        for m in c.members:
            if isinstance(m, A.StateVarDecl):
                body.append(Var(m.visibility or "internal", Evar(m.name, self.globals[m.name]), line=m.line))
            elif isinstance(m, A.StructDef):
                body.append(StructDecl(m.name, tuple((t, n) for t, n in self.structs[m.name]), line=m.line))
            else:
                body.append(self.function(c, m))
        return Contract(Evar(c.name, TContract(c.name)), tuple(c.parents), tuple(body), line=c.line)

    @staticmethod
    def fun_name(c: A.ContractDef, f: A.FunctionDef) -> str:
        return "constructor" if f.name == c.name else f.name

    def function(self, c: A.ContractDef, f: A.FunctionDef) -> Fun:
        name = self.fun_name(c, f)
        sig = self.funcs[name]
        self.scope, self.params = {}, {}
        params = []
        for (t, pname), pt in zip(f.params, sig.params):
            if not pname:
                self.fail(f"unnamed parameter in {name}", f)
            if pname in self.params:
                self.fail(f"parameter {pname} declared twice", f)
            self.params[pname] = pt
            params.append(Epar(pname, pt))
        self.fn_ret = sig.ret if sig.ret != TUndef() else None
        self._reset_ctx()
        body = tuple(self.stmt(s) for s in f.body.stmts)
        self.scope, self.params, self.fn_ret = {}, {}, None
        self._reset_ctx()
        return Fun(f.visibility or "public", Efun(name, sig.ret), tuple(params), body, line=f.line)

    def source(self, src: A.SourceFile):
        self.contracts = {c.name for c in src.contracts}
        stmts = [self.contract(c) for c in src.contracts]
        try:
            table = allocate_addresses(stmts, limit=self.memory_size)
        except AddressError as err:
            raise TranslateError(str(err)) from None
        report = ir.typecheck_program(stmts, self.lib)
        if not report.ok:
            raise TranslateError(f"translated program is ill-typed: {report}")
        return stmts, table


def translate(src: A.SourceFile, lib: StdLib = DEFAULT_LIB, memory_size: Optional[int] = None):
    """(IR statement list, AddressTable) for a parsed source file."""
    return Translator(lib, memory_size).source(src)
