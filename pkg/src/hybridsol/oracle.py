"""Reference evaluator for differential testing of the interpreter.

A derivation-style recursive evaluator over a plain dict memory.  It shares
the IR, value and memory data definitions with the interpreter but none of
its evaluation code: expressions, assignment, control flow and the library
built-ins are written again here, in the most direct form.

The step discipline is the same: every statement execution charges one unit
of gas and one ``k_stmt``; a loop charges once per condition test;
a ``For`` additionally charges once for itself and once per iteration for the
implicit body block.  ``k_val`` bounds the expression nodes visited while
executing one statement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from pyrsistent import pmap

from .germ import INTERNAL, PUBLIC, Memory, MemoryCell
from .ir import (
    Assign, Contract, Ebinop, Econst, Efield, Efun, Eindex, Epar, Estruct, Eunop, Evar,
    For, Fun, FunCall, If, Return, Seq, Snil, SpecialRef, StructDecl, Throw, Var, While,
)
from .program import Program
from .types import Special, TUndef
from .values import (
    NoZero, VArray, VBool, VInt, VMapping, VStatement, VString, VStruct, VUndef, zero_value,
)

_SPECIAL_ORDER = [Special.INIT, Special.SEND, Special.SEND_RE, Special.CALL,
                  Special.MSG, Special.ADDRESS, Special.BLOCK]
_SEND_KIND = {"_0xsend": "send", "_0xtransfer": "transfer", "_0xcall": "call"}


# -- outcomes -------------------------------------------------------------------------

@dataclass(frozen=True)
class RefNormal:
    mem: Memory


@dataclass(frozen=True)
class RefThrown:
    initial: Memory


@dataclass(frozen=True)
class RefOutOfGas:
    reason: str


@dataclass(frozen=True)
class RefFault:
    kind: str
    detail: str = ""


RefOutcome = Union[RefNormal, RefThrown, RefOutOfGas, RefFault]


class _Stop(Exception):
    pass


class _Threw(_Stop):
    pass


class _Exhausted(_Stop):
    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


class _Failed(_Stop):
    def __init__(self, kind, detail=""):
        super().__init__(kind)
        self.kind = kind
        self.detail = detail


class _Returned(Exception):
    pass


# -- evaluator --------------------------------------------------------------------------

class Reference:
    def __init__(self, prog: Program, m0: Memory, k_stmt: int, k_val: int, gas: int,
                 send_policy=True):
        self.prog = prog
        self.size = m0.size
        self.cells = {a: [c.block_v, c.env_tag, c.fenv_tag, c.occupied, c.auth]
                      for a, c in m0.cells.items()}
        self.k_stmt = k_stmt
        self.k_val = k_val
        self.gas = gas
        self.budget = 0
        self.function = None
        self.caller = None
        c = next((s for s in prog.stmts if isinstance(s, Contract)), None)
        self.contract = c.name.name if c is not None else ""
        self.structs = prog.structs()
        self.send_policy = send_policy
        self.sends = 0

    # memory

    def _tag(self, fn):
        return fn if fn else self.contract

    def _admits(self, cell, env, fenv):
        auth = cell[4]
        if auth == PUBLIC:
            return True
        if auth == INTERNAL:
            return env == fenv
        return auth == f"owner({env})"

    def _slot_of(self, label) -> int:
        if isinstance(label, Special):
            return self.size + _SPECIAL_ORDER.index(label)
        if label.index >= self.size:
            raise _Failed("unmapped", str(label))
        return label.index

    def _get(self, a):
        cell = self.cells.get(a)
        if cell is None:
            return VUndef()
        if not self._admits(cell, self._tag(self.function), self._tag(self.caller)):
            raise _Failed("auth", str(a))
        return cell[0]

    def _put(self, a, v, fn=None, caller=None):
        env = self._tag(fn if fn is not None else self.function)
        fenv = self._tag(caller if fn is not None else self.caller)
        old = self.cells.get(a)
        auth = PUBLIC
        if old is not None:
            if not self._admits(old, env, fenv):
                raise _Failed("auth", str(a))
            auth = old[4]
        self.cells[a] = [v, env, fenv, True, auth]

    def _var_slot(self, name, fn):
        entries = self.prog.table.entries
        key = f"{fn}.{name}" if fn else None
        if key is not None and key in entries:
            return self._slot_of(entries[key])
        if name in entries:
            return self._slot_of(entries[name])
        raise _Failed("unbound", name)

    def _fun_slot(self, name):
        key = name + "()"
        if key not in self.prog.table.entries:
            raise _Failed("unbound", name)
        return self._slot_of(self.prog.table.entries[key])

    # accounting

    def _tick(self):
        if self.gas <= 0:
            raise _Exhausted("gas")
        if self.k_stmt <= 0:
            raise _Exhausted("k_stmt")
        self.gas -= 1
        self.k_stmt -= 1
        self.budget = self.k_val

    def _node(self):
        self.budget -= 1
        if self.budget < 0:
            raise _Failed("k_val")

    # expressions

    def value(self, e):
        self._node()
        if isinstance(e, Econst):
            return e.value
        if isinstance(e, (Evar, Epar)):
            v = self._get(self._var_slot(e.name, self.function))
            if isinstance(v, VUndef) and e.ty != TUndef():
                raise _Failed("undef", e.name)
            return v
        if isinstance(e, Efun):
            return self._get(self._fun_slot(e.name))
        if isinstance(e, Eunop):
            x = self.value(e.arg)
            if e.op == "!":
                return VBool(not self._bool(x))
            self._int(x)
            if e.op == "-":
                return VInt(x.width, x.signed, -x.value)
            if e.op == "~":
                return VInt(x.width, x.signed, (1 << x.width) - 1 - x.bits)
            raise _Failed("bad_operator", e.op)
        if isinstance(e, Ebinop):
            return self.binop(e)
        if isinstance(e, Efield):
            if isinstance(e.base, SpecialRef):
                v = self._get(self.size + _SPECIAL_ORDER.index(e.base.which))
            else:
                v = self.value(e.base)
            for f in e.path:
                if not isinstance(v, VStruct):
                    raise _Failed("type", "field of a non-struct")
                found = [x for k, x in v.members if k == f]
                if not found:
                    raise _Failed("no_member", f)
                v = found[0]
            if isinstance(v, VUndef):
                raise _Failed("undef", "field")
            return v
        if isinstance(e, Eindex):
            container = self.value(e.base)
            key = self.value(e.key)
            return self._lookup(container, key)
        if isinstance(e, Estruct):
            return VStruct(e.name, tuple((f, self.value(x)) for f, x in e.members))
        raise _Failed("bad_expression")

    def _bool(self, v):
        if not isinstance(v, VBool):
            raise _Failed("undef" if isinstance(v, VUndef) else "type", "bool expected")
        return v.value

    def _int(self, v):
        if not isinstance(v, VInt):
            raise _Failed("undef" if isinstance(v, VUndef) else "type", "int expected")
        return v.value

    def _lookup(self, container, key):
        if isinstance(container, VMapping):
            return container.entries[key] if key in container.entries else container.default
        if isinstance(container, VArray):
            if isinstance(key, VInt) and 0 <= key.value < len(container.items):
                return container.items[key.value]
            raise _Failed("index")
        raise _Failed("undef" if isinstance(container, VUndef) else "type", "not a container")

    def binop(self, e):
        op = e.op
        if op == "&&":
            return VBool(self._bool(self.value(e.lhs)) and self._bool(self.value(e.rhs)))
        if op == "||":
            return VBool(self._bool(self.value(e.lhs)) or self._bool(self.value(e.rhs)))
        a = self.value(e.lhs)
        b = self.value(e.rhs)
        if op in ("==", "!="):
            if isinstance(a, VUndef) or isinstance(b, VUndef):
                raise _Failed("undef", op)
            return VBool((a == b) == (op == "=="))
        x, y = self._int(a), self._int(b)
        if op == "<":
            return VBool(x < y)
        if op == "<=":
            return VBool(x <= y)
        if op == ">":
            return VBool(x > y)
        if op == ">=":
            return VBool(x >= y)
        w, s = a.width, a.signed
        mod = 1 << w
        if op == "+":
            r = x + y
        elif op == "-":
            r = x - y
        elif op == "*":
            r = x * y
        elif op == "/" or op == "%":
            if y == 0:
                raise _Failed("div_zero")
            q = -(-x // y) if (x < 0) != (y < 0) else x // y
            r = q if op == "/" else x - y * q
        elif op == "**":
            if y < 0:
                raise _Failed("negative_exponent")
            r = pow(x % mod, y, mod)
        elif op == "&":
            r = a.bits & b.bits
        elif op == "|":
            r = a.bits | b.bits
        elif op == "^":
            r = a.bits ^ b.bits
        elif op == "<<":
            if y < 0:
                raise _Failed("negative_shift")
            r = 0 if y >= w else a.bits << y
        elif op == ">>":
            if y < 0:
                raise _Failed("negative_shift")
            if y >= w:
                r = -1 if x < 0 else 0
            else:
                r = x >> y
        else:
            raise _Failed("bad_operator", op)
        return VInt(w, s, r % mod)

    # assignment

    def _path(self, lhs):
        """Root variable and the evaluated accessor chain, root first."""
        self._node()
        if isinstance(lhs, (Evar, Epar)):
            return lhs.name, []
        if isinstance(lhs, Eindex):
            root, chain = self._path(lhs.base)
            chain.append(("key", self.value(lhs.key)))
            return root, chain
        if isinstance(lhs, Efield) and not isinstance(lhs.base, SpecialRef):
            root, chain = self._path(lhs.base)
            for f in lhs.path:
                chain.append(("field", f))
            return root, chain
        raise _Failed("not_assignable")

    def _replace(self, current, chain, v):
        if not chain:
            return v
        kind, k = chain[0]
        if kind == "field":
            if not isinstance(current, VStruct):
                raise _Failed("undef" if isinstance(current, VUndef) else "type")
            names = [f for f, _ in current.members]
            if k not in names:
                raise _Failed("no_member", k)
            return VStruct(current.name, tuple(
                (f, self._replace(x, chain[1:], v) if f == k else x) for f, x in current.members))
        if isinstance(current, VMapping):
            inner = current.entries[k] if k in current.entries else current.default
            new = self._replace(inner, chain[1:], v)
            if new == current.default:
                return VMapping(current.key, current.val, current.default, current.entries.discard(k))
            return VMapping(current.key, current.val, current.default, current.entries.set(k, new))
        if isinstance(current, VArray):
            if not (isinstance(k, VInt) and 0 <= k.value < len(current.items)):
                raise _Failed("index")
            items = list(current.items)
            items[k.value] = self._replace(items[k.value], chain[1:], v)
            return VArray(current.elem, tuple(items))
        raise _Failed("undef" if isinstance(current, VUndef) else "type")

    # statements

    def run_block(self, stmts):
        for s in stmts:
            self.execute(s)

    def execute(self, s):
        self._tick()
        if isinstance(s, (Snil, StructDecl)):
            return
        if isinstance(s, Seq):
            self.run_block(s.stmts)
        elif isinstance(s, Contract):
            self.run_block(s.body)
        elif isinstance(s, Var):
            try:
                z = zero_value(s.decl.ty, self.structs)
            except NoZero:
                raise _Failed("type") from None
            self._put(self._var_slot(s.decl.name, self.function), z)
        elif isinstance(s, Assign):
            v = self.value(s.rhs)
            if isinstance(v, VUndef):
                raise _Failed("undef", "assign")
            root, chain = self._path(s.lhs)
            slot = self._var_slot(root, self.function)
            if chain:
                v = self._replace(self._get(slot), chain, v)
            self._put(slot, v)
        elif isinstance(s, If):
            branch = s.then if self._bool(self.value(s.cond)) else s.else_
            self.execute(branch)
        elif isinstance(s, While):
            while self._bool(self.value(s.cond)):
                self.execute(s.body)
                self._tick()
        elif isinstance(s, For):
            self.execute(s.init)
            self._tick()
            while self._bool(self.value(s.cond)):
                self._tick()
                self.execute(s.body)
                self.execute(s.step)
                self._tick()
        elif isinstance(s, Fun):
            self._put(self._fun_slot(s.name), VStatement(s))
        elif isinstance(s, FunCall):
            self.call(s)
        elif isinstance(s, Return):
            if s.e is not None:
                self.value(s.e)
            raise _Returned()
        elif isinstance(s, Throw):
            raise _Threw()
        else:
            raise _Failed("bad_statement")

    def call(self, s: FunCall):
        name = s.callee.name
        args = [self.value(a) for a in s.args]
        if any(isinstance(a, VUndef) for a in args):
            raise _Failed("undef", "argument")
        if name in _SEND_KIND:
            kind = _SEND_KIND[name]
            self.sends += 1
            p = self.send_policy
            ok = bool(p(self.sends, kind, args[0], args[1])) if callable(p) else bool(p)
            log_slot = self.size + _SPECIAL_ORDER.index(Special.SEND)
            log = self._get(log_slot)
            event = VStruct("SendEvent", (("kind", VString(kind)), ("target", args[0]),
                                          ("amount", args[1]), ("result", VBool(ok))))
            self._put(log_slot, VArray(log.elem, tuple(log.items) + (event,)))
            self._put(self.size + _SPECIAL_ORDER.index(Special.SEND_RE), VBool(ok))
            return
        if name == "_0xrequires":
            if not args[0].value:
                raise _Threw()
            return
        stored = self._get(self._fun_slot(name))
        if not (isinstance(stored, VStatement) and isinstance(stored.stmt, Fun)):
            raise _Failed("undef", "function not loaded")
        f = stored.stmt
        for p, v in zip(f.params, args):
            self._put(self._var_slot(p.name, name), v, name, self.function)
        saved = (self.function, self.caller)
        self.function, self.caller = name, self.function
        try:
            self.run_block(f.body)
        except _Returned:
            pass
        self.function, self.caller = saved

    def memory(self) -> Memory:
        cells = {a: MemoryCell(v, 1, env, fenv, occ, auth) for a, (v, env, fenv, occ, auth) in self.cells.items()}
        return Memory(self.size, pmap(cells), False)


def ref_exec(prog: Program, m0: Memory, args=None, fuel=None, stmts=None, entry: Optional[str] = None,
             send_policy=True) -> RefOutcome:
    """Reference outcome of running ``stmts`` (default: the program) from ``m0``."""
    k_stmt, k_val, gas = (fuel.k_stmt, fuel.k_val, fuel.gas_limit) if fuel is not None else (10_000, 1_000, 10_000)
    r = Reference(prog, m0, k_stmt, k_val, gas, send_policy)
    if entry is not None:
        f = next((x for x in _functions(prog.stmts) if x.name == entry), None)
        if f is None:
            return RefFault("unbound", entry)
        body = [FunCall(Efun(entry, f.sig.ret), tuple(Econst(a) for a in (args or ())))]
    else:
        body = list(prog.stmts if stmts is None else stmts)
    try:
        r.run_block(body)
    except _Returned:
        pass
    except _Threw:
        return RefThrown(m0)
    except _Exhausted as ex:
        return RefOutOfGas(ex.reason)
    except _Failed as ex:
        return RefFault(ex.kind, ex.detail)
    return RefNormal(r.memory())


def _functions(stmts):
    for s in stmts:
        if isinstance(s, Fun):
            yield s
        elif isinstance(s, Contract):
            yield from _functions(s.body)


# -- agreement ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Equal:
    pass


@dataclass(frozen=True)
class Divergent:
    step: int
    left: str
    right: str


Agreement = Union[Equal, Divergent]


def observable(m: Memory) -> tuple:
    """The part of a memory compared by the equivalence relation."""
    return (m.size, m.throw_flag,
            tuple(sorted((a, c.block_v) for a, c in m.cells.items() if c.occupied)))


def _variant(out) -> str:
    return type(out).__name__.replace("Ref", "")


def relate(out, ref) -> Optional[tuple]:
    """None when the two outcomes are related, else (left, right) descriptions."""
    lv, rv = _variant(out), _variant(ref)
    if lv != rv:
        return (_describe(out), _describe(ref))
    if lv in ("Normal", "Thrown"):
        lm = out.mem if lv == "Normal" else out.initial
        rm = ref.mem if rv == "Normal" else ref.initial
        lo, ro = observable(lm), observable(rm)
        if lo != ro:
            return _first_difference(lo, ro)
    return None


def _describe(out) -> str:
    v = _variant(out)
    if v == "Fault":
        return f"Fault({out.kind})"
    if v == "OutOfGas":
        return "OutOfGas"
    return v


def _first_difference(lo, ro):
    if lo[1] != ro[1]:
        return (f"m_throw := {lo[1]}", f"m_throw := {ro[1]}")
    left, right = dict(lo[2]), dict(ro[2])
    for a in sorted(set(left) | set(right)):
        if left.get(a) != right.get(a):
            label = f"cell {a}"
            return (f"{label} := {left.get(a, 'free')}", f"{label} := {right.get(a, 'free')}")
    return ("memory", "memory")


def check_equiv(prog: Program, m0: Memory, fuel=None, stmts=None, send_policy=True,
                swap_if: bool = False, entry: Optional[str] = None, args=()) -> Agreement:
    """Run the interpreter and the reference evaluator and compare the outcomes."""
    from . import fether

    fuel = fuel or fether.Fuel()
    mc = fether.Machine(prog, send_policy, swap_if=swap_if)
    if entry is not None:
        out = mc.call(m0, entry, args, fuel)
        ref = ref_exec(prog, m0, args, fuel, entry=entry, send_policy=send_policy)
    else:
        body = prog.stmts if stmts is None else stmts
        out = mc.exec(m0, body, fuel)
        ref = ref_exec(prog, m0, None, fuel, stmts=body, send_policy=send_policy)
    diff = relate(out, ref)
    if diff is None:
        return Equal()
    return Divergent(getattr(out, "steps", 0), diff[0], diff[1])

