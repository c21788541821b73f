"""Executable interpreter for the IR.

Execution is a small-step loop over a continuation stack.  Every statement
popped from the stack is one charged step: it consumes one unit of gas and one
unit of ``k_stmt``.  Compound statements push their parts back on the stack,
so ``Seq``, ``While`` and ``For`` unroll one layer per step.  Expressions are
evaluated atomically inside a step under a per-statement node budget
``k_val``.

Throw sets the memory's throw flag; the machine notices the flag before the
next step is charged and ends the run as Thrown, carrying the memory that was
current when the whole run started.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

from . import germ
from .germ import Memory
from .ir import (
    Assign, Contract, Ebinop, Econst, Efield, Efun, Eindex, Epar, Estruct, Eunop, Evar,
    For, Fun, FunCall, If, Return, Seq, Snil, SpecialRef, StructDecl, Throw, Var, While,
)
from .program import Program, UnboundName
from .stdlib import EVENT_STRUCT, REQUIRES, SEND_FAMILY
from .types import Special, TUndef
from .values import (
    NoZero, VArray, VBool, VInt, VMapping, VPtrContract, VStatement,
    VString, VStruct, VUndef, zero_value,
)


# -- configuration and outcomes ---------------------------------------------------

@dataclass(frozen=True)
class Fuel:
    k_stmt: int = 10_000
    k_val: int = 1_000
    gas_limit: int = 10_000

    def __post_init__(self):
        if self.k_stmt <= 0 or self.k_val <= 0 or self.gas_limit <= 0:
            raise ValueError("fuel bounds must be strictly positive")


@dataclass(frozen=True)
class Environment:
    contract: str = ""
    function: Optional[str] = None
    scope_depth: int = 0
    gas: int = 0
    gas_limit: int = 0

    @property
    def tag(self) -> str:
        return self.function or self.contract

    def charge(self) -> "Environment":
        return replace(self, gas=self.gas - 1)


@dataclass(frozen=True)
class Normal:
    mem: Memory
    env: Environment = field(default=None, compare=False)
    steps: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Thrown:
    initial: Memory
    steps: int = field(default=0, compare=False)


@dataclass(frozen=True)
class OutOfGas:
    reason: str = "gas"
    steps: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Fault:
    kind: str
    detail: str = ""
    steps: int = field(default=0, compare=False)


ExecOutcome = Union[Normal, Thrown, OutOfGas, Fault]


class EvalFailure(Exception):
    def __init__(self, kind: str, detail: str = ""):
        super().__init__(f"{kind}: {detail}")
        self.kind = kind
        self.detail = detail


SendPolicy = Union[bool, Callable[[int, str, VInt, VInt], bool]]


# -- pure value operations (shared with the symbolic engine's constant folder) ---

def _wrap(ty_width: int, signed: bool, n: int) -> VInt:
    return VInt(ty_width, signed, n)


def _in_range(width: int, signed: bool, n: int) -> bool:
    if signed:
        return -(1 << (width - 1)) <= n < (1 << (width - 1))
    return 0 <= n < (1 << width)


def int_binop(op: str, a: VInt, b: VInt):
    """(result, overflowed) for integer operators; raises EvalFailure on a zero divisor."""
    w, s = a.width, a.signed
    x, y = a.value, b.value
    if op == "+":
        r = x + y
    elif op == "-":
        r = x - y
    elif op == "*":
        r = x * y
    elif op in ("/", "%"):
        if y == 0:
            raise EvalFailure("div_zero", f"{op} by zero")
        q = abs(x) // abs(y)
        if (x < 0) != (y < 0):
            q = -q
        r = q if op == "/" else x - q * y
    elif op == "**":
        if y < 0:
            raise EvalFailure("negative_exponent", f"{x} ** {y}")
        wrapped = pow(x, y, 1 << w)
        # overflow iff the exact power leaves the range; bounded check
        exact_fits = _pow_fits(x, y, w, s)
        return _wrap(w, s, wrapped), not exact_fits
    elif op == "&":
        return _wrap(w, s, a.bits & b.bits), False
    elif op == "|":
        return _wrap(w, s, a.bits | b.bits), False
    elif op == "^":
        return _wrap(w, s, a.bits ^ b.bits), False
    elif op == "<<":
        if y < 0:
            raise EvalFailure("negative_shift", f"{x} << {y}")
        return _wrap(w, s, a.bits << min(y, w)), False
    elif op == ">>":
        if y < 0:
            raise EvalFailure("negative_shift", f"{x} >> {y}")
        return _wrap(w, s, x >> min(y, w)), False
    else:
        raise EvalFailure("bad_operator", op)
    return _wrap(w, s, r), not _in_range(w, s, r)


def _pow_fits(x: int, y: int, w: int, s: bool) -> bool:
    if x in (0, 1) or y == 0:
        return True
    if x == -1:
        return True
    bound = 1 << w
    acc = 1
    for _ in range(y):
        acc *= x
        if abs(acc) > bound:
            return False
    return _in_range(w, s, acc)


def compare(op: str, a, b) -> bool:
    if op == "==":
        return a == b
    if op == "!=":
        return a != b
    x, y = a.value, b.value
    return {"<": x < y, "<=": x <= y, ">": x > y, ">=": x >= y}[op]


def unop(op: str, a):
    if op == "!":
        return VBool(not a.value)
    if op == "-":
        return _wrap(a.width, a.signed, -a.value)
    if op == "~":
        return _wrap(a.width, a.signed, ~a.bits)
    raise EvalFailure("bad_operator", op)


def send_event(kind: str, target, amount, result: bool) -> VStruct:
    return VStruct(EVENT_STRUCT, (("kind", VString(kind)), ("target", target),
                                  ("amount", amount), ("result", VBool(result))))


def events_of(m: Memory) -> tuple:
    cell = germ.read(m, m.special_slot(Special.SEND))
    return cell.items if isinstance(cell, VArray) else ()


def format_event(ev: VStruct) -> str:
    kind = ev.get("kind").value.upper()
    target = ev.get("target")
    amount = ev.get("amount")
    result = "true" if ev.get("result").value else "false"
    return f"{kind} 0x{target.bits:040x} {amount.value} -> {result}"


# -- program loading ----------------------------------------------------------------

def machine_address(m: Memory, label) -> int:
    try:
        return germ.MapStrategy(m.size)(label)
    except germ.MapFailed as err:
        raise EvalFailure("unmapped", str(err)) from None


def load_program(prog: Program, m: Memory) -> Memory:
    """Zero every global variable and store each function body in its cell."""
    structs = prog.structs()
    c = prog.contract()
    tag = c.name.name if c is not None else ""
    for v in prog.global_vars():
        a = machine_address(m, prog.table.resolve(v.decl.name))
        m = germ.write(m, a, zero_value(v.decl.ty, structs), tag, tag)
    for f in prog.functions():
        a = machine_address(m, prog.table.function(f.name))
        m = germ.write(m, a, VStatement(f), tag, tag)
    if c is not None and c.name.name in prog.table:
        a = machine_address(m, prog.table[c.name.name])
        m = germ.write(m, a, VPtrContract(prog.table[c.name.name]), tag, tag)
    return m


def set_msg(m: Memory, lib, value: Optional[int] = None, sender: Optional[int] = None,
            balance: Optional[int] = None) -> Memory:
    """Memory with msg.value, msg.sender or this.balance replaced."""
    w = lib.word
    if value is not None or sender is not None:
        a = m.special_slot(Special.MSG)
        cell = germ.read(m, a)
        if value is not None:
            cell = cell.set("values", VInt.of(w, value))
        if sender is not None:
            cell = cell.set("sender", VInt.address(sender))
        m = germ.write(m, a, cell, str(Special.MSG), str(Special.MSG))
    if balance is not None:
        a = m.special_slot(Special.ADDRESS)
        cell = germ.read(m, a).set("balance", VInt.of(w, balance))
        m = germ.write(m, a, cell, str(Special.ADDRESS), str(Special.ADDRESS))
    return m


# -- the machine ------------------------------------------------------------------------

@dataclass(frozen=True)
class _Frame:
    """Return marker: the environment to restore when the callee finishes."""

    env: Environment
    fenv: Environment


class Machine:
    """Interpreter bound to a loaded program.

    ``swap_if`` is a deliberate fault (the then/else branches are exchanged)
    used only to check that differential testing catches a wrong build.
    """

    def __init__(self, prog: Program, send_policy: SendPolicy = True, swap_if: bool = False):
        self.prog = prog
        self.lib = prog.lib
        self.structs = prog.structs()
        self.send_policy = send_policy
        self.swap_if = swap_if
        self.overflows: list = []
        c = prog.contract()
        self.contract = c.name.name if c is not None else ""

    # -- addressing -------------------------------------------------------------

    def var_address(self, m: Memory, name: str, env: Environment) -> int:
        try:
            label = self.prog.table.resolve(name, env.function)
        except UnboundName:
            raise EvalFailure("unbound", name) from None
        return machine_address(m, label)

    def read_at(self, m: Memory, a: int, env: Environment, fenv: Environment):
        v = germ.read(m, a, env.tag, fenv.tag)
        if v is None:
            raise EvalFailure("auth", f"read of machine address {a} refused")
        return v

    def write_at(self, m: Memory, a: int, v, env: Environment, fenv: Environment) -> Memory:
        out = germ.write(m, a, v, env.tag, fenv.tag)
        if out is None:
            raise EvalFailure("auth", f"write of machine address {a} refused")
        return out

    # -- expressions ---------------------------------------------------------------

    def eval(self, m: Memory, env: Environment, fenv: Environment, e, budget: list):
        budget[0] -= 1
        if budget[0] < 0:
            raise EvalFailure("k_val", "expression budget exhausted")
        if isinstance(e, Econst):
            return e.value
        if isinstance(e, (Evar, Epar)):
            v = self.read_at(m, self.var_address(m, e.name, env), env, fenv)
            if isinstance(v, VUndef) and not isinstance(e.ty, TUndef):
                raise EvalFailure("undef", f"{e.name} holds Vundef")
            return v
        if isinstance(e, Efun):
            try:
                return self.read_at(m, machine_address(m, self.prog.table.function(e.name)), env, fenv)
            except UnboundName:
                raise EvalFailure("unbound", e.name) from None
        if isinstance(e, Ebinop):
            return self.eval_binop(m, env, fenv, e, budget)
        if isinstance(e, Eunop):
            a = self.eval(m, env, fenv, e.arg, budget)
            self.expect(a, VBool if e.op == "!" else VInt, e)
            return unop(e.op, a)
        if isinstance(e, Efield):
            if isinstance(e.base, SpecialRef):
                v = self.read_at(m, m.special_slot(e.base.which), env, fenv)
            else:
                v = self.eval(m, env, fenv, e.base, budget)
            for name in e.path:
                self.expect(v, VStruct, e)
                try:
                    v = v.get(name)
                except KeyError:
                    raise EvalFailure("no_member", name) from None
            if isinstance(v, VUndef):
                raise EvalFailure("undef", "field holds Vundef")
            return v
        if isinstance(e, Eindex):
            base = self.eval(m, env, fenv, e.base, budget)
            key = self.eval(m, env, fenv, e.key, budget)
            return self.index(base, key)
        if isinstance(e, Estruct):
            return VStruct(e.name, tuple((f, self.eval(m, env, fenv, x, budget)) for f, x in e.members))
        raise EvalFailure("bad_expression", type(e).__name__)

    @staticmethod
    def expect(v, cls, e):
        if not isinstance(v, cls):
            kind = "undef" if isinstance(v, VUndef) else "type"
            raise EvalFailure(kind, f"{type(v).__name__} where {cls.__name__} expected")

    @staticmethod
    def index(base, key):
        if isinstance(base, VMapping):
            return base.get(key)
        if isinstance(base, VArray):
            if not isinstance(key, VInt) or not 0 <= key.value < len(base.items):
                raise EvalFailure("index", f"index {key} out of range")
            return base.items[key.value]
        kind = "undef" if isinstance(base, VUndef) else "type"
        raise EvalFailure(kind, "indexing a non-container")

    def eval_binop(self, m, env, fenv, e: Ebinop, budget):
        op = e.op
        a = self.eval(m, env, fenv, e.lhs, budget)
        if op in ("&&", "||"):
            self.expect(a, VBool, e)
            if a.value == (op == "||"):
                return a
            b = self.eval(m, env, fenv, e.rhs, budget)
            self.expect(b, VBool, e)
            return b
        b = self.eval(m, env, fenv, e.rhs, budget)
        if op in ("==", "!="):
            if isinstance(a, VUndef) or isinstance(b, VUndef):
                raise EvalFailure("undef", f"operand of {op} is Vundef")
            return VBool(compare(op, a, b))
        self.expect(a, VInt, e)
        self.expect(b, VInt, e)
        if op in ("<", "<=", ">", ">="):
            return VBool(compare(op, a, b))
        r, overflowed = int_binop(op, a, b)
        if overflowed:
            self.overflows.append((op, a, b))
        return r

    def eval_expr(self, m: Memory, env: Environment, fenv: Environment, e, k_val: int):
        """Value of ``e`` or None when evaluation fails."""
        try:
            return self.eval(m, env, fenv, e, [k_val])
        except EvalFailure:
            return None

    # -- assignment --------------------------------------------------------------------

    def lvalue_path(self, m, env, fenv, lhs, budget):
        """(root variable, accessors) of an lvalue; keys are evaluated root first.

        Each lvalue node costs one unit of expression budget, like an rvalue node.
        """
        budget[0] -= 1
        if budget[0] < 0:
            raise EvalFailure("k_val", "expression budget exhausted")
        if isinstance(lhs, (Evar, Epar)):
            return lhs, []
        if isinstance(lhs, Eindex):
            root, path = self.lvalue_path(m, env, fenv, lhs.base, budget)
            path.append(("key", self.eval(m, env, fenv, lhs.key, budget)))
            return root, path
        if isinstance(lhs, Efield) and not isinstance(lhs.base, SpecialRef):
            root, path = self.lvalue_path(m, env, fenv, lhs.base, budget)
            path.extend(("field", f) for f in lhs.path)
            return root, path
        raise EvalFailure("not_assignable", type(lhs).__name__)

    def store(self, m, env, fenv, lhs, v, budget) -> Memory:
        root, path = self.lvalue_path(m, env, fenv, lhs, budget)
        a = self.var_address(m, root.name, env)
        if path:
            cur = self.read_at(m, a, env, fenv)
            v = self.update(cur, path, v)
        return self.write_at(m, a, v, env, fenv)

    def update(self, cur, path, v):
        if not path:
            return v
        (kind, k), rest = path[0], path[1:]
        if kind == "field":
            self.expect(cur, VStruct, None)
            try:
                return cur.set(k, self.update(cur.get(k), rest, v))
            except KeyError:
                raise EvalFailure("no_member", k) from None
        if isinstance(cur, VMapping):
            return cur.set(k, self.update(cur.get(k), rest, v))
        if isinstance(cur, VArray):
            if not isinstance(k, VInt) or not 0 <= k.value < len(cur.items):
                raise EvalFailure("index", f"index {k} out of range")
            items = list(cur.items)
            items[k.value] = self.update(items[k.value], rest, v)
            return VArray(cur.elem, tuple(items))
        raise EvalFailure("undef" if isinstance(cur, VUndef) else "type", "indexing a non-container")

    # -- runs ----------------------------------------------------------------------------

    def start(self, m0: Memory, stmts, fuel: Fuel = Fuel(), function: Optional[str] = None) -> "Run":
        env = Environment(self.contract, function, 0, fuel.gas_limit, fuel.gas_limit)
        return Run(self, m0, m0, env, env, [(s, None) for s in reversed(tuple(stmts))], fuel)

    def exec(self, m0: Memory, stmts, fuel: Fuel = Fuel(), function: Optional[str] = None) -> ExecOutcome:
        r = self.start(m0, stmts, fuel, function)
        while r.outcome is None:
            r.step()
        return r.outcome

    def call(self, m0: Memory, name: str, args=(), fuel: Fuel = Fuel()) -> ExecOutcome:
        """Invoke a user function with concrete argument values."""
        f = self.prog.function(name)
        if f is None:
            return Fault("unbound", f"no function {name}")
        call = FunCall(Efun(name, f.sig.ret), tuple(Econst(a) for a in args))
        return self.exec(m0, [call], fuel)


class Run:
    """Mutable cursor over one execution; ``step`` advances exactly one statement."""

    def __init__(self, machine: Machine, m0: Memory, m: Memory, env: Environment,
                 fenv: Environment, stack: list, fuel: Fuel):
        self.machine = machine
        self.m0 = m0
        self.m = m
        self.env = env
        self.fenv = fenv
        self.stack = stack
        self.fuel = fuel
        self.k_stmt = fuel.k_stmt
        self.steps = 0
        self.outcome: Optional[ExecOutcome] = None
        self.trace: list = []
        self.send_count = 0

    @property
    def next_statement(self):
        for item, _ in reversed(self.stack):
            if not isinstance(item, _Frame):
                return item
        return None

    def _finish(self, outcome):
        self.outcome = outcome
        return outcome

    def step(self) -> Optional[ExecOutcome]:
        """Execute one statement; returns the outcome once the run has ended."""
        if self.outcome is not None:
            return self.outcome
        while self.stack and isinstance(self.stack[-1][0], _Frame):
            frame = self.stack.pop()[0]
            self.env = replace(frame.env, gas=self.env.gas)
            self.fenv = frame.fenv
        if self.m.throw_flag:
            return self._finish(Thrown(self.m0, self.steps))
        if not self.stack:
            return self._finish(Normal(self.m, self.env, self.steps))
        if self.env.gas <= 0:
            return self._finish(OutOfGas("gas", self.steps))
        if self.k_stmt <= 0:
            return self._finish(OutOfGas("k_stmt", self.steps))
        s, _ = self.stack.pop()
        self.env = self.env.charge()
        self.k_stmt -= 1
        self.steps += 1
        self.trace.append(s)
        try:
            self.exec_one(s)
        except EvalFailure as err:
            return self._finish(Fault(err.kind, err.detail, self.steps))
        return None

    def push(self, stmts):
        for s in reversed(tuple(stmts)):
            self.stack.append((s, None))

    def exec_one(self, s):
        mc = self.machine
        budget = [self.fuel.k_val]
        m, env, fenv = self.m, self.env, self.fenv
        if isinstance(s, (Snil, StructDecl)):
            return
        if isinstance(s, Seq):
            self.push(s.stmts)
        elif isinstance(s, Contract):
            self.push(s.body)
        elif isinstance(s, Var):
            try:
                z = zero_value(s.decl.ty, mc.structs)
            except NoZero as err:
                raise EvalFailure("type", str(err)) from None
            self.m = mc.write_at(m, mc.var_address(m, s.decl.name, env), z, env, fenv)
        elif isinstance(s, Assign):
            v = mc.eval(m, env, fenv, s.rhs, budget)
            if isinstance(v, VUndef):
                raise EvalFailure("undef", "assigning Vundef")
            self.m = mc.store(m, env, fenv, s.lhs, v, budget)
        elif isinstance(s, If):
            c = mc.eval(m, env, fenv, s.cond, budget)
            mc.expect(c, VBool, s.cond)
            take_then = c.value != mc.swap_if
            self.stack.append((s.then if take_then else s.else_, None))
        elif isinstance(s, While):
            c = mc.eval(m, env, fenv, s.cond, budget)
            mc.expect(c, VBool, s.cond)
            if c.value:
                self.stack.append((s, None))
                self.stack.append((s.body, None))
        elif isinstance(s, For):
            self.stack.append((While(s.cond, Seq((s.body, s.step), line=s.line), line=s.line), None))
            self.stack.append((s.init, None))
        elif isinstance(s, Fun):
            a = machine_address(m, mc.prog.table.function(s.name))
            self.m = mc.write_at(m, a, VStatement(s), env, fenv)
        elif isinstance(s, FunCall):
            self.exec_call(s, budget)
        elif isinstance(s, Return):
            if s.e is not None:
                mc.eval(m, env, fenv, s.e, budget)
            while self.stack and not isinstance(self.stack[-1][0], _Frame):
                self.stack.pop()
        elif isinstance(s, Throw):
            self.m = m.set_throw(True)
        else:
            raise EvalFailure("bad_statement", type(s).__name__)

    def exec_call(self, s: FunCall, budget):
        mc = self.machine
        m, env, fenv = self.m, self.env, self.fenv
        name = s.callee.name
        args = [mc.eval(m, env, fenv, a, budget) for a in s.args]
        for a in args:
            if isinstance(a, VUndef):
                raise EvalFailure("undef", f"argument of {name} is Vundef")
        if name in SEND_FAMILY:
            target, amount = args
            result = self.send_result(SEND_FAMILY[name], target, amount)
            slot = m.special_slot(Special.SEND)
            trace = mc.read_at(m, slot, env, fenv)
            ev = send_event(SEND_FAMILY[name], target, amount, result)
            m = mc.write_at(m, slot, VArray(trace.elem, trace.items + (ev,)), env, fenv)
            self.m = mc.write_at(m, m.special_slot(Special.SEND_RE), VBool(result), env, fenv)
            return
        if name == REQUIRES:
            if not args[0].value:
                self.m = m.set_throw(True)
            return
        try:
            fa = machine_address(m, mc.prog.table.function(name))
        except UnboundName:
            raise EvalFailure("unbound", f"function {name}") from None
        cell = mc.read_at(m, fa, env, fenv)
        if not isinstance(cell, VStatement) or not isinstance(cell.stmt, Fun):
            raise EvalFailure("undef", f"function {name} is not loaded")
        f = cell.stmt
        callee = Environment(mc.contract, name, env.scope_depth + 1, env.gas, env.gas_limit)
        for p, v in zip(f.params, args):
            a = mc.var_address(m, p.name, callee)
            m = mc.write_at(m, a, v, callee, env)
        self.m = m
        self.stack.append((_Frame(env, fenv), None))
        self.push(f.body)
        self.env, self.fenv = callee, env

    def send_result(self, kind: str, target, amount) -> bool:
        policy = self.machine.send_policy
        self.send_count += 1
        if callable(policy):
            return bool(policy(self.send_count, kind, target, amount))
        return bool(policy)


# -- functional façade ------------------------------------------------------------------

def eval_expr(prog: Program, m: Memory, env: Environment, fenv: Environment, e, k_val: int = 1_000):
    return Machine(prog).eval_expr(m, env, fenv, e, k_val)


def exec_stmt(prog: Program, m: Memory, env: Environment, fenv: Environment, s, fuel: Fuel = Fuel(),
              send_policy: SendPolicy = True) -> ExecOutcome:
    """Run statement ``s`` (and everything it unrolls into) from memory ``m``."""
    return Machine(prog, send_policy).exec(m, [s], fuel, env.function)


def run(prog: Program, m0: Memory, args=None, fuel: Fuel = Fuel(), entry: Optional[str] = None,
        send_policy: SendPolicy = True) -> Optional[Memory]:
    """Final memory for Normal, the entry image for Thrown, None otherwise."""
    mc = Machine(prog, send_policy)
    if entry is not None:
        out = mc.call(m0, entry, args or (), fuel)
    else:
        out = mc.exec(m0, prog.stmts, fuel)
    return outcome_memory(out)


def outcome_memory(out: ExecOutcome) -> Optional[Memory]:
    if isinstance(out, Normal):
        return out.mem
    if isinstance(out, Thrown):
        return out.initial
    return None


def fresh_memory(prog: Program, size: int = germ.DEFAULT_SPACE) -> Memory:
    """init_memory with the program's declarations loaded."""
    return load_program(prog, germ.init_memory(size, prog.lib))


def describe_outcome(out) -> str:
    """One-line outcome banner used by the command line and the debugger."""
    if isinstance(out, Normal):
        return "NORMAL"
    if isinstance(out, Thrown):
        return "THROWN (rolled back)"
    if isinstance(out, OutOfGas):
        return f"OUT OF GAS ({out.reason})"
    if isinstance(out, Fault):
        return f"FAULT {out.kind}: {out.detail}" if out.detail else f"FAULT {out.kind}"
    return str(out)
