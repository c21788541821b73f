"""Symbolic execution of Hoare specs in static, concolic and selective modes.

``SymRun`` is the interpreter's run loop with symbolic payloads: it steps one
statement at a time with the same gas and fuel accounting, and splits into
several runs where a condition is undetermined.  Failures that depend on
symbols (a symbolic divisor, say) are collected during evaluation as guarded
side conditions and become their own Fault branches.

``explore`` drives the runs depth-first, prunes branches whose path condition
is unsatisfiable, checks every leaf against the postcondition and replays
each candidate counterexample concretely before reporting it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Optional

from .. import germ
from ..fether import (
    Environment, EvalFailure, Fault, Machine, Normal, OutOfGas, Run, Thrown, _Frame,
    compare, int_binop, machine_address, unop,
)
from ..ir import (
    BOOL_OPS, CMP_OPS, EQ_OPS, Eunop, FunCall, If, SHIFT_OPS, While,
)
from ..program import Program, UnboundName
from ..stdlib import EVENT_STRUCT, REQUIRES, SEND_FAMILY
from ..types import Special, TBool, TInt
from ..values import VArray, VBool, VMapping, VStatement, VString, VStruct, VUndef
from . import solver
from .hoare import (
    Assertions, HoareSpec, OutOfGasPost, Rollback, SpecError, complete_model, initial_state,
    read_target, replay, send_symbol, start_run,
)
from .symvalue import (
    FALSE, TRUE, UNARY, Sym, SymTypeError, conj, const_of, is_symbolic, mk, negate,
    substitute, type_of,
)

MAX_RUNS = 20_000


class Unsupported(Exception):
    """The symbolic state cannot represent what the program does next."""


@dataclass(frozen=True)
class Stuck:
    """Leaf outcome of a run the engine could not follow."""

    reason: str
    steps: int = field(default=0, compare=False)


# -- verdicts ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Verified:
    def __str__(self) -> str:
        return "Verified"


@dataclass(frozen=True)
class Falsified:
    model: dict = field(hash=False)
    trace: tuple = field(default=(), hash=False)

    def __str__(self) -> str:
        return "Falsified"


@dataclass(frozen=True)
class Unknown:
    reason: str

    def __str__(self) -> str:
        return "Unknown"


@dataclass
class Stats:
    paths: int = 0          # feasible leaves plus pruned branches
    leaves: int = 0
    pruned: int = 0
    forks: int = 0
    steps: int = 0
    summary_hits: int = 0
    expansions: int = 0     # summary-matching blocks that were executed anyway
    solver_calls: int = 0
    elapsed: float = 0.0
    warnings: list = field(default_factory=list)


@dataclass
class Result:
    verdict: object
    stats: Stats
    spec: HoareSpec
    leaves: list = field(default_factory=list)
    max_steps: int = 0


# -- the symbolic machine -------------------------------------------------------------------

def _is_int(v) -> bool:
    try:
        return not isinstance(type_of(v), TBool)
    except SymTypeError:
        return False


def _is_bool(v) -> bool:
    return isinstance(v, VBool) or (is_symbolic(v) and isinstance(v.ty, TBool))


def _zero_like(v):
    return const_of(type_of(v), 0)


class SymMachine(Machine):
    """Expression evaluation over symbolic payloads.

    Evaluation appends ``(condition, kind, detail)`` entries to ``side`` for
    failures that happen only under some symbol values; ``guard`` is the
    condition under which the current subexpression is evaluated at all.
    """

    def __init__(self, prog: Program, send_policy: str = "symbolic"):
        super().__init__(prog, True)
        self.policy = send_policy
        self.side: list = []
        self.guard = TRUE
        self.symbolic_shortcut = False

    def reset(self):
        self.side = []
        self.guard = TRUE
        self.symbolic_shortcut = False

    def fail_when(self, cond, kind: str, detail: str):
        full = conj(self.guard, cond)
        if isinstance(full, VBool):
            if full.value:
                raise EvalFailure(kind, detail)
            return
        self.side.append((full, kind, detail))

    def _mk(self, op, *args):
        try:
            return mk(op, *args)
        except SymTypeError as err:
            raise EvalFailure("type", str(err)) from None

    def eval(self, m, env, fenv, e, budget):
        if isinstance(e, Eunop):
            budget[0] -= 1
            if budget[0] < 0:
                raise EvalFailure("k_val", "expression budget exhausted")
            a = self.eval(m, env, fenv, e.arg, budget)
            if e.op == "!":
                self._expect_bool(a)
            elif not _is_int(a):
                raise EvalFailure("undef" if isinstance(a, VUndef) else "type",
                                  f"operand of {e.op} is not an integer")
            if not is_symbolic(a):
                return unop(e.op, a)
            return self._mk(UNARY[e.op], a)
        return super().eval(m, env, fenv, e, budget)

    def eval_binop(self, m, env, fenv, e, budget):
        op = e.op
        a = self.eval(m, env, fenv, e.lhs, budget)
        if op in BOOL_OPS:
            self._expect_bool(a)
            if not is_symbolic(a):
                if a.value == (op == "||"):
                    return a
                b = self.eval(m, env, fenv, e.rhs, budget)
                self._expect_bool(b)
                return b
            self.symbolic_shortcut = True
            saved = self.guard
            reached = a if op == "&&" else negate(a)
            self.guard = conj(saved, reached)
            try:
                b = self.eval(m, env, fenv, e.rhs, budget)
            except EvalFailure as err:
                # the right operand fails whenever it is reached; elsewhere ``a`` decides
                self.side.append((self.guard, err.kind, err.detail))
                return VBool(op == "||")
            finally:
                self.guard = saved
            self._expect_bool(b)
            return self._mk(op, a, b)
        b = self.eval(m, env, fenv, e.rhs, budget)
        if op in EQ_OPS:
            if isinstance(a, VUndef) or isinstance(b, VUndef):
                raise EvalFailure("undef", f"operand of {op} is Vundef")
            if not (is_symbolic(a) or is_symbolic(b)):
                return VBool(compare(op, a, b))
            return self._mk(op, a, b)
        if not (_is_int(a) and _is_int(b)):
            kind = "undef" if isinstance(a, VUndef) or isinstance(b, VUndef) else "type"
            raise EvalFailure(kind, f"operands of {op} are not integers")
        if not (is_symbolic(a) or is_symbolic(b)):
            if op in CMP_OPS:
                return VBool(compare(op, a, b))
            return int_binop(op, a, b)[0]
        if op in CMP_OPS:
            return self._mk(op, a, b)
        if is_symbolic(b):
            bt = type_of(b)
            if op in ("/", "%"):
                self.fail_when(self._mk("==", b, const_of(bt, 0)), "div_zero", f"{op} by zero")
            elif (op == "**" or op in SHIFT_OPS) and isinstance(bt, TInt) and bt.signed:
                kind = "negative_exponent" if op == "**" else "negative_shift"
                self.fail_when(self._mk("<", b, const_of(bt, 0)), kind, f"negative right operand of {op}")
        else:
            _concrete_checks(op, b)
        return self._mk(op, a, b)

    @staticmethod
    def _expect_bool(v):
        if not _is_bool(v):
            kind = "undef" if isinstance(v, VUndef) else "type"
            raise EvalFailure(kind, f"{type(v).__name__} where VBool expected")

    def index(self, base, key):
        if isinstance(base, VMapping) and (is_symbolic(key) or any(is_symbolic(k) for k in base.entries)):
            if not base.entries:
                return base.default
            if len(base.entries) == 1 and key in base.entries:
                return base.entries[key]
            raise Unsupported(f"mapping read at {key} may alias another symbolic key")
        if isinstance(base, VArray) and is_symbolic(key):
            raise Unsupported("array index is symbolic")
        return super().index(base, key)

    def update(self, cur, path, v):
        if path:
            (kind, k), rest = path[0], path[1:]
            if kind == "key" and isinstance(cur, VMapping):
                if not rest:
                    return cur.set(k, v)
                return cur.set(k, self.update(self.index(cur, k), rest, v))
            if kind == "key" and isinstance(cur, VArray) and is_symbolic(k):
                raise Unsupported("array store at a symbolic index")
        return super().update(cur, path, v)


def _concrete_checks(op, b):
    if op in ("/", "%") and b.value == 0:
        raise EvalFailure("div_zero", f"{op} by zero")
    if op == "**" and b.value < 0:
        raise EvalFailure("negative_exponent", f"** {b.value}")
    if op in SHIFT_OPS and b.value < 0:
        raise EvalFailure("negative_shift", f"{op} {b.value}")


# -- symbolic runs --------------------------------------------------------------------------

class SymRun(Run):
    """One path: a run plus its path condition."""

    def __init__(self, *args, pc=None, **kw):
        super().__init__(*args, **kw)
        self.pc = pc if pc is not None else solver.PathCondition()
        self.grew = False
        self.label = ""

    @classmethod
    def of(cls, run: Run, pc) -> "SymRun":
        out = cls(run.machine, run.m0, run.m, run.env, run.fenv, list(run.stack), run.fuel, pc=pc)
        out.k_stmt = run.k_stmt
        return out

    def clone(self, *constraints, label: str = "") -> "SymRun":
        out = SymRun(self.machine, self.m0, self.m, self.env, self.fenv, list(self.stack), self.fuel,
                     pc=self.pc.extend(*constraints))
        out.k_stmt = self.k_stmt
        out.steps = self.steps
        out.outcome = self.outcome
        out.trace = list(self.trace)
        out.send_count = self.send_count
        out.grew = bool(constraints)
        out.label = label
        return out

    def top_statements(self, n: int) -> Optional[tuple]:
        """The next ``n`` statements if they are all in the current frame."""
        out = []
        for item, _ in reversed(self.stack):
            if isinstance(item, _Frame):
                break
            out.append(item)
            if len(out) == n:
                return tuple(out)
        return None

    def prepare(self) -> bool:
        """Pop return frames and settle the outcome checks that precede a step."""
        if self.outcome is not None:
            return False
        while self.stack and isinstance(self.stack[-1][0], _Frame):
            frame = self.stack.pop()[0]
            self.env = replace(frame.env, gas=self.env.gas)
            self.fenv = frame.fenv
        if self.m.throw_flag:
            self._finish(Thrown(self.m0, self.steps))
        elif not self.stack:
            self._finish(Normal(self.m, self.env, self.steps))
        elif self.env.gas <= 0:
            self._finish(OutOfGas("gas", self.steps))
        elif self.k_stmt <= 0:
            self._finish(OutOfGas("k_stmt", self.steps))
        return self.outcome is None

    def advance(self) -> list:
        """Execute one statement; returns the successor runs (forks create several)."""
        if not self.prepare():
            return [self]
        s, _ = self.stack.pop()
        self.env = self.env.charge()
        self.k_stmt -= 1
        self.steps += 1
        self.trace.append(s)
        mc = self.machine
        mc.reset()
        branches = None
        failure = None
        try:
            branches = self.exec_symbolic(s)
        except EvalFailure as err:
            if err.kind == "k_val" and mc.symbolic_shortcut:
                return [self._stuck("expression budget depends on a symbolic short circuit")]
            failure = err
        except Unsupported as err:
            return [self._stuck(str(err))]
        out = []
        negated = []
        for cond, kind, detail in mc.side:
            leaf = self.clone(*negated, cond, label=f"fault:{kind}")
            leaf.outcome = Fault(kind, detail, self.steps)
            out.append(leaf)
            negated.append(negate(cond))
        if failure is not None:
            leaf = self.clone(*negated, label=f"fault:{failure.kind}")
            leaf.outcome = Fault(failure.kind, failure.detail, self.steps)
            out.append(leaf)
            return out
        if branches is None:
            if negated:
                self.pc = self.pc.extend(*negated)
                self.grew = True
            out.append(self)
            return out
        for cond, label, effect in branches:
            child = self.clone(*negated, cond, label=label)
            effect(child)
            out.append(child)
        return out

    def _stuck(self, reason: str) -> "SymRun":
        self.outcome = Stuck(reason, self.steps)
        return self

    def exec_symbolic(self, s):
        """None for straight-line statements, else [(condition, label, effect)]."""
        mc = self.machine
        if isinstance(s, (If, While)):
            budget = [self.fuel.k_val]
            c = mc.eval(self.m, self.env, self.fenv, s.cond, budget)
            mc._expect_bool(c)
            if isinstance(s, If):
                then = lambda r: r.stack.append((s.then, None))  # noqa: E731
                else_ = lambda r: r.stack.append((s.else_, None))  # noqa: E731
            else:
                def then(r):
                    r.stack.append((s, None))
                    r.stack.append((s.body, None))
                else_ = lambda r: None  # noqa: E731
            if not is_symbolic(c):
                (then if c.value else else_)(self)
                return None
            return [(c, "then", then), (negate(c), "else", else_)]
        if isinstance(s, FunCall):
            return self.exec_call_symbolic(s)
        self.exec_one(s)
        return None

    def exec_call_symbolic(self, s: FunCall):
        mc = self.machine
        budget = [self.fuel.k_val]
        m, env, fenv = self.m, self.env, self.fenv
        name = s.callee.name
        args = [mc.eval(m, env, fenv, a, budget) for a in s.args]
        for a in args:
            if isinstance(a, VUndef):
                raise EvalFailure("undef", f"argument of {name} is Vundef")
        if name in SEND_FAMILY:
            target, amount = args
            self.send_count += 1
            if mc.policy == "symbolic":
                result = Sym(send_symbol(self.send_count), TBool())
            else:
                result = VBool(mc.policy == "true")
            slot = m.special_slot(Special.SEND)
            trace = mc.read_at(m, slot, env, fenv)
            ev = VStruct(EVENT_STRUCT, (("kind", VString(SEND_FAMILY[name])), ("target", target),
                                        ("amount", amount), ("result", result)))
            m = mc.write_at(m, slot, VArray(trace.elem, trace.items + (ev,)), env, fenv)
            self.m = mc.write_at(m, m.special_slot(Special.SEND_RE), result, env, fenv)
            return None
        if name == REQUIRES:
            c = args[0]
            mc._expect_bool(c)
            if not is_symbolic(c):
                if not c.value:
                    self.m = m.set_throw(True)
                return None

            def fail(r):
                r.m = r.m.set_throw(True)
            return [(c, "requires", lambda r: None), (negate(c), "requires-fails", fail)]
        try:
            fa = machine_address(m, mc.prog.table.function(name))
        except UnboundName:
            raise EvalFailure("unbound", f"function {name}") from None
        cell = mc.read_at(m, fa, env, fenv)
        if not isinstance(cell, VStatement):
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
        return None


# -- postcondition checks -------------------------------------------------------------------

def payload_equal(a, b):
    """Boolean SymValue for ``a == b``, or None when the representation cannot tell."""
    if a == b:
        return TRUE
    if is_symbolic(a) or is_symbolic(b):
        try:
            return mk("==", a, b)
        except SymTypeError:
            return FALSE
    if type(a) is not type(b):
        return FALSE
    if isinstance(a, VStruct):
        if a.name != b.name or a.fields != b.fields:
            return FALSE
        parts = [payload_equal(x, y) for (_, x), (_, y) in zip(a.members, b.members)]
        return None if any(p is None for p in parts) else conj(*parts)
    if isinstance(a, VArray):
        if len(a.items) != len(b.items):
            return FALSE
        parts = [payload_equal(x, y) for x, y in zip(a.items, b.items)]
        return None if any(p is None for p in parts) else conj(*parts)
    if isinstance(a, VMapping):
        keys = set(a.entries) | set(b.entries)
        if any(is_symbolic(k) for k in keys):
            return None
        parts = [payload_equal(a.get(k), b.get(k)) for k in keys]
        return None if any(p is None for p in parts) else conj(*parts)
    return FALSE


def memory_equal(m, m0):
    """Condition under which two memories are observably equal (None: undecidable here)."""
    if m.throw_flag != m0.throw_flag or m.size != m0.size:
        return FALSE
    cells = {a for a, c in m.cells.items() if c.occupied} | {a for a, c in m0.cells.items() if c.occupied}
    parts = []
    for a in sorted(cells):
        x, y = m.cell(a), m0.cell(a)
        if x.occupied != y.occupied:
            return FALSE
        p = payload_equal(x.block_v, y.block_v)
        if p is None:
            return None
        parts.append(p)
    return conj(*parts)


def violation(spec: HoareSpec, run: SymRun, mc: SymMachine):
    """Condition under which the leaf violates the postcondition.

    Returns (condition, None), or (None, reason) when the leaf cannot be judged.
    """
    out = run.outcome
    post = spec.post
    if isinstance(out, Stuck):
        return None, out.reason
    if isinstance(post, OutOfGasPost):
        return (FALSE if isinstance(out, OutOfGas) else TRUE), None
    if isinstance(out, OutOfGas):
        return None, f"fuel exhausted ({out.reason}) before the run completed"
    if isinstance(out, Fault):
        return TRUE, None
    mem = out.mem if isinstance(out, Normal) else out.initial
    if isinstance(post, Rollback):
        eq = memory_equal(mem, run.m0)
        return (TRUE if eq is None else negate(eq)), None
    assert isinstance(post, Assertions)
    bad = []
    for target, expected in post.items:
        try:
            actual = read_target(mc, mem, target, spec.entry)
        except Unsupported as err:
            return None, str(err)
        want = substitute(expected, spec.valuation())
        eq = payload_equal(actual, want)
        if eq is None:
            return TRUE, None
        bad.append(negate(eq))
    cond = FALSE
    for b in bad:
        cond = mk("||", cond, b)
    return cond, None


# -- exploration ------------------------------------------------------------------------------

def prepare(spec: HoareSpec, prog: Program):
    spec.validate()
    mc = SymMachine(prog, spec.send_policy)
    try:
        m0, args = initial_state(mc, spec, spec.valuation())
    except EvalFailure as err:
        raise SpecError(str(err)) from None
    base = start_run(mc, spec, m0, args)
    constraint = substitute(spec.constraint, spec.bound)
    return mc, SymRun.of(base, solver.PathCondition([constraint]))


def explore(spec: HoareSpec, prog: Program, store=None, max_runs: int = MAX_RUNS) -> Result:
    """Check every feasible path of the spec's entry against its postcondition."""
    t0 = time.perf_counter()
    stats = Stats()
    mc, root = prepare(spec, prog)
    result = Result(Verified(), stats, spec)

    def finish(verdict):
        result.verdict = verdict
        stats.paths = stats.leaves + stats.pruned
        stats.elapsed = time.perf_counter() - t0
        return result

    stats.solver_calls += 1
    first = solver.solve(root.pc)
    if isinstance(first, solver.Unsat):
        stats.warnings.append("VacuousPre: the precondition is unsatisfiable")
        return finish(Verified())

    undecided = []
    work = [root]
    budget = max_runs
    while work:
        run = work.pop()
        budget -= 1
        if budget < 0:
            return finish(Unknown(f"more than {max_runs} execution states"))
        if run.outcome is None and store is not None and run.prepare():
            applied = store.try_apply(run, spec, mc, stats)
            if applied:
                work.append(run)
                continue
        if run.outcome is None:
            children = run.advance()
            if len(children) > 1:
                stats.forks += 1
            live = []
            for child in children:
                if child.grew:
                    child.grew = False
                    stats.solver_calls += 1
                    if isinstance(solver.solve(child.pc), solver.Unsat):
                        stats.pruned += 1
                        continue
                live.append(child)
            # depth first, first branch first
            work.extend(reversed(live))
            continue
        stats.leaves += 1
        stats.steps += run.steps
        result.max_steps = max(result.max_steps, run.steps)
        result.leaves.append(run)
        cond, reason = violation(spec, run, mc)
        if cond is None:
            undecided.append(reason)
            continue
        if isinstance(cond, VBool) and not cond.value:
            continue
        stats.solver_calls += 1
        answer = solver.solve(run.pc.extend(cond))
        if isinstance(answer, solver.Unsat):
            continue
        if isinstance(answer, solver.Unknown):
            undecided.append(f"could not decide the postcondition: {answer.reason}")
            continue
        model = complete_model(spec, answer.model)
        violated, outcome, concrete = replay(prog, spec, model)
        if violated:
            return finish(Falsified(model, tuple(concrete.trace)))
        undecided.append("a candidate counterexample did not replay")
    if undecided:
        return finish(Unknown(undecided[0]))
    return finish(Verified())


def verify_static(spec: HoareSpec, prog: Program) -> Result:
    return explore(replace(spec, symbols=tuple(replace(d, value=None) for d in spec.symbols)), prog)


def verify_concolic(spec: HoareSpec, prog: Program) -> Result:
    if not spec.bound:
        raise SpecError("concolic mode needs at least one bound symbol")
    return explore(spec, prog)


def verify_selective(spec: HoareSpec, prog: Program, store) -> Result:
    return explore(spec, prog, store)


def verify(spec: HoareSpec, prog: Program, mode: Optional[str] = None, store=None) -> Result:
    mode = mode or spec.mode
    if mode == "static":
        return verify_static(spec, prog)
    if mode == "concolic":
        return verify_concolic(spec, prog)
    if mode == "selective":
        return verify_selective(spec, prog, store)
    raise SpecError(f"unknown mode {mode}")


def dump_state(run: Run) -> str:
    return germ.dump(run.m, only_used=True)


__all__ = [
    "Falsified", "Result", "Stats", "Stuck", "SymMachine", "SymRun", "Unknown", "Unsupported",
    "Verified", "dump_state", "explore", "memory_equal", "payload_equal", "prepare", "verify",
    "verify_concolic", "verify_selective", "verify_static", "violation",
]
