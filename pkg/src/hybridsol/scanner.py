"""Pattern-driven vulnerability scanning over the IR.

Each feature is a matcher applied to every statement together with its
syntactic context: the enclosing function, the guard conditions that dominate
it, and the statement that follows it in the same block.  Domination is read
off the structured control flow: a statement is dominated by the conditions
of the If/While it sits in, by earlier ``requires`` calls in enclosing
blocks, and by earlier ``if (c) throw`` statements (whose fall-through path
implies ``!c``).  Nested ``Seq`` blocks are flattened into their parent, so a
hoisted ``send`` and the statement consuming its result are siblings.

The matchers are syntactic and may raise false alarms; the positive and
negative corpus files define what each one is expected to report.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .ir import (
    Assign, Contract, Ebinop, Econst, Efield, Eindex, Estruct, Eunop, For, Fun, FunCall,
    If, Return, Seq, SpecialRef, Throw, While, children,
)
from .irtext import show_expr, show_stmt_inline
from .program import Program
from .stdlib import REQUIRES, SEND_FAMILY
from .types import Special, TInt
from .values import VInt

COMPARISONS = frozenset({"<", "<=", ">", ">=", "==", "!="})
WRAPPING_OPS = frozenset({"+", "-", "*", "**", "<<"})
DIVISION_OPS = frozenset({"/", "%"})


@dataclass(frozen=True)
class Finding:
    feature: str
    statement: object
    line: int = field(compare=False)
    note: str = ""
    function: Optional[str] = None

    def render(self, source_name: str) -> str:
        return f"{self.feature} {source_name}:{self.line} {show_stmt_inline(self.statement)}"


@dataclass(frozen=True)
class Context:
    function: Optional[str]
    guards: tuple            # dominating condition expressions
    next_stmt: object        # following statement in the same block, or None
    reaches: dict = field(compare=False, hash=False, default_factory=dict)  # call-graph closure


@dataclass(frozen=True)
class Feature:
    id: str
    description: str
    matcher: Callable  # (statement, Context) -> list of notes


@dataclass
class ScanReport:
    source_name: str
    findings: dict  # feature id -> [Finding, ...] in program order

    @property
    def empty(self) -> bool:
        return not any(self.findings.values())

    def all_findings(self) -> list:
        return [f for fid in self.findings for f in self.findings[fid]]

    def lines(self) -> list:
        return [f.render(self.source_name) for f in self.all_findings()]


# -- expression helpers ---------------------------------------------------------------------

def _subexprs(e):
    """Pre-order traversal of an expression tree."""
    if e is None:
        return
    yield e
    if isinstance(e, Ebinop):
        yield from _subexprs(e.lhs)
        yield from _subexprs(e.rhs)
    elif isinstance(e, Eunop):
        yield from _subexprs(e.arg)
    elif isinstance(e, Efield):
        if not isinstance(e.base, SpecialRef):
            yield from _subexprs(e.base)
    elif isinstance(e, Eindex):
        yield from _subexprs(e.base)
        yield from _subexprs(e.key)
    elif isinstance(e, Estruct):
        for _, x in e.members:
            yield from _subexprs(x)


def own_exprs(s) -> tuple:
    """Expressions evaluated by ``s`` itself (not by its sub-statements)."""
    if isinstance(s, Assign):
        return (s.lhs, s.rhs)
    if isinstance(s, (If, While, For)):
        return (s.cond,)
    if isinstance(s, FunCall):
        return tuple(s.args)
    if isinstance(s, Return):
        return (s.e,) if s.e is not None else ()
    return ()


def _atoms(cond):
    """Comparison atoms of a condition, looking through !, && and ||."""
    if isinstance(cond, Ebinop) and cond.op in ("&&", "||"):
        yield from _atoms(cond.lhs)
        yield from _atoms(cond.rhs)
    elif isinstance(cond, Eunop) and cond.op == "!":
        yield from _atoms(cond.arg)
    elif isinstance(cond, Ebinop) and cond.op in COMPARISONS:
        yield cond


def _guarded(operand, guards) -> bool:
    return any(operand in (a.lhs, a.rhs) for g in guards for a in _atoms(g))


def _literal(e) -> Optional[int]:
    if isinstance(e, Econst) and isinstance(e.value, VInt):
        return e.value.value
    return None


def _reads_send_result(e) -> bool:
    return any(isinstance(x, Efield) and isinstance(x.base, SpecialRef)
               and x.base.which is Special.SEND_RE for x in _subexprs(e))


def _is_requires(s) -> bool:
    return isinstance(s, FunCall) and s.callee.name == REQUIRES


def _throws(s) -> bool:
    if isinstance(s, Throw):
        return True
    if isinstance(s, Seq) and s.stmts:
        return _throws(s.stmts[-1])
    return False


# -- matchers -------------------------------------------------------------------------------

def match_unchecked_send(s, ctx: Context) -> list:
    if not (isinstance(s, FunCall) and s.callee.name in SEND_FAMILY):
        return []
    nxt = ctx.next_stmt
    if nxt is not None:
        if isinstance(nxt, (If, While, For)) and _reads_send_result(nxt.cond):
            return []
        if isinstance(nxt, (FunCall, Assign, Return)) and any(_reads_send_result(e) for e in own_exprs(nxt)):
            return []
    return [f"result of {SEND_FAMILY[s.callee.name]} to {show_expr(s.args[0])} is never checked"]


def _cannot_wrap(e: Ebinop) -> bool:
    a, b = _literal(e.lhs), _literal(e.rhs)
    if a is not None and b is not None:
        v = e.lhs.value
        ty = TInt(v.width, v.signed)
        try:
            n = {"+": a + b, "-": a - b, "*": a * b}.get(e.op)
            if n is None:
                n = a ** b if e.op == "**" else a << b
        except (ValueError, OverflowError):
            return False
        return ty.lo <= n <= ty.hi
    if e.op == "+":
        return 0 in (a, b)
    if e.op == "-":
        return b == 0
    if e.op == "*":
        return a in (0, 1) or b in (0, 1)
    if e.op == "**":
        return a in (0, 1) or b in (0, 1)
    return b == 0  # <<


def match_integer_overflow(s, ctx: Context) -> list:
    notes = []
    for root in own_exprs(s):
        for e in _subexprs(root):
            if not (isinstance(e, Ebinop) and e.op in WRAPPING_OPS):
                continue
            if not _is_int(e.lhs) or _cannot_wrap(e):
                continue
            if _guarded(e.lhs, ctx.guards) or _guarded(e.rhs, ctx.guards):
                continue
            notes.append(f"{show_expr(e)} may wrap around")
    return notes


def match_divide_by_zero(s, ctx: Context) -> list:
    notes = []
    for root in own_exprs(s):
        for e in _subexprs(root):
            if not (isinstance(e, Ebinop) and e.op in DIVISION_OPS):
                continue
            d = _literal(e.rhs)
            if d is not None:
                if d == 0:
                    notes.append(f"{show_expr(e)} divides by the literal 0")
                continue
            if not _guarded(e.rhs, ctx.guards):
                notes.append(f"denominator {show_expr(e.rhs)} is never checked against zero")
    return notes


def match_stack_overflow(s, ctx: Context) -> list:
    if not isinstance(s, FunCall) or ctx.function is None:
        return []
    if ctx.function not in ctx.reaches.get(s.callee.name, ()):
        return []
    if any(True for g in ctx.guards for _ in _atoms(g)):
        return []
    return [f"unguarded recursive call to {s.callee.name}"]


def _is_int(e) -> bool:
    t = getattr(e, "ty", None)
    if isinstance(e, Econst):
        return isinstance(e.value, VInt) and not e.value.is_address
    return isinstance(t, TInt)


FEATURES = {
    f.id: f for f in (
        Feature("unchecked_send", "send-family call whose result is not consumed", match_unchecked_send),
        Feature("integer_overflow", "wrapping arithmetic without a dominating bound check",
                match_integer_overflow),
        Feature("divide_by_zero", "division without a dominating nonzero check", match_divide_by_zero),
        Feature("stack_overflow", "recursion without a dominating guard", match_stack_overflow),
    )
}


# -- traversal ------------------------------------------------------------------------------

def _flatten(stmts) -> list:
    out = []
    for s in stmts:
        if isinstance(s, Seq):
            out.extend(_flatten(s.stmts))
        else:
            out.append(s)
    return out


def call_graph(stmts) -> dict:
    """function name -> set of user functions it calls directly."""
    funs = {}

    def calls(body, acc):
        for s in body:
            if isinstance(s, FunCall):
                acc.add(s.callee.name)
            if not isinstance(s, Fun):
                calls(children(s), acc)

    def visit(body):
        for s in body:
            if isinstance(s, Fun):
                acc = set()
                calls(s.body, acc)
                funs[s.name] = acc
            elif isinstance(s, Contract):
                visit(s.body)
    visit(stmts)
    return {f: {g for g in callees if g in funs} for f, callees in funs.items()}


def reachability(graph: dict) -> dict:
    out = {}
    for f in graph:
        seen, todo = set(), list(graph[f])
        while todo:
            g = todo.pop()
            if g not in seen:
                seen.add(g)
                todo.extend(graph.get(g, ()))
        out[f] = seen
    return out


def _statements(prog) -> tuple:
    if isinstance(prog, Program):
        return tuple(prog.stmts)
    if isinstance(prog, (list, tuple)):
        return tuple(prog)
    return (prog,)


def _count(stmts) -> int:
    return sum(1 + _count(children(s)) for s in stmts)


def _sites(prog, depth: Optional[int]):
    """(statement, Context) pairs in program order, at most ``depth`` of them."""
    stmts = _statements(prog)
    graph = call_graph(stmts)
    reaches = reachability(graph)
    budget = [_count(stmts) if depth is None else depth]

    def block(body, function, guards):
        flat = _flatten(body)
        local = list(guards)
        for i, s in enumerate(flat):
            if budget[0] <= 0:
                return
            nxt = flat[i + 1] if i + 1 < len(flat) else None
            yield from stmt(s, function, tuple(local), nxt)
            if _is_requires(s):
                local.extend(s.args)
            elif isinstance(s, If) and (_throws(s.then) or _throws(s.else_)):
                local.append(s.cond)

    def stmt(s, function, guards, nxt):
        budget[0] -= 1
        yield s, Context(function, guards, nxt, reaches)
        if isinstance(s, Contract):
            yield from block(s.body, function, ())
        elif isinstance(s, Fun):
            yield from block(s.body, s.name, ())
        elif isinstance(s, If):
            yield from block((s.then,), function, guards + (s.cond,))
            yield from block((s.else_,), function, guards + (s.cond,))
        elif isinstance(s, While):
            yield from block((s.body,), function, guards + (s.cond,))
        elif isinstance(s, For):
            yield from block((s.init,), function, guards)
            inner = guards + (s.cond,)
            yield from block((s.body,), function, inner)
            yield from block((s.step,), function, inner)

    yield from block(stmts, None, ())


def _findings(prog, feature: Feature, depth: Optional[int]):
    for s, ctx in _sites(prog, depth):
        for note in feature.matcher(s, ctx):
            yield Finding(feature.id, s, s.line, note, ctx.function)


def _feature(f) -> Feature:
    if isinstance(f, Feature):
        return f
    try:
        return FEATURES[f]
    except KeyError:
        raise ValueError(f"unknown feature {f!r}; known: {', '.join(FEATURES)}") from None


def scan(prog, f, depth: Optional[int] = None):
    """First statement offending feature ``f`` in program order, or None."""
    for finding in _findings(prog, _feature(f), depth):
        return finding.statement
    return None


def scan_all(prog, features: Optional[Sequence] = None, depth: Optional[int] = None) -> ScanReport:
    chosen = [_feature(f) for f in (features if features is not None else FEATURES)]
    name = prog.source_name if isinstance(prog, Program) else "<ir>"
    return ScanReport(name, {f.id: list(_findings(prog, f, depth)) for f in chosen})


__all__ = [
    "FEATURES", "Context", "Feature", "Finding", "ScanReport", "call_graph", "own_exprs",
    "reachability", "scan", "scan_all",
]
