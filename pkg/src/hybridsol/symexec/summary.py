"""Verified block summaries and their reuse during selective execution.

A summary records that a statement block, started in a state where some
locations hold values satisfying a constraint, always rolls back (or always
leaves given locations at given values).  It is created only from a Verified
result of a spec restricted to that block.  During selective execution, a run
about to execute a block with the same content hash takes the summary's
effect instead of expanding the block, provided its path condition entails
the instantiated constraint and a handful of side conditions hold:

* the block reads only locations the summary binds (its verification saw the
  other cells at their zero values, so it says nothing about them),
* the run is in the same function and has at least the fuel the block used,
* for value summaries, the block writes only the asserted locations and every
  verified path took the same number of steps.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from typing import Optional

from ..fether import Thrown
from ..ir import (
    Assign, Ebinop, Econst, Efield, Efun, Eindex, Epar, Estruct, Eunop, Evar, For, FunCall,
    If, Return, Seq, SpecialRef, Var, While,
)
from ..irtext import show_stmt
from ..stdlib import REQUIRES
from . import solver
from .engine import Result, Unsupported, Verified
from .hoare import (
    Assertions, HoareSpec, Rollback, SPECIAL_TARGETS, SpecError, body_of,
    parse_target, read_target, write_target,
)
from .notation import parse_expr, parse_type, show_expr, show_type
from .symvalue import Sym, SymTypeError, conj, mk, substitute, symbols, type_of

_SPECIAL_NAMES = {v: k for k, v in SPECIAL_TARGETS.items()}
CALLS = "<calls>"


def segment_id(stmts) -> str:
    """Content hash of a statement block's canonical text."""
    text = "\n".join(show_stmt(s) for s in stmts)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:32]


# -- syntactic read/write sets -------------------------------------------------------------

def _expr_reads(e, out: set):
    if isinstance(e, (Evar, Epar)):
        out.add(e.name)
    elif isinstance(e, Efield):
        if isinstance(e.base, SpecialRef):
            key = (e.base.which, e.path[0]) if e.path else None
            out.add(_SPECIAL_NAMES.get(key, f"<{e.base.which.value}>"))
        else:
            _expr_reads(e.base, out)
    elif isinstance(e, Eindex):
        _expr_reads(e.base, out)
        _expr_reads(e.key, out)
    elif isinstance(e, Ebinop):
        _expr_reads(e.lhs, out)
        _expr_reads(e.rhs, out)
    elif isinstance(e, Eunop):
        _expr_reads(e.arg, out)
    elif isinstance(e, Estruct):
        for _, x in e.members:
            _expr_reads(x, out)
    elif isinstance(e, (Econst, Efun)) or e is None:
        pass


def _lvalue_root(e):
    while isinstance(e, (Eindex, Efield)):
        e = e.base
    return e.name if isinstance(e, (Evar, Epar)) else None


def access_sets(stmts) -> tuple:
    """(locations read, locations written) by a block, by root name."""
    reads, writes = set(), set()

    def visit(s):
        if isinstance(s, Seq):
            for x in s.stmts:
                visit(x)
        elif isinstance(s, Var):
            writes.add(s.decl.name)
        elif isinstance(s, Assign):
            _expr_reads(s.rhs, reads)
            lhs = s.lhs
            while isinstance(lhs, (Eindex, Efield)):
                if isinstance(lhs, Eindex):
                    _expr_reads(lhs.key, reads)
                lhs = lhs.base
            root = _lvalue_root(s.lhs) or CALLS
            writes.add(root)
            if not isinstance(s.lhs, (Evar, Epar)):
                reads.add(root)  # a partial update keeps the rest of the cell
        elif isinstance(s, If):
            _expr_reads(s.cond, reads)
            visit(s.then)
            visit(s.else_)
        elif isinstance(s, While):
            _expr_reads(s.cond, reads)
            visit(s.body)
        elif isinstance(s, For):
            visit(s.init)
            _expr_reads(s.cond, reads)
            visit(s.step)
            visit(s.body)
        elif isinstance(s, FunCall):
            for a in s.args:
                _expr_reads(a, reads)
            if s.callee.name != REQUIRES:
                writes.add(CALLS)
        elif isinstance(s, Return):
            _expr_reads(s.e, reads)
    for s in stmts:
        visit(s)
    return reads, writes


# -- summaries ------------------------------------------------------------------------------

@dataclass(frozen=True)
class Summary:
    segment: str
    function: str
    length: int
    symbols: tuple            # ((name, type), ...)
    bindings: tuple           # ((Target, SymValue), ...)
    constraint: object
    post: object              # Rollback() or Assertions
    reads: tuple
    writes: tuple
    min_steps: int
    max_steps: int
    k_val: int
    source: str = field(default="", compare=False)

    @property
    def closed(self) -> bool:
        bound = {str(t) for t, _ in self.bindings if not t.path or t.special is not None}
        return set(self.reads) <= bound

    def to_json(self) -> dict:
        post = ("rollback" if isinstance(self.post, Rollback)
                else {"assert": [[str(t), show_expr(v)] for t, v in self.post.items]})
        return {
            "segment": self.segment,
            "function": self.function,
            "length": self.length,
            "symbols": [[n, show_type(t)] for n, t in self.symbols],
            "bindings": [[str(t), show_expr(v)] for t, v in self.bindings],
            "constraint": show_expr(self.constraint),
            "post": post,
            "reads": list(self.reads),
            "writes": list(self.writes),
            "min_steps": self.min_steps,
            "max_steps": self.max_steps,
            "k_val": self.k_val,
            "source": self.source,
        }

    @classmethod
    def from_json(cls, d: dict) -> "Summary":
        syms = {n: parse_type(t) for n, t in d["symbols"]}
        bindings = tuple((parse_target(t), parse_expr(v, syms)) for t, v in d["bindings"])
        if d["post"] == "rollback":
            post = Rollback()
        else:
            post = Assertions(tuple((parse_target(t), parse_expr(v, syms)) for t, v in d["post"]["assert"]))
        return cls(d["segment"], d["function"], d["length"], tuple(syms.items()), bindings,
                   parse_expr(d["constraint"], syms), post, tuple(d["reads"]), tuple(d["writes"]),
                   d["min_steps"], d["max_steps"], d["k_val"], d.get("source", ""))


def summarize(result: Result, prog) -> Summary:
    """Summary of a Verified result over a body segment."""
    spec: HoareSpec = result.spec
    if not isinstance(result.verdict, Verified):
        raise SpecError("only Verified results can be stored as summaries")
    if spec.segment is None:
        raise SpecError("summaries are made from segment specs")
    if not isinstance(spec.post, (Rollback, Assertions)):
        raise SpecError("out-of-gas results are not reusable as summaries")
    stmts = body_of(prog, spec)
    reads, writes = access_sets(stmts)
    bound = spec.bound
    bindings = tuple((t, substitute(v, bound)) for t, v in spec.assignments)
    constraint = substitute(spec.constraint, bound)
    post = spec.post
    if isinstance(post, Assertions):
        post = Assertions(tuple((t, substitute(v, bound)) for t, v in post.items))
    steps = [r.steps for r in result.leaves] or [0]
    free = tuple((d.name, d.ty) for d in spec.symbols if d.value is None)
    return Summary(segment_id(stmts), spec.entry, len(stmts), free, bindings, constraint, post,
                   tuple(sorted(reads)), tuple(sorted(writes)), min(steps), max(steps),
                   spec.fuel.k_val, spec.name)


class SummaryStore:
    """Summaries indexed by segment hash, optionally persisted to a directory."""

    def __init__(self, directory: Optional[str] = None):
        self.directory = directory
        self.by_id: dict = {}
        if directory and os.path.isdir(directory):
            for name in sorted(os.listdir(directory)):
                if name.endswith(".json"):
                    with open(os.path.join(directory, name), encoding="utf-8") as fh:
                        for d in json.load(fh):
                            self._index(Summary.from_json(d))

    def _index(self, s: Summary):
        lst = self.by_id.setdefault(s.segment, [])
        if s not in lst:
            lst.append(s)

    def __len__(self):
        return sum(len(v) for v in self.by_id.values())

    def lengths(self) -> list:
        return sorted({s.length for v in self.by_id.values() for s in v})

    def add(self, s: Summary):
        self._index(s)
        if self.directory:
            os.makedirs(self.directory, exist_ok=True)
            path = os.path.join(self.directory, f"{s.segment}.json")
            with open(path, "w", encoding="utf-8") as fh:
                json.dump([x.to_json() for x in self.by_id[s.segment]], fh, indent=1, sort_keys=True)
                fh.write("\n")

    # -- selective execution hook ------------------------------------------------------

    def try_apply(self, run, spec: HoareSpec, mc, stats) -> bool:
        for n in self.lengths():
            stmts = run.top_statements(n)
            if stmts is None:
                continue
            matches = self.by_id.get(segment_id(stmts), [])
            if not matches:
                continue
            for s in matches:
                if self._apply(s, run, mc, stats):
                    stats.summary_hits += 1
                    return True
            stats.expansions += 1
        return False

    def _apply(self, s: Summary, run, mc, stats) -> bool:
        if run.env.function != s.function or not s.closed:
            return False
        if run.env.gas < s.max_steps or run.k_stmt < s.max_steps or run.fuel.k_val < s.k_val:
            return False
        inst = self.instantiate(s, run, mc)
        if inst is None:
            return False
        required, valuation = inst
        stats.solver_calls += 1
        if solver.entails(run.pc, required) is not True:
            return False
        if isinstance(s.post, Rollback):
            run.stack = run.stack[:len(run.stack) - s.length]
            run.outcome = Thrown(run.m0, run.steps + s.max_steps)
            return True
        if s.min_steps != s.max_steps or CALLS in s.writes:
            return False
        asserted = {str(t) for t, _ in s.post.items if not t.path}
        if not set(s.writes) <= asserted:
            return False
        m = run.m
        for t, v in s.post.items:
            if not _names(v) <= set(valuation):
                return False
            try:
                m = write_target(mc, m, t, substitute(v, valuation), s.function)
            except (SpecError, Unsupported):
                return False
        run.stack = run.stack[:len(run.stack) - s.length]
        run.m = m
        run.env = replace(run.env, gas=run.env.gas - s.max_steps)
        run.k_stmt -= s.max_steps
        run.steps += s.max_steps
        return True

    @staticmethod
    def instantiate(s: Summary, run, mc):
        """(constraint the run must entail, summary symbol valuation) or None."""
        names = dict(s.symbols)
        valuation, required = {}, []
        later = []
        for t, v in s.bindings:
            try:
                current = read_target(mc, run.m, t, s.function)
            except (SpecError, Unsupported):
                return None
            if isinstance(v, Sym) and v.name in names and v.name not in valuation:
                try:
                    if type_of(current) != v.ty:
                        return None
                except SymTypeError:
                    return None
                valuation[v.name] = current
            else:
                later.append((current, v))
        for current, v in later:
            if not _names(v) <= set(valuation):
                return None
            try:
                required.append(mk("==", current, substitute(v, valuation)))
            except SymTypeError:
                return None
        if not _names(s.constraint) <= set(valuation):
            return None
        return conj(*required, substitute(s.constraint, valuation)), valuation


def _names(v) -> set:
    return {x.name for x in symbols(v)}


__all__ = ["Summary", "SummaryStore", "access_sets", "segment_id", "summarize"]
