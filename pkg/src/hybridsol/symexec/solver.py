"""Feasibility checking for path conditions.

The decision procedure enumerates boolean symbols and tries a finite set of
candidate values for each integer symbol.  Within the decidable fragment
(boolean structure over comparisons between symbols and constants, at most
three integer symbols per connected group) the candidate set provably
represents every ordering of the symbols relative to the constants, so a
failed search is a proof of unsatisfiability.  Outside the fragment a failed
search is only conclusive when the domains are small enough to enumerate
exhaustively; otherwise the answer is Unknown.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

from ..ir import CMP_OPS, EQ_OPS
from ..types import TBool
from ..values import VBool, VInt
from .symvalue import (
    App, Sym, const_of, domain_bounds, holds, is_symbolic, mk, symbols,
)

MAX_INT_SYMBOLS = 3
EXHAUSTIVE_LIMIT = 1 << 16
SEARCH_LIMIT = 200_000
SPREAD = MAX_INT_SYMBOLS


@dataclass(frozen=True)
class Sat:
    model: dict = field(hash=False)


@dataclass(frozen=True)
class Unsat:
    pass


@dataclass(frozen=True)
class Unknown:
    reason: str


class PathCondition:
    """Ordered conjunction; duplicates removed, ``c`` with ``!c`` detected eagerly."""

    __slots__ = ("items", "trivially_false")

    def __init__(self, items: Iterable = ()):
        self.items: tuple = ()
        self.trivially_false = False
        for c in items:
            self._add(c)

    def _add(self, c):
        if isinstance(c, VBool):
            if not c.value:
                self.trivially_false = True
            return
        if c in self.items:
            return
        if mk("!", c) in self.items:
            self.trivially_false = True
        self.items = self.items + (c,)

    def extend(self, *cs) -> "PathCondition":
        out = PathCondition(())
        out.items = self.items
        out.trivially_false = self.trivially_false
        for c in cs:
            out._add(c)
        return out

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    def __eq__(self, other):
        return isinstance(other, PathCondition) and self.items == other.items

    def __hash__(self):
        return hash(self.items)

    def __str__(self) -> str:
        return " && ".join(str(c) for c in self.items) if self.items else "true"


def _atoms(c) -> Iterable:
    """Leaves of the boolean structure of ``c``."""
    if isinstance(c, App) and c.op in ("&&", "||", "!"):
        for a in c.args:
            yield from _atoms(a)
    else:
        yield c


def _in_fragment(atom) -> bool:
    if isinstance(atom, (Sym, VBool)):
        return True
    if isinstance(atom, App) and (atom.op in CMP_OPS or atom.op in EQ_OPS):
        return all(isinstance(a, (Sym, VInt, VBool)) for a in atom.args)
    return False


def _int_symbols_of(c) -> set:
    return {s for s in symbols(c) if not isinstance(s.ty, TBool)}


def _groups(constraints, int_syms) -> list:
    """Connected components of integer symbols that share a constraint atom."""
    parent = {s: s for s in int_syms}

    def find(s):
        while parent[s] != s:
            parent[s] = parent[parent[s]]
            s = parent[s]
        return s

    for c in constraints:
        for atom in _atoms(c):
            ss = sorted(_int_symbols_of(atom), key=lambda s: s.name)
            for a, b in zip(ss, ss[1:]):
                parent[find(a)] = find(b)
    groups = {}
    for s in int_syms:
        groups.setdefault(find(s), []).append(s)
    return list(groups.values())


def _bounds(constraints, sym) -> tuple:
    """Interval for ``sym`` implied by top-level conjuncts of the form ``sym op const``."""
    lo, hi = domain_bounds(sym.ty)
    for c in constraints:
        for atom in _conjuncts(c):
            if not (isinstance(atom, App) and atom.op in CMP_OPS | EQ_OPS):
                continue
            a, b = atom.args
            op = atom.op
            if b == sym and isinstance(a, VInt):
                a, b = b, a
                op = {"<": ">", "<=": ">=", ">": "<", ">=": "<="}.get(op, op)
            if a != sym or not isinstance(b, VInt):
                continue
            k = b.value
            if op == "==":
                lo, hi = max(lo, k), min(hi, k)
            elif op == "<":
                hi = min(hi, k - 1)
            elif op == "<=":
                hi = min(hi, k)
            elif op == ">":
                lo = max(lo, k + 1)
            elif op == ">=":
                lo = max(lo, k)
    return lo, hi


def _conjuncts(c):
    if isinstance(c, App) and c.op == "&&":
        for a in c.args:
            yield from _conjuncts(a)
    else:
        yield c


def _landmarks(constraints, group, sym, lo, hi) -> list:
    """Constants near which every satisfiable ordering of ``group`` has a witness."""
    marks = {lo, hi, 0, 1}
    for c in constraints:
        for atom in _atoms(c):
            if symbols(atom) & set(group):
                for k in _consts(atom):
                    if type(k) is VInt and (k.width, k.signed) == _shape(sym):
                        marks.add(k.value)
    out = set()
    for m in marks:
        for d in range(-SPREAD, SPREAD + 1):
            if lo <= m + d <= hi:
                out.add(m + d)
    return sorted(out)


def _shape(sym):
    ty = sym.ty
    if hasattr(ty, "width"):
        return ty.width, ty.signed
    return 160, False


def _consts(v):
    if isinstance(v, VInt):
        yield v
    elif isinstance(v, App):
        for a in v.args:
            yield from _consts(a)


def solve(pc, limit: int = SEARCH_LIMIT):
    """Sat(model) | Unsat | Unknown for a conjunction of boolean constraints."""
    constraints = [c for c in pc]
    if getattr(pc, "trivially_false", False):
        return Unsat()
    live = []
    for c in constraints:
        if isinstance(c, VBool):
            if not c.value:
                return Unsat()
            continue
        live.append(c)
    syms = set()
    for c in live:
        syms |= symbols(c)
    bools = sorted((s for s in syms if isinstance(s.ty, TBool)), key=lambda s: s.name)
    ints = sorted((s for s in syms if not isinstance(s.ty, TBool)), key=lambda s: s.name)

    decidable = all(_in_fragment(a) for c in live for a in _atoms(c))
    decidable = decidable and all(len(g) <= MAX_INT_SYMBOLS for g in _groups(live, ints))

    group_of = {s: g for g in _groups(live, ints) for s in g}
    candidates = {}
    exhaustive = True
    for s in ints:
        lo, hi = _bounds(live, s)
        if lo > hi:
            return Unsat()
        if hi - lo < EXHAUSTIVE_LIMIT:
            candidates[s] = list(range(lo, hi + 1))
        else:
            exhaustive = False
            candidates[s] = _landmarks(live, group_of[s], s, lo, hi)

    space = 1 << len(bools)
    for s in ints:
        space *= len(candidates[s])
    if exhaustive and space > EXHAUSTIVE_LIMIT:
        exhaustive = False
        for s in ints:
            lo, hi = _bounds(live, s)
            candidates[s] = _landmarks(live, group_of[s], s, lo, hi)
    complete = exhaustive or decidable

    order = bools + ints
    pools = [[False, True] for _ in bools] + [candidates[s] for s in ints]
    tried = 0
    for combo in itertools.product(*pools):
        tried += 1
        if tried > limit:
            return Unknown(f"search limit of {limit} assignments reached")
        model = {s.name: const_of(s.ty, v) for s, v in zip(order, combo)}
        if all(holds(c, model) for c in live):
            return Sat(model)
    if complete:
        return Unsat()
    return Unknown("constraints outside the decidable fragment")


def check_sat(pc) -> Optional[bool]:
    """True / False for Sat / Unsat, None when undecided."""
    r = solve(pc)
    if isinstance(r, Sat):
        return True
    if isinstance(r, Unsat):
        return False
    return None


def entails(pc, c) -> Optional[bool]:
    """Whether ``pc`` implies ``c``: decided by refuting ``pc && !c``."""
    if not is_symbolic(c):
        return bool(c.value)
    r = solve(PathCondition(tuple(pc) + (mk("!", c),)))
    if isinstance(r, Unsat):
        return True
    if isinstance(r, Sat):
        return False
    return None
