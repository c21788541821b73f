"""Random well-typed programs, divergence shrinking and the differential campaign."""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

from . import fether, oracle
from .ir import (
    Assign, Ebinop, Econst, Efield, Efun, Eindex, Epar, Estruct, Eunop, Evar, For, Fun,
    FunCall, If, Return, Seq, Snil, SpecialRef, StructDecl, Throw, Var, While, children,
    typecheck_program,
)
from .irtext import pretty
from .program import Program
from .stdlib import REQUIRES, StdLib
from .types import Special, TAddress, TArray, TBool, TInt, TMapping, TStruct, TUndef
from .values import FALSE, TRUE, VInt

FUZZ_LIB = StdLib(word_bits=8)
U8 = TInt(8, False)
I8 = TInt(8, True)
U16 = TInt(16, False)
BOOL = TBool()
ADDR = TAddress()
MAP = TMapping(U8, U8)
STRUCT = TStruct("S")
ARR = TArray(U8, 3)
STRUCT_DECL = StructDecl("S", ((U8, "a"), (BOOL, "b")))
VAR_TYPES = (U8, U8, I8, U16, BOOL, BOOL, ADDR, MAP, STRUCT, ARR)
INT_TYPES = (U8, I8, U16)
ARITH = ("+", "-", "*", "/", "%", "&", "|", "^", "<<", ">>", "**")


def count_statements(stmts) -> int:
    return sum(1 + count_statements(children(s)) for s in stmts)


@dataclass
class GenConfig:
    max_stmts: int = 30
    max_depth: int = 3
    memory_size: int = 64
    fuel: fether.Fuel = field(default_factory=lambda: fether.Fuel(300, 300, 300))


class ProgramGenerator:
    def __init__(self, rng: random.Random, cfg: GenConfig = GenConfig()):
        self.rng = rng
        self.cfg = cfg
        self.vars: dict = {}
        self.params: dict = {}
        self.funcs: dict = {}
        self.budget = 0
        self.in_function = False

    # expressions

    def const(self, t):
        r = self.rng
        if isinstance(t, TInt):
            edge = [t.lo, t.lo + 1, -1, 0, 1, 2, t.hi - 1, t.hi]
            n = r.choice(edge) if r.random() < 0.5 else r.randint(t.lo, t.hi)
            n = max(t.lo, min(t.hi, n))
            return Econst(VInt.of(t, n))
        if t == BOOL:
            return Econst(r.choice((TRUE, FALSE)))
        if t == ADDR:
            return Econst(VInt.address(r.choice((0, 1, 0xABC, 2 ** 160 - 1))))
        return None

    def names_of(self, t):
        out = [Evar(n, ty) for n, ty in self.vars.items() if ty == t]
        out += [Epar(n, ty) for n, ty in self.params.items() if ty == t]
        return out

    def expr(self, t, depth: int = 0):
        r = self.rng
        leaf = depth >= self.cfg.max_depth or r.random() < 0.35
        if t in (MAP, ARR):
            names = self.names_of(t)
            return r.choice(names) if names else None
        if t == STRUCT:
            names = self.names_of(t)
            if names and (leaf or r.random() < 0.5):
                return r.choice(names)
            return Estruct("S", (("a", self.expr(U8, depth + 1)), ("b", self.expr(BOOL, depth + 1))))
        options = [self.const(t)] + self.names_of(t)
        if t == U8:
            options += [Efield(SpecialRef(Special.MSG), ("values",), U8)]
            if self.names_of(STRUCT):
                options.append(Efield(r.choice(self.names_of(STRUCT)), ("a",), U8))
        if t == BOOL:
            options.append(Efield(SpecialRef(Special.SEND_RE), (), BOOL))
            if self.names_of(STRUCT):
                options.append(Efield(r.choice(self.names_of(STRUCT)), ("b",), BOOL))
        if t == ADDR:
            options.append(Efield(SpecialRef(Special.MSG), ("sender",), ADDR))
        if leaf:
            return r.choice(options)
        if isinstance(t, TInt):
            k = r.random()
            if k < 0.55:
                op = r.choice(ARITH)
                rhs_t = U8 if op in ("<<", ">>") and r.random() < 0.5 else t
                rhs = self.expr(rhs_t, depth + 1)
                if op in ("/", "%", "**") and r.random() < 0.7:
                    # keep most divisors nonzero and most exponents nonnegative
                    rhs = Ebinop("|", rhs, Econst(VInt.of(rhs_t, 1)))
                    if rhs_t.signed:
                        rhs = Ebinop("&", rhs, Econst(VInt.of(rhs_t, rhs_t.hi)))
                return Ebinop(op, self.expr(t, depth + 1), rhs)
            if k < 0.65:
                return Eunop(r.choice(("-", "~")), self.expr(t, depth + 1))
            if t == U8 and k < 0.85:
                if self.names_of(MAP) and r.random() < 0.6:
                    return Eindex(r.choice(self.names_of(MAP)), self.expr(U8, depth + 1))
                if self.names_of(ARR):
                    key = self.const(U8) if r.random() < 0.3 else Econst(VInt.of(U8, r.randint(0, 2)))
                    return Eindex(r.choice(self.names_of(ARR)), key)
            return r.choice(options)
        if t == BOOL:
            k = r.random()
            if k < 0.4:
                it = r.choice(INT_TYPES)
                return Ebinop(r.choice(("<", "<=", ">", ">=", "==", "!=")),
                              self.expr(it, depth + 1), self.expr(it, depth + 1))
            if k < 0.6:
                return Ebinop(r.choice(("&&", "||")), self.expr(BOOL, depth + 1), self.expr(BOOL, depth + 1))
            if k < 0.7:
                return Eunop("!", self.expr(BOOL, depth + 1))
            if k < 0.8:
                return Ebinop(r.choice(("==", "!=")), self.expr(ADDR, depth + 1), self.expr(ADDR, depth + 1))
            return r.choice(options)
        return r.choice(options)

    def lvalue(self):
        r = self.rng
        pool = list(self.vars.items())
        if self.in_function:
            pool += list(self.params.items())
        name, t = r.choice(pool)
        base = Epar(name, t) if name in self.params and name not in self.vars else Evar(name, t)
        if t == MAP and r.random() < 0.8:
            return Eindex(base, self.expr(U8, 1)), U8
        if t == ARR and r.random() < 0.8:
            key = Econst(VInt.of(U8, r.randint(0, 3 if r.random() < 0.2 else 2)))
            return Eindex(base, key), U8
        if t == STRUCT and r.random() < 0.6:
            f, ft = r.choice((("a", U8), ("b", BOOL)))
            return Efield(base, (f,), ft), ft
        return base, t

    # statements

    def block(self, n: int):
        stmts = []
        while len(stmts) < n and self.budget > 0:
            stmts.append(self.stmt())
        if len(stmts) == 1:
            return stmts[0]
        self.budget -= 1  # the Snil or Seq node
        return Seq(tuple(stmts)) if stmts else Snil()

    def stmt(self):
        r = self.rng
        self.budget -= 1
        k = r.random()
        if k < 0.4 or self.budget < 3:
            lhs, t = self.lvalue()
            rhs = self.expr(t)
            if rhs is None:
                rhs = lhs
            return Assign(lhs, rhs)
        if k < 0.55:
            return If(self.expr(BOOL), self.block(r.randint(1, 3)), self.block(r.randint(0, 2)))
        if k < 0.62:
            counters = [n for n, t in self.vars.items() if t == U8]
            if counters and r.random() < 0.8:
                c = Evar(r.choice(counters), U8)
                bound = Econst(VInt.of(U8, r.randint(0, 4)))
                self.budget -= 2  # counter reset or Seq node, and the increment
                body = self.block(r.randint(1, 2))
                step = Assign(c, Ebinop("+", c, Econst(VInt.of(U8, 1))))
                if r.random() < 0.5:
                    return For(Assign(c, Econst(VInt.of(U8, 0))), Ebinop("<", c, bound), step, body)
                return While(Ebinop("<", c, bound), Seq((body, step)))
            return While(self.expr(BOOL), self.block(r.randint(1, 2)))
        if k < 0.7:
            return FunCall(Efun(r.choice(("_0xsend", "_0xtransfer", "_0xcall")), BOOL),
                           (self.expr(ADDR), self.expr(U8)))
        if k < 0.73:
            return FunCall(Efun(REQUIRES, TUndef()), (self.expr(BOOL),))
        if k < 0.74:
            return Throw()
        if k < 0.82 and self.in_function:
            return Return()
        if k < 0.9 and self.funcs:
            name = r.choice(sorted(self.funcs))
            return FunCall(Efun(name, TUndef()), tuple(self.expr(pt) for pt in self.funcs[name]))
        if k < 0.95:
            return Seq(tuple(self.stmt() for _ in range(r.randint(1, 2)) if self.budget > 0) or (Snil(),))
        return Snil()

    def program(self) -> list:
        r = self.rng
        self.budget = max(1, self.cfg.max_stmts)
        self.vars, self.params, self.funcs = {}, {}, {}
        decls = []
        for i in range(r.randint(2, 6)):
            t = r.choice(VAR_TYPES)
            self.vars[f"g{i}"] = t
        if STRUCT in self.vars.values():
            decls.append(STRUCT_DECL)
            self.budget -= 1
        for n, t in self.vars.items():
            decls.append(Var("public", Evar(n, t)))
            self.budget -= 1
        funs = []
        for j in range(r.randint(0, 2)):
            if self.budget < 4:
                break
            pname, pt = f"p{j}", r.choice((U8, BOOL))
            self.funcs[f"f{j}"] = (pt,)
            self.params = {pname: pt}
            self.in_function = True
            self.budget -= 1
            body = [self.stmt() for _ in range(r.randint(1, 3)) if self.budget > 0]
            self.in_function = False
            self.params = {}
            funs.append(Fun("public", Efun(f"f{j}", TUndef()), (Epar(pname, pt),), tuple(body)))
        body = []
        while self.budget > 0:
            body.append(self.stmt())
        out = decls + funs + body
        while count_statements(out) > self.cfg.max_stmts and len(out) > len(decls):
            out.pop()  # nested blocks can overdraw the budget by a few nodes
        return out


def make_program(stmts, lib: StdLib = FUZZ_LIB) -> Program:
    return Program.from_statements(stmts, lib)


def send_script(seed: int):
    """Deterministic send outcomes: the i-th send succeeds iff bit i of ``seed`` is set."""
    def policy(i, kind, target, amount):
        return bool((seed >> (i % 16)) & 1)
    return policy


def check_case(stmts, cfg: GenConfig, swap_if: bool = False, send_seed: int = 0xA5A5):
    """Agreement for one statement list, or None if it does not type-check."""
    prog = make_program(stmts)
    if not typecheck_program(prog.stmts, prog.lib).ok:
        return None
    m0 = fether.fresh_memory(prog, cfg.memory_size)
    return oracle.check_equiv(prog, m0, cfg.fuel, send_policy=send_script(send_seed), swap_if=swap_if)


# -- shrinking ----------------------------------------------------------------------------

def _candidates(stmts):
    """Smaller variants: drop a statement, or replace a compound by a part of it."""
    for i in range(len(stmts)):
        yield stmts[:i] + stmts[i + 1:]
    for i, s in enumerate(stmts):
        for smaller in _shrink_stmt(s):
            yield stmts[:i] + [smaller] + stmts[i + 1:]


def _shrink_stmt(s):
    if isinstance(s, Seq):
        for c in s.stmts:
            yield c
        for i in range(len(s.stmts)):
            rest = s.stmts[:i] + s.stmts[i + 1:]
            yield Seq(rest) if rest else Snil()
        for i, c in enumerate(s.stmts):
            for smaller in _shrink_stmt(c):
                yield Seq(s.stmts[:i] + (smaller,) + s.stmts[i + 1:])
    elif isinstance(s, If):
        yield s.then
        yield s.else_
        for t in _shrink_stmt(s.then):
            yield replace(s, then=t)
        for t in _shrink_stmt(s.else_):
            yield replace(s, else_=t)
        if not isinstance(s.else_, Snil):
            yield replace(s, else_=Snil())
    elif isinstance(s, While):
        yield s.body
        for b in _shrink_stmt(s.body):
            yield replace(s, body=b)
    elif isinstance(s, For):
        yield s.body
        yield s.init
        for b in _shrink_stmt(s.body):
            yield replace(s, body=b)
    elif isinstance(s, (Assign, FunCall, Return, Throw)):
        yield Snil()
    elif isinstance(s, Fun):
        for i in range(len(s.body)):
            yield replace(s, body=s.body[:i] + s.body[i + 1:])
        for i, c in enumerate(s.body):
            for smaller in _shrink_stmt(c):
                yield replace(s, body=s.body[:i] + (smaller,) + s.body[i + 1:])


def shrink(stmts, diverges, limit: int = 2000) -> list:
    """Greedy reduction of ``stmts`` while ``diverges`` keeps holding."""
    cur = list(stmts)
    tries = 0
    progress = True
    while progress and tries < limit:
        progress = False
        for cand in _candidates(cur):
            tries += 1
            if count_statements(cand) < count_statements(cur) and diverges(cand):
                cur = list(cand)
                progress = True
                break
            if tries >= limit:
                break
    return cur


# -- campaign -----------------------------------------------------------------------------

@dataclass
class CaseResult:
    index: int
    verdict: str  # equal | divergent | skipped
    program: Optional[list] = None
    detail: Optional[oracle.Divergent] = None


@dataclass
class CampaignReport:
    cases: int = 0
    checked: int = 0
    skipped: int = 0
    divergences: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.divergences


def case_rng(seed: int, index: int) -> random.Random:
    return random.Random(f"{seed}:{index}")


def run_case(args) -> CaseResult:
    seed, index, cfg, swap_if = args
    gen = ProgramGenerator(case_rng(seed, index), cfg)
    for _ in range(5):
        stmts = gen.program()
        verdict = check_case(stmts, cfg, swap_if)
        if verdict is None:
            continue
        if isinstance(verdict, oracle.Divergent):
            return CaseResult(index, "divergent", stmts, verdict)
        return CaseResult(index, "equal")
    return CaseResult(index, "skipped")


def _chunk(args):
    return [run_case(a) for a in args]


def campaign(count: int, max_stmts: int = 30, seed: int = 42, workers: int = 1,
             swap_if: bool = False, stop_after: Optional[int] = None,
             minimize: bool = True) -> CampaignReport:
    """Generate ``count`` programs and compare the two evaluators on each."""
    cfg = GenConfig(max_stmts=max_stmts)
    jobs = [(seed, i, cfg, swap_if) for i in range(count)]
    results = []
    if workers > 1 and count > 1:
        size = max(1, count // (workers * 8))
        chunks = [jobs[i:i + size] for i in range(0, count, size)]
        with ProcessPoolExecutor(workers) as pool:
            for part in pool.map(_chunk, chunks):
                results.extend(part)
    else:
        for job in jobs:
            res = run_case(job)
            results.append(res)
            if stop_after is not None and res.verdict == "divergent":
                if sum(r.verdict == "divergent" for r in results) >= stop_after:
                    break
    report = CampaignReport(cases=len(results))
    for res in sorted(results, key=lambda r: r.index):
        if res.verdict == "skipped":
            report.skipped += 1
            continue
        report.checked += 1
        if res.verdict == "divergent":
            prog = res.program
            if minimize:
                prog = shrink(prog, lambda c: isinstance(check_case(c, cfg, swap_if), oracle.Divergent))
                res.detail = check_case(prog, cfg, swap_if)
            report.divergences.append(CaseResult(res.index, "divergent", prog, res.detail))
    return report


def format_repro(case: CaseResult) -> str:
    d = case.detail
    head = f"divergence in case {case.index} ({count_statements(case.program)} statements)"
    body = pretty(case.program)
    tail = f"interpreter: {d.left}\nreference:   {d.right}\n" if d is not None else ""
    return f"{head}\n{body}{tail}"
