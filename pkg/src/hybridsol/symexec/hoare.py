"""Hoare-triple descriptions and their concrete meaning.

A ``HoareSpec`` names an entry function (or a slice of its body), declares
typed symbols, initialises memory from symbols and literals, constrains the
symbols, and states a postcondition.  This module also holds the concrete
side of verification: building an initial memory from a model, running it
through the interpreter and deciding whether the postcondition holds.  The
symbolic engine reports a counterexample only after this replay confirms it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .. import germ
from ..fether import (
    EvalFailure, Fault, Fuel, Machine, Normal, OutOfGas, fresh_memory,
)
from ..oracle import observable
from ..program import Program, UnboundName
from ..types import Special, TAddress, TBool, TInt
from ..values import VMapping, VInt, VStruct, zero_value
from .symvalue import (
    TRUE, Sym, SymTypeError, const_of, holds, is_symbolic, substitute, symbols, type_of,
)

SEND_SYMBOL = "_send"
POLICIES = ("true", "false", "symbolic")
MODES = ("static", "concolic", "selective")

# spec-level names of library cells: (special, field)
SPECIAL_TARGETS = {
    "msg.value": (Special.MSG, "values"),
    "msg.sender": (Special.MSG, "sender"),
    "this.balance": (Special.ADDRESS, "balance"),
    "block.number": (Special.BLOCK, "number"),
    "block.timestamp": (Special.BLOCK, "timestamp"),
}


class SpecError(ValueError):
    pass


def send_symbol(n: int) -> str:
    return f"{SEND_SYMBOL}{n}"


@dataclass(frozen=True)
class SymbolDecl:
    name: str
    ty: object
    value: Optional[object] = None  # bound concrete value (concolic mode)

    @property
    def sym(self) -> Sym:
        return Sym(self.name, self.ty)


@dataclass(frozen=True)
class Target:
    """A memory location named from the source: ``root`` then field/key steps."""

    root: str
    path: tuple = ()

    def __str__(self) -> str:
        out = self.root
        for kind, k in self.path:
            if kind == "field":
                out += f".{k}"
            else:
                out += f"[{k}]"
        return out

    @property
    def special(self) -> Optional[tuple]:
        return SPECIAL_TARGETS.get(str(self))


_STEP = re.compile(r"\s*(?:\.\s*([A-Za-z_]\w*)|\[\s*(true|false|-?\d+|0x[0-9a-fA-F]+)\s*\])")
_ROOT = re.compile(r"\s*([A-Za-z_]\w*)")


def parse_target(text: str) -> Target:
    m = _ROOT.match(text)
    if not m:
        raise SpecError(f"bad location {text!r}")
    root, pos, path = m.group(1), m.end(), []
    while pos < len(text.rstrip()):
        s = _STEP.match(text, pos)
        if not s:
            raise SpecError(f"bad location {text!r}")
        if s.group(1):
            path.append(("field", s.group(1)))
        else:
            lit = s.group(2)
            path.append(("key", lit == "true" if lit in ("true", "false") else int(lit, 0)))
        pos = s.end()
    return Target(root, tuple(path))


@dataclass(frozen=True)
class Rollback:
    def __str__(self) -> str:
        return "rollback"


@dataclass(frozen=True)
class OutOfGasPost:
    def __str__(self) -> str:
        return "out_of_gas"


@dataclass(frozen=True)
class Assertions:
    items: tuple  # ((Target, expected SymValue), ...)


@dataclass(frozen=True)
class HoareSpec:
    name: str
    program_path: str
    entry: str
    symbols: tuple = ()
    assignments: tuple = ()  # ((Target, SymValue), ...)
    constraint: object = TRUE
    post: object = Rollback()
    fuel: Fuel = Fuel()
    mode: str = "static"
    segment: Optional[tuple] = None  # (start, end) slice of the entry body
    word_bits: int = 256
    memory_size: int = germ.DEFAULT_SPACE
    send_policy: str = "symbolic"
    source_dir: str = field(default="", compare=False)

    def symbol(self, name: str) -> Optional[SymbolDecl]:
        for d in self.symbols:
            if d.name == name:
                return d
        return None

    @property
    def bound(self) -> dict:
        return {d.name: d.value for d in self.symbols if d.value is not None}

    def valuation(self) -> dict:
        """Each declared symbol mapped to its bound value, or to itself."""
        return {d.name: d.value if d.value is not None else d.sym for d in self.symbols}

    def validate(self):
        declared = {d.name for d in self.symbols}
        used = set()
        for _, v in self.assignments:
            used |= {s.name for s in symbols(v)}
        used |= {s.name for s in symbols(self.constraint)}
        if isinstance(self.post, Assertions):
            for _, v in self.post.items:
                used |= {s.name for s in symbols(v)}
        missing = sorted(used - declared)
        if missing:
            raise SpecError(f"undeclared symbol {', '.join(missing)}")
        if not isinstance(type_of(self.constraint), TBool):
            raise SpecError("constraint is not boolean")
        if self.mode not in MODES:
            raise SpecError(f"unknown mode {self.mode}")
        if self.send_policy not in POLICIES:
            raise SpecError(f"unknown send policy {self.send_policy}")
        for d in self.symbols:
            if d.value is not None and type_of(d.value) != d.ty:
                raise SpecError(f"symbol {d.name} bound to a value of the wrong type")


# -- locations ------------------------------------------------------------------------

def _key_value(container, k):
    if isinstance(container, VMapping):
        kt = container.key
        if isinstance(kt, (TInt, TBool, TAddress)):
            return const_of(kt, k)
        raise SpecError(f"mapping key type {kt} cannot be written in a specification")
    return VInt.of(TInt(256), int(k))


def _cell_address(prog: Program, m, target: Target, function: Optional[str]) -> int:
    sp = target.special
    if sp is not None:
        return m.special_slot(sp[0])
    try:
        label = prog.table.resolve(target.root, function)
    except UnboundName:
        raise SpecError(f"unbound identifier {target.root}") from None
    return germ.MapStrategy(m.size)(label)


def _steps(target: Target) -> tuple:
    sp = target.special
    return (("field", sp[1]),) if sp is not None else target.path


def _navigate(mc: Machine, cur, steps, target):
    path = []
    for kind, k in steps:
        if kind == "field":
            if not isinstance(cur, VStruct) or k not in cur.fields:
                raise SpecError(f"{target} has no member {k}")
            path.append(("field", k))
            cur = cur.get(k)
        else:
            key = _key_value(cur, k)
            path.append(("key", key))
            try:
                cur = mc.index(cur, key)
            except EvalFailure as err:
                raise SpecError(f"{target}: {err.detail}") from None
    return cur, path


def read_target(mc: Machine, m, target: Target, function: Optional[str]):
    a = _cell_address(mc.prog, m, target, function)
    cur, _ = _navigate(mc, germ.read(m, a), _steps(target), target)
    return cur


def write_target(mc: Machine, m, target: Target, v, function: Optional[str]):
    a = _cell_address(mc.prog, m, target, function)
    cell = germ.read(m, a)
    cur, path = _navigate(mc, cell, _steps(target), target)
    try:
        have, want = type_of(cur), type_of(v)
    except SymTypeError:
        raise SpecError(f"{target} is not a scalar location") from None
    if have != want:
        raise SpecError(f"{target} holds {have} but is assigned a {want}")
    new = mc.update(cell, path, v) if path else v
    c = m.cell(a)  # keep the owner tags the loader gave the cell
    return germ.write(m, a, new, c.env_tag, c.fenv_tag)


def target_type(mc: Machine, m, target: Target, function: Optional[str]):
    return type_of(read_target(mc, m, target, function))


# -- program entry ------------------------------------------------------------------------

def entry_function(prog: Program, spec: HoareSpec):
    f = prog.function(spec.entry)
    if f is None:
        raise SpecError(f"no function {spec.entry}")
    return f


def body_of(prog: Program, spec: HoareSpec) -> tuple:
    f = entry_function(prog, spec)
    if spec.segment is None:
        return tuple(f.body)
    a, b = spec.segment
    if not 0 <= a < b <= len(f.body):
        raise SpecError(f"segment {a}:{b} outside the {len(f.body)} statements of {spec.entry}")
    return tuple(f.body[a:b])


def initial_state(mc: Machine, spec: HoareSpec, valuation: dict):
    """(memory, entry arguments) with the spec's assignments applied under ``valuation``."""
    prog = mc.prog
    f = entry_function(prog, spec)
    m = fresh_memory(prog, spec.memory_size)
    structs = prog.structs()
    params = {p.name: i for i, p in enumerate(f.params)}
    args = [zero_value(p.ty, structs) for p in f.params]
    for target, v in spec.assignments:
        v = substitute(v, valuation)
        if target.root in params and not target.path and target.special is None \
                and f"{spec.entry}.{target.root}" in prog.table:
            i = params[target.root]
            if type_of(args[i]) != type_of(v):
                raise SpecError(f"parameter {target.root} is {type_of(args[i])}, not {type_of(v)}")
            args[i] = v
            continue
        m = write_target(mc, m, target, v, spec.entry)
    if spec.segment is not None:
        # a body slice runs without the call, so parameters are stored directly
        for p, v in zip(f.params, args):
            a = germ.MapStrategy(m.size)(prog.table.resolve(p.name, spec.entry))
            m = germ.write(m, a, v, spec.entry, spec.entry)
    return m, tuple(args)


def start_run(mc: Machine, spec: HoareSpec, m0, args):
    """A fether-style run positioned at the spec's entry point."""
    from ..ir import Efun, Econst, FunCall
    if spec.segment is None:
        f = entry_function(mc.prog, spec)
        call = FunCall(Efun(spec.entry, f.sig.ret), tuple(Econst(a) for a in args))
        return mc.start(m0, [call], spec.fuel)
    return mc.start(m0, body_of(mc.prog, spec), spec.fuel, spec.entry)


# -- concrete replay ------------------------------------------------------------------------

def complete_model(spec: HoareSpec, model: dict) -> dict:
    """Model over every declared symbol: bound values, solver values, then zero."""
    out = {}
    for d in spec.symbols:
        if d.value is not None:
            out[d.name] = d.value
        elif d.name in model:
            out[d.name] = model[d.name]
        else:
            out[d.name] = const_of(d.ty, 0)
    for k in sorted(model):
        if k.startswith(SEND_SYMBOL) and k not in out:
            out[k] = model[k]
    return out


def send_script(spec: HoareSpec, model: dict, default: bool = True):
    if spec.send_policy != "symbolic":
        return spec.send_policy == "true"

    def policy(i, kind, target, amount):
        v = model.get(send_symbol(i))
        return default if v is None else v.value
    return policy


def concrete_run(prog: Program, spec: HoareSpec, model: dict, send_policy=None):
    """(initial memory, outcome) of the spec's entry under a total model."""
    mc = Machine(prog, send_script(spec, model) if send_policy is None else send_policy)
    m0, args = initial_state(mc, spec, model)
    run = start_run(mc, spec, m0, args)
    while run.outcome is None:
        run.step()
    return m0, run.outcome, run


def post_holds(prog: Program, spec: HoareSpec, m0, outcome, model: dict) -> bool:
    post = spec.post
    if isinstance(post, OutOfGasPost):
        return isinstance(outcome, OutOfGas)
    if isinstance(outcome, (OutOfGas, Fault)):
        return False
    mem = outcome.mem if isinstance(outcome, Normal) else outcome.initial
    if isinstance(post, Rollback):
        return observable(mem) == observable(m0)
    mc = Machine(prog)
    for target, expected in post.items:
        try:
            actual = read_target(mc, mem, target, spec.entry)
        except SpecError:
            return False
        want = substitute(expected, model)
        if is_symbolic(want) or is_symbolic(actual):
            raise SpecError(f"assertion on {target} is not concrete under the model")
        if actual != want:
            return False
    return True


def replay(prog: Program, spec: HoareSpec, model: dict):
    """(postcondition violated?, outcome, run) for a concrete model."""
    m0, outcome, run = concrete_run(prog, spec, model)
    return not post_holds(prog, spec, m0, outcome, model), outcome, run


def precondition_holds(spec: HoareSpec, model: dict) -> bool:
    return holds(substitute(spec.constraint, model), {})


__all__ = [
    "Assertions", "HoareSpec", "OutOfGasPost", "Rollback", "SpecError", "SymbolDecl",
    "Target", "body_of", "complete_model", "concrete_run", "entry_function",
    "initial_state", "parse_target", "post_holds", "precondition_holds", "read_target",
    "replay", "send_script", "send_symbol", "start_run", "target_type", "write_target",
]
