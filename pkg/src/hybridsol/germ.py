"""Persistent address-indexed memory with metadata-carrying cells.

Machine addresses are integers: ``0 .. size-1`` are the numbered cells and
``size .. size+6`` the reserved slots of the seven special addresses.  Cells
that were never written (or were freed) are absent from the underlying map and
read as a fresh free cell, which keeps structurally equal memories equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from pyrsistent import PMap, pmap

from .stdlib import DEFAULT_LIB, StdLib
from .types import LabelAddress, Numbered, Special
from .values import UNDEF, VUndef

DEFAULT_SPACE = 256
SPECIALS = tuple(Special)

PUBLIC = "public"
INTERNAL = "internal"


class GermError(Exception):
    """Base class of memory-operation failures."""


class MapFailed(GermError):
    pass


class OutOfDomain(GermError):
    pass


class AuthDenied(GermError):
    pass


class SpaceExhausted(GermError):
    pass


class DoubleFree(GermError):
    pass


class OffsetOutOfRange(GermError):
    pass


def owner(ident: str) -> str:
    return f"owner({ident})"


@dataclass(frozen=True)
class MemoryCell:
    block_v: object = UNDEF
    size: int = 1
    env_tag: str = ""
    fenv_tag: str = ""
    occupied: bool = False
    auth: str = PUBLIC

    @property
    def occupy(self) -> str:
        return "occupied" if self.occupied else "free"

    def admits(self, env: str, fenv: str) -> bool:
        if self.auth == PUBLIC:
            return True
        if self.auth == INTERNAL:
            return env == fenv
        return self.auth == owner(env)


FREE_CELL = MemoryCell()


@dataclass(frozen=True)
class Memory:
    size: int
    cells: PMap = field(default_factory=pmap)
    throw_flag: bool = False

    def in_domain(self, a: int) -> bool:
        return 0 <= a < self.size + len(SPECIALS)

    def cell(self, a: int) -> MemoryCell:
        if not self.in_domain(a):
            raise OutOfDomain(f"machine address {a} outside 0..{self.size + len(SPECIALS) - 1}")
        return self.cells.get(a, FREE_CELL)

    def special_slot(self, which: Special) -> int:
        return self.size + SPECIALS.index(which)

    def label_of(self, a: int) -> LabelAddress:
        if a >= self.size:
            return SPECIALS[a - self.size]
        return Numbered(a)

    def set_throw(self, flag: bool = True) -> "Memory":
        return replace(self, throw_flag=flag)


class MapStrategy:
    """Default label -> machine mapping: identity on numbered, reserved slot per special."""

    def __init__(self, size: int = DEFAULT_SPACE):
        self.size = size

    def __call__(self, a: LabelAddress) -> int:
        if isinstance(a, Special):
            return self.size + SPECIALS.index(a)
        if isinstance(a, Numbered) and a.index < self.size:
            return a.index
        raise MapFailed(f"label {a} outside a space of {self.size}")


def map_label(a: LabelAddress, strategy: Callable[[LabelAddress], int]) -> int:
    return strategy(a)


def init_memory(space_size: int = DEFAULT_SPACE, lib: StdLib = DEFAULT_LIB) -> Memory:
    if space_size <= 0:
        raise ValueError("memory space must be positive")
    cells = {}
    for which in SPECIALS:
        v = lib.initial_cell(which)
        if not isinstance(v, VUndef):
            cells[space_size + SPECIALS.index(which)] = MemoryCell(
                v, 1, which.value, which.value, True, PUBLIC)
    return Memory(space_size, pmap(cells), False)


def read(m: Memory, a: int, env: str = "", fenv: str = ""):
    """Payload at ``a``, or None when out of domain or refused by the cell's auth."""
    if not m.in_domain(a):
        return None
    c = m.cells.get(a, FREE_CELL)
    if not c.admits(env, fenv):
        return None
    return c.block_v


def write(m: Memory, a: int, v, env: str = "", fenv: str = "", auth: Optional[str] = None):
    """New memory with ``v`` at ``a``; None when out of domain or refused."""
    if not m.in_domain(a):
        return None
    c = m.cells.get(a, FREE_CELL)
    if not c.admits(env, fenv):
        return None
    new = MemoryCell(v, c.size, env, fenv, True, c.auth if auth is None else auth)
    return Memory(m.size, m.cells.set(a, new), m.throw_flag)


def allocate(m: Memory, env: str = "") -> tuple:
    """(memory, address) of the lowest free numbered cell, now occupied."""
    for a in range(m.size):
        if a not in m.cells:
            cell = MemoryCell(UNDEF, 1, env, env, True, PUBLIC)
            return Memory(m.size, m.cells.set(a, cell), m.throw_flag), a
    raise SpaceExhausted(f"all {m.size} cells occupied")


def free(m: Memory, a: int, env: str = "") -> Memory:
    if not 0 <= a < m.size:
        raise OutOfDomain(f"cannot free machine address {a}")
    c = m.cells.get(a, FREE_CELL)
    if not c.occupied:
        raise DoubleFree(f"cell {a} is not allocated")
    if c.env_tag != env:
        raise AuthDenied(f"cell {a} belongs to {c.env_tag!r}, not {env!r}")
    return Memory(m.size, m.cells.discard(a), m.throw_flag)


def search(m: Memory, pred: Callable[[MemoryCell], bool]) -> Optional[int]:
    for a in range(m.size):
        if pred(m.cells.get(a, FREE_CELL)):
            return a
    return None


def offset(a: LabelAddress, delta: int, size: int = DEFAULT_SPACE) -> Numbered:
    if not isinstance(a, Numbered):
        raise OffsetOutOfRange(f"no arithmetic on special address {a}")
    n = a.index + delta
    if not 0 <= n < size:
        raise OffsetOutOfRange(f"{a} {delta:+d} leaves 0..{size - 1}")
    return Numbered(n)


def dump(m: Memory, only_used: bool = False) -> str:
    """Deterministic memory image: special cells first, then numbered cells ascending."""
    lines = []
    for which in SPECIALS:
        lines.append(_dump_line(str(which), m.cell(m.special_slot(which))))
    lines.append(f"m_throw := {'true' if m.throw_flag else 'false'}")
    for a in range(m.size):
        c = m.cells.get(a, FREE_CELL)
        if only_used and c is FREE_CELL:
            continue
        lines.append(_dump_line(str(Numbered(a)), c))
    return "\n".join(lines)


def _dump_line(label: str, c: MemoryCell) -> str:
    env = c.env_tag or "-"
    fenv = c.fenv_tag or "-"
    return f"{label} := {c.block_v} [{c.size} {env} {fenv} {c.occupy} {c.auth}]"
