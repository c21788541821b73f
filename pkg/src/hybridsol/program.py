"""Loaded programs: IR statements plus the address table and struct layouts.

Identifier namespaces in the address table:

* global variables and struct names use their plain name,
* function names are keyed ``name()``,
* parameters and locals are keyed ``function.name``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .ir import Contract, Fun, Seq, StructDecl, Var, children, find_function, iter_functions
from .stdlib import DEFAULT_LIB, StdLib
from .types import Numbered

ADDRESS_BASE = 0x0A


class AddressError(Exception):
    pass


class AddressCollision(AddressError):
    pass


class AddressExhausted(AddressError):
    pass


class UnboundName(AddressError, KeyError):
    pass


def function_key(name: str) -> str:
    return f"{name}()"


def local_key(function: str, name: str) -> str:
    return f"{function}.{name}"


@dataclass
class AddressTable:
    base: int = ADDRESS_BASE
    limit: Optional[int] = None
    entries: dict = field(default_factory=dict)
    next_free: int = -1

    def __post_init__(self):
        if self.next_free < 0:
            self.next_free = self.base

    def assign(self, key: str) -> Numbered:
        if key in self.entries:
            raise AddressCollision(f"identifier {key} declared twice")
        if self.limit is not None and self.next_free >= self.limit:
            raise AddressExhausted(f"no address left for {key} in a space of {self.limit}")
        a = Numbered(self.next_free)
        self.entries[key] = a
        self.next_free += 1
        return a

    def __contains__(self, key: str) -> bool:
        return key in self.entries

    def __getitem__(self, key: str) -> Numbered:
        return self.entries[key]

    def resolve(self, name: str, function: Optional[str] = None) -> Numbered:
        """Address of a variable as seen from inside ``function``."""
        if function is not None:
            a = self.entries.get(local_key(function, name))
            if a is not None:
                return a
        a = self.entries.get(name)
        if a is None:
            raise UnboundName(name)
        return a

    def function(self, name: str) -> Numbered:
        a = self.entries.get(function_key(name))
        if a is None:
            raise UnboundName(function_key(name))
        return a

    def name_of(self, a: Numbered) -> Optional[str]:
        for k, v in self.entries.items():
            if v == a:
                return k
        return None

    def dump(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.entries.items())

    @classmethod
    def load(cls, text: str) -> "AddressTable":
        t = cls()
        for line in text.splitlines():
            if not line.strip():
                continue
            k, _, v = line.partition(" = ")
            t.entries[k.strip()] = Numbered(int(v.strip(), 16))
        if t.entries:
            t.next_free = max(a.index for a in t.entries.values()) + 1
        return t


def _local_vars(stmts):
    for s in stmts:
        if isinstance(s, Var):
            yield s.decl.name
        elif not isinstance(s, Fun):
            yield from _local_vars(children(s))


def allocate_addresses(stmts, base: int = ADDRESS_BASE, limit: Optional[int] = None) -> AddressTable:
    """Declaration-order allocation.

    Per contract: members (state variables, structs, mappings), then the
    contract name, then the function names, then each function's parameters
    and locals.  Top-level declarations outside a contract come first.
    """
    table = AddressTable(base, limit)
    funs = []

    def members(body):
        for s in body:
            if isinstance(s, Var):
                table.assign(s.decl.name)
            elif isinstance(s, StructDecl):
                table.assign(s.name)
            elif isinstance(s, Fun):
                funs.append(s)
            elif isinstance(s, Contract):
                continue
            else:
                members(children(s))

    def place_functions(fs):
        for f in fs:
            table.assign(function_key(f.name))
        for f in fs:
            for p in f.params:
                table.assign(local_key(f.name, p.name))
            for v in _local_vars(f.body):
                table.assign(local_key(f.name, v))

    members(stmts)
    place_functions(funs)
    for s in stmts:
        if isinstance(s, Contract):
            funs = []
            members(s.body)
            table.assign(s.name.name)
            place_functions(funs)
    return table


@dataclass
class Program:
    stmts: tuple
    table: AddressTable
    lib: StdLib = DEFAULT_LIB
    source_name: str = "<ir>"
    source_lines: tuple = ()

    @classmethod
    def from_statements(cls, stmts, lib: StdLib = DEFAULT_LIB, table: Optional[AddressTable] = None,
                        limit: Optional[int] = None, source_name: str = "<ir>") -> "Program":
        stmts = tuple(stmts)
        if table is None:
            table = allocate_addresses(stmts, limit=limit)
        return cls(stmts, table, lib, source_name)

    def structs(self) -> dict:
        out = dict(self.lib.structs())
        for s in _all_stmts(self.stmts):
            if isinstance(s, StructDecl):
                out[s.name] = tuple(s.members)
        return out

    def function(self, name: str) -> Optional[Fun]:
        return find_function(self.stmts, name)

    def functions(self) -> list:
        return list(iter_functions(self.stmts))

    def contract(self) -> Optional[Contract]:
        for s in self.stmts:
            if isinstance(s, Contract):
                return s
        return None

    def global_vars(self) -> list:
        """Var declarations outside functions, in program order."""
        out = []

        def visit(body):
            for s in body:
                if isinstance(s, Var):
                    out.append(s)
                elif not isinstance(s, Fun):
                    visit(children(s))
        visit(self.stmts)
        return out

    def body(self) -> tuple:
        """Top-level executable statements (everything outside declarations)."""
        return tuple(s for s in self.stmts if not isinstance(s, (Contract, Fun, StructDecl)))


def _all_stmts(stmts):
    for s in stmts:
        yield s
        yield from _all_stmts(children(s))


def unwrap_seq(s) -> tuple:
    return tuple(s.stmts) if isinstance(s, Seq) else (s,)
