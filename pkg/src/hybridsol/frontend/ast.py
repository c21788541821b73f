"""Syntax tree of the Solidity subset, as produced by the parser."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


# -- type names ----------------------------------------------------------------

@dataclass(frozen=True)
class ElementaryType:
    name: str


@dataclass(frozen=True)
class MappingType:
    key: object
    val: object


@dataclass(frozen=True)
class ArrayType:
    elem: object
    length: Optional[int] = None


@dataclass(frozen=True)
class UserType:
    name: str


# -- expressions ---------------------------------------------------------------

@dataclass(frozen=True)
class Ident:
    name: str
    line: int = 0


@dataclass(frozen=True)
class NumberLit:
    text: str
    line: int = 0

    @property
    def value(self) -> int:
        return int(self.text, 0)


@dataclass(frozen=True)
class BoolLit:
    value: bool
    line: int = 0


@dataclass(frozen=True)
class StringLit:
    value: str
    line: int = 0


@dataclass(frozen=True)
class Member:
    base: object
    name: str
    line: int = 0


@dataclass(frozen=True)
class Index:
    base: object
    key: object
    line: int = 0


@dataclass(frozen=True)
class Call:
    func: object
    args: tuple
    line: int = 0


@dataclass(frozen=True)
class Unary:
    op: str
    arg: object
    line: int = 0


@dataclass(frozen=True)
class Postfix:
    op: str
    arg: object
    line: int = 0


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: object
    rhs: object
    line: int = 0


@dataclass(frozen=True)
class AssignExpr:
    op: str  # "=", "+=", ...
    target: object
    value: object
    line: int = 0


# -- statements ----------------------------------------------------------------

@dataclass(frozen=True)
class Block:
    stmts: tuple
    line: int = 0


@dataclass(frozen=True)
class IfStmt:
    cond: object
    then: object
    else_: Optional[object]
    line: int = 0


@dataclass(frozen=True)
class WhileStmt:
    cond: object
    body: object
    line: int = 0


@dataclass(frozen=True)
class ForStmt:
    init: Optional[object]
    cond: Optional[object]
    step: Optional[object]
    body: object
    line: int = 0


@dataclass(frozen=True)
class VarDeclStmt:
    type: object
    name: str
    init: Optional[object]
    line: int = 0


@dataclass(frozen=True)
class ExprStmt:
    expr: object
    line: int = 0


@dataclass(frozen=True)
class ThrowStmt:
    line: int = 0


@dataclass(frozen=True)
class ReturnStmt:
    expr: Optional[object]
    line: int = 0


# -- declarations ----------------------------------------------------------------

@dataclass(frozen=True)
class StateVarDecl:
    type: object
    name: str
    visibility: Optional[str]
    line: int = 0


@dataclass(frozen=True)
class StructDef:
    name: str
    members: tuple  # ((type, name), ...)
    line: int = 0


@dataclass(frozen=True)
class FunctionDef:
    name: str
    params: tuple  # ((type, name), ...)
    visibility: Optional[str]
    returns: Optional[object]
    body: Block
    flags: tuple = ()
    line: int = 0


@dataclass(frozen=True)
class ContractDef:
    name: str
    parents: tuple
    members: tuple
    line: int = 0

    @property
    def state_vars(self) -> list:
        """Non-mapping state variables."""
        return [m for m in self.members if isinstance(m, StateVarDecl) and not isinstance(m.type, MappingType)]

    @property
    def structs(self) -> list:
        return [m for m in self.members if isinstance(m, StructDef)]

    @property
    def mappings(self) -> list:
        return [m for m in self.members if isinstance(m, StateVarDecl) and isinstance(m.type, MappingType)]

    @property
    def functions(self) -> list:
        return [m for m in self.members if isinstance(m, FunctionDef)]


@dataclass(frozen=True)
class SourceFile:
    contracts: tuple
    name: str = field(default="<input>", compare=False)
