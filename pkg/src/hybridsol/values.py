"""Memory payloads: the fourteen value variants stored in a cell."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Union

from pyrsistent import PMap, pmap

from .types import (
    ADDRESS_BITS, LabelAddress, LType, TAddress, TArray, TBool, TBytes,
    TFloat, TInt, TMapping, TString, TStruct, TUndef,
)


class NoZero(ValueError):
    """The type has no canonical zero value."""


class _Show:
    def __str__(self) -> str:
        from .irtext import show_value
        return show_value(self)


@dataclass(frozen=True)
class VUndef(_Show):
    pass


@dataclass(frozen=True)
class VInt(_Show):
    """Integer stored as its residue modulo 2**width.

    Addresses are 160-bit unsigned integers; no other value uses width 160.
    """

    width: int
    signed: bool
    bits: int

    def __post_init__(self):
        object.__setattr__(self, "bits", self.bits % (1 << self.width))

    @classmethod
    def of(cls, ty: TInt, n: int) -> "VInt":
        return cls(ty.width, ty.signed, n)

    @classmethod
    def address(cls, n: int) -> "VInt":
        return cls(ADDRESS_BITS, False, n)

    @property
    def value(self) -> int:
        if self.signed and self.bits >> (self.width - 1):
            return self.bits - (1 << self.width)
        return self.bits

    @property
    def is_address(self) -> bool:
        return self.width == ADDRESS_BITS


@dataclass(frozen=True)
class VFloat(_Show):
    bits64: int


@dataclass(frozen=True)
class VBool(_Show):
    value: bool


@dataclass(frozen=True)
class VString(_Show):
    value: str


@dataclass(frozen=True)
class VBytes(_Show):
    data: bytes


@dataclass(frozen=True)
class VStruct(_Show):
    name: str
    members: tuple  # ((field, payload), ...) in layout order

    def get(self, name: str):
        for k, v in self.members:
            if k == name:
                return v
        raise KeyError(name)

    def set(self, name: str, value) -> "VStruct":
        if name not in self.fields:
            raise KeyError(name)
        return VStruct(self.name, tuple((k, value if k == name else v)
                                        for k, v in self.members))

    @property
    def fields(self) -> tuple:
        return tuple(k for k, _ in self.members)


@dataclass(frozen=True)
class VArray(_Show):
    elem: LType
    items: tuple


@dataclass(frozen=True)
class VMapping(_Show):
    """Key/value table; absent keys read as ``default``."""

    key: LType
    val: LType
    default: Any
    entries: PMap = field(default_factory=pmap)

    def get(self, k):
        return self.entries.get(k, self.default)

    def set(self, k, v) -> "VMapping":
        if v == self.default:
            return VMapping(self.key, self.val, self.default, self.entries.discard(k))
        return VMapping(self.key, self.val, self.default, self.entries.set(k, v))


@dataclass(frozen=True)
class VStatement(_Show):
    stmt: Any


@dataclass(frozen=True)
class VPtrVar(_Show):
    addr: LabelAddress


@dataclass(frozen=True)
class VPtrPar(_Show):
    addr: LabelAddress


@dataclass(frozen=True)
class VPtrFun(_Show):
    addr: LabelAddress


@dataclass(frozen=True)
class VPtrContract(_Show):
    addr: LabelAddress


Value = Union[VUndef, VInt, VFloat, VBool, VString, VBytes, VStruct, VArray,
              VMapping, VStatement, VPtrVar, VPtrPar, VPtrFun, VPtrContract]

VALUE_VARIANTS = (VUndef, VInt, VFloat, VBool, VString, VBytes, VStruct, VArray,
                  VMapping, VStatement, VPtrVar, VPtrPar, VPtrFun, VPtrContract)

UNDEF = VUndef()
TRUE = VBool(True)
FALSE = VBool(False)


def zero_value(t: LType, structs: Optional[Mapping[str, tuple]] = None) -> Value:
    """Canonical default of ``t``; ``structs`` maps struct names to ((type, field), ...)."""
    if isinstance(t, TInt):
        return VInt.of(t, 0)
    if isinstance(t, TBool):
        return FALSE
    if isinstance(t, TAddress):
        return VInt.address(0)
    if isinstance(t, TString):
        return VString("")
    if isinstance(t, TBytes):
        return VBytes(bytes(t.length))
    if isinstance(t, TFloat):
        return VFloat(0)
    if isinstance(t, TStruct):
        if structs is None or t.name not in structs:
            raise NoZero(f"unknown struct layout {t.name}")
        return VStruct(t.name, tuple((f, zero_value(ft, structs))
                                     for ft, f in structs[t.name]))
    if isinstance(t, TArray):
        n = t.length or 0
        return VArray(t.elem, tuple(zero_value(t.elem, structs) for _ in range(n)))
    if isinstance(t, TMapping):
        return VMapping(t.key, t.val, zero_value(t.val, structs))
    raise NoZero(f"no zero value for {t}")


def value_type(v) -> LType:
    """Runtime type of a concrete value (Tundef for pointers, statements, undef)."""
    if isinstance(v, VInt):
        return TAddress() if v.is_address else TInt(v.width, v.signed)
    if isinstance(v, VBool):
        return TBool()
    if isinstance(v, VString):
        return TString()
    if isinstance(v, VBytes):
        return TBytes(len(v.data))
    if isinstance(v, VFloat):
        return TFloat()
    if isinstance(v, VStruct):
        return TStruct(v.name)
    if isinstance(v, VArray):
        return TArray(v.elem, len(v.items))
    if isinstance(v, VMapping):
        return TMapping(v.key, v.val)
    return TUndef()


def conforms(v, t: LType) -> bool:
    """Whether concrete ``v`` inhabits ``t`` (dynamic arrays match any length)."""
    vt = value_type(v)
    if isinstance(t, TArray) and isinstance(vt, TArray):
        return vt.elem == t.elem and (t.length is None or t.length == vt.length)
    return vt == t


def is_concrete(v) -> bool:
    return isinstance(v, VALUE_VARIANTS)

