"""Type layer of the IR and label addresses."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Union

INT_WIDTHS = (8, 16, 32, 64, 128, 256)
ADDRESS_BITS = 160


@dataclass(frozen=True)
class TUndef:
    def __str__(self) -> str:
        return "Tundef"


@dataclass(frozen=True)
class TInt:
    width: int = 256
    signed: bool = False

    def __post_init__(self):
        if self.width not in INT_WIDTHS:
            raise ValueError(f"unsupported integer width {self.width}")

    @property
    def lo(self) -> int:
        return -(1 << (self.width - 1)) if self.signed else 0

    @property
    def hi(self) -> int:
        return (1 << (self.width - 1)) - 1 if self.signed else (1 << self.width) - 1

    def __str__(self) -> str:
        return f"{'int' if self.signed else 'uint'}{self.width}"


@dataclass(frozen=True)
class TFloat:
    def __str__(self) -> str:
        return "Tfloat"


@dataclass(frozen=True)
class TBool:
    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class TString:
    def __str__(self) -> str:
        return "string"


@dataclass(frozen=True)
class TBytes:
    length: int

    def __post_init__(self):
        if not 1 <= self.length <= 32:
            raise ValueError(f"bytes length {self.length} outside 1..32")

    def __str__(self) -> str:
        return f"bytes{self.length}"


@dataclass(frozen=True)
class TAddress:
    def __str__(self) -> str:
        return "address"


@dataclass(frozen=True)
class TArray:
    elem: "LType"
    length: Optional[int] = None

    def __post_init__(self):
        if isinstance(self.elem, TUndef):
            raise ValueError("array element type cannot be Tundef")

    def __str__(self) -> str:
        return f"{self.elem}[{'' if self.length is None else self.length}]"


@dataclass(frozen=True)
class TMapping:
    key: "LType"
    val: "LType"

    def __post_init__(self):
        if not isinstance(self.key, (TInt, TBool, TBytes, TAddress)):
            raise ValueError(f"mapping key must be scalar, got {self.key}")

    def __str__(self) -> str:
        return f"mapping({self.key} => {self.val})"


@dataclass(frozen=True)
class TStruct:
    name: str

    def __str__(self) -> str:
        return f"struct {self.name}"


@dataclass(frozen=True)
class TFun:
    params: tuple = ()
    ret: "LType" = TUndef()

    def __str__(self) -> str:
        return f"function({', '.join(map(str, self.params))}) -> {self.ret}"


@dataclass(frozen=True)
class TContract:
    name: str

    def __str__(self) -> str:
        return f"contract {self.name}"


LType = Union[TUndef, TInt, TFloat, TBool, TString, TBytes, TAddress,
              TArray, TMapping, TStruct, TFun, TContract]

SCALAR_TYPES = (TInt, TBool, TBytes, TAddress)


class Special(enum.Enum):
    """Reserved cells hosting the standard-library structures."""

    INIT = "_0xinit"
    SEND = "_0xsend"
    SEND_RE = "_0xsend_re"
    CALL = "_0xcall"
    MSG = "_0xmsg"
    ADDRESS = "_0xaddress"
    BLOCK = "_0xblock"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, order=True)
class Numbered:
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("label address index must be nonnegative")

    def __str__(self) -> str:
        return f"0x{self.index:08x}"


LabelAddress = Union[Numbered, Special]


def parse_label(text: str) -> LabelAddress:
    text = text.strip()
    for s in Special:
        if s.value == text:
            return s
    if text.startswith("_0x"):
        text = text[1:]
    return Numbered(int(text, 16))


def uint(width: int = 256) -> TInt:
    return TInt(width, False)


def sint(width: int = 256) -> TInt:
    return TInt(width, True)
