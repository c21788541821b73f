"""Built-in structures and functions of the contract standard library."""

from __future__ import annotations

from dataclasses import dataclass

from .types import LType, Special, TAddress, TArray, TBool, TFun, TInt, TString, TStruct, TUndef
from .values import FALSE, UNDEF, VArray, VInt, VPtrFun, VStruct

SEND_FAMILY = {"_0xsend": "send", "_0xtransfer": "transfer", "_0xcall": "call"}
REQUIRES = "_0xrequires"
BUILTINS = frozenset(SEND_FAMILY) | {REQUIRES}

EVENT_STRUCT = "SendEvent"


@dataclass(frozen=True)
class StdLib:
    """Layout descriptor; ``word_bits`` is the width of ``uint`` in library fields."""

    word_bits: int = 256

    @property
    def word(self) -> TInt:
        return TInt(self.word_bits, False)

    def send_sig(self) -> TFun:
        return TFun((TAddress(), self.word), TBool())

    def signature(self, name: str) -> TFun:
        if name in SEND_FAMILY:
            return self.send_sig()
        if name == REQUIRES:
            return TFun((TBool(),), TUndef())
        raise KeyError(name)

    def layout(self, which: Special) -> tuple:
        """((type, field), ...) of a special cell holding a struct, else ()."""
        w = self.word
        if which is Special.MSG:
            return ((TAddress(), "sender"), (w, "values"))
        if which is Special.ADDRESS:
            return ((TAddress(), "addr"), (w, "balance"), (self.send_sig(), "send"), (w, "gas"))
        if which is Special.BLOCK:
            return ((w, "number"), (w, "timestamp"))
        return ()

    def event_layout(self) -> tuple:
        return ((TString(), "kind"), (TAddress(), "target"), (self.word, "amount"), (TBool(), "result"))

    def structs(self) -> dict:
        out = {f"Str_type{s.value}": self.layout(s) for s in (Special.MSG, Special.ADDRESS, Special.BLOCK)}
        out[EVENT_STRUCT] = self.event_layout()
        return out

    def cell_type(self, which: Special) -> LType:
        if which in (Special.MSG, Special.ADDRESS, Special.BLOCK):
            return TStruct(f"Str_type{which.value}")
        if which is Special.SEND:
            return TArray(TStruct(EVENT_STRUCT))
        if which is Special.SEND_RE:
            return TBool()
        return TUndef()

    def field_type(self, which: Special, path: tuple) -> LType:
        if not path:
            return self.cell_type(which)
        if len(path) != 1:
            raise KeyError(".".join(path))
        for ty, name in self.layout(which):
            if name == path[0]:
                return ty
        raise KeyError(path[0])

    def initial_cell(self, which: Special):
        w = self.word
        if which is Special.MSG:
            return VStruct(f"Str_type{which.value}", (("sender", VInt.address(0)), ("values", VInt.of(w, 0))))
        if which is Special.ADDRESS:
            return VStruct(f"Str_type{which.value}", (
                ("addr", VInt.address(0)), ("balance", VInt.of(w, 0)),
                ("send", VPtrFun(Special.SEND)), ("gas", VInt.of(w, 0))))
        if which is Special.BLOCK:
            return VStruct(f"Str_type{which.value}", (("number", VInt.of(w, 0)), ("timestamp", VInt.of(w, 0))))
        if which is Special.SEND:
            return VArray(TStruct(EVENT_STRUCT), ())
        if which is Special.SEND_RE:
            return FALSE
        return UNDEF


DEFAULT_LIB = StdLib()
