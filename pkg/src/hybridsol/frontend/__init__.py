"""Solidity-subset frontend: tokenizer, parser and IR translator."""

from __future__ import annotations

from typing import Optional

from ..program import Program
from ..stdlib import DEFAULT_LIB, StdLib
from .lexer import (
    FrontendError, LexError, ParseError, SourceUnit, Token, TranslateError,
    UnsupportedConstruct, tokenize,
)
from .parser import parse, parse_expression
from .translate import Translator, translate


__all__ = [
    "FrontendError", "LexError", "ParseError", "SourceUnit", "Token", "TranslateError",
    "UnsupportedConstruct", "Translator", "compile_source", "parse", "parse_expression",
    "tokenize", "translate",
]


def compile_source(text: str, name: str = "<input>", lib: StdLib = DEFAULT_LIB,
                   memory_size: Optional[int] = None) -> Program:
    """Tokenize, parse and translate Solidity text into a loaded Program."""
    if not text.strip():
        raise FrontendError("empty source")
    unit = SourceUnit(text, name)
    stmts, table = translate(parse(tokenize(unit), name), lib, memory_size)
    return Program(tuple(stmts), table, lib, name, tuple(text.splitlines()))
