"""Tokenizer for the Solidity 0.4 subset."""

from __future__ import annotations

import re
from dataclasses import dataclass


class FrontendError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.message = message
        self.line = line
        self.col = col


class LexError(FrontendError):
    pass


class ParseError(FrontendError):
    def __init__(self, message: str, line: int = 0, col: int = 0, expected=()):
        super().__init__(message, line, col)
        self.expected = tuple(expected)


class UnsupportedConstruct(ParseError):
    pass


class TranslateError(FrontendError):
    pass


@dataclass(frozen=True)
class SourceUnit:
    text: str
    name: str = "<input>"

    def line_text(self, n: int) -> str:
        lines = self.text.splitlines()
        return lines[n - 1] if 0 < n <= len(lines) else ""


@dataclass(frozen=True)
class Token:
    kind: str  # kw | ident | number | string | op | punct | semi | eof
    text: str
    line: int
    col: int

    def __repr__(self) -> str:
        return f"{self.kind}:{self.text!r}@{self.line}:{self.col}"


KEYWORDS = frozenset("""
    contract function struct mapping public private internal external constant view
    pure payable returns return if else while for throw true false bool address string
    var assembly modifier event emit import pragma library interface do break continue
    new delete byte bytes int uint is using enum
""".split())

ETHER_UNITS = frozenset("wei szabo finney ether seconds minutes hours days weeks years".split())

_SIZED = re.compile(r"(u?int(8|16|24|32|40|48|56|64|72|80|88|96|104|112|120|128|136|144|152|160|168|176|184|192|200|208|216|224|232|240|248|256)|bytes([1-9]|[12][0-9]|3[0-2]))$")

OPERATORS = sorted("""
    ** <<= >>= << >> <= >= == != && || ++ -- += -= *= /= %= |= &= ^= =>
    + - * / % < > = ! ~ & | ^ ? :
""".split(), key=len, reverse=True)
PUNCT = set("(){}[].,")

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<lc>//[^\n]*)|(?P<bc>/\*)"
    r"|(?P<num>0[xX][0-9a-fA-F]+|\d+)"
    r"|(?P<ident>[A-Za-z_$][A-Za-z0-9_$]*)"
    r"|(?P<str>[\"'])"
)


def is_type_keyword(text: str) -> bool:
    return text in ("uint", "int", "bool", "address", "string", "byte", "bytes") or bool(_SIZED.match(text))


def tokenize(src) -> list:
    """Token list ending with an ``eof`` token; raises LexError with a position."""
    if isinstance(src, str):
        src = SourceUnit(src)
    text = src.text
    tokens = []
    pos, line, line_start = 0, 1, 0
    n = len(text)
    while pos < n:
        col = pos - line_start + 1
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            for op in OPERATORS:
                if text.startswith(op, pos):
                    tokens.append(Token("op", op, line, col))
                    pos += len(op)
                    break
            else:
                ch = text[pos]
                if ch == ";":
                    tokens.append(Token("semi", ch, line, col))
                elif ch in PUNCT:
                    tokens.append(Token("punct", ch, line, col))
                else:
                    raise LexError(f"unknown character {ch!r}", line, col)
                pos += 1
            continue
        kind = m.lastgroup
        if kind == "ws" or kind == "lc":
            pos = m.end()
        elif kind == "nl":
            pos = m.end()
            line += 1
            line_start = pos
        elif kind == "bc":
            end = text.find("*/", pos + 2)
            if end < 0:
                raise LexError("unterminated comment", line, col)
            chunk = text[pos:end + 2]
            nls = chunk.count("\n")
            if nls:
                line += nls
                line_start = pos + chunk.rfind("\n") + 1
            pos = end + 2
        elif kind == "num":
            tokens.append(Token("number", m.group(), line, col))
            pos = m.end()
        elif kind == "ident":
            word = m.group()
            tokens.append(Token("kw" if word in KEYWORDS or is_type_keyword(word) else "ident",
                                word, line, col))
            pos = m.end()
        else:
            quote = m.group()
            i = pos + 1
            buf = []
            while True:
                if i >= n or text[i] == "\n":
                    raise LexError("unterminated string", line, col)
                c = text[i]
                if c == "\\" and i + 1 < n:
                    buf.append({"n": "\n", "t": "\t"}.get(text[i + 1], text[i + 1]))
                    i += 2
                    continue
                if c == quote:
                    break
                buf.append(c)
                i += 1
            tokens.append(Token("string", "".join(buf), line, col))
            pos = i + 1
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens
