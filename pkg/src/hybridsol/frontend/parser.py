"""Recursive-descent parser for the Solidity 0.4 subset.

Binary operators follow the Solidity 0.4 precedence table, loosest first:
``||``, ``&&``, equality, relational, ``|``, ``^``, ``&``, shifts, additive,
multiplicative, ``**``.
"""

from __future__ import annotations

from . import ast as A
from .lexer import ETHER_UNITS, ParseError, Token, UnsupportedConstruct, is_type_keyword, tokenize

BINARY_LEVELS = (
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", ">", "<=", ">="),
    ("|",),
    ("^",),
    ("&",),
    ("<<", ">>"),
    ("+", "-"),
    ("*", "/", "%"),
)
ASSIGN_OPS = ("=", "+=", "-=", "*=", "/=", "%=", "|=", "&=", "^=", "<<=", ">>=")
VISIBILITY = ("public", "private", "internal", "external")
MUTABILITY = ("constant", "view", "pure", "payable")
UNSUPPORTED_KW = {
    "assembly": "inline assembly",
    "modifier": "function modifiers",
    "event": "events",
    "emit": "events",
    "import": "imports",
    "library": "libraries",
    "interface": "interfaces",
    "enum": "enums",
    "using": "using-for directives",
    "do": "do-while loops",
    "break": "break",
    "continue": "continue",
    "new": "contract creation",
    "delete": "delete",
    "var": "untyped var declarations",
}


class Parser:
    def __init__(self, tokens: list):
        self.toks = tokens
        self.pos = 0

    # -- token helpers --------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, text: str, kind=None) -> bool:
        t = self.tok
        return t.text == text and t.kind != "string" and (kind is None or t.kind == kind)

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, expected=(), message=None):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        if message is None:
            message = f"expected {' or '.join(map(repr, expected))}, found {found}"
        return ParseError(message, t.line, t.col, expected)

    def unsupported(self, what: str, t: Token = None):
        t = t or self.tok
        return UnsupportedConstruct(f"unsupported construct: {what}", t.line, t.col)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error((text,))
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            if self.tok.kind == "kw" and self.tok.text in UNSUPPORTED_KW:
                raise self.unsupported(UNSUPPORTED_KW[self.tok.text])
            raise self.error(("identifier",))
        return self.advance()

    def check_unsupported(self):
        t = self.tok
        if t.kind == "kw" and t.text in UNSUPPORTED_KW:
            raise self.unsupported(UNSUPPORTED_KW[t.text])

    # -- top level ------------------------------------------------------------

    def source(self, name: str = "<input>") -> A.SourceFile:
        contracts = []
        while self.tok.kind != "eof":
            if self.at("pragma"):
                while not (self.tok.kind in ("semi", "eof")):
                    self.advance()
                self.expect(";")
                continue
            self.check_unsupported()
            contracts.append(self.contract())
        return A.SourceFile(tuple(contracts), name)

    def contract(self) -> A.ContractDef:
        start = self.expect("contract")
        name = self.ident().text
        parents = []
        if self.at("is"):
            self.advance()
            parents.append(self.ident().text)
            while self.at(","):
                self.advance()
                parents.append(self.ident().text)
        self.expect("{")
        members = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error(("}",))
            members.append(self.member())
        self.expect("}")
        return A.ContractDef(name, tuple(parents), tuple(members), start.line)

    def member(self):
        self.check_unsupported()
        if self.at("struct"):
            return self.struct_def()
        if self.at("function"):
            return self.function_def()
        return self.state_var()

    def struct_def(self) -> A.StructDef:
        start = self.expect("struct")
        name = self.ident().text
        self.expect("{")
        members = []
        while not self.at("}"):
            ty = self.type_name()
            members.append((ty, self.ident().text))
            self.expect(";")
        self.expect("}")
        return A.StructDef(name, tuple(members), start.line)

    def state_var(self) -> A.StateVarDecl:
        start = self.tok
        ty = self.type_name()
        vis = None
        while self.tok.text in VISIBILITY + ("constant",) and self.tok.kind == "kw":
            word = self.advance().text
            if word in VISIBILITY:
                vis = word
        name = self.ident().text
        if self.at("="):
            raise self.unsupported("state variable initializer")
        self.expect(";")
        return A.StateVarDecl(ty, name, vis, start.line)

    def function_def(self) -> A.FunctionDef:
        start = self.expect("function")
        name = self.ident().text
        params = self.param_list()
        vis, flags, returns = None, [], None
        while True:
            t = self.tok
            if t.kind == "kw" and t.text in VISIBILITY:
                vis = self.advance().text
            elif t.kind == "kw" and t.text in MUTABILITY:
                flags.append(self.advance().text)
            elif self.at("returns"):
                self.advance()
                rets = self.param_list()
                if len(rets) > 1:
                    raise self.unsupported("multiple return values", t)
                returns = rets[0][0] if rets else None
            elif t.kind == "ident":
                raise self.unsupported("function modifiers")
            else:
                break
        if self.at(";"):
            raise self.unsupported("function without body")
        body = self.block()
        return A.FunctionDef(name, params, vis, returns, body, tuple(flags), start.line)

    def param_list(self) -> tuple:
        self.expect("(")
        params = []
        while not self.at(")"):
            ty = self.type_name()
            pname = self.advance().text if self.tok.kind == "ident" else ""
            params.append((ty, pname))
            if not self.at(")"):
                self.expect(",")
        self.expect(")")
        return tuple(params)

    def type_name(self):
        t = self.tok
        if self.at("mapping"):
            self.advance()
            self.expect("(")
            key = self.type_name()
            self.expect("=>")
            val = self.type_name()
            self.expect(")")
            ty = A.MappingType(key, val)
        elif t.kind == "kw" and is_type_keyword(t.text):
            self.advance()
            ty = A.ElementaryType(t.text)
        elif t.kind == "ident":
            self.advance()
            ty = A.UserType(t.text)
        else:
            self.check_unsupported()
            raise self.error(("type name",))
        while self.at("["):
            self.advance()
            length = None
            if self.tok.kind == "number":
                length = int(self.advance().text, 0)
            self.expect("]")
            ty = A.ArrayType(ty, length)
        return ty

    # -- statements -----------------------------------------------------------

    def block(self) -> A.Block:
        start = self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error(("}",))
            stmts.append(self.statement())
        self.expect("}")
        return A.Block(tuple(stmts), start.line)

    def statement(self):
        t = self.tok
        self.check_unsupported()
        if self.at("{"):
            return self.block()
        if self.at("if"):
            self.advance()
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            then = self.statement()
            else_ = None
            if self.at("else"):
                self.advance()
                else_ = self.statement()
            return A.IfStmt(cond, then, else_, t.line)
        if self.at("while"):
            self.advance()
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            return A.WhileStmt(cond, self.statement(), t.line)
        if self.at("for"):
            self.advance()
            self.expect("(")
            init = None if self.at(";") else self.simple_statement()
            self.expect(";")
            cond = None if self.at(";") else self.expression()
            self.expect(";")
            step = None if self.at(")") else A.ExprStmt(self.expression(), self.tok.line)
            self.expect(")")
            return A.ForStmt(init, cond, step, self.statement(), t.line)
        if self.at("throw"):
            self.advance()
            self.expect(";")
            return A.ThrowStmt(t.line)
        if self.at("return"):
            self.advance()
            e = None if self.at(";") else self.expression()
            self.expect(";")
            return A.ReturnStmt(e, t.line)
        s = self.simple_statement()
        self.expect(";")
        return s

    def _starts_declaration(self) -> bool:
        t = self.tok
        if t.kind == "kw" and (is_type_keyword(t.text) or t.text == "mapping"):
            return True
        if t.kind != "ident":
            return False
        nxt = self.peek()
        if nxt.kind == "ident":
            return True
        if nxt.text == "[":
            # T[] x  or  T[3] x, as opposed to a[i] = ...
            k = 2
            if self.peek(k).kind == "number":
                k += 1
            return self.peek(k).text == "]" and self.peek(k + 1).kind == "ident"
        return False

    def simple_statement(self):
        t = self.tok
        if self._starts_declaration():
            ty = self.type_name()
            name = self.ident().text
            init = None
            if self.at("="):
                self.advance()
                init = self.expression()
            return A.VarDeclStmt(ty, name, init, t.line)
        return A.ExprStmt(self.expression(), t.line)

    # -- expressions ----------------------------------------------------------

    def expression(self):
        lhs = self.binary(0)
        t = self.tok
        if t.kind == "op" and t.text == "?":
            raise self.unsupported("conditional expressions")
        if t.kind == "op" and t.text in ASSIGN_OPS:
            self.advance()
            rhs = self.expression()
            return A.AssignExpr(t.text, lhs, rhs, t.line)
        return lhs

    def binary(self, level: int):
        if level == len(BINARY_LEVELS):
            return self.power()
        lhs = self.binary(level + 1)
        while self.tok.kind == "op" and self.tok.text in BINARY_LEVELS[level]:
            op = self.advance()
            rhs = self.binary(level + 1)
            lhs = A.Binary(op.text, lhs, rhs, op.line)
        return lhs

    def power(self):
        base = self.unary()
        if self.at("**", "op"):
            op = self.advance()
            return A.Binary("**", base, self.power(), op.line)
        return base

    def unary(self):
        t = self.tok
        if t.kind == "op" and t.text in ("!", "~", "-", "++", "--"):
            self.advance()
            return A.Unary(t.text, self.unary(), t.line)
        if t.kind == "op" and t.text == "+":
            raise self.unsupported("unary plus")
        return self.postfix()

    def postfix(self):
        e = self.primary()
        while True:
            t = self.tok
            if self.at(".", "punct"):
                self.advance()
                name = self.advance()
                if name.kind not in ("ident", "kw"):
                    raise self.error(("member name",))
                e = A.Member(e, name.text, t.line)
            elif self.at("[", "punct"):
                self.advance()
                key = self.expression()
                self.expect("]")
                e = A.Index(e, key, t.line)
            elif self.at("(", "punct"):
                self.advance()
                args = []
                while not self.at(")"):
                    args.append(self.expression())
                    if not self.at(")"):
                        self.expect(",")
                self.expect(")")
                e = A.Call(e, tuple(args), t.line)
            elif t.kind == "op" and t.text in ("++", "--"):
                self.advance()
                e = A.Postfix(t.text, e, t.line)
            else:
                return e

    def primary(self):
        t = self.tok
        if t.kind == "number":
            self.advance()
            if self.tok.kind == "ident" and self.tok.text in ETHER_UNITS:
                raise self.unsupported(f"ether/time unit {self.tok.text!r}")
            return A.NumberLit(t.text, t.line)
        if t.kind == "string":
            self.advance()
            return A.StringLit(t.text, t.line)
        if self.at("true", "kw") or self.at("false", "kw"):
            self.advance()
            return A.BoolLit(t.text == "true", t.line)
        if t.kind == "ident":
            self.advance()
            return A.Ident(t.text, t.line)
        if t.kind == "kw" and is_type_keyword(t.text):
            # elementary type conversion such as address(x)
            self.advance()
            return A.Ident(t.text, t.line)
        if self.at("(", "punct"):
            self.advance()
            e = self.expression()
            if self.at(","):
                raise self.unsupported("tuple expressions")
            self.expect(")")
            return e
        self.check_unsupported()
        raise self.error(("expression",))


def parse(tokens, name: str = "<input>") -> A.SourceFile:
    """Parse a token list (or raw text) into a SourceFile."""
    if isinstance(tokens, str):
        tokens = tokenize(tokens)
    return Parser(list(tokens)).source(name)


def parse_expression(text: str):
    """Parse a standalone expression, used by spec files."""
    p = Parser(tokenize(text))
    e = p.expression()
    if p.tok.kind != "eof":
        raise p.error(("end of expression",))
    return e
