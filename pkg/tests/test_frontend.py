import pytest

from hybridsol.frontend import (
    LexError, ParseError, SourceUnit, TranslateError, UnsupportedConstruct, compile_source, parse, tokenize,
)
from hybridsol.ir import Assign, Ebinop, Eindex, Estruct, FunCall, If, Throw, Var, StructDecl, typecheck_program
from hybridsol.stdlib import StdLib
from hybridsol.types import Numbered, TMapping

from conftest import corpus

SOURCES = ["SSC.sol", "SSC_guarded.sol", "batch_overflow.sol", "safe_math.sol", "divide.sol",
           "recursion.sol", "recursion_guarded.sol", "clean.sol", "while_true.sol"]


def kinds(text):
    return [(t.kind, t.text) for t in tokenize(SourceUnit(text, "t")) if t.kind != "eof"]


def read(name):
    with open(corpus(name), encoding="utf-8") as fh:
        return fh.read()


class TestTokenize:
    def test_state_var(self):
        assert kinds("uint public numPledges;") == [
            ("kw", "uint"), ("kw", "public"), ("ident", "numPledges"), ("semi", ";")]

    def test_increment(self):
        assert kinds("numPledges++;") == [("ident", "numPledges"), ("op", "++"), ("semi", ";")]

    def test_positions(self):
        toks = tokenize(SourceUnit("a\n  b", "t"))
        assert (toks[1].line, toks[1].col) == (2, 3)

    def test_unterminated_string(self):
        with pytest.raises(LexError):
            tokenize(SourceUnit('x = "abc', "t"))

    def test_unknown_character(self):
        with pytest.raises(LexError):
            tokenize(SourceUnit("x = 1 @ 2;", "t"))


class TestParse:
    def test_ssc_shape(self):
        src = parse(tokenize(SourceUnit(read("SSC.sol"), "SSC.sol")), "SSC.sol")
        (c,) = src.contracts
        assert len(c.state_vars) == 7
        assert len(c.structs) == 1
        assert len(c.mappings) == 1
        assert len(c.functions) == 4

    def test_empty_contract(self):
        src = parse(tokenize(SourceUnit("contract C {}", "t")), "t")
        assert src.contracts[0].members == ()

    def test_missing_paren(self):
        with pytest.raises(ParseError) as err:
            parse(tokenize(SourceUnit("contract C { function f() { if (x } }", "t")), "t")
        assert ")" in str(err.value)

    def test_assembly_unsupported(self):
        with pytest.raises(UnsupportedConstruct):
            compile_source(read("assembly.sol"), "assembly.sol")

    def test_ether_unit_unsupported(self):
        with pytest.raises(UnsupportedConstruct):
            compile_source("contract C { uint x; function f() { x = 1 ether; } }")


class TestTranslate:
    def test_state_addresses(self, ssc):
        t = ssc.table
        names = ["owner", "benefactor", "refunded", "complete", "refund", "drwbck", "numPledges",
                 "Pledge", "pledges"]
        assert [t.resolve(n) for n in names] == [Numbered(0x0a + i) for i in range(9)]
        body = ssc.contract().body
        assert sum(isinstance(s, Var) and not isinstance(s.decl.ty, TMapping) for s in body) == 7
        assert sum(isinstance(s, StructDecl) for s in body) == 1
        assert sum(isinstance(s, Var) and isinstance(s.decl.ty, TMapping) for s in body) == 1

    def test_pledge_shape(self, ssc):
        b = ssc.function("pledge").body
        assert len(b) == 4
        assert isinstance(b[0], If) and isinstance(b[0].then, Throw)
        assert isinstance(b[1], Assign) and isinstance(b[1].lhs, Eindex) and isinstance(b[1].rhs, Estruct)
        assert isinstance(b[2], FunCall) and b[2].callee.name == "_0xsend"
        assert isinstance(b[3], Assign) and isinstance(b[3].rhs, Ebinop) and b[3].rhs.op == "+"

    def test_constructor_renamed(self, ssc):
        assert ssc.function("constructor") is not None

    def test_lines_recorded(self, ssc):
        send = ssc.function("pledge").body[2]
        assert ssc.source_lines[send.line - 1].strip() == "benefactor.send(msg.value);"

    def test_empty_contract(self):
        p = compile_source("contract C {}")
        assert p.contract().body == ()
        assert list(p.table.entries) == ["C"]

    def test_empty_source(self):
        with pytest.raises(Exception, match="empty source"):
            compile_source("   \n")

    def test_collision(self):
        with pytest.raises(TranslateError):
            compile_source("contract C { uint x; function f() { uint y; uint y; } }")

    def test_address_space_exhausted(self):
        with pytest.raises(TranslateError):
            compile_source(read("SSC.sol"), "SSC.sol", StdLib(64), memory_size=16)

    def test_non_bool_condition(self):
        with pytest.raises(TranslateError):
            compile_source("contract C { uint x; function f() { if (x) throw; } }")

    @pytest.mark.parametrize("name", SOURCES)
    def test_corpus_typechecks(self, name):
        p = compile_source(read(name), name, StdLib(64))
        assert typecheck_program(p.stmts, p.lib).ok

    @pytest.mark.parametrize("name", SOURCES)
    def test_addresses_injective(self, name):
        p = compile_source(read(name), name, StdLib(64))
        addrs = list(p.table.entries.values())
        assert len(addrs) == len(set(addrs))

    @pytest.mark.parametrize("name", SOURCES)
    def test_one_ir_statement_per_source_statement(self, name):
        p = compile_source(read(name), name, StdLib(64))
        src = parse(tokenize(SourceUnit(read(name), name)), name)
        for fdef in src.contracts[0].functions:
            fname = "constructor" if fdef.name == src.contracts[0].name else fdef.name
            assert len(p.function(fname).body) == len(fdef.body.stmts)

    def test_default_width_is_256(self):
        p = compile_source("contract C { uint x; }")
        assert p.contract().body[0].decl.ty.width == 256
