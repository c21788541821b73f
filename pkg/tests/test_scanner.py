import pytest

from hybridsol import fether
from hybridsol.fether import Machine, int_binop
from hybridsol.frontend import compile_source
from hybridsol.ir import FunCall, Seq, Snil
from hybridsol.irtext import pretty, read_program
from hybridsol.scanner import FEATURES, call_graph, reachability, scan, scan_all
from hybridsol.specfile import load_program
from hybridsol.stdlib import StdLib
from hybridsol.symexec.hoare import parse_target, read_target
from hybridsol.values import VInt

from conftest import corpus

SOURCES = ["SSC.sol", "SSC_guarded.sol", "batch_overflow.sol", "safe_math.sol", "divide.sol",
           "recursion.sol", "recursion_guarded.sol", "clean.sol", "while_true.sol"]

EXPECTED = {
    "SSC.sol": {"unchecked_send": [30], "integer_overflow": [31, 36, 43]},
    "SSC_guarded.sol": {"integer_overflow": [31, 36, 43]},
    "batch_overflow.sol": {"integer_overflow": [5]},
    "divide.sol": {"divide_by_zero": [5]},
    "recursion.sol": {"stack_overflow": [6]},
    "safe_math.sol": {},
    "recursion_guarded.sol": {},
    "clean.sol": {},
    "while_true.sol": {},
}


def prog(name, bits=64):
    return load_program(corpus(name), bits)


class TestCorpus:
    @pytest.mark.parametrize("name", SOURCES)
    def test_expected_lines(self, name):
        report = scan_all(prog(name))
        got = {fid: [f.line for f in fs] for fid, fs in report.findings.items() if fs}
        assert got == EXPECTED[name]

    def test_pledge_send_flagged_refund_not(self, ssc):
        report = scan_all(ssc, ["unchecked_send"])
        assert [f.function for f in report.findings["unchecked_send"]] == ["pledge"]
        s = scan(ssc, "unchecked_send")
        assert s == ssc.function("pledge").body[2]

    def test_render(self, ssc):
        line = scan_all(ssc, ["unchecked_send"]).lines()[0]
        assert line.startswith("unchecked_send SSC.sol:30 (FunCall (Efun _0xsend bool)")

    def test_depth_budget(self, ssc):
        assert scan(ssc, "unchecked_send", depth=5) is None
        assert scan(ssc, "unchecked_send") is not None

    def test_unknown_feature(self, ssc):
        with pytest.raises(ValueError, match="unknown feature"):
            scan(ssc, "reentrancy")


class TestInvariants:
    @pytest.mark.parametrize("name", SOURCES)
    @pytest.mark.parametrize("feature", sorted(FEATURES))
    def test_scan_is_first_finding(self, name, feature):
        p = prog(name)
        fs = scan_all(p, [feature]).findings[feature]
        assert scan(p, feature) == (fs[0].statement if fs else None)

    @pytest.mark.parametrize("name", SOURCES)
    def test_stable_under_reparse(self, name):
        p = prog(name)
        again = read_program(pretty(p.stmts))
        assert scan_all(p).all_findings() == scan_all(again).all_findings()

    def test_bare_statements(self):
        assert scan([Snil()], "unchecked_send") is None
        assert scan_all(Seq((Snil(),))).empty


class TestBatchOverflowIsReal:
    """The flagged multiplication can wrap for 8-bit words."""

    WRAPPING_PAIRS = 63568  # pairs (a, b) in [0, 255]^2 with a * b > 255

    def test_interpreter_wraps_on_exactly_those_pairs(self):
        n = sum(int_binop("*", VInt(8, False, a), VInt(8, False, b))[1]
                for a in range(256) for b in range(256))
        assert n == self.WRAPPING_PAIRS

    def test_witness_run(self):
        p = prog("batch_overflow.sol", 8)
        mc = Machine(p)
        args = [VInt(8, False, 16), VInt(8, False, 16), VInt(8, False, 0)]
        out = mc.call(fether.fresh_memory(p), "batchTransfer", args)
        assert mc.overflows
        bal = read_target(mc, out.mem, parse_target("balances[0]"), None)
        assert bal == VInt(8, False, 0)


class TestCallGraph:
    def test_recursion(self):
        p = prog("recursion.sol")
        reach = reachability(call_graph(p.stmts))
        assert "down" in reach["down"]

    def test_mutual(self):
        src = "contract C { function a(uint n) { b(n); } function b(uint n) { a(n); } }"
        p = compile_source(src, "m.sol", StdLib(64))
        assert {scan_all(p, ["stack_overflow"]).findings["stack_overflow"][i].function
                for i in range(2)} == {"a", "b"}
        assert isinstance(scan(p, "stack_overflow"), FunCall)


class TestGuards:
    def test_require_guards_division(self):
        src = ("contract C { uint s; function f(uint a, uint b) { require(b != 0); s = a / b; } }")
        assert scan(compile_source(src), "divide_by_zero") is None

    def test_literal_zero(self):
        src = "contract C { uint s; function f(uint a) { s = a / 0; } }"
        assert scan(compile_source(src), "divide_by_zero") is not None

    def test_literal_arithmetic_in_range(self):
        src = "contract C { uint8 s; function f() { s = 200 + 55; } }"
        assert scan(compile_source(src), "integer_overflow") is None
        src = "contract C { uint8 s; function f() { s = 200 + 56; } }"
        assert scan(compile_source(src), "integer_overflow") is not None

    def test_checked_send_in_condition(self):
        src = "contract C { address a; function f() { if (!a.send(1)) throw; } }"
        assert scan(compile_source(src), "unchecked_send") is None
