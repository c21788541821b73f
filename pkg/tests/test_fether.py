import random

import pytest
from hypothesis import given, settings, strategies as st

from hybridsol import fether, germ
from hybridsol.fether import Fault, Fuel, Machine, Normal, OutOfGas, Thrown, int_binop
from hybridsol.fuzz import GenConfig, ProgramGenerator, make_program
from hybridsol.ir import Assign, Ebinop, Econst, Evar, If, Snil, Throw, Var, While
from hybridsol.oracle import observable
from hybridsol.program import Program
from hybridsol.stdlib import StdLib
from hybridsol.symexec.hoare import parse_target, read_target
from hybridsol.types import TInt
from hybridsol.values import VBool, VInt


U8 = TInt(8, False)
LIB8 = StdLib(8)


def prog_of(stmts):
    return Program.from_statements(list(stmts), LIB8)


def exec_top(stmts, fuel=Fuel()):
    p = prog_of(stmts)
    return Machine(p).exec(fether.fresh_memory(p), p.stmts, fuel)


def state(p, m, name):
    return read_target(Machine(p), m, parse_target(name), None)


TRUE = Econst(VBool(True))


class TestIntegerOps:
    def test_uint8_wraps(self):
        assert int_binop("+", VInt(8, False, 255), VInt(8, False, 1)) == (VInt(8, False, 0), True)

    def test_no_overflow(self):
        assert int_binop("+", VInt(8, False, 2), VInt(8, False, 3)) == (VInt(8, False, 5), False)

    def test_signed_wraps(self):
        r, over = int_binop("+", VInt(8, True, 127), VInt(8, True, 1))
        assert r.value == -128 and over

    def test_zero_divisor(self):
        with pytest.raises(fether.EvalFailure):
            int_binop("/", VInt(8, False, 1), VInt(8, False, 0))

    @given(st.integers(0, 255), st.integers(0, 255))
    def test_add_is_modular(self, a, b):
        r, over = int_binop("+", VInt(8, False, a), VInt(8, False, b))
        assert r.value == (a + b) % 256
        assert over == (a + b > 255)


class TestStatements:
    def test_empty_program(self):
        p = prog_of([])
        m0 = fether.fresh_memory(p)
        out = Machine(p).exec(m0, [Snil()])
        assert isinstance(out, Normal) and out.mem == m0

    def test_throw_rolls_back(self):
        stmts = [Var(None, Evar("x", U8)), Assign(Evar("x", U8), Econst(VInt(8, False, 7))),
                 If(TRUE, Throw(), Snil())]
        p = prog_of(stmts)
        m0 = fether.fresh_memory(p)
        out = Machine(p).exec(m0, stmts[1:])
        assert isinstance(out, Thrown) and out.initial == m0

    def test_overflow_recorded(self):
        stmts = [Var(None, Evar("x", U8)),
                 Assign(Evar("x", U8), Ebinop("+", Econst(VInt(8, False, 255)), Econst(VInt(8, False, 1))))]
        p = prog_of(stmts)
        mc = Machine(p)
        out = mc.exec(fether.fresh_memory(p), stmts)
        assert state(p, out.mem, "x") == VInt(8, False, 0)
        assert len(mc.overflows) == 1

    def test_division_by_zero_faults(self):
        stmts = [Var(None, Evar("x", U8)),
                 Assign(Evar("x", U8), Ebinop("/", Econst(VInt(8, False, 3)), Evar("x", U8)))]
        out = exec_top(stmts)
        assert isinstance(out, Fault)

    def test_undefined_condition_faults(self):
        from hybridsol.values import VUndef
        out = exec_top([If(Econst(VUndef()), Snil(), Snil())])
        assert isinstance(out, Fault)

    @pytest.mark.parametrize("gas", [1, 10, 100])
    def test_gas_exhaustion_is_exact(self, gas):
        out = exec_top([While(TRUE, Snil())], Fuel(gas_limit=gas))
        assert isinstance(out, OutOfGas) and out.reason == "gas" and out.steps == gas

    def test_k_stmt_exhaustion(self):
        out = exec_top([While(TRUE, Snil())], Fuel(k_stmt=5))
        assert out == OutOfGas("k_stmt") and out.steps == 5

    def test_fuel_must_be_positive(self):
        with pytest.raises(ValueError):
            Fuel(gas_limit=0)


class TestPledge:
    def test_zero_value_rolls_back(self, ssc, ssc_memory):
        out = Machine(ssc).call(ssc_memory, "pledge")
        assert isinstance(out, Thrown) and out.initial == ssc_memory

    def test_pledge_records(self, ssc, ssc_memory):
        m = fether.set_msg(ssc_memory, ssc.lib, value=5, sender=0x1234)
        out = Machine(ssc).call(m, "pledge")
        assert isinstance(out, Normal)
        assert state(ssc, out.mem, "numPledges") == VInt(64, False, 1)
        rec = state(ssc, out.mem, "pledges[0]")
        assert rec.get("amount") == VInt(64, False, 5)
        assert rec.get("eth_address") == VInt.address(0x1234)

    def test_send_event(self, ssc, ssc_memory):
        m = fether.set_msg(ssc_memory, ssc.lib, value=5)
        out = Machine(ssc).call(m, "pledge")
        (ev,) = fether.events_of(out.mem)
        assert fether.format_event(ev).endswith(" 5 -> true")

    def test_failed_send_still_normal(self, ssc, ssc_memory):
        m = fether.set_msg(ssc_memory, ssc.lib, value=5)
        out = Machine(ssc, send_policy=False).call(m, "pledge")
        assert isinstance(out, Normal)
        assert fether.format_event(fether.events_of(out.mem)[0]).endswith("-> false")

    def test_closed_campaign_throws(self, ssc, ssc_memory):
        mc = Machine(ssc)
        from hybridsol.symexec.hoare import write_target
        m = write_target(mc, ssc_memory, parse_target("complete"), VBool(True), None)
        m = fether.set_msg(m, ssc.lib, value=5)
        assert isinstance(mc.call(m, "pledge"), Thrown)

    def test_unknown_function(self, ssc, ssc_memory):
        assert isinstance(Machine(ssc).call(ssc_memory, "nope"), Fault)


class TestFuelIrrelevance:
    """Raising any bound past what a terminating run used changes nothing observable."""

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000))
    def test_generated(self, seed):
        cfg = GenConfig(max_stmts=12)
        stmts = ProgramGenerator(random.Random(seed), cfg).program()
        p = make_program(stmts)
        m0 = fether.fresh_memory(p)
        small = Machine(p).exec(m0, p.stmts, Fuel(200, 50, 200))
        if isinstance(small, OutOfGas):
            return
        big = Machine(p).exec(m0, p.stmts, Fuel(5000, 500, 5000))
        assert type(big) is type(small)
        if isinstance(small, Normal):
            assert observable(big.mem) == observable(small.mem)


def test_run_facade(ssc, ssc_memory):
    m = fether.set_msg(ssc_memory, ssc.lib, value=5)
    after = fether.run(ssc, m, entry="pledge")
    assert state(ssc, after, "numPledges") == VInt(64, False, 1)
    assert fether.run(ssc, ssc_memory, entry="pledge") == ssc_memory


def test_describe_outcome():
    assert fether.describe_outcome(OutOfGas("gas")) == "OUT OF GAS (gas)"
    assert fether.describe_outcome(Fault("undef")) == "FAULT undef"
    assert germ.DEFAULT_SPACE == 256
