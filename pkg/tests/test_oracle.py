import itertools

import pytest

from hybridsol import fether
from hybridsol.fether import Fuel, Machine
from hybridsol.ir import Econst, If, Snil, Throw, While
from hybridsol.oracle import Divergent, Equal, RefOutOfGas, RefThrown, check_equiv, ref_exec, relate
from hybridsol.program import Program
from hybridsol.stdlib import StdLib
from hybridsol.symexec.hoare import parse_target, write_target
from hybridsol.values import VBool, VInt

FLAGS = ("complete", "refunded", "refund", "drwbck")


def prepared(ssc, m, flags, value, sender_is_owner):
    mc = Machine(ssc)
    for name, on in zip(FLAGS, flags):
        m = write_target(mc, m, parse_target(name), VBool(on), None)
    m = write_target(mc, m, parse_target("numPledges"), VInt(64, False, 2), None)
    m = write_target(mc, m, parse_target("owner"), VInt.address(0x77), None)
    return fether.set_msg(m, ssc.lib, value=value, sender=0x77 if sender_is_owner else 0x88, balance=9)


class TestAgreementOnSSC:
    @pytest.mark.parametrize("entry", ["pledge", "refund", "drawdown"])
    @pytest.mark.parametrize("sends", [True, False])
    def test_all_branch_polarities(self, ssc, ssc_memory, entry, sends):
        for flags in itertools.product((False, True), repeat=4):
            for value, owner in itertools.product((0, 3), (False, True)):
                m = prepared(ssc, ssc_memory, flags, value, owner)
                got = check_equiv(ssc, m, Fuel(500, 500, 500), entry=entry, send_policy=sends)
                assert got == Equal(), (entry, flags, value, owner)

    def test_swap_if_detected(self, ssc, ssc_memory):
        m = fether.set_msg(ssc_memory, ssc.lib, value=5)
        assert isinstance(check_equiv(ssc, m, entry="pledge", swap_if=True), Divergent)


class TestReference:
    def lib_prog(self, stmts):
        return Program.from_statements(stmts, StdLib(8))

    def test_throw(self):
        p = self.lib_prog([If(Econst(VBool(True)), Throw(), Snil())])
        m0 = fether.fresh_memory(p)
        assert isinstance(ref_exec(p, m0, stmts=p.stmts), RefThrown)

    @pytest.mark.parametrize("gas", [1, 10, 100])
    def test_gas(self, gas):
        p = self.lib_prog([While(Econst(VBool(True)), Snil())])
        m0 = fether.fresh_memory(p)
        ref = ref_exec(p, m0, fuel=Fuel(gas_limit=gas), stmts=p.stmts)
        assert isinstance(ref, RefOutOfGas)
        out = Machine(p).exec(m0, p.stmts, Fuel(gas_limit=gas))
        assert relate(out, ref) is None

    def test_mismatched_variants_reported(self):
        p = self.lib_prog([])
        m0 = fether.fresh_memory(p)
        left = fether.Normal(m0)
        assert relate(left, RefThrown(m0)) == ("Normal", "Thrown")
