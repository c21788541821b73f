import pytest

from hybridsol.ir import (
    STATEMENT_VARIANTS, Assign, Ebinop, Econst, Efield, Evar, If, Snil, SpecialRef, Throw, TypeContext,
    build_context, typecheck_expr, typecheck_program, typecheck_stmt,
)
from hybridsol.stdlib import StdLib
from hybridsol.types import (
    Special, TAddress, TArray, TBool, TBytes, TFun, TInt, TMapping, TStruct, TUndef,
)
from hybridsol.values import (
    FALSE, UNDEF, VALUE_VARIANTS, NoZero, VBool, VInt, VStruct, zero_value,
)


def ctx(**vars):
    return TypeContext(vars=dict(vars), lib=StdLib(256))


class TestTypes:
    def test_widths(self):
        for w in (8, 16, 32, 64, 128, 256):
            assert TInt(w, False).hi == (1 << w) - 1
            assert TInt(w, True).lo == -(1 << (w - 1))
        with pytest.raises(ValueError):
            TInt(12, False)

    def test_mapping_key_must_be_scalar(self):
        TMapping(TAddress(), TInt(256, False))
        with pytest.raises(ValueError):
            TMapping(TStruct("P"), TBool())
        with pytest.raises(ValueError):
            TMapping(TMapping(TBool(), TBool()), TBool())

    def test_array_elem_not_undef(self):
        with pytest.raises(ValueError):
            TArray(TUndef())

    def test_bytes_length(self):
        TBytes(32)
        with pytest.raises(ValueError):
            TBytes(33)

    def test_structural_equality(self):
        assert TMapping(TInt(64, False), TStruct("Pledge")) == TMapping(TInt(64, False), TStruct("Pledge"))
        assert TInt(64, False) != TInt(64, True)


class TestClosedness:
    def test_fourteen_value_variants(self):
        assert len(VALUE_VARIANTS) == 14

    def test_seven_special_addresses(self):
        assert [s.value for s in Special] == [
            "_0xinit", "_0xsend", "_0xsend_re", "_0xcall", "_0xmsg", "_0xaddress", "_0xblock"]

    def test_no_goto(self):
        names = {c.__name__ for c in STATEMENT_VARIANTS}
        assert not any("goto" in n.lower() or "jump" in n.lower() for n in names)
        assert len(STATEMENT_VARIANTS) == 13


class TestTypecheckExpr:
    def test_comparison_yields_bool(self):
        zero = Econst(VInt(256, False, 0))
        assert typecheck_expr(Ebinop("==", zero, zero), ctx()) == TBool()

    def test_msg_values_field(self):
        e = Efield(SpecialRef(Special.MSG), ("values",), TInt(256, False))
        assert typecheck_expr(e, ctx()) == TInt(256, False)

    def test_unbound_identifier(self):
        report = typecheck_stmt(Assign(Evar("x", TBool()), Econst(FALSE)), ctx())
        assert report.kind == "UnboundIdentifier"

    def test_mismatched_operands(self):
        e = Ebinop("+", Econst(VInt(8, False, 1)), Econst(VInt(16, False, 1)))
        report = typecheck_stmt(Assign(Evar("x", TInt(8, False)), e), ctx(x=TInt(8, False)))
        assert report.kind == "TypeMismatch"
        assert report.location == ("rhs", "rhs")


class TestTypecheckStmt:
    def test_undef_condition_rejected(self):
        report = typecheck_stmt(If(Econst(UNDEF), Snil(), Throw()), ctx())
        assert not report.ok
        assert report.kind == "ConditionNotBool"
        assert report.location[-1] == "cond"
        assert report.found == TUndef()

    def test_assign_bool_from_int(self):
        report = typecheck_stmt(Assign(Evar("x", TBool()), Econst(VInt(256, False, 1))), ctx(x=TBool()))
        assert report.kind == "AssignTypeMismatch"

    def test_pledge_body_well_typed(self, ssc):
        assert typecheck_program(ssc.stmts, ssc.lib).ok
        f = ssc.function("pledge")
        c = build_context(ssc.stmts, ssc.lib)
        c.vars.update({p.name: p.ty for p in f.params})
        for s in f.body:
            assert typecheck_stmt(s, c).ok

    def test_deterministic(self):
        s = If(Econst(UNDEF), Snil(), Snil())
        assert typecheck_stmt(s, ctx()) == typecheck_stmt(s, ctx())

    def test_report_path_points_into_program(self):
        report = typecheck_program([Snil(), If(Econst(UNDEF), Snil(), Snil())])
        assert report.location == (1, "cond")


class TestZeroValue:
    def test_scalars(self):
        assert zero_value(TInt(64, False)) == VInt(64, False, 0)
        assert zero_value(TBool()) == VBool(False)

    def test_struct(self):
        layout = {"Pledge": ((TInt(64, False), "amount"), (TAddress(), "eth_address"))}
        z = zero_value(TStruct("Pledge"), layout)
        assert z == VStruct("Pledge", (("amount", VInt(64, False, 0)), ("eth_address", VInt.address(0))))

    def test_no_zero(self):
        for t in (TUndef(), TFun((), TUndef())):
            with pytest.raises(NoZero):
                zero_value(t)

    def test_int_wraps_modulo_width(self):
        assert VInt(8, False, 256).bits == 0
        assert VInt(8, True, 255).value == -1
