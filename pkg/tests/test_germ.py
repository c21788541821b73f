import pytest
from hypothesis import given, settings

from hybridsol import germ
from hybridsol.germ import INTERNAL, MemoryCell, owner
from hybridsol.stdlib import StdLib
from hybridsol.types import Numbered, Special
from hybridsol.values import UNDEF, VBool, VInt, VStruct

from strategies import SPACE, addresses, memories, numbered, tags, values

LAWS = settings(max_examples=300, deadline=None)


class TestMapping:
    def test_identity_on_numbered(self):
        assert germ.map_label(Numbered(0x0c), germ.MapStrategy(256)) == 0x0c

    def test_special_gets_reserved_slot(self):
        s = germ.MapStrategy(256)
        assert s(Special.MSG) == 256 + list(Special).index(Special.MSG)
        assert len({s(x) for x in Special}) == 7

    def test_out_of_space(self):
        with pytest.raises(germ.MapFailed):
            germ.MapStrategy(8)(Numbered(9))


class TestInit:
    def test_numbered_cells_undef(self):
        m = germ.init_memory(256)
        assert all(germ.read(m, a) == UNDEF for a in range(256))
        assert all(not m.cell(a).occupied for a in range(256))
        assert m.throw_flag is False

    def test_msg_layout(self):
        m = germ.init_memory(256, StdLib(64))
        msg = germ.read(m, m.special_slot(Special.MSG))
        assert isinstance(msg, VStruct) and msg.name == "Str_type_0xmsg"
        assert msg.get("sender") == VInt.address(0)
        assert msg.get("values") == VInt(64, False, 0)
        addr = germ.read(m, m.special_slot(Special.ADDRESS))
        assert addr.fields == ("addr", "balance", "send", "gas")

    def test_deterministic(self):
        assert germ.init_memory(32) == germ.init_memory(32)

    def test_bad_size(self):
        with pytest.raises(ValueError):
            germ.init_memory(0)


class TestReadWrite:
    def test_owner_cell_denies_other_env(self):
        m = germ.init_memory(8)
        m = germ.write(m, 3, VBool(True), "alice", "alice", auth=owner("alice"))
        assert germ.read(m, 3, "alice", "") == VBool(True)
        assert germ.read(m, 3, "bob", "") is None
        assert germ.write(m, 3, VBool(False), "bob", "bob") is None

    def test_internal_needs_matching_envs(self):
        m = germ.write(germ.init_memory(8), 2, VBool(True), "C", "C", auth=INTERNAL)
        assert germ.read(m, 2, "C", "C") == VBool(True)
        assert germ.read(m, 2, "f", "C") is None

    def test_out_of_domain(self):
        m = germ.init_memory(8)
        assert germ.read(m, 8 + 7) is None
        assert germ.write(m, -1, UNDEF) is None

    def test_write_marks_occupied_and_tags(self):
        m = germ.write(germ.init_memory(8), 1, VBool(True), "f", "C")
        c = m.cell(1)
        assert (c.occupied, c.env_tag, c.fenv_tag) == (True, "f", "C")

    def test_precondition_chain(self, ssc):
        from hybridsol import fether
        m = fether.fresh_memory(ssc)
        t = ssc.table
        m1 = germ.write(m, t.resolve("complete").index, VBool(False))
        m2 = germ.write(m1, t.resolve("refunded").index, VBool(True))
        m3 = germ.write(m2, t.resolve("numPledges").index, VInt(64, False, 3))
        assert None not in (m1, m2, m3)
        assert germ.read(m3, t.resolve("refunded").index) == VBool(True)


class TestAllocation:
    def test_lowest_free(self):
        m, a = germ.allocate(germ.init_memory(8))
        assert a == 0
        m, b = germ.allocate(m)
        assert b == 1

    def test_free_then_read_undef(self):
        m0 = germ.write(germ.init_memory(8), 0, VBool(True))
        m1 = germ.free(m0, 0)
        assert germ.read(m1, 0) == UNDEF

    def test_errors_are_distinct(self):
        m = germ.init_memory(2)
        with pytest.raises(germ.DoubleFree):
            germ.free(m, 0)
        m, _ = germ.allocate(m, "f")
        with pytest.raises(germ.AuthDenied):
            germ.free(m, 0, "g")
        m, _ = germ.allocate(m)
        with pytest.raises(germ.SpaceExhausted):
            germ.allocate(m)

    def test_offset(self):
        assert germ.offset(Numbered(5), 2) == Numbered(7)
        with pytest.raises(germ.OffsetOutOfRange):
            germ.offset(Numbered(5), -6)
        with pytest.raises(germ.OffsetOutOfRange):
            germ.offset(Special.MSG, 1)

    def test_search(self):
        m = germ.write(germ.write(germ.init_memory(8), 5, VBool(True)), 3, VBool(True))
        assert germ.search(m, lambda c: c.block_v == VBool(True)) == 3
        assert germ.search(m, lambda c: c.size == 2) is None


class TestDump:
    def test_format(self):
        m = germ.write(germ.init_memory(16), 0x0c, VBool(True), "SSC", "SSC")
        lines = germ.dump(m, only_used=True).splitlines()
        assert lines[0].startswith("_0xinit := Vundef [1")
        assert "m_throw := false" in lines
        assert lines[-1] == "0x0000000c := (Vbool true) [1 SSC SSC occupied public]"

    def test_full_dump_lists_every_cell(self):
        assert len(germ.dump(germ.init_memory(16)).splitlines()) == 7 + 1 + 16


def check_read_after_write(m, a, v, t):
    m2 = germ.write(m, a, v, t, t)
    assert germ.read(m2, a, t, t) == v


def check_write_after_write(m, a, v1, v2, t):
    twice = germ.write(germ.write(m, a, v1, t, t), a, v2, t, t)
    assert twice == germ.write(m, a, v2, t, t)


def check_frame(m, a, v, t):
    m2 = germ.write(m, a, v, t, t)
    for b in range(m.size + len(germ.SPECIALS)):
        if b != a:
            assert m2.cell(b) == m.cell(b)
    assert m2.throw_flag == m.throw_flag


def check_persistence(m, a, v, t):
    before = germ.dump(m)
    cells = dict(m.cells)
    germ.write(m, a, v, t, t)
    assert germ.dump(m) == before and dict(m.cells) == cells


def check_allocate_free(m, t):
    if all(a in m.cells for a in range(m.size)):
        return
    m2, a = germ.allocate(m, t)
    assert m2.cell(a).occupied
    assert germ.free(m2, a, t) == m


class TestLaws:
    @LAWS
    @given(memories(), addresses, values, tags)
    def test_read_after_write(self, m, a, v, t):
        check_read_after_write(m, a, v, t)

    @LAWS
    @given(memories(), addresses, values, values, tags)
    def test_write_after_write(self, m, a, v1, v2, t):
        check_write_after_write(m, a, v1, v2, t)

    @LAWS
    @given(memories(), addresses, values, tags)
    def test_frame(self, m, a, v, t):
        check_frame(m, a, v, t)

    @LAWS
    @given(memories(), addresses, values, tags)
    def test_persistence(self, m, a, v, t):
        check_persistence(m, a, v, t)

    @LAWS
    @given(memories(), tags)
    def test_allocate_free(self, m, t):
        check_allocate_free(m, t)

    @LAWS
    @given(memories(), numbered)
    def test_free_cell_reads_undef(self, m, a):
        if a not in m.cells:
            assert germ.read(m, a) == UNDEF
            assert m.cell(a) == MemoryCell()

    def test_space_is_fixed(self):
        assert SPACE == germ.init_memory(SPACE).size
