import pytest

from hybridsol.specfile import dump_spec, load_program, load_spec, parse_sections, parse_spec
from hybridsol.symexec.hoare import Assertions, Rollback, SpecError
from hybridsol.types import TInt

from conftest import SPECS, corpus, spec_path

BASE = """
[spec]
name = t
program = ../SSC.sol
entry = pledge
word_bits = 64
[symbols]
money : uint64
[pre]
msg.value = money
[post]
result = rollback
"""


def with_lines(section, *lines):
    out = []
    for line in BASE.strip().splitlines():
        out.append(line)
        if line == f"[{section}]":
            out.extend(lines)
    return "\n".join(out) + "\n"


class TestParse:
    def test_pledge_false(self):
        spec, prog = load_spec(spec_path("pledge_false.spec"))
        assert spec.name == "pledge_false" and spec.entry == "pledge" and spec.mode == "static"
        assert [d.name for d in spec.symbols] == ["cp", "rf", "num", "money"]
        assert isinstance(spec.post, Rollback)
        assert spec.fuel.gas_limit == 1000
        assert prog.function("pledge") is not None

    def test_assertions(self):
        spec, _ = load_spec(spec_path("pledge_records.spec"))
        assert isinstance(spec.post, Assertions)
        assert [str(t) for t, _ in spec.post.items] == ["numPledges", "complete"]

    def test_bound_symbols(self):
        spec, _ = load_spec(spec_path("pledge_false_concolic.spec"))
        assert set(spec.bound) == {"cp", "rf"}

    def test_segment(self):
        spec, _ = load_spec(spec_path("pledge_if.spec"))
        assert spec.segment == (0, 1)

    def test_comments_and_blanks(self):
        sections = parse_sections("# c\n\n[spec]\nname = x  # trailing\n")
        assert sections == {"spec": [(4, "name = x")]}

    def test_default_width(self):
        spec, _ = parse_spec(BASE.replace("word_bits = 64\n", "").replace("uint64", "uint"), SPECS)
        assert spec.symbols[0].ty == TInt(256, False)


class TestErrors:
    @pytest.mark.parametrize("text, message", [
        ("[spec]\nname = x\n", "needs a program"),
        ("name = x\n", "before the first section"),
        ("[bogus]\n", "unknown section"),
        (BASE.replace("mode", "x") + "[spec]\n", "appears twice"),
        (with_lines("spec", "mode = fast"), "mode must be"),
        (with_lines("spec", "colour = red"), "unknown key"),
        (with_lines("symbols", "money : uint64"), "declared twice"),
        (with_lines("symbols", "q : float"), "unsupported symbol type"),
        (with_lines("pre", "numPledges = nobody"), "undeclared symbol"),
        (with_lines("pre", "complete = money"), "expected bool"),
        (with_lines("post", "assert complete == true"), "mixes"),
        (BASE + "[fuel]\ngas_limit = 0\n", "strictly positive"),
        (BASE + "[fuel]\ngas_limit = lots\n", "expected an integer"),
    ])
    def test_rejected(self, text, message):
        with pytest.raises(SpecError, match=message):
            parse_spec(text, SPECS)

    def test_missing_program(self):
        with pytest.raises(SpecError, match="cannot read program"):
            parse_spec(BASE.replace("../SSC.sol", "../missing.sol"), SPECS)

    def test_missing_spec(self):
        with pytest.raises(SpecError, match="cannot read spec"):
            load_spec(spec_path("missing.spec"))


class TestRoundTrip:
    @pytest.mark.parametrize("name", ["pledge_false.spec", "pledge_if.spec", "pledge_records.spec",
                                      "refund_two.spec", "pledge_false_concolic.spec"])
    def test_dump_parse(self, name):
        spec, prog = load_spec(spec_path(name))
        again, _ = parse_spec(dump_spec(spec), SPECS, prog)
        assert dump_spec(again) == dump_spec(spec)
        assert again.post == spec.post and again.symbols == spec.symbols


def test_lolisa_programs_load():
    prog = load_program(corpus("while_true.lolisa"))
    assert len(prog.stmts) == 1
