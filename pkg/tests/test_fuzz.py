import random

from hybridsol import oracle
from hybridsol.fuzz import (
    GenConfig, ProgramGenerator, campaign, check_case, count_statements, format_repro, shrink,
)
from hybridsol.ir import Snil, typecheck_program
from hybridsol.fuzz import make_program


class TestGenerator:
    def test_deterministic(self):
        a = ProgramGenerator(random.Random(3), GenConfig()).program()
        b = ProgramGenerator(random.Random(3), GenConfig()).program()
        assert a == b

    def test_respects_size(self):
        for seed in range(50):
            stmts = ProgramGenerator(random.Random(seed), GenConfig(max_stmts=10)).program()
            assert count_statements(stmts) <= 10

    def test_mostly_well_typed(self):
        ok = 0
        for seed in range(100):
            p = make_program(ProgramGenerator(random.Random(seed), GenConfig()).program())
            ok += typecheck_program(p.stmts, p.lib).ok
        assert ok >= 90


class TestCampaign:
    def test_small_campaign_agrees(self):
        report = campaign(300, max_stmts=20, seed=7)
        assert report.ok and report.cases == 300
        assert report.checked + report.skipped == 300

    def test_repeatable(self):
        a = campaign(50, seed=11, swap_if=True, minimize=False)
        b = campaign(50, seed=11, swap_if=True, minimize=False)
        assert [d.index for d in a.divergences] == [d.index for d in b.divergences]

    def test_swap_if_caught_and_shrunk(self):
        report = campaign(200, seed=42, swap_if=True, stop_after=1)
        assert not report.ok
        case = report.divergences[0]
        assert count_statements(case.program) <= 10
        assert isinstance(check_case(case.program, GenConfig(), swap_if=True), oracle.Divergent)
        text = format_repro(case)
        assert text.startswith(f"divergence in case {case.index}")
        assert "interpreter:" in text and "reference:" in text


def test_shrink_to_minimum():
    stmts = [Snil()] * 6
    assert shrink(stmts, lambda c: len(c) >= 2) == [Snil(), Snil()]
