import itertools
from dataclasses import replace

import pytest

from hybridsol.specfile import parse_spec
from hybridsol.symexec import solver
from hybridsol.symexec.bounded import bounded_check, grid
from hybridsol.symexec.debugger import DebugError, Session, SessionEnded
from hybridsol.symexec.engine import Falsified, Unknown, Verified, prepare, verify
from hybridsol.symexec.hoare import SpecError, precondition_holds, replay
from hybridsol.symexec.notation import parse_expr, show_expr, show_model
from hybridsol.symexec.summary import Summary, SummaryStore, access_sets, segment_id, summarize
from hybridsol.symexec.symvalue import Sym, const_of, mk
from hybridsol.types import TBool, TInt
from hybridsol.values import VBool

from conftest import SPECS, spec_path

U64 = TInt(64, False)
U8 = TInt(8, False)
X, Y, Z = (Sym(n, U64) for n in "xyz")
B = Sym("b", TBool())


def c(n, ty=U64):
    return const_of(ty, n)


class TestSolver:
    def test_contradictory_bounds(self):
        pc = solver.PathCondition([mk(">", X, c(5)), mk("<", X, c(3))])
        assert solver.solve(pc) == solver.Unsat()

    def test_equality_model(self):
        r = solver.solve(solver.PathCondition([mk("==", X, c(7))]))
        assert r.model == {"x": c(7)}

    def test_literal_and_negation(self):
        pc = solver.PathCondition([B, mk("!", B)])
        assert pc.trivially_false
        assert solver.solve(pc) == solver.Unsat()

    def test_three_symbol_ordering(self):
        pc = solver.PathCondition([mk("<", X, Y), mk("<", Y, Z), mk("<", Z, c(3))])
        m = solver.solve(pc).model
        assert (m["x"].value, m["y"].value, m["z"].value) == (0, 1, 2)

    def test_strict_chain_unsat(self):
        # three distinct unsigned values below 2 do not exist
        pc = solver.PathCondition([mk("<", X, Y), mk("<", Y, Z), mk("<", Z, c(2))])
        assert solver.check_sat(pc) is False

    def test_small_domain_exhaustive(self):
        a = Sym("a", U8)
        pc = solver.PathCondition([mk("==", mk("*", a, a), c(49, U8))])
        r = solver.solve(pc)
        assert isinstance(r, solver.Sat) and (r.model["a"].value ** 2) % 256 == 49
        pc = solver.PathCondition([mk("==", mk("*", a, c(2, U8)), c(1, U8))])
        assert solver.solve(pc) == solver.Unsat()

    def test_nonlinear_wide_is_unknown(self):
        pc = solver.PathCondition([mk("==", mk("*", X, X), c(2))])
        assert isinstance(solver.solve(pc), solver.Unknown)

    def test_entails(self):
        assert solver.entails([mk(">", X, c(3))], mk(">", X, c(1))) is True
        assert solver.entails([mk(">", X, c(1))], mk(">", X, c(3))) is False

    def test_models_satisfy(self):
        for lo, hi in itertools.product(range(4), repeat=2):
            pc = solver.PathCondition([mk(">=", X, c(lo)), mk("<=", X, c(hi))])
            r = solver.solve(pc)
            assert isinstance(r, solver.Sat) == (lo <= hi)


class TestNotation:
    def test_round_trip(self):
        syms = {"x": U64, "b": TBool()}
        e = parse_expr("x + 1 == 3 || !b", syms)
        assert parse_expr(show_expr(e), syms) == e

    def test_literal_typing(self):
        with pytest.raises(SpecError):
            parse_expr("1 + 2", {})
        with pytest.raises(SpecError):
            parse_expr("x == 300", {"x": U8})

    def test_show_model(self):
        assert show_model({"b": VBool(True), "a": c(2)}) == "a = 2, b = true"


class TestVerify:
    def test_pledge_false_static(self, load):
        spec, prog = load(spec_path("pledge_false.spec"))
        r = verify(spec, prog)
        assert isinstance(r.verdict, Verified)
        assert r.stats.paths <= 16
        assert r.stats.paths == r.stats.leaves + r.stats.pruned

    def test_concolic_explores_fewer_paths(self, load):
        static = verify(*load(spec_path("pledge_false.spec")))
        concolic = verify(*load(spec_path("pledge_false_concolic.spec")))
        assert isinstance(concolic.verdict, Verified)
        assert concolic.stats.paths < static.stats.paths

    def test_mutated_is_falsified_by_replay(self, load):
        spec, prog = load(spec_path("pledge_increments_mutated.spec"))
        v = verify(spec, prog).verdict
        assert isinstance(v, Falsified)
        assert precondition_holds(spec, v.model)
        violated, _, _ = replay(prog, spec, v.model)
        assert violated
        assert v.trace

    def test_records(self, load):
        assert isinstance(verify(*load(spec_path("pledge_records.spec"))).verdict, Verified)

    def test_concrete_refund(self, load):
        assert isinstance(verify(*load(spec_path("refund_two.spec"))).verdict, Verified)

    def test_failed_send_falsifies_drawdown(self, load):
        v = verify(*load(spec_path("drawdown_completes.spec"))).verdict
        assert isinstance(v, Falsified)
        assert v.model["_send1"] == VBool(False)

    def test_unbounded_loop_is_unknown(self, load):
        v = verify(*load(spec_path("refund_unbounded.spec"))).verdict
        assert isinstance(v, Unknown) and "fuel" in v.reason

    def test_vacuous_precondition(self, load):
        spec, prog = load(spec_path("pledge_false.spec"))
        spec = replace(spec, constraint=parse_expr("money > 0 && money < 1", {"money": U64}))
        r = verify(spec, prog)
        assert isinstance(r.verdict, Verified)
        assert any("VacuousPre" in w for w in r.stats.warnings)

    def test_deterministic(self, load):
        a = verify(*load(spec_path("pledge_increments_mutated.spec")))
        b = verify(*load(spec_path("pledge_increments_mutated.spec")))
        assert a.verdict == b.verdict and a.verdict.model == b.verdict.model
        assert a.stats.paths == b.stats.paths


class TestSelective:
    def stored(self, load, tmp_path):
        store = SummaryStore(str(tmp_path))
        r = verify(*load(spec_path("pledge_if.spec")))
        store.add(summarize(r, r_prog(load)))
        return store

    def test_summary_reused(self, load, tmp_path):
        store = self.stored(load, tmp_path)
        spec, prog = load(spec_path("pledge_false_selective.spec"))
        r = verify(spec, prog, store=store)
        assert isinstance(r.verdict, Verified)
        assert r.stats.summary_hits == 1 and r.stats.expansions == 0
        static = verify(*load(spec_path("pledge_false.spec")))
        assert r.verdict == static.verdict

    def test_store_persists(self, load, tmp_path):
        self.stored(load, tmp_path)
        again = SummaryStore(str(tmp_path))
        assert len(again) == 1

    def test_json_round_trip(self, load):
        r = verify(*load(spec_path("pledge_if.spec")))
        s = summarize(r, r_prog(load))
        assert Summary.from_json(s.to_json()) == s

    def test_unentailed_precondition_falls_through(self, load, tmp_path):
        store = self.stored(load, tmp_path)
        spec, prog = load(spec_path("pledge_records.spec"))
        r = verify(replace(spec, mode="selective"), prog, store=store)
        assert r.stats.summary_hits == 0 and r.stats.expansions == 1
        assert isinstance(r.verdict, Verified)

    def test_only_verified_results(self, load):
        r = verify(*load(spec_path("pledge_increments_mutated.spec")))
        with pytest.raises(SpecError):
            summarize(r, r_prog(load))

    def test_segment_id_is_content_hash(self, ssc):
        body = ssc.function("pledge").body
        assert segment_id(body[:1]) == segment_id(list(body[:1]))
        assert segment_id(body[:1]) != segment_id(body[1:2])

    def test_access_sets(self, ssc):
        reads, writes = access_sets(ssc.function("pledge").body[3:])
        assert reads == {"numPledges"} and writes == {"numPledges"}


def r_prog(load):
    return load(spec_path("pledge_if.spec"))[1]


class TestBounded:
    def test_grid(self):
        assert [v.value for v in grid(U8)] == [0, 1, 255]
        assert grid(TBool()) == [VBool(False), VBool(True)]

    def test_agrees_with_static(self, load):
        spec, prog = load(spec_path("pledge_false.spec"))
        rep = bounded_check(spec, prog)
        assert rep.ok and rep.checked > 0

    def test_finds_counterexample(self, load):
        spec, prog = load(spec_path("pledge_increments_mutated.spec"))
        assert not bounded_check(spec, prog, stop_after=1).ok


OPEN_PLEDGE = """
[spec]
name = open
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


class TestDebugger:
    def session(self, load, name="pledge_false.spec"):
        spec, prog = load(spec_path(name))
        _, root = prepare(spec, prog)
        return Session(root)

    def test_steps_to_fork(self):
        spec, prog = parse_spec(OPEN_PLEDGE, SPECS)
        s = Session(prepare(spec, prog)[1])
        s.step()  # the call itself
        rep = s.step()  # the guard
        assert len(rep.alternatives) == 2
        with pytest.raises(DebugError):
            s.step()
        rep = s.branch(0)
        assert s.pending is None

    def test_branch_without_fork(self, load):
        with pytest.raises(DebugError):
            self.session(load).branch(0)

    def test_runs_to_end(self, load):
        s = self.session(load, "pledge_false_concolic.spec")
        for _ in range(20):
            if s.ended:
                break
            s.step()
        assert s.ended
        with pytest.raises(SessionEnded):
            s.step()
        assert s.trace()
