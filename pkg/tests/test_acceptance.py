"""One test per acceptance criterion; each records a PASS/FAIL line for the run summary."""

import functools
import glob
import io
import itertools
import os
import random
import time

from hybridsol import fether, germ
from hybridsol.cli import main
from hybridsol.fether import Fuel, Machine, Normal, OutOfGas, Thrown
from hybridsol.ir import (
    Assign, Econst, Eindex, Estruct, FunCall, If, Snil, StructDecl, Throw, TypeContext, Var, While,
    children, typecheck_stmt,
)
from hybridsol.oracle import RefOutOfGas, ref_exec
from hybridsol.program import Program
from hybridsol.scanner import scan_all
from hybridsol.stdlib import StdLib
from hybridsol.symexec.bounded import bounded_check
from hybridsol.symexec.engine import Falsified, Verified, verify
from hybridsol.symexec.hoare import parse_target, precondition_holds, read_target, replay, write_target
from hybridsol.symexec.summary import SummaryStore
from hybridsol.types import Numbered, TMapping
from hybridsol.values import UNDEF, VBool, VInt, VString, VUndef

import conftest
from conftest import SPECS, corpus, spec_path
from test_germ import (
    check_allocate_free, check_frame, check_persistence, check_read_after_write, check_write_after_write,
)


def criterion(n, title):
    def wrap(fn):
        @functools.wraps(fn)
        def test(*args, **kwargs):
            try:
                detail = fn(*args, **kwargs)
            except BaseException as err:
                conftest.ACCEPTANCE.append((n, title, False, f"{type(err).__name__}: {err}".splitlines()[0]))
                raise
            conftest.ACCEPTANCE.append((n, title, True, detail or "ok"))
        return test
    return wrap


def cli(*argv):
    out = io.StringIO()
    return main(list(argv), out), out.getvalue()


def state(prog, m, name):
    return read_target(Machine(prog), m, parse_target(name), None)


@criterion(1, "golden SSC.lolisa")
def test_golden_translation(tmp_path, ssc):
    code, _ = cli("translate", corpus("SSC.sol"), "--word-bits", "64", "-o", str(tmp_path))
    assert code == 0
    for ext in ("lolisa", "addr"):
        got = (tmp_path / f"SSC.{ext}").read_bytes()
        with open(corpus("golden", f"SSC.{ext}"), "rb") as fh:
            assert got == fh.read(), f"SSC.{ext} differs from the golden file"
    body = ssc.contract().body
    state_vars = [s for s in body if isinstance(s, Var) and not isinstance(s.decl.ty, TMapping)]
    structs = [s for s in body if isinstance(s, StructDecl)]
    mappings = [s for s in body if isinstance(s, Var) and isinstance(s.decl.ty, TMapping)]
    assert (len(state_vars), len(structs), len(mappings)) == (7, 1, 1)
    names = [s.decl.name for s in state_vars] + [structs[0].name] + [mappings[0].decl.name]
    assert [ssc.table.resolve(x) for x in names] == [Numbered(0x0a + i) for i in range(9)]
    b = ssc.function("pledge").body
    assert [type(s) for s in b] == [If, Assign, FunCall, Assign]
    assert isinstance(b[0].then, Throw)
    assert isinstance(b[1].lhs, Eindex) and isinstance(b[1].rhs, Estruct)
    assert b[2].callee.name == "_0xsend"
    assert b[3].rhs.op == "+" and b[3].lhs == b[3].rhs.lhs
    return "byte-identical; 7 vars + struct + mapping at 0x0a..0x12"


def _static():
    t0 = time.perf_counter()
    r = verify(*conftest.load_spec(spec_path("pledge_false.spec")))
    return r, time.perf_counter() - t0


@criterion(2, "pledge_false static")
def test_static():
    r, elapsed = _static()
    assert isinstance(r.verdict, Verified)
    assert elapsed < 10.0
    assert r.stats.paths <= 16
    return f"Verified in {elapsed:.3f}s with {r.stats.paths} paths"


@criterion(3, "concolic explores fewer paths")
def test_concolic():
    static, _ = _static()
    r = verify(*conftest.load_spec(spec_path("pledge_false_concolic.spec")))
    assert isinstance(r.verdict, Verified)
    assert r.stats.paths < static.stats.paths
    return f"{r.stats.paths} < {static.stats.paths} paths"


@criterion(4, "selective reuse of fun_pledge_if")
def test_selective(tmp_path):
    store_dir = str(tmp_path / "store")
    code, out = cli("verify", spec_path("pledge_if.spec"), "--store", store_dir)
    assert code == 0 and "summary stored:" in out
    spec, prog = conftest.load_spec(spec_path("pledge_false_selective.spec"))
    r = verify(spec, prog, store=SummaryStore(store_dir))
    static, _ = _static()
    assert isinstance(r.verdict, Verified)
    assert r.stats.expansions == 0
    assert r.stats.summary_hits >= 1
    assert r.verdict == static.verdict
    return f"Verified, {r.stats.summary_hits} applied, {r.stats.expansions} expansions"


@criterion(5, "unchecked send")
def test_unchecked_send(ssc):
    code, out = cli("scan", corpus("SSC.sol"), "--feature", "unchecked_send", "--word-bits", "64")
    assert code == 1
    findings = scan_all(ssc, ["unchecked_send"]).findings["unchecked_send"]
    assert [f.function for f in findings] == ["pledge"]
    assert findings[0].statement == ssc.function("pledge").body[2]
    refund_sends = [s for s in _walk(ssc.function("refund").body)
                    if isinstance(s, FunCall) and s.callee.name == "_0xsend"]
    assert refund_sends and all(f.statement not in refund_sends for f in findings)
    assert out.splitlines() == [f.render("SSC.sol") for f in findings]
    return f"exit 1; {out.split()[1]} flagged, refund clean"


def _walk(stmts):
    for s in stmts:
        yield s
        yield from _walk(children(s))


@criterion(6, "mutated spec falsified")
def test_mutated(ssc):
    spec, prog = conftest.load_spec(spec_path("pledge_increments_mutated.spec"))
    v = verify(spec, prog).verdict
    assert isinstance(v, Falsified)
    violated, _, _ = replay(prog, spec, v.model)
    assert violated
    # brute force with the concrete interpreter
    violators = []
    for cp, rf, money in itertools.product((False, True), (False, True), (0, 1)):
        model = {"cp": VBool(cp), "rf": VBool(rf), "num": VInt(64, False, 0), "money": VInt(64, False, money)}
        if not precondition_holds(spec, model):
            continue
        m0 = fether.set_msg(fether.fresh_memory(prog), prog.lib, value=money)
        mc = Machine(prog)
        m0 = write_target(mc, m0, parse_target("complete"), VBool(cp), None)
        m0 = write_target(mc, m0, parse_target("refunded"), VBool(rf), None)
        out = mc.call(m0, "pledge")
        mem = fether.outcome_memory(out)
        if state(prog, mem, "numPledges") != VInt(64, False, 1):
            violators.append((cp, rf, money))
    key = (v.model["cp"].value, v.model["rf"].value, v.model["money"].value)
    assert key in violators
    return f"model {key} is one of {len(violators)} brute-force violators"


@criterion(7, "concrete pledge")
def test_concrete_pledge(ssc, ssc_memory):
    mc = Machine(ssc)
    m0 = fether.set_msg(ssc_memory, ssc.lib, value=0)
    out = mc.call(m0, "pledge")
    assert isinstance(out, Thrown) and out.initial == m0
    m5 = fether.set_msg(ssc_memory, ssc.lib, value=5, sender=0xBEEF)
    out = mc.call(m5, "pledge")
    assert isinstance(out, Normal)
    assert state(ssc, out.mem, "numPledges") == VInt(64, False, 1)
    rec = state(ssc, out.mem, "pledges[0]")
    assert rec.get("amount") == VInt(64, False, 5)
    assert rec.get("eth_address") == VInt.address(0xBEEF)
    return "value 0 rolls back; value 5 records {5, sender}"


@criterion(8, "gas termination")
def test_gas():
    loop = [While(Econst(VBool(True)), Snil())]
    p = Program.from_statements(loop, StdLib(256))
    m0 = fether.fresh_memory(p)
    for g in (1, 10, 100):
        fuel = Fuel(gas_limit=g)
        out = Machine(p).exec(m0, loop, fuel)
        assert isinstance(out, OutOfGas) and out.steps == g, (g, out)
        assert isinstance(ref_exec(p, m0, fuel=fuel, stmts=loop), RefOutOfGas)
    return "OutOfGas after exactly G steps for G in 1, 10, 100"


@criterion(9, "ill-typed rejection")
def test_ill_typed():
    report = typecheck_stmt(If(Econst(VUndef()), Snil(), Snil()), TypeContext(lib=StdLib(256)))
    assert report.kind == "ConditionNotBool"
    code, out = cli("check", corpus("if_undef.lolisa"))
    assert code == 3 and "ConditionNotBool" in out
    return "ConditionNotBool, exit 3"


@criterion(10, "differential gate")
def test_differential():
    code, out = cli("diff", "--count", "10000", "--max-stmts", "30", "--seed", "42")
    assert code == 0, out
    assert out.splitlines()[0].startswith("cases: 10000,")
    assert out.splitlines()[0].endswith("divergences: 0")
    code, mutated = cli("diff", "--count", "1000", "--max-stmts", "30", "--seed", "42", "--swap-if")
    assert code == 1
    head = mutated.splitlines()[1]
    n = int(head.split("(")[1].split()[0])
    assert n <= 10
    return f"{out.splitlines()[0]}; swap-if caught, repro of {n} statements"


def _random_value(rng):
    k = rng.randrange(4)
    if k == 0:
        return UNDEF
    if k == 1:
        return VBool(rng.random() < 0.5)
    if k == 2:
        w = rng.choice((8, 64, 256))
        return VInt(w, False, rng.randrange(1 << w))
    return VString("".join(rng.choice("abc") for _ in range(rng.randrange(4))))


def _random_memory(rng, size=64):
    m = germ.init_memory(size)
    for _ in range(rng.randrange(13)):
        t = rng.choice(("", "C", "f", "g"))
        m = germ.write(m, rng.randrange(size + len(germ.SPECIALS)), _random_value(rng), t, t)
    if rng.random() < 0.5:
        m = m.set_throw(True)
    return m


@criterion(11, "memory laws")
def test_memory_laws():
    fresh = germ.init_memory(256)
    assert all(germ.read(fresh, a) == UNDEF for a in range(256))
    rng = random.Random(20261014)
    cases = 10_000
    for _ in range(cases):
        m = _random_memory(rng)
        a = rng.randrange(m.size + len(germ.SPECIALS))
        v1, v2 = _random_value(rng), _random_value(rng)
        t = rng.choice(("", "C", "f", "g"))
        check_read_after_write(m, a, v1, t)
        check_write_after_write(m, a, v1, v2, t)
        check_frame(m, a, v1, t)
        check_persistence(m, a, v1, t)
        check_allocate_free(m, t)
    return f"{cases} cases per law; fresh 256-cell space is all Vundef"


@criterion(12, "bounded oracle agreement")
def test_bounded_oracle():
    checked = []
    for path in sorted(glob.glob(os.path.join(SPECS, "*.spec"))):
        spec, prog = conftest.load_spec(path)
        if not isinstance(verify(spec, prog).verdict, Verified):
            continue
        rep = bounded_check(spec, prog)
        assert rep.ok, (os.path.basename(path), rep.counterexamples[:1])
        checked.append(os.path.basename(path))
    assert checked
    return f"{len(checked)} Verified specs agree with enumeration"
