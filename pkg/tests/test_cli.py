import io
import os
import shutil
import subprocess
import sys

import pytest

from hybridsol.cli import EXIT_ERROR, EXIT_FINDING, EXIT_OK, EXIT_UNKNOWN, main

from conftest import corpus, spec_path

SSC = corpus("SSC.sol")


def cli(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


class TestTranslate:
    def test_matches_golden(self, tmp_path):
        code, text = cli("translate", SSC, "--word-bits", "64", "-o", str(tmp_path))
        assert code == EXIT_OK and "wrote" in text
        for ext in ("lolisa", "addr"):
            with open(tmp_path / f"SSC.{ext}", "rb") as a, open(corpus("golden", f"SSC.{ext}"), "rb") as b:
                assert a.read() == b.read()

    def test_stdout(self):
        code, text = cli("translate", SSC, "--word-bits", "64", "--stdout")
        with open(corpus("golden", "SSC.lolisa"), encoding="utf-8") as fh:
            assert text == fh.read()

    def test_unsupported(self, capsys):
        code, _ = cli("translate", corpus("assembly.sol"), "--stdout")
        assert code == EXIT_ERROR
        assert "unsupported construct: inline assembly" in capsys.readouterr().err

    def test_missing_file(self, capsys):
        assert cli("translate", corpus("nope.sol"))[0] == EXIT_ERROR


class TestCheck:
    def test_ill_typed(self):
        code, text = cli("check", corpus("if_undef.lolisa"))
        assert code == EXIT_ERROR and "ConditionNotBool" in text

    def test_well_typed(self):
        assert cli("check", SSC) == (EXIT_OK, "SSC.sol: well-typed\n")


class TestScan:
    def test_unchecked_send(self):
        code, text = cli("scan", SSC, "--feature", "unchecked_send", "--word-bits", "64")
        assert code == EXIT_FINDING
        assert text.splitlines() == [
            "unchecked_send SSC.sol:30 (FunCall (Efun _0xsend bool) (Evar benefactor address) "
            "(Efield (Special _0xmsg) (values) uint64))"]

    def test_clean(self):
        assert cli("scan", corpus("clean.sol"), "--all") == (EXIT_OK, "")

    def test_feature_required(self):
        assert cli("scan", SSC)[0] == EXIT_ERROR


class TestRun:
    def test_pledge(self):
        code, text = cli("run", SSC, "--entry", "pledge", "--word-bits", "64", "--value", "5",
                         "--sender", "0x1234")
        assert code == EXIT_OK
        assert "(Vint uint64 1)" in text and "(amount (Vint uint64 5))" in text
        assert text.endswith("result: NORMAL after 6 steps\n")

    def test_zero_value_throws(self):
        code, text = cli("run", SSC, "--entry", "pledge", "--word-bits", "64")
        assert code == EXIT_FINDING and "THROWN" in text

    def test_gas(self):
        code, text = cli("run", corpus("while_true.lolisa"), "--gas", "7")
        assert code == EXIT_FINDING and text.endswith("result: OUT OF GAS (gas) after 7 steps\n")

    def test_args(self):
        code, text = cli("run", corpus("batch_overflow.sol"), "--entry", "batchTransfer",
                         "--word-bits", "8", "--args", "16,16,3")
        assert code == EXIT_OK

    def test_symbolic_policy_rejected(self):
        assert cli("run", SSC, "--entry", "pledge", "--send-policy", "symbolic")[0] == EXIT_ERROR


class TestVerify:
    def test_verified(self):
        code, text = cli("verify", spec_path("pledge_false.spec"))
        assert code == EXIT_OK
        assert "verdict: Verified" in text and "paths: 2" in text

    def test_falsified(self):
        code, text = cli("verify", spec_path("pledge_increments_mutated.spec"))
        assert code == EXIT_FINDING
        assert "model: cp = false, money = 0, num = 0, rf = false" in text
        assert "trace:" in text

    def test_unknown(self):
        code, text = cli("verify", spec_path("refund_unbounded.spec"))
        assert code == EXIT_UNKNOWN and "reason:" in text

    def test_selective_with_store(self, tmp_path):
        store = str(tmp_path / "store")
        code, text = cli("verify", spec_path("pledge_if.spec"), "--store", store)
        assert code == EXIT_OK and "summary stored:" in text
        code, text = cli("verify", spec_path("pledge_false_selective.spec"), "--store", store)
        assert code == EXIT_OK and "summaries: 1 applied, 0 expanded" in text

    def test_mode_override(self):
        code, text = cli("verify", spec_path("pledge_false.spec"), "--mode", "selective")
        assert code == EXIT_OK and "mode: selective" in text

    def test_concolic_needs_bound_symbol(self, capsys):
        assert cli("verify", spec_path("pledge_false.spec"), "--mode", "concolic")[0] == EXIT_ERROR
        assert "bound symbol" in capsys.readouterr().err

    def test_bad_spec(self, tmp_path, capsys):
        p = tmp_path / "bad.spec"
        p.write_text("[spec]\nname = x\n")
        assert cli("verify", str(p))[0] == EXIT_ERROR
        assert "needs a program" in capsys.readouterr().err


class TestDiff:
    def test_agreement(self):
        code, text = cli("diff", "--count", "100", "--seed", "3")
        assert code == EXIT_OK and text.startswith("cases: 100, checked: 100")

    def test_swap_if(self):
        code, text = cli("diff", "--count", "200", "--swap-if")
        assert code == EXIT_FINDING and "divergence in case" in text

    def test_zero_cases(self):
        assert cli("diff", "--count", "0") == (EXIT_OK, "warning: no cases run\n")


class TestDebug:
    def test_script(self):
        code, text = cli("debug", spec_path("pledge_false.spec"), "--script", corpus("debug", "pledge_steps.txt"))
        assert code == EXIT_OK
        assert "> trace" in text and "session ended: THROWN" in text

    def test_program_entry(self, tmp_path):
        script = tmp_path / "s.txt"
        script.write_text("step 3\npc\nbranch 0\nbogus\nquit\n")
        code, text = cli("debug", SSC, "--entry", "pledge", "--word-bits", "64", "--value", "5",
                         "--script", str(script))
        assert code == EXIT_OK
        assert "error: not at a fork" in text


@pytest.mark.skipif(shutil.which("hybridsol") is None, reason="console script not installed")
def test_console_script_exit_code():
    r = subprocess.run(["hybridsol", "scan", SSC, "--feature", "unchecked_send"], capture_output=True, text=True)
    assert r.returncode == EXIT_FINDING


def test_module_entry():
    r = subprocess.run([sys.executable, "-m", "hybridsol.cli", "check", corpus("if_undef.lolisa")],
                       capture_output=True, text=True, cwd=os.path.dirname(SSC))
    assert r.returncode == EXIT_ERROR
