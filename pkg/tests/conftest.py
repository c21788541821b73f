import os

import pytest

from hybridsol import fether
from hybridsol.specfile import load_program, load_spec

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CORPUS = os.path.join(ROOT, "corpus")
SPECS = os.path.join(CORPUS, "specs")


def corpus(*parts) -> str:
    return os.path.join(CORPUS, *parts)


def spec_path(name: str) -> str:
    return os.path.join(SPECS, name)


@pytest.fixture(scope="session")
def ssc():
    return load_program(corpus("SSC.sol"), 64)


@pytest.fixture
def ssc_memory(ssc):
    return fether.fresh_memory(ssc)


@pytest.fixture
def load():
    return load_spec


# (criterion number, title, passed, detail), filled in by test_acceptance
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, title, passed, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d} {status}  {title}: {detail}")
