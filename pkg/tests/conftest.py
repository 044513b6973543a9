import sys
from pathlib import Path

import pytest

from nullcause.minil import Program

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
BUG01 = CORPUS / "bug01"

# the tutorial knowledge base, verbatim
FAMILY_KB = """\
parent(jill, jane).
parent(john, jane).
male(john).
female(jill).
father(jack, jill).
father(X, Y) :- parent(X, Y), male(X).
grandfather(X, Y) :- father(X, Z), parent(Z, Y).
"""


@pytest.fixture(scope="session")
def bug01_program():
    return Program.from_dir(BUG01 / "src", project="bug01")


@pytest.fixture(scope="session")
def bug01_analysis():
    from nullcause.localizer import Config, analyze

    return analyze(BUG01, Config(timings=False))


def program_of(source: str, class_id: str = "a") -> Program:
    return Program.from_sources({class_id: source})


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
