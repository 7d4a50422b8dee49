from __future__ import annotations

import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).parent
sys.path.insert(0, str(TESTS))

from oometrics.code_model import build_graph  # noqa: E402

CORPUS = TESTS / "fixtures" / "corpus"
F123 = TESTS / "fixtures" / "f123"
CORDOVA = TESTS / "data" / "cordova-android-15.1.0" / "src"


@pytest.fixture(scope="session")
def corpus_graph():
    return build_graph(CORPUS, version_id="fx")


@pytest.fixture(scope="session")
def f123_graph():
    return build_graph(F123, version_id="f")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
