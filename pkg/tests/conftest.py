import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from doubled.acceptance import corpus_dir  # noqa: E402
from doubled.sampling import make_rng  # noqa: E402


@pytest.fixture
def rng():
    return make_rng(1234)


@pytest.fixture(scope="session")
def corpus():
    return corpus_dir()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
