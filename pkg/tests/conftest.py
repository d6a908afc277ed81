import zlib

import pytest

from spider_linnik.rng import RandomSource, set_threads

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(autouse=True)
def _single_thread():
    set_threads(1)
    yield
    set_threads(1)


@pytest.fixture
def src(request):
    """Deterministic random source keyed by the test name."""
    return RandomSource(zlib.crc32(request.node.name.encode()))


def record_acceptance(line: str) -> None:
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
