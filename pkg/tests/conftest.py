import sys
import time
from contextlib import contextmanager
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_RESULTS: dict[int, str] = {}


@pytest.fixture
def criterion():
    """``with criterion(n, text):`` records one PASS/FAIL line for acceptance criterion n."""

    @contextmanager
    def record(number, text):
        t0 = time.perf_counter()
        try:
            yield
        except BaseException:
            _RESULTS[number] = f"FAIL criterion {number}: {text} ({time.perf_counter() - t0:.2f}s)"
            print(_RESULTS[number])
            raise
        _RESULTS[number] = f"PASS criterion {number}: {text} ({time.perf_counter() - t0:.2f}s)"
        print(_RESULTS[number])

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        terminalreporter.write_line(_RESULTS[n])
