import time
from contextlib import contextmanager
from pathlib import Path

import pytest
from hypothesis import settings

settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile("ci")

FIXTURES = Path(__file__).parent / "fixtures"
_CRITERIA = pytest.StashKey[dict]()


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def pytest_configure(config):
    config.stash[_CRITERIA] = {}


@pytest.fixture
def criterion(request):
    """Context manager that records a PASS/FAIL line for an acceptance criterion.

    ``limit`` is a wall-clock budget in seconds for the body.
    """
    log = request.config.stash[_CRITERIA]

    @contextmanager
    def run(number: int, title: str, limit: float | None = None):
        t0 = time.perf_counter()
        try:
            yield
            elapsed = time.perf_counter() - t0
            assert limit is None or elapsed < limit, f"took {elapsed:.2f}s, budget {limit}s"
        except BaseException as exc:
            elapsed = time.perf_counter() - t0
            line = f"criterion {number}: FAIL  {title} ({elapsed:.2f}s) -- {type(exc).__name__}: {exc}"
            log[number] = line
            print(line)
            raise
        line = f"criterion {number}: PASS  {title} ({elapsed:.2f}s)"
        log[number] = line
        print(line)

    return run


def pytest_terminal_summary(terminalreporter, config):
    log = config.stash.get(_CRITERIA, {})
    if log:
        terminalreporter.section("acceptance criteria")
        for number in sorted(log):
            terminalreporter.write_line(log[number])
