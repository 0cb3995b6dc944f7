import pytest

from ppcdob.config import RunConfig
from ppcdob.runner import run_scenario


@pytest.fixture(scope="session")
def default_runs():
    """Default closed-loop runs shared across modules (each takes ~1-2 s)."""
    cache = {}

    def get(controller="ppc", observer="asmdob"):
        key = (controller, observer)
        if key not in cache:
            cache[key] = run_scenario(RunConfig(controller=controller, observer=observer))
        return cache[key]

    return get


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def report(n: int, ok: bool, detail: str) -> bool:
    ACCEPTANCE[n] = (ok, detail)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
