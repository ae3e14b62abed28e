import numpy as np
import pytest

from offhub.scenarios import DESIGNS, REFERENCE_SEED, SUITE, run_case, short_term_wind, year

# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def reference_wind():
    return short_term_wind(DESIGNS["initial"], REFERENCE_SEED)


@pytest.fixture(scope="session")
def suite_results(reference_wind):
    return {c.name: run_case(c, DESIGNS["initial"], reference_wind, seed=REFERENCE_SEED)
            for c in SUITE}


@pytest.fixture(scope="session")
def annual_results():
    """Design 1 and 2 on the bundled year, with wall-clock time of each run."""
    import time

    out = {}
    for name in ("design1", "design2"):
        t0 = time.perf_counter()
        res = year(DESIGNS[name])
        out[name] = (res, time.perf_counter() - t0)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
