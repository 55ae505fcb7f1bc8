from pathlib import Path

import numpy as np
import pytest

from quickcount.frame import build_frame, parse_frame

DATA = Path(__file__).parent / "data"


@pytest.fixture
def fixture_path():
    return DATA / "fixture_frame.csv"


@pytest.fixture
def fixture_frame(fixture_path):
    return parse_frame(fixture_path)


def make_frame(n_strata=4, stations=12, J=6, seed=0, voters=(300, 900)):
    """Small random fully counted frame with heterogeneous stations."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n_strata):
        for k in range(stations):
            n = int(rng.integers(*voters))
            p = rng.dirichlet(np.full(J, 8.0))
            x = rng.multinomial(n, p)[:-1]
            rows.append((f"D{i}", f"D{i}-{k}", n, tuple(int(v) for v in x)))
    return build_frame(rows)


@pytest.fixture
def small_frame():
    return make_frame()


ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per criterion; lines are repeated in the terminal summary."""

    def record(criterion, ok, detail):
        status = "SKIP" if ok is None else "PASS" if ok else "FAIL"
        line = f"criterion {criterion}: {status} | {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
