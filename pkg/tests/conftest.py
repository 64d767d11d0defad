import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from anomattr import Interval, MultivariateSeries

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def record_criterion(name: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS.append((name, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if passed else "FAIL"
        suffix = f"  [{detail}]" if detail else ""
        terminalreporter.write_line(f"{status}  criterion {name}{suffix}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def make_series(values, missing=None, names=None) -> MultivariateSeries:
    return MultivariateSeries(values=np.asarray(values, dtype=float), missing=missing, names=names)


@pytest.fixture
def small_series(rng):
    return make_series(rng.normal(size=(200, 3)))


def shifted_series(rng, n=600, d=2, a=300, b=350, shift=5.0) -> tuple[MultivariateSeries, Interval]:
    values = rng.normal(size=(n, d))
    values[a:b] += shift
    return make_series(values), Interval(a, b)
