import numpy as np
import pytest

from movingwave import make_domain
from movingwave import spectral as sp

_ACCEPTANCE = []


def record_criterion(number, name, passed, detail=""):
    """Collect one acceptance line, printed at the end of the session."""
    _ACCEPTANCE.append((number, name, bool(passed), detail))


@pytest.fixture
def acceptance():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number, name, passed, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        line = f"[{'PASS' if passed else 'FAIL'}] {number}. {name}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)


@pytest.fixture
def dom():
    return make_domain(0.5, 2.0)


@pytest.fixture
def single_pair(dom):
    """C_{+1} = C_{-1} = 0.1 at ell = 0.5, t0 = 2."""
    return sp.from_positive(dom, [0.1])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
