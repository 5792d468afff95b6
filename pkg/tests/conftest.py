import sys
from pathlib import Path

import numpy as np
import pytest

from lattice_dispersion import Potential

sys.path.insert(0, str(Path(__file__).parent))

# criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def random_ensemble(count, seed, max_support=9, amplitude=1.0, max_offset=5):
    """Compact potentials with support length <= max_support and entries in [-amp, amp]."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        s = int(rng.integers(1, max_support + 1))
        offset = int(rng.integers(-max_offset, max_offset + 1))
        out.append(Potential(offset, rng.uniform(-amplitude, amplitude, s)))
    return out


@pytest.fixture(scope="session")
def ensemble20():
    return random_ensemble(20, seed=20240)


@pytest.fixture(scope="session")
def ensemble100():
    return random_ensemble(100, seed=100100)


@pytest.fixture
def report():
    """Record and print one acceptance line."""
    def _report(cid, passed, detail):
        ACCEPTANCE[cid] = (bool(passed), detail)
        print(f"{cid} {'PASS' if passed else 'FAIL'}: {detail}")
    return _report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda c: int(c[2:])):
        passed, detail = ACCEPTANCE[cid]
        terminalreporter.write_line(f"{cid} {'PASS' if passed else 'FAIL'}: {detail}")
