import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_sparse_B(rng, n, m=None, density=0.2):
    """Random nonnegative n x m matrix with at least one positive entry per row."""
    m = n if m is None else m
    B = rng.random((n, m)) * (rng.random((n, m)) < density)
    B[np.arange(n), rng.integers(0, m, n)] += rng.random(n) + 0.1
    return B


def random_symmetric_positive(rng, n):
    U = np.triu(rng.random((n, n)) + 0.01, k=1)
    return U + U.T


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
