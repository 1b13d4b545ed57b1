from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from winprob.ranking import BenchmarkSample

FIXTURES = Path(__file__).parent / "fixtures"


def random_sample(rng, m, n, depth=None):
    """Uniformly random full (or top-``depth``) rankings."""
    orders = np.array([rng.permutation(m) for _ in range(n)])
    if depth is not None:
        orders = orders[:, :depth]
    return BenchmarkSample.from_orders(orders, m=m)


@st.composite
def samples(draw, min_m=2, max_m=6, min_n=2, max_n=15, full=True):
    m = draw(st.integers(min_m, max_m))
    n = draw(st.integers(min_n, max_n))
    perms = st.permutations(list(range(m)))
    rows = draw(st.lists(perms, min_size=n, max_size=n))
    if not full:
        d = draw(st.integers(1, m))
        rows = [r[:d] for r in rows]
    return BenchmarkSample.from_orders(np.array(rows), m=m)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


#: Lines reported by the acceptance suite, echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
