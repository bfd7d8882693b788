import sys
import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from radmat.linalg import SparsePattern

settings.register_profile(
    "repo",
    max_examples=40,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@st.composite
def dense_matrices(draw, max_dim=16, min_dim=1, density=True):
    rows = draw(st.integers(min_dim, max_dim))
    cols = draw(st.integers(min_dim, max_dim))
    seed = draw(st.integers(0, 2**31 - 1))
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((rows, cols))
    if density:
        a *= rng.random((rows, cols)) < rng.uniform(0.2, 1.0)
    if not a.any():
        a[0, 0] = 1.0
    return a


@st.composite
def patterns(draw, max_dim=12):
    return SparsePattern.from_dense(draw(dense_matrices(max_dim=max_dim)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
