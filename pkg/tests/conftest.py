import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from qsmarkov import families
from qsmarkov.measure import MarkovMeasure

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def stochastic_matrices(draw, n_min=2, n_max=4, floor=0.02):
    """Row-stochastic matrices with every entry at least ``floor``."""
    N = draw(st.integers(n_min, n_max))
    w = draw(st.lists(st.lists(st.floats(0.0, 1.0), min_size=N, max_size=N), min_size=N, max_size=N))
    W = np.asarray(w) + 1e-3
    W = W / W.sum(axis=1, keepdims=True)
    return floor + (1.0 - N * floor) * W


@st.composite
def random_specs(draw, n_values=(2, 3)):
    seed = draw(st.integers(0, 2**32 - 1))
    N = draw(st.sampled_from(n_values))
    kind = draw(st.sampled_from(families.KINDS))
    rng = np.random.default_rng(seed)
    return MarkovMeasure.build(families.random_sequence(rng, N, kind))


@pytest.fixture(params=families.QS_SUITE)
def qs_family(request):
    return request.param, families.measure(request.param)


@pytest.fixture
def constant_measure():
    return families.measure("constant")


@pytest.fixture
def geometric_measure():
    return families.measure("geometric")


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
