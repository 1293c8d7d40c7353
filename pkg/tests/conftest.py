import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from sqdaa.pauli import PauliHamiltonian

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def pauli_words(n_min=1, n_max=5):
    return st.integers(n_min, n_max).flatmap(
        lambda n: st.text(alphabet="IXYZ", min_size=n, max_size=n))


@st.composite
def hamiltonians(draw, n_min=1, n_max=5, max_terms=6):
    n = draw(st.integers(n_min, n_max))
    words = draw(st.lists(st.text(alphabet="IXYZ", min_size=n, max_size=n), min_size=1, max_size=max_terms))
    coeffs = draw(st.lists(st.floats(-2, 2, allow_nan=False), min_size=len(words), max_size=len(words)))
    return PauliHamiltonian.from_terms(zip(coeffs, words))


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)


def random_state_amplitudes(rng, n):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
