import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from maxmachine.binmat import BinaryMatrix
from maxmachine.model import FactorLayer, PriorConfig

# numba compiles on first call, which would trip per-example deadlines
settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FUZZ = 500  # examples per property suite


def bm(rows):
    """BinaryMatrix from a nested list."""
    return BinaryMatrix.from_dense(np.array(rows, dtype=np.uint8))


def random_layer(rng, N, D, L, rel=None, priors=None, clamp_p=0.0, density=0.5):
    if rel is None:
        rel = rng.uniform(0.01, 0.99, L + 1)
    U = BinaryMatrix.from_dense(rng.random((L, D)) < density)
    Z = BinaryMatrix.from_dense(rng.random((N, L)) < density)
    cu = BinaryMatrix.from_dense(rng.random((L, D)) < clamp_p)
    cz = BinaryMatrix.from_dense(rng.random((N, L)) < clamp_p)
    return FactorLayer(U, Z, rel, cu, cz, priors or PriorConfig())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = []  # verdict lines from test_acceptance, echoed in the terminal summary


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
