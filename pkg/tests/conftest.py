import numpy as np
import pytest

from paratuck2.experiments import deterministic_factors
from paratuck2.model import reconstruct

ACCEPTANCE_LINES = []


def slice_oracle(A, B, F, G, H, k):
    """Direct five-matrix product for frontal slice k."""
    A, B, F, G, H = (np.asarray(M, dtype=complex) for M in (A, B, F, G, H))
    return A @ np.diag(G[:, k]) @ F @ np.diag(H[:, k]) @ B.T


def tensor_oracle(A, B, F, G, H):
    K = np.asarray(G).shape[1]
    return np.stack([slice_oracle(A, B, F, G, H, k) for k in range(K)], axis=2)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def det_factors():
    return deterministic_factors()


@pytest.fixture(scope="session")
def det_tensor(det_factors):
    return reconstruct(det_factors)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
