import numpy as np
import pytest

from onebit_ofdm.config import make_config
from onebit_ofdm.precoding import PrecodingSet
from onebit_ofdm.config import Precoder

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_precoders(rng, N, B, U, occupied):
    P = np.zeros((N, B, U), dtype=complex)
    occ = np.asarray(occupied)
    P[occ] = (rng.standard_normal((occ.size, B, U)) + 1j * rng.standard_normal((occ.size, B, U))) / np.sqrt(2)
    return PrecodingSet(matrices=P, beta=1.0, kind=Precoder.ZF)


@pytest.fixture
def small_cfg():
    return make_config(B=4, U=2, N=8, S=6, L=3, N0=0.1)
