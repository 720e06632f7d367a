import numpy as np
import pytest

from rislink.cavity import CavityRealization

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def toy_realization(ab, d=0.0, eb=None, d_eb=0.0, sizes=None):
    """Realization with a_n = ab_n, b_n = 1, so the cascade equals ``ab``."""
    ab = np.asarray(ab, dtype=complex)
    eb = np.zeros_like(ab) if eb is None else np.asarray(eb, dtype=complex)
    return CavityRealization.from_couplings(ab, np.ones_like(ab), eb, d, d_eb, sizes)
