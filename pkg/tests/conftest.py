import numpy as np
import pytest
from hypothesis import settings

from nhwalk.lattice import LatticeParams

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def record(criterion: str, ok: bool, detail: str):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fig4_params():
    return LatticeParams(v=0.25, v_prime=0.5, gamma=2.0, delta_offset=0.6)


def random_amplitudes(rng, n):
    return rng.normal(size=n) + 1j * rng.normal(size=n)
