import numpy as np
import pytest

from stbands.capacitance import CapacitanceAssembler
from stbands.lattice import make_lattice, trimer_chain_geometry
from stbands.validation import calibrate_trimer

PHASES = (0.0, -2 * np.pi / 3, -4 * np.pi / 3)


@pytest.fixture(scope="session")
def chain():
    return make_lattice("chain", 1.0)


@pytest.fixture(scope="session")
def trimer():
    return trimer_chain_geometry(0.1, 0.05, 1.0)


@pytest.fixture(scope="session")
def trimer_asm(chain, trimer):
    return CapacitanceAssembler(trimer, chain)


@pytest.fixture(scope="session")
def calibration():
    return calibrate_trimer()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_hpd(rng, n=3):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return A @ A.conj().T + n * np.eye(n)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
