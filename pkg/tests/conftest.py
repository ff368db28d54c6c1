import math

import numpy as np
import pytest

from spiralscat import build_first_order_bank, design_mother_wavelet

SR = 22050.0

# acceptance outcomes, reported once at the end of the session
ACCEPTANCE = {}


def grid_frequency(freq, Q):
    """Nearest point of the ``2**(m/Q)`` grid."""
    return 2.0 ** (round(Q * math.log2(freq)) / Q)


def tone(freq, duration, sr=SR, amplitude=1.0, phase=0.0):
    t = np.arange(int(round(duration * sr))) / sr
    return amplitude * np.cos(2 * np.pi * freq * t + phase)


@pytest.fixture(scope="session")
def bank12():
    return build_first_order_bank(design_mother_wavelet(12), 12, 8, SR)


@pytest.fixture(scope="session")
def bank16():
    return build_first_order_bank(design_mother_wavelet(16), 16, 8, SR)


@pytest.fixture
def record_acceptance():
    def record(number, passed, detail):
        ACCEPTANCE[number] = (bool(passed), detail)
        print(f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}")
