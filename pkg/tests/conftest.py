import numpy as np
import pytest

from orbits import make_preset
from orbits.loops import ANTIPERIODIC, PERIODIC, evaluate, make_loop, random_loop

R_CIRC = (2 * np.pi) ** (-2.0 / 3.0)  # Kepler circle of period 1
A_COL = (2 / np.pi ** 2) ** (1.0 / 6.0)  # twisted collision orbit A cos(pi tau)
A_COL2 = (1 / (2 * np.pi ** 2)) ** (1.0 / 6.0)  # periodic A cos(2 pi tau), two collisions

PRESET_CASES = {
    "kepler": {},
    "rotating_kepler": {"omega": 0.7},
    "forced_stark": {"f": 0.4, "f_im": -0.3, "m": 1},
    "bicircular": {},
}

PARITIES = (PERIODIC, ANTIPERIODIC)

# lines collected by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(params=sorted(PRESET_CASES))
def model(request):
    return make_preset(request.param, PRESET_CASES[request.param])


@pytest.fixture(params=PARITIES)
def parity(request):
    return request.param


def nonvanishing_loop(rng, n, parity, bandwidth=3, amplitude=0.06, base=0.6):
    """Random loop ``base e^{2 pi i w tau} + noise`` with ``sup |noise| <= 0.3 base``."""
    w = 0.5 if parity == ANTIPERIODIC else 1.0
    if rng.random() < 0.5:
        w = -w
    noise = random_loop(rng, n, parity, bandwidth=bandwidth, amplitude=amplitude)
    fine = np.abs(evaluate(noise, np.linspace(0, 1, 8 * n, endpoint=False))).max()
    scale = min(1.0, 0.3 * base / fine)
    circle = base * np.exp(2j * np.pi * w * noise.nodes)
    return make_loop(circle + scale * noise.samples, parity)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
