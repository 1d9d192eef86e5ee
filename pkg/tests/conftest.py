import numpy as np
import pytest

from simowiener.signals import WienerSimoSystem, generate_source, simulate


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def experiment1_outputs():
    """Noiseless h1-h3 / f1-f3 outputs, N=256, source seed 0."""
    system = WienerSimoSystem.reference([1, 2, 3], ["f1", "f2", "f3"])
    source = generate_source("gaussian_iid", 256, 0)
    x, y = simulate(system, source)
    return system, source, x, y


# One summary line per acceptance criterion, printed after the test run even
# when output capture is on.
ACCEPTANCE: dict = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(passed), detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")
