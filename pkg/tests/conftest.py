import numpy as np
import pytest

from rotorhinf.augmentation import build_generalized_plant, hover_nominal
from rotorhinf.dynamics import ActuatorModel
from rotorhinf.synthesis import HinfSynthesizer


# filled by tests/test_acceptance.py, echoed in the terminal summary
acceptance_lines = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def default_plant():
    return build_generalized_plant(hover_nominal(), ActuatorModel())


@pytest.fixture(scope="session")
def default_design(default_plant):
    return HinfSynthesizer().fit(default_plant)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_stable(rng, n, m, p, with_d=True):
    """Random stable system with a spread of pole locations."""
    from rotorhinf.statespace import StateSpaceModel

    A = rng.standard_normal((n, n))
    A -= (np.linalg.eigvals(A).real.max() + rng.uniform(0.1, 2.0)) * np.eye(n)
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((p, n))
    D = rng.standard_normal((p, m)) if with_d else np.zeros((p, m))
    return StateSpaceModel(A, B, C, D)
