import numpy as np
import pytest
from scipy.stats import unitary_group

from lnchip.config import ChipConfig, builtin_config
from lnchip.fock import StateVector


@pytest.fixture
def ideal():
    return builtin_config("ideal")


@pytest.fixture
def calibrated():
    return builtin_config("calibrated")


def ideal_with(**changes) -> ChipConfig:
    base = builtin_config("ideal").model_dump(mode="json")
    base.update(changes)
    return ChipConfig.model_validate(base)


def random_state(rng, modes, max_photons=4):
    """Random superposition over all kets with at most ``max_photons`` photons."""
    n = int(rng.integers(1, max_photons + 1))
    terms = {}
    for _ in range(int(rng.integers(1, 6))):
        occ = np.zeros(modes, dtype=int)
        total = int(rng.integers(0, n + 1))
        for _ in range(total):
            occ[rng.integers(modes)] += 1
        terms[tuple(occ)] = complex(rng.normal(), rng.normal())
    return StateVector.from_dict(terms, modes=modes)


def random_unitary(rng, modes):
    return unitary_group.rvs(modes, random_state=rng)


ACCEPTANCE_RESULTS: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[k])
