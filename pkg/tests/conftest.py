import numpy as np
import pytest

import aputherm as at
from aputherm.config import builtin_calibration, builtin_workloads
from aputherm.schedule import ModelContext


@pytest.fixture(scope="session")
def apu():
    return at.builtin_apu_floorplan()


@pytest.fixture(scope="session")
def grid64(apu):
    return at.build_grid(apu, 64, 64)


@pytest.fixture(scope="session")
def response64(grid64):
    return grid64.response_matrix()


@pytest.fixture(scope="session")
def calibration():
    return builtin_calibration()


@pytest.fixture(scope="session")
def workloads():
    return builtin_workloads()


@pytest.fixture(scope="session")
def ctx(apu, response64, calibration):
    return ModelContext(apu, response64, calibration)


@pytest.fixture(scope="session")
def reference_power(apu, calibration):
    return calibration.reference_power_map(apu)


def random_power_maps(n_blocks, count, seed, max_w=10.0):
    rng = np.random.default_rng(seed)
    return [rng.uniform(0.0, max_w, size=n_blocks) for _ in range(count)]
