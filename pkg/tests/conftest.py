import warnings

import numpy as np
import pytest

from corrtomo.crystal import CrystalConfig, discretize_couplings, nl_generator
from corrtomo.elements import Detector
from corrtomo.modes import ModeBasis, ModeBasisParams, PulseSpectrumParams

SMALL_IMAX = 12


@pytest.fixture(scope="session")
def basis():
    return ModeBasis(ModeBasisParams.from_thz(100.0, 0.5, SMALL_IMAX))


@pytest.fixture(scope="session")
def lo():
    return PulseSpectrumParams.from_center_bandwidth_thz(230.0, 59.0)


@pytest.fixture(scope="session")
def probe():
    return PulseSpectrumParams.from_thz(100.0, 4.0)


@pytest.fixture(scope="session")
def g_nl(basis, probe):
    return nl_generator(discretize_couplings(basis, CrystalConfig(), probe))


@pytest.fixture(scope="session")
def detector(basis, lo, g_nl):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return Detector(basis, lo, g_nl=g_nl, threshold=None)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
