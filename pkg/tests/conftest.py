import numpy as np
import pytest

from svwlab import Grid, StepMode, build_modes, tanh_speed


@pytest.fixture
def grid256():
    return Grid(256)


@pytest.fixture
def tanh():
    return tanh_speed()


@pytest.fixture
def mode_off():
    return StepMode(cutoff_eps=None, correction=True)


@pytest.fixture
def silent_noise(grid256):
    return build_modes(grid256, 0, 0.0, 3.0, 0.1)


def rel_err(a, b):
    return abs(a - b) / max(1.0, abs(b))


def l2(values):
    return float(np.sqrt(np.mean(np.asarray(values) ** 2)))
