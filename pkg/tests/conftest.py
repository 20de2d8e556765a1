import numpy as np
import pytest

from fictitious_monopoly import CobbDouglas, Finite, GameSpec, symmetric_reduce
from fictitious_monopoly.game_model import log_fn


@pytest.fixture
def cd_spec():
    return GameSpec(2, CobbDouglas(0.6, 0.8), r=0.05)


@pytest.fixture
def cd_profile(cd_spec):
    return symmetric_reduce(cd_spec)


@pytest.fixture
def cd_finite_r0():
    # log bequest: terminal map phi(x) = x**2.5 in closed form
    return GameSpec(2, CobbDouglas(0.6, 0.8), r=0.0, horizon=Finite(1.0, log_fn(1.0)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
