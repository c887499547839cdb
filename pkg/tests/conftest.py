import numpy as np
import pytest

from biochar.kinetics import BiocharParams, RateLaw
from biochar.scenarios import builtin_scenario


def random_params(rng, *, above_threshold=None, balanced=False, delta_range=(1.0, 4.0)) -> BiocharParams:
    """Draw a valid dimensional parameter set with affine rate laws.

    ``above_threshold`` forces the source above (True) or below (False) the
    bifurcation threshold; ``balanced`` sets eta*mu == delta.
    """
    delta = rng.uniform(*delta_range)
    mu = rng.uniform(0.2, 2.0)
    eta = delta / mu if balanced else rng.uniform(0.05, 1.0) * delta / mu
    refs = tuple(rng.uniform(0.5, 2.0, size=4))
    k1 = RateLaw(rng.uniform(0.1, 3), rng.uniform(0.05, 2), rng.uniform(1e-2, 1), refs[1])
    k2 = RateLaw(rng.uniform(0.1, 3), rng.uniform(0.05, 2), rng.uniform(1e-3, 1e-1), refs[1])
    k3 = RateLaw(rng.uniform(0.1, 3), rng.uniform(0.05, 2), rng.uniform(1e-2, 1), refs[2])
    k4 = RateLaw(0.0, rng.uniform(0.05, 2), rng.uniform(1e-2, 1))
    p = BiocharParams(k1, k2, k3, k4, delta, eta, mu, rng.uniform(0.5, 20), 0.0, refs, 1.0)
    threshold = k1(0.0) * (k4() / (mu * k3(0.0))) ** (1 / delta)
    if above_threshold is None:
        source = rng.uniform(0.0, 3.0) * threshold
    elif above_threshold:
        source = rng.uniform(1.1, 3.0) * threshold
    else:
        source = rng.uniform(0.1, 0.9) * threshold
    return p.replace(source=source)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(params=[1, 2, 3], ids=["set1", "set2", "set3"])
def any_set(request):
    return builtin_scenario(request.param)


@pytest.fixture
def set1():
    return builtin_scenario(1)


@pytest.fixture
def set1_params(set1):
    return set1.params


@pytest.fixture
def make_params():
    return random_params
