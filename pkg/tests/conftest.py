import numpy as np
import pytest

from rmig.mcmc import SamplerConfig, sample
from rmig.model import ModelSpec
from rmig.poly import Polynomial


def gue_spec(n, box=((-2.0, 2.0), (0.05, 4.0))):
    """Gaussian chart: base 0, perturbations (x, x^2)."""
    return ModelSpec(Polynomial((0.0,)),
                     (Polynomial((0.0, 1.0)), Polynomial((0.0, 0.0, 1.0))),
                     box, n=n)


def lue_spec(n, box=((0.1, 10.0),)):
    """Positive-half-line chart: base 0, perturbation x."""
    return ModelSpec(Polynomial((0.0,)), (Polynomial((0.0, 1.0)),), box, n=n,
                     support="positive")


def quartic_spec(n, box=((-1.0, 1.0), (-0.5, 2.0))):
    """Quartic model: base x^4, perturbations (x, x^2)."""
    return ModelSpec(Polynomial((0.0, 0.0, 0.0, 0.0, 1.0)),
                     (Polynomial((0.0, 1.0)), Polynomial((0.0, 0.0, 1.0))),
                     box, n=n)


@pytest.fixture(scope="session")
def gue8_batch():
    return sample(gue_spec(8), (0.0, 0.5),
                  SamplerConfig(steps=12000, seed=2024, chains=6))


@pytest.fixture(scope="session")
def gue4_batch():
    return sample(gue_spec(4), (0.0, 0.5),
                  SamplerConfig(steps=10000, seed=71, chains=6))


@pytest.fixture(scope="session")
def quartic6_batch():
    return sample(quartic_spec(6), (0.1, 0.2),
                  SamplerConfig(steps=12000, seed=404, chains=6))


def three_sigma(value, target, stderr, floor=0.0):
    return abs(value - target) <= 3.0 * max(stderr, floor)
