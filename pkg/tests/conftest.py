import numpy as np
import pytest

from pnbounds.bounds import DiscreteLaw
from pnbounds.data import Dataset
from pnbounds.nuisance import NuisanceFit, OutcomeModel

# Example 1: binary V with P(V=1) = 0.5 and arm probabilities by stratum.
EXAMPLE1_PI1 = {1.0: 0.4, 0.0: 0.1}
EXAMPLE1_PI0 = {1.0: 0.1, 0.0: 0.8}


class TableModel(OutcomeModel):
    """Oracle outcome model read from a lookup on the first covariate."""

    learner_tag = "oracle"
    covariate_dim = 1

    def __init__(self, pi1, pi0):
        self.pi1 = pi1
        self.pi0 = pi0

    def _raw(self, x, v):
        key = v[:, 0]
        p1 = np.array([self.pi1[k] for k in key])
        p0 = np.array([self.pi0[k] for k in key])
        return np.where(x == 1, p1, p0)


@pytest.fixture
def example1_law():
    return DiscreteLaw([0.5, 0.5], [0.4, 0.1], [0.1, 0.8])


@pytest.fixture
def example1_fit():
    # mu11 = 0.25, delta_L = 0.5 * 0.3 = 0.15, delta_U = 0; p = 0.5
    return NuisanceFit(0.5, 0.25, TableModel(EXAMPLE1_PI1, EXAMPLE1_PI0), 0.15, 0.0)


def sample_example1(n, rng):
    v = (rng.random(n) < 0.5).astype(float)
    x = (rng.random(n) < 0.5).astype(int)
    pi = np.where(x == 1, np.where(v == 1, 0.4, 0.1), np.where(v == 1, 0.1, 0.8))
    y = (rng.random(n) < pi).astype(int)
    return Dataset(x, y, v.reshape(-1, 1), ("v",))
