import hypothesis
import numpy as np
import pytest

from mfmab.instances import SIMULATION_PRIOR, TABLE2, TABLE3

np.seterr(all="warn")

hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=20, deadline=None)
hypothesis.settings.load_profile("ci")


@pytest.fixture
def table2():
    return TABLE2


@pytest.fixture
def table3():
    return TABLE3


@pytest.fixture
def prior():
    return SIMULATION_PRIOR


def random_valid_instance(rng: np.random.Generator, max_arms: int = 6, max_fids: int = 5):
    """Random canonical-ready instance satisfying every model constraint."""
    from mfmab.core import InstanceSpec, validate_instance

    K = int(rng.integers(2, max_arms + 1))
    M = int(rng.integers(1, max_fids + 1))
    costs = np.sort(rng.uniform(0.1, 5.0, M))
    zeta = np.sort(rng.uniform(0.0, 0.3, M))[::-1].copy()
    zeta[-1] = 0.0
    top = rng.uniform(0.05, 0.95, K)
    while np.sort(top)[-1] == np.sort(top)[-2]:
        top = rng.uniform(0.05, 0.95, K)
    means = np.empty((K, M))
    for m in range(M):
        lo = np.clip(top - zeta[m], 0, 1)
        hi = np.clip(top + zeta[m], 0, 1)
        means[:, m] = rng.uniform(lo, hi)
    means[:, -1] = top
    return validate_instance(InstanceSpec.from_arrays(costs, zeta, means)).spec
