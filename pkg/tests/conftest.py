import hypothesis
import numpy as np
import pytest
from scipy.stats import unitary_group

hypothesis.settings.register_profile(
    "default", deadline=None, max_examples=50,
    suppress_health_check=[hypothesis.HealthCheck.too_slow])
hypothesis.settings.load_profile("default")


def random_unitary(dim: int, seed) -> np.ndarray:
    return unitary_group.rvs(dim, random_state=np.random.default_rng(seed))


@pytest.fixture
def rng():
    return np.random.default_rng(0)
