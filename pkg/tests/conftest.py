import numpy as np
import pytest

from seguq.datamodel import SampleStack
from seguq.selfcheck import FIXTURE_ROOT


@pytest.fixture
def rng():
    return np.random.default_rng(987654321)


@pytest.fixture
def fixture_root():
    return FIXTURE_ROOT


def random_stack(rng, k=2, t=3, h=4, w=5, case_id="case"):
    values = rng.random((k, t, h, w)).astype(np.float32)
    return SampleStack(values, case_id=case_id)


@pytest.fixture
def make_stack(rng):
    def _make(**kwargs):
        return random_stack(rng, **kwargs)

    return _make
