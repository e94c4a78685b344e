import numpy as np
import pytest

from bfamily2c import CaseTag, Grid, make_params


@pytest.fixture
def grid20() -> Grid:
    return Grid(20.0, 256)


@pytest.fixture
def params_b2():
    return make_params(CaseTag.CASE_I, 2.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
