"""Shared fixtures for the homonmr test suite."""

import numpy as np
import pytest

from homonmr.hamiltonian import (
    CONVENTIONAL_OFFSET,
    ROTATING_SECULAR_HETERO,
    ROTATING_SECULAR_HOMO,
    cytosine,
    falsification_model,
    standard_model,
)


@pytest.fixture
def sys():
    return cytosine()


@pytest.fixture
def homo():
    return standard_model(ROTATING_SECULAR_HOMO)


@pytest.fixture
def hetero():
    return standard_model(ROTATING_SECULAR_HETERO)


@pytest.fixture
def conventional():
    return falsification_model(CONVENTIONAL_OFFSET)


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)
