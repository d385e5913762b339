import pytest

from aoicut.dist import Deterministic, Exponential, ShiftedExponential


@pytest.fixture
def exp1():
    return Exponential(1.0)


@pytest.fixture
def sexp_half():
    return ShiftedExponential(1.0, 0.5)


@pytest.fixture
def det1():
    return Deterministic(1.0)
