import numpy as np
import pytest

from levy_expfun import Contract, ExpFunctionalQuery, GompertzMakeham, KouParams, fit_exponential_sum
from levy_expfun.mc import SimConfig, estimate_tail_prob

M_D = 0.0035
X = 1.0 / M_D

# equity model of the tail-probability table, before and after the fee/yield adjustment
TABLE1_EQUITY = KouParams(0.064161, 0.16, 1.0, 0.3, 20.0, 10.0)
TABLE1_ADJUSTED = KouParams(0.034161, 0.16, 1.0, 0.3, 20.0, 10.0)
SET_A = KouParams(0.119161, 0.100499, 1.0, 0.3, 20.0, 10.0)
SET_B = KouParams(0.064186, 0.144395, 0.00005, 0.3, 0.1, 0.2)


@pytest.fixture(scope="session")
def kou():
    return TABLE1_ADJUSTED


@pytest.fixture(scope="session")
def query():
    return ExpFunctionalQuery(X, 0.05, TABLE1_ADJUSTED)


@pytest.fixture(scope="session")
def gm():
    return GompertzMakeham()


@pytest.fixture(scope="session")
def expsum(gm):
    return fit_exponential_sum(gm, 15, 100.0)


@pytest.fixture(scope="session")
def contract():
    return Contract(TABLE1_EQUITY)


@pytest.fixture(scope="session")
def mc_large(contract, gm):
    """The 20 x 100 000 path run, shared by the acceptance and scaling tests."""
    return estimate_tail_prob(contract, gm, [0.2, 0.4, 0.6], SimConfig(100_000, experiments=20, seed=11))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
