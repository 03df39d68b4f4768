import pytest

from sensing_ee import SystemParams, SensingSpec, branch_probs


def db(x):
    return 10.0 ** (x / 10.0)


@pytest.fixture
def params():
    # N0=0.2, sigma_s^2=1, T=100, tau=10, Pc=0.1
    return SystemParams()


@pytest.fixture
def imperfect():
    return SensingSpec(p_detect=0.8, p_false_alarm=0.1, prior_idle=0.4, prior_busy=0.6)


@pytest.fixture
def perfect():
    return SensingSpec(p_detect=1.0, p_false_alarm=0.0, prior_idle=0.4, prior_busy=0.6)


@pytest.fixture
def perfect_probs(perfect):
    return branch_probs(perfect)
