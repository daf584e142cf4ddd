import warnings

import numpy as np
import pytest

from poisson_lab.systems import RandomWalk, RenewalChain, ReturnDistribution

# f_n = 1/(n(n+1)): sum_n log(n(n+1)) / (n(n+1)), evaluated to 21 digits with
# an independent arbitrary-precision summation plus Euler-Maclaurin tail.
H_TELESCOPING = 2.04627745285587859107
LOG2 = float(np.log(2.0))


@pytest.fixture
def half():
    return RenewalChain(ReturnDistribution.from_values(["1/2", "1/2"]))


@pytest.fixture
def telescoping():
    return RenewalChain(ReturnDistribution.from_tail("telescoping"), 200)


@pytest.fixture
def loop():
    return RenewalChain(ReturnDistribution.from_values(["1"]))


@pytest.fixture
def walk():
    return RandomWalk({1: "1/2", -1: "1/2"}, (-50, 50))


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield
