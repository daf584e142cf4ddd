import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from poisson_lab.entropy import (
    conditional_information,
    conditional_information_all,
    decomposition_residual,
    information,
    information_function,
)
from poisson_lab.entropy.information import as_labels
from poisson_lab.systems import FiniteChain


def test_three_cases():
    assert information_function([0.25, 0.75], 0) == pytest.approx(math.log(4))
    assert information_function([0.0, 1.0], 0) == math.inf
    assert information_function([math.inf, 1.0], 0) == 0.0
    assert np.array_equal(information([1.0]), [0.0])


def test_negative_mass_rejected():
    with pytest.raises(ValueError):
        information_function([-1.0], 0)


def test_partition_validation():
    assert as_labels([{0, 1}, {2}], 3).tolist() == [0, 0, 1]
    with pytest.raises(ValueError):
        as_labels([{0, 1}, {1, 2}], 3)
    with pytest.raises(ValueError):
        as_labels([{0}], 3)


def test_conditional_finite_cell_normalizes():
    masses = np.array([1.0, 1.0, 2.0])
    alpha1 = [{0}, {1}, {2}]
    alpha2 = [{0, 1}, {2}]
    # inside the cell {0,1} of mass 2, atom 0 has conditional mass 1/2
    assert conditional_information(alpha1, alpha2, 0, masses) == pytest.approx(math.log(2))
    assert conditional_information(alpha1, alpha2, 2, masses) == pytest.approx(0.0)


def test_conditional_infinite_cell_uses_join_with_c():
    # atoms: 0 (mass 1), 1 (mass 3), 2 (infinite)
    masses = np.array([1.0, 3.0, math.inf])
    alpha1 = [{0}, {1, 2}]
    alpha2 = [{0, 1, 2}]
    vals = conditional_information_all(masses, alpha1, alpha2)
    # the alpha2 cell is infinite: I(alpha1 v {C, X\C})(x) for C = {0}
    assert vals[0] == pytest.approx(0.0)
    assert vals[1] == 0.0 and vals[2] == 0.0


def test_decomposition_two_state():
    ch = FiniteChain([["1/2", "1/2"], ["1/3", "2/3"]])
    for n in range(1, 7):
        assert decomposition_residual(ch, None, n) < 1e-13


def test_decomposition_requires_probability():
    P = np.array([[0.5, 0.5], [0.5, 0.5]])
    with pytest.raises(ValueError):
        decomposition_residual((P, np.array([1.0, 1.0])), None, 3)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 4), st.integers(1, 6), st.integers(0, 2 ** 31))
def test_decomposition_random_kernels(s, n, seed):
    rng = np.random.default_rng(seed)
    P = rng.dirichlet(np.ones(s), size=s)
    ch = FiniteChain(P)
    alpha = rng.integers(0, 2, size=s)
    assert decomposition_residual(ch, alpha, n) < 1e-12
