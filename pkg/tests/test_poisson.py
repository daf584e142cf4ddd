import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from poisson_lab.entropy import poisson_entropy_function, suspension_partition_entropy
from poisson_lab.entropy.poisson import poisson_entropy_direct, series_terms

mpmath.mp.dps = 40


def oracle(lam: float) -> float:
    """Entropy of Poisson(lam) by brute-force summation at 40 digits."""
    lam = mpmath.mpf(lam)
    K = int(lam + 40 * mpmath.sqrt(lam) + 80)
    total = mpmath.mpf(0)
    for k in range(K):
        p = mpmath.exp(-lam + k * mpmath.log(lam) - mpmath.loggamma(k + 1)) if lam > 0 else mpmath.mpf(k == 0)
        if p > 0:
            total -= p * mpmath.log(p)
    return float(total)


@pytest.mark.parametrize("lam", [1e-4, 1e-2, 0.5, 1.0, 2.0, 5.0, 7.5, 30.0, 300.0])
def test_matches_oracle(lam):
    assert poisson_entropy_function(lam) == pytest.approx(oracle(lam), rel=1e-13)


def test_zero_and_vector():
    assert poisson_entropy_function(0.0) == 0.0
    v = poisson_entropy_function(np.array([0.0, 1.0, 10.0]))
    assert v.shape == (3,) and v[0] == 0.0


def test_closed_form_at_one():
    # f(1) = 1 + e^{-1} sum_{k>=2} log(k!)/k!
    s = mpmath.nsum(lambda k: mpmath.log(mpmath.factorial(k)) / mpmath.factorial(k), [2, 60])
    assert poisson_entropy_function(1.0) == pytest.approx(float(1 + mpmath.exp(-1) * s), rel=1e-14)


@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3, 1e-4])
def test_small_argument_asymptotic(eps):
    assert abs(poisson_entropy_function(eps) - eps + eps * math.log(eps)) <= eps ** 2


def test_rejects_bad_arguments():
    for bad in (-1.0, math.nan, math.inf):
        with pytest.raises(ValueError):
            poisson_entropy_function(bad)


def test_direct_and_series_agree_near_switch():
    for lam in (4.0, 5.0, 6.0):
        assert poisson_entropy_direct(lam) == pytest.approx(oracle(lam), rel=1e-13)
    assert series_terms(1.0) <= 40


def test_partition_entropy_two_halves():
    assert suspension_partition_entropy([0.5, 0.5]) == pytest.approx(2 * poisson_entropy_function(0.5))
    assert suspension_partition_entropy([0.5, 0.5]) != pytest.approx(poisson_entropy_function(1.0))


def test_partition_entropy_infinite_cell_ignored():
    assert suspension_partition_entropy([0.3, math.inf]) == pytest.approx(poisson_entropy_function(0.3))
    with pytest.raises(ValueError):
        suspension_partition_entropy([math.inf, math.inf])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(1e-6, 50.0), min_size=1, max_size=6), st.randoms(use_true_random=False))
def test_partition_entropy_permutation_invariant(masses, r):
    shuffled = list(masses)
    r.shuffle(shuffled)
    assert suspension_partition_entropy(shuffled) == pytest.approx(suspension_partition_entropy(masses), rel=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(1e-6, 50.0), min_size=1, max_size=5), st.floats(0.01, 0.99))
def test_refinement_never_decreases(masses, frac):
    base = suspension_partition_entropy(masses)
    split = masses[1:] + [masses[0] * frac, masses[0] * (1 - frac)]
    assert suspension_partition_entropy(split) >= base * (1 - 1e-13)
