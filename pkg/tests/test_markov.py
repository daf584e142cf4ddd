from fractions import Fraction

import numpy as np
import pytest

from poisson_lab.systems import FiniteChain, RandomWalk, RenewalChain, ReturnDistribution, cylinder_measure


def test_renewal_stationary_measure(telescoping):
    q = telescoping.q([1, 2, 3, 10])
    assert np.allclose(q, [1, 1 / 2, 1 / 3, 1 / 10], rtol=1e-13)
    assert telescoping.stationarity_residual() < 1e-13


def test_renewal_cylinder_exact(half):
    c = cylinder_measure(half, [1, 2, 1])
    assert c.mass == pytest.approx(0.5)
    assert c.exact_mass == Fraction(1, 2)
    assert cylinder_measure(half, [2, 2]).mass == 0.0


def test_scaling_multiplies_q(half):
    assert np.allclose(half.scaled(3.0).q([1, 2]), [3.0, 1.5])
    with pytest.raises(ValueError):
        half.scaled(0.0)


def test_finite_chain_stationary():
    P = [["1/2", "1/2"], ["1/3", "2/3"]]
    ch = FiniteChain(P)
    assert np.allclose(ch.q([0, 1]), [0.4, 0.6])
    assert ch.stationarity_residual() < 1e-14


def test_finite_chain_rejects_bad_rows():
    with pytest.raises(ValueError):
        FiniteChain([[0.5, 0.6], [0.5, 0.5]])


def test_walk_properties(walk):
    assert walk.recurrent
    assert walk.beyond_window_entropy_rate() == pytest.approx(np.log(2))
    assert np.all(walk.q([-1000, 0, 7]) == 1.0)
    with pytest.warns(UserWarning):
        drift = RandomWalk({1: 0.7, -1: 0.3}, (-5, 5))
    assert not drift.recurrent


def test_renewal_path_descends(telescoping):
    path = telescoping.sample_path(1, 5000, np.random.default_rng(3))
    up = np.flatnonzero(np.diff(path) != -1)
    # every non-descending step starts from state 1
    assert np.all(path[up] == 1)
    assert path.min() >= 1


def test_walk_path_steps(walk):
    path = walk.sample_path(0, 1000, np.random.default_rng(1))
    assert set(np.abs(np.diff(path))) == {1}


def test_entry_distance(telescoping):
    assert telescoping.entry_distance([1]) == 200.0
