import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from poisson_lab.systems import ReturnDistribution, classify_recurrence
from poisson_lab.systems.returns import HeavyLogTail

from conftest import H_TELESCOPING, LOG2


def test_half_half_basics():
    f = ReturnDistribution.from_values(["1/2", "1/2"])
    assert f.exact == (Fraction(1, 2), Fraction(1, 2))
    assert f.entropy()[0] == pytest.approx(LOG2, rel=1e-15)
    assert f.mean == 1.5
    assert classify_recurrence(f) == "positive-recurrent"
    assert f.exact_tail_sums() == (Fraction(1), Fraction(1, 2))


def test_telescoping_entropy_matches_oracle():
    f = ReturnDistribution.from_tail("telescoping")
    v, lo, hi = f.entropy()
    assert lo <= H_TELESCOPING * (1 + 1e-14) and hi >= H_TELESCOPING * (1 - 1e-14)
    assert v == pytest.approx(H_TELESCOPING, rel=1e-13)
    assert classify_recurrence(f) == "null-recurrent"
    assert math.isinf(f.mean)


def test_telescoping_pmf_and_mass():
    f = ReturnDistribution.from_tail("telescoping", prefix_len=5)
    n = np.arange(1, 12)
    assert np.allclose(f.pmf(n), 1.0 / (n * (n + 1)), rtol=1e-14)
    assert np.allclose(f.mass_beyond(n), 1.0 / (n + 1), rtol=1e-13)
    assert f.total_mass == pytest.approx(1.0, abs=1e-14)


def test_heavylog_has_unit_mass_and_infinite_entropy():
    f = ReturnDistribution.from_tail("heavylog")
    assert f.total_mass == pytest.approx(1.0, abs=1e-12)
    assert math.isinf(f.entropy()[0])
    assert isinstance(f.tail, HeavyLogTail)


def test_transient_flagged():
    with pytest.warns(UserWarning):
        f = ReturnDistribution.from_values([0.25, 0.25])
    assert classify_recurrence(f) == "transient"


def test_invalid_inputs():
    with pytest.raises(ValueError):
        ReturnDistribution.from_values([0.7, 0.7])
    with pytest.raises(ValueError):
        ReturnDistribution.from_values([-0.1, 1.1])
    with pytest.raises(ValueError):
        ReturnDistribution.from_values([0.0, 0.0])
    with pytest.raises(ValueError):
        ReturnDistribution.from_values([0.5], tail="telescoping", total=0.9)


def test_entropy_beyond_splits_entropy():
    f = ReturnDistribution.from_tail("telescoping", prefix_len=10)
    head = -sum(p * math.log(p) for p in f.probs[:4])
    assert head + f.entropy_beyond(4)[0] == pytest.approx(f.entropy()[0], rel=1e-13)


def test_inverse_cdf_finite_support():
    f = ReturnDistribution.from_values(["1/4", "0", "3/4"])
    u = np.array([0.0, 0.1, 0.2499, 0.25, 0.9, np.nextafter(1.0, 0)])
    assert f.inverse_cdf(u).tolist() == [1, 1, 1, 3, 3, 3]


def test_sampling_frequencies():
    f = ReturnDistribution.from_tail("telescoping", prefix_len=20)
    x = f.sample(np.random.default_rng(0), 200_000)
    assert x.min() >= 1
    freq = np.array([(x == n).mean() for n in (1, 2, 3)])
    assert np.allclose(freq, [1 / 2, 1 / 6, 1 / 12], atol=4e-3)
    # tail: P(X > 100) = 1/101
    assert (x > 100).mean() == pytest.approx(1 / 101, rel=0.1)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 50), min_size=1, max_size=8))
def test_random_finite_support_entropy(weights):
    w = np.array(weights, dtype=float)
    f = ReturnDistribution.from_values((w / w.sum()).tolist())
    p = w / w.sum()
    assert f.entropy()[0] == pytest.approx(float(-(p * np.log(p)).sum()), rel=1e-12, abs=1e-15)
    assert f.mass_beyond([0])[0] == pytest.approx(1.0, abs=1e-12)
