import math

import numpy as np
import pytest

from poisson_lab.entropy import parry_markov_step_entropy
from poisson_lab.induced import krengel_entropy_markov
from poisson_lab.systems import FiniteChain, RenewalChain, ReturnDistribution

from conftest import H_TELESCOPING, LOG2


def test_half(half):
    assert parry_markov_step_entropy(half).value == pytest.approx(LOG2, rel=1e-14)


def test_telescoping(telescoping):
    e = parry_markov_step_entropy(telescoping)
    assert e.value == pytest.approx(H_TELESCOPING, rel=1e-12)
    assert e.lower <= H_TELESCOPING * (1 + 1e-15) <= e.upper * (1 + 2e-15)


def test_walk_diverges(walk):
    e = parry_markov_step_entropy(walk)
    assert math.isinf(e.value) and e.meta["partial_sum"] > 100


def test_finite_chain_entropy_rate():
    P = np.array([[0.9, 0.1], [0.4, 0.6]])
    ch = FiniteChain(P)
    q = ch.q([0, 1])
    expected = -sum(q[i] * P[i, j] * math.log(P[i, j]) for i in range(2) for j in range(2))
    assert parry_markov_step_entropy(ch).value == pytest.approx(expected, rel=1e-13)


def test_transient_rejected(quiet):
    sys = RenewalChain(ReturnDistribution.from_values([0.3, 0.3]))
    with pytest.raises(ValueError):
        parry_markov_step_entropy(sys)


def test_heavylog_infinite():
    sys = RenewalChain(ReturnDistribution.from_tail("heavylog"), 50)
    assert math.isinf(parry_markov_step_entropy(sys).value)
    assert math.isinf(krengel_entropy_markov(sys).value)
