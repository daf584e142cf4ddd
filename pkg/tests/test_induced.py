import math

import numpy as np
import pytest

from poisson_lab.induced import (
    induced_map_simulate,
    krengel_entropy_abramov,
    krengel_entropy_markov,
    quasi_finiteness,
    return_time_distribution,
)
from poisson_lab.entropy import parry_markov_step_entropy
from poisson_lab.systems import FiniteChain, RenewalChain, ReturnDistribution

from conftest import H_TELESCOPING, LOG2


def test_half_return_partition(half):
    rp = return_time_distribution(half, [1], horizon=10)
    assert rp.cell(1) == pytest.approx(0.5) and rp.cell(2) == pytest.approx(0.5)
    assert rp.cell(3) == 0.0
    assert rp.entropy().value == pytest.approx(LOG2, rel=1e-14)


def test_telescoping_three_way(telescoping):
    k = krengel_entropy_markov(telescoping).value
    p = parry_markov_step_entropy(telescoping).value
    r = quasi_finiteness(telescoping, [1]).value
    for v in (k, p, r):
        assert v == pytest.approx(H_TELESCOPING, rel=1e-12)


def test_exact_through_respects_window(telescoping):
    rp = return_time_distribution(telescoping, [1], horizon=500)
    assert rp.exact_through <= 200 + 1
    n = np.arange(1, 11)
    assert np.allclose(rp.cell_masses[:10], 1.0 / (n * (n + 1)), rtol=1e-13)


def test_larger_core(telescoping):
    with pytest.warns(UserWarning, match="unrepresented"):
        rp = return_time_distribution(telescoping, [1, 2], horizon=400)
    # from state 2 the chain returns to 1 in one step
    assert rp.core_mass == pytest.approx(1.5)
    assert rp.cell(1) >= 0.5


def test_walk_krengel_diverges_partition_finite(walk):
    assert math.isinf(krengel_entropy_markov(walk).value)
    e = quasi_finiteness(walk, [0], horizon=40, tail_tol=1.0, unseen_cells=40)
    assert math.isfinite(e.lower) and e.lower > 0


def test_heavylog_partition_divergent():
    sys = RenewalChain(ReturnDistribution.from_tail("heavylog"), 50)
    e = quasi_finiteness(sys, [1], horizon=60)
    assert math.isinf(e.value)
    assert e.meta["status"] == "divergent"


def test_empty_core_rejected(half):
    with pytest.raises(ValueError):
        return_time_distribution(half, [])
    with pytest.raises(ValueError):
        return_time_distribution(half, [99])


def test_finite_chain_return_masses_sum():
    ch = FiniteChain([[0.2, 0.8], [0.6, 0.4]])
    rp = return_time_distribution(ch, [0], horizon=200)
    assert rp.represented_mass == pytest.approx(rp.core_mass, rel=1e-12)


def test_induced_renewal_core_one_is_iid(telescoping):
    run = induced_map_simulate(telescoping, [1], 20_000, seed=3)
    assert len(run) == 20_000
    assert np.mean(run.times == 1) == pytest.approx(0.5, abs=0.02)


def test_induced_deterministic(half):
    a = induced_map_simulate(half, [1, 2], 500, seed=1).times
    b = induced_map_simulate(half, [1, 2], 500, seed=1).times
    assert np.array_equal(a, b)


def test_abramov_half(half):
    e = krengel_entropy_abramov(half, [1], n_returns=100_000, seed=0)
    assert abs(e.value - LOG2) < 0.01


def test_abramov_telescoping(telescoping):
    e = krengel_entropy_abramov(telescoping, [1], n_returns=200_000, seed=0)
    # heavy tail: the plug-in estimate underestimates but should be close
    assert abs(e.value - H_TELESCOPING) / H_TELESCOPING < 0.15
