import math
import warnings

import numpy as np
import pytest

from poisson_lab.entropy import (
    LocalPartition,
    brute_force_cylinder_masses,
    cylinder_entropy_curve,
    poisson_entropy_function,
    pruning_band,
    refined_tables,
)
from poisson_lab.systems import FiniteChain, RenewalChain, ReturnDistribution

from conftest import H_TELESCOPING


def test_local_partition_validation(half):
    with pytest.raises(ValueError):
        LocalPartition.from_cells([[1], [1, 2]])
    with pytest.raises(ValueError):
        LocalPartition.from_cells([])
    alpha = LocalPartition.singletons([1, 2])
    assert alpha.n_labels == 3
    assert alpha.check(half) == pytest.approx(1.5)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_tables_match_brute_force(n):
    sys = RenewalChain(ReturnDistribution.from_values(["1/4", "1/4", "1/2"]))
    alpha = LocalPartition.from_cells([[1], [2]])
    brute = np.sort(brute_force_cylinder_masses(sys, alpha, n))
    table = [t for t in refined_tables(sys, alpha, n)][-1]
    got = np.sort(table.masses)
    got = got[got > 0]
    brute = brute[brute > 0]
    assert np.allclose(got, brute, rtol=1e-13)


def test_finite_chain_curve_first_point():
    ch = FiniteChain([["1/2", "1/2"], ["1/2", "1/2"]])
    alpha = LocalPartition.singletons([0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        c = cylinder_entropy_curve(ch, alpha, 3)
    # n = 1: the cell {0} of mass 1/2 and its complement, which is finite too
    assert c.points[0].value >= poisson_entropy_function(0.5)


def test_telescoping_curve_at_depth_20():
    tel = RenewalChain(ReturnDistribution.from_tail("telescoping"), 200)
    c = cylinder_entropy_curve(tel, LocalPartition.singletons([1]), 20)
    last = c.last
    assert last.n == 20
    assert abs(last.value - H_TELESCOPING) / H_TELESCOPING < 0.10
    assert last.upper - last.lower < 1e-6
    assert c.meta["sink_exact"]


def test_half_half_curve_increasing_approach():
    half = RenewalChain(ReturnDistribution.from_values(["1/2", "1/2"]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        c = cylinder_entropy_curve(half, LocalPartition.singletons([1]), 16)
    v = c.values
    # (1/n) sum f(mu(a)) decreases to the entropy from above for this chain
    assert v[-1] < v[4] and v[-1] > math.log(2)


def test_pruning_band_properties():
    m = np.array([1e-9, 3e-10])
    lo, hi = pruning_band(m, 4, 3)
    assert lo <= hi
    assert lo == pytest.approx(math.fsum(poisson_entropy_function(m)))
    assert pruning_band(m, 0, 3)[0] == pruning_band(m, 0, 3)[1]
    with pytest.raises(ValueError):
        pruning_band(np.array([2.0]), 1, 2)


def test_pruned_curve_band_contains_unpruned():
    tel = RenewalChain(ReturnDistribution.from_tail("telescoping"), 60)
    alpha = LocalPartition.singletons([1])
    full = cylinder_entropy_curve(tel, alpha, 10, prune_tol=0.0)
    pruned = cylinder_entropy_curve(tel, alpha, 10, prune_tol=1e-4)
    for a, b in zip(full.points, pruned.points):
        assert b.lower - 1e-12 <= a.value <= b.upper + 1e-12


def test_budget_truncates():
    tel = RenewalChain(ReturnDistribution.from_tail("telescoping"), 200)
    c = cylinder_entropy_curve(tel, LocalPartition.singletons([1]), 20, node_budget=1000)
    assert c.truncated and c.last.n < 20


def test_csv_format(tmp_path):
    tel = RenewalChain(ReturnDistribution.from_tail("telescoping"), 200)
    c = cylinder_entropy_curve(tel, LocalPartition.singletons([1]), 4)
    text = c.to_csv(tmp_path / "c.csv")
    assert text.splitlines()[0] == "n,value,lower,upper"
    assert len(text.splitlines()) == 5
