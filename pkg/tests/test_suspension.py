import math
import warnings

import numpy as np
import pytest

from poisson_lab.suspension import (
    MarkedModel,
    additivity_scaling_check,
    bonferroni,
    covariance_identity_check,
    distribution_tests,
    independence_test,
    marked_conditional_entropy,
    no_multiplicity_check,
    poisson_gof,
    pvalue_uniformity,
    replicate_counts,
    se_scaling_slope,
    suspension_entropy_estimate,
    two_sample_test,
)
from poisson_lab.systems import RenewalChain, ReturnDistribution

from conftest import H_TELESCOPING, LOG2


def test_bonferroni():
    assert bonferroni(0.01, 4) == 0.0025
    assert bonferroni(0.01, 0) == 0.01


def test_poisson_gof_calibrated():
    rng = np.random.default_rng(0)
    p = [poisson_gof(rng.poisson(2.0, 2000), 2.0)["pvalue"] for _ in range(200)]
    assert pvalue_uniformity(p)["pvalue"] > 0.001


def test_poisson_gof_detects_wrong_rate():
    x = np.random.default_rng(1).poisson(1.2, 10_000)
    assert poisson_gof(x, 1.0)["pvalue"] < 1e-6


def test_independence_detects_dependence():
    rng = np.random.default_rng(2)
    x = rng.poisson(1.0, 5000)
    assert independence_test(x, x + rng.poisson(0.5, 5000), g_test=True)["pvalue"] < 1e-6
    assert independence_test(x, rng.poisson(1.0, 5000))["pvalue"] > 1e-4


def test_two_sample_detects_shift():
    rng = np.random.default_rng(3)
    assert two_sample_test(rng.poisson(1.0, 5000), rng.poisson(1.3, 5000))["pvalue"] < 1e-6


def test_replicate_counts_shape(half):
    c = replicate_counts(half, [[1], [2]], 20, seed=0, horizon=3, times=(0, 3))
    assert c.shape == (20, 2, 2)
    with pytest.raises(ValueError):
        replicate_counts(half, [[1]], 2, 0, horizon=1, times=(0, 2))


@pytest.mark.parametrize("lam", [0.5, 3.0])
def test_distribution_tests_pass(telescoping, lam):
    res = distribution_tests(telescoping.scaled(lam), [[1], [2]], n_seeds=3000, seed=5)
    assert res["passed"], res["tests"]
    kinds = {t["test"] for t in res["tests"]}
    assert kinds == {"poisson-marginal", "independence", "stationarity"}


def test_distribution_tests_walk(walk):
    res = distribution_tests(walk, [[0], [1, 2]], n_seeds=2000, seed=1, horizon=3)
    assert res["passed"]


@pytest.mark.parametrize("A,B,ref", [([1], [1], 1.0), ([1], [2], 0.0), ([1, 2], [2, 3], 0.5)])
def test_covariance_cases(telescoping, A, B, ref):
    r = covariance_identity_check(telescoping, A, B, n_seeds=40_000, seed=11)
    assert r["reference"] == pytest.approx(ref)
    assert r["passed"]


def test_no_multiplicity_and_atom_control():
    assert no_multiplicity_check(n_seeds=5000, seed=0)["coincidences"] == 0
    r = no_multiplicity_check(atoms={0.5: 2.0}, n_seeds=5000, seed=0)
    assert r["coincidences"] > 0 and not r["passed"]
    with pytest.raises(ValueError):
        no_multiplicity_check(pieces=((1.0, 0.0, 1.0),))


MODELS = [
    MarkedModel.build([0, 1], [2.0], [[0.5, 0.5]]),
    MarkedModel.build([0, 0.5, 2], [1.0, 3.0], [[0.2, 0.8], [1 / 3, 1 / 3, 1 / 3]]),
    MarkedModel.build([0, 1, 2, 4], [0.5, 0.0, 2.0], [[1.0], [0.5, 0.5], [0.1, 0.2, 0.7]]),
]


def test_marked_reference_closed_form():
    assert MODELS[0].reference() == pytest.approx(2 * LOG2)
    assert MODELS[1].reference() == pytest.approx(
        0.5 * -(0.2 * math.log(0.2) + 0.8 * math.log(0.8)) + 1.5 * 3 * math.log(3))


@pytest.mark.parametrize("model", MODELS)
def test_marked_within_3se(model):
    est, ref = marked_conditional_entropy(model, 20_000, seed=4)
    assert est.lower <= ref <= est.upper


def test_marked_deterministic_marks():
    m = MarkedModel.build([0, 3], [2.0], [[1.0]])
    est, ref = marked_conditional_entropy(m, 1000, seed=0)
    assert ref == 0.0 and est.value == 0.0


def test_marked_validation():
    with pytest.raises(ValueError):
        MarkedModel.build([0, 0], [1.0], [[1.0]])
    with pytest.raises(ValueError):
        MarkedModel.build([0, 1], [1.0], [[0.5, 0.6]])
    with pytest.raises(ValueError):
        MarkedModel.build([0, 1], [-1.0], [[1.0]])


def test_se_slope():
    assert se_scaling_slope(MODELS[1], (500, 5000, 50_000), seed=1) == pytest.approx(-0.5, abs=0.08)


def test_estimate_half_below_log2(half):
    e = suspension_entropy_estimate(half, window=2, horizon=500, replicas=20, seed=0)
    assert 0 < e.value < LOG2
    assert e.method == "suspension-sim" and e.meta["bias"] == "lower"


def test_estimate_loop_near_zero(loop):
    e = suspension_entropy_estimate(loop, window=3, horizon=1000, replicas=20, seed=0)
    assert e.value < 0.05


def test_estimate_increases_with_window_telescoping(telescoping):
    vals = [suspension_entropy_estimate(telescoping, window=w, horizon=1000, replicas=40, seed=0).value
            for w in (1, 2, 3)]
    assert vals[0] < vals[1] < vals[2] < H_TELESCOPING


def test_estimate_coarsens_large_alphabet(telescoping):
    with pytest.warns(RuntimeWarning, match="coarsened"):
        e = suspension_entropy_estimate(telescoping.scaled(6.0), window=4, horizon=200, replicas=5, seed=0)
    assert e.meta["coarsened"] and e.meta["cap"] < 8


def test_estimate_lz_runs(half):
    e = suspension_entropy_estimate(half, window=1, horizon=500, replicas=10, seed=0, estimator="lz")
    assert 0 <= e.value <= 1.0
    with pytest.raises(ValueError):
        suspension_entropy_estimate(half, window=1, estimator="bogus", replicas=1, horizon=100)


def test_additivity(telescoping):
    r = additivity_scaling_check(telescoping, 2.0, 0.5, n_seeds=4000, seed=0)
    assert r["scaling_rel_error"] <= 1e-12 and r["additivity_rel_error"] <= 1e-12
    assert r["statistical_passed"] and r["union_exact"] and r["passed"]


def test_additivity_s_zero(half):
    r = additivity_scaling_check(half, 1.5, 0.0, n_seeds=2000, seed=1)
    assert r["passed"]
    with pytest.raises(ValueError):
        additivity_scaling_check(half, 0.0, 1.0)
