"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines are printed
even when output capture is on.
"""
import math
import time
import warnings

import numpy as np
import pytest

from poisson_lab.entropy import (
    LocalPartition,
    cylinder_entropy_curve,
    decomposition_residual,
    parry_markov_step_entropy,
    poisson_entropy_function,
)
from poisson_lab.induced import krengel_entropy_abramov, krengel_entropy_markov, quasi_finiteness
from poisson_lab.seeding import child_seed
from poisson_lab.suspension import (
    MarkedModel,
    additivity_scaling_check,
    covariance_identity_check,
    distribution_tests,
    marked_conditional_entropy,
    suspension_entropy_estimate,
)
from poisson_lab.systems import FiniteChain, RandomWalk, RenewalChain, ReturnDistribution, build_tower

from conftest import H_TELESCOPING, LOG2

ROOT_SEED = 20240611


@pytest.fixture
def verdict(capsys):
    def emit(criterion: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
        assert ok, detail
    return emit


def _random_finite_f():
    w = np.random.default_rng(ROOT_SEED).dirichlet(np.ones(7))
    return ReturnDistribution.from_values((w / w.sum()).tolist())


def _systems():
    return {
        "f=(1/2,1/2)": RenewalChain(ReturnDistribution.from_values(["1/2", "1/2"])),
        "f_n=1/(n(n+1))": RenewalChain(ReturnDistribution.from_tail("telescoping"), 200),
        "random finite f": RenewalChain(_random_finite_f()),
    }


@pytest.mark.parametrize("label", list(_systems()))
def test_criterion_1_three_way_equality(label, verdict):
    sys = _systems()[label]
    t0 = time.perf_counter()
    k = krengel_entropy_markov(sys).value
    p = parry_markov_step_entropy(sys).value
    r = quasi_finiteness(sys, [1]).value
    dt = time.perf_counter() - t0
    err = max(abs(p - k), abs(r - k)) / abs(k)
    verdict("1", err <= 1e-12 and dt < 1.0,
            f"{label}: krengel={k:.15g} parry={p:.15g} partition={r:.15g} rel_err={err:.2e} time={dt:.2f}s")


def test_criterion_2_cylinder_curve(verdict):
    sys = RenewalChain(ReturnDistribution.from_tail("telescoping"), 200)
    t0 = time.perf_counter()
    c = cylinder_entropy_curve(sys, LocalPartition.singletons([1]), 20)
    dt = time.perf_counter() - t0
    last = c.last
    rel = abs(last.value - H_TELESCOPING) / H_TELESCOPING
    band = last.upper - last.lower
    verdict("2", last.n == 20 and rel <= 0.10 and band < 1e-6 and dt < 60,
            f"n=20 value={last.value:.6f} H={H_TELESCOPING:.6f} rel={rel:.3%} pruning_error={band:.1e} "
            f"time={dt:.1f}s")


def test_criterion_3_small_argument(verdict):
    gaps = {eps: abs(poisson_entropy_function(eps) - eps + eps * math.log(eps)) for eps in (1e-1, 1e-2, 1e-3, 1e-4)}
    ok = all(g <= eps ** 2 for eps, g in gaps.items())
    verdict("3", ok, "; ".join(f"eps={e:g}: gap/eps^2={g / e ** 2:.3f}" for e, g in gaps.items()))


@pytest.mark.parametrize("label,reference,tol", [
    ("f=(1/2,1/2)", LOG2, 0.01),
    ("f_n=1/(n(n+1))", H_TELESCOPING, 0.15),
])
def test_criterion_4_abramov(label, reference, tol, verdict):
    sys = _systems()[label]
    t0 = time.perf_counter()
    e = krengel_entropy_abramov(sys, [1], n_returns=10 ** 6, seed=child_seed(ROOT_SEED, 4))
    dt = time.perf_counter() - t0
    rel = abs(e.value - reference) / reference
    verdict("4", rel <= tol and dt < 120,
            f"{label}: estimate={e.value:.5f} reference={reference:.5f} rel={rel:.3%} (tol {tol:.0%}) time={dt:.1f}s")


@pytest.mark.parametrize("lam", [0.5, 1.0, 3.0])
def test_criterion_5_distribution(lam, verdict):
    base = RenewalChain(ReturnDistribution.from_tail("telescoping"), 200)
    sys = base.scaled(lam / float(base.q([1])[0]))
    res = distribution_tests(sys, [[1], [2]], n_seeds=10 ** 4, seed=child_seed(ROOT_SEED, 5, int(lam * 10)),
                             alpha=0.01)
    worst = min(t["pvalue"] for t in res["tests"])
    verdict("5", res["passed"],
            f"lambda={lam}: {len(res['tests'])} tests, min p={worst:.4f}, Bonferroni level={res['level']:.2e}")


def test_criterion_5_covariance(verdict):
    sys = RenewalChain(ReturnDistribution.from_tail("telescoping"), 200)
    r = covariance_identity_check(sys, [1, 2], [2, 3], n_seeds=10 ** 5, seed=child_seed(ROOT_SEED, 55))
    verdict("5", abs(r["z"]) <= 3,
            f"covariance={r['estimate']:.5f} mu(A&B)={r['reference']:.5f} se={r['se']:.5f} z={r['z']:.2f}")


MARKED = [
    MarkedModel.build([0, 1], [2.0], [[0.5, 0.5]]),
    MarkedModel.build([0, 0.5, 2], [1.0, 3.0], [[0.2, 0.8], [1 / 3, 1 / 3, 1 / 3]]),
    MarkedModel.build([0, 1, 2, 4], [0.5, 0.0, 2.0], [[1.0], [0.5, 0.5], [0.1, 0.2, 0.7]]),
]


@pytest.mark.parametrize("i", range(3))
def test_criterion_6_marked(i, verdict):
    t0 = time.perf_counter()
    est, ref = marked_conditional_entropy(MARKED[i], 10 ** 5, seed=child_seed(ROOT_SEED, 6, i), n_se=3.0)
    dt = time.perf_counter() - t0
    verdict("6", est.lower <= ref <= est.upper and dt < 60,
            f"model {i}: MC={est.value:.5f} closed form={ref:.5f} z={est.meta['z']:.2f} time={dt:.2f}s")


def test_criterion_7_additivity(verdict):
    sys = RenewalChain(ReturnDistribution.from_tail("telescoping"), 200)
    r = additivity_scaling_check(sys, 2.0, 0.5, n_seeds=10 ** 4, seed=child_seed(ROOT_SEED, 7), alpha=0.01)
    pmin = min(t["pvalue"] for t in r["superposition_tests"])
    verdict("7", r["exact_passed"] and r["statistical_passed"],
            f"scaling err={r['scaling_rel_error']:.1e} additivity err={r['additivity_rel_error']:.1e} "
            f"superposition min p={pmin:.3f}")


def test_criterion_8_decomposition(verdict):
    rng = np.random.default_rng(child_seed(ROOT_SEED, 8))
    worst = 0.0
    for _ in range(100):
        s = int(rng.integers(2, 6))
        n = int(rng.integers(1, 9))
        P = rng.dirichlet(np.ones(s), size=s)
        alpha = rng.integers(0, s, size=s)
        worst = max(worst, decomposition_residual(FiniteChain(P), alpha, n))
    verdict("8", worst < 1e-12, f"100 random kernels (<=5 states, n<=8): max residual={worst:.2e}")


def test_criterion_9_rank_one(verdict):
    seq = build_tower([{"cuts": 2}] * 20).criterion_sequence()
    verdict("9", seq[20] < 1e-3, f"rank-one criterion at stage 20 = {seq[20]:.3e}")


def test_criterion_9_loop(verdict):
    loop = RenewalChain(ReturnDistribution.from_values(["1"]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        e = suspension_entropy_estimate(loop, window=3, seed=child_seed(ROOT_SEED, 9))
    verdict("9", e.value < 0.05, f"deterministic loop suspension estimate = {e.value:.4f} nats")


def test_criterion_10_divergence(verdict):
    walk = RandomWalk({1: "1/2", -1: "1/2"}, (-50, 50))
    kw = krengel_entropy_markov(walk)
    tel = krengel_entropy_markov(RenewalChain(ReturnDistribution.from_tail("telescoping"), 200))
    ok = (math.isinf(kw.value) and kw.meta["partial_sum"] > 100 and kw.meta["states_visited"] <= 150
          and math.isfinite(tel.value))
    verdict("10", ok, f"walk: inf after {kw.meta['states_visited']} states (partial sum "
                      f"{kw.meta['partial_sum']:.1f}); telescoping null-recurrent chain: {tel.value:.6f}")
