"""Statistical checks of the defining properties of a Poisson suspension."""
from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from ..induced import krengel_entropy_markov
from ..seeding import STREAM_CONFIG, child_seed, rng as make_rng
from ..systems.markov import MarkovSystem, RenewalChain
from .particles import PointConfiguration, evolve, sample_initial_configuration
from .stats import ALPHA, bonferroni, independence_test, poisson_gof, two_sample_test


def _as_cells(cells) -> list[tuple[int, ...]]:
    return [tuple(sorted(int(a) for a in c)) for c in cells]


def _window_for(cells: list[tuple[int, ...]]) -> tuple[int, int]:
    flat = [a for c in cells for a in c]
    return min(flat), max(flat)


def _config(sys: MarkovSystem, cells, horizon: int, root: int, r: int) -> PointConfiguration:
    lo, hi = _window_for(cells)
    if isinstance(sys, RenewalChain):
        return sample_initial_configuration(sys, hi, horizon, root, replicate=r)
    return sample_initial_configuration(sys, hi, horizon, root, window_min=lo, replicate=r)


def replicate_counts(sys: MarkovSystem, cells, n_seeds: int, seed: int, horizon: int = 0,
                     times: Sequence[int] = (0,)) -> np.ndarray:
    """Cell counts at the requested times for ``n_seeds`` independent
    configurations; shape ``(n_seeds, len(times), len(cells))``."""
    cells = _as_cells(cells)
    times = list(times)
    if max(times) > horizon:
        raise ValueError("requested time beyond the horizon")
    out = np.zeros((n_seeds, len(times), len(cells)), dtype=np.int64)
    for r in range(n_seeds):
        cfg = _config(sys, cells, horizon, seed, r)
        if horizon == 0:
            out[r, 0] = cfg.counts(cells)
        else:
            out[r] = evolve(sys, cfg, max(times), cells).counts[times]
    return out


def distribution_tests(sys: MarkovSystem, cells, n_seeds: int = 10 ** 4, seed: int = 0,
                       horizon: int = 5, alpha: float = ALPHA) -> dict:
    """Poisson marginals, pairwise independence of disjoint cells and
    stationarity between ``t = 0`` and ``t = horizon``.

    Every test is judged at ``alpha`` divided by the number of tests.
    """
    cells = _as_cells(cells)
    counts = replicate_counts(sys, cells, n_seeds, seed, horizon, times=(0, horizon))
    masses = [float(np.sum(sys.q(list(c)))) for c in cells]
    rows = []
    for k, c in enumerate(cells):
        rows.append({"test": "poisson-marginal", "cells": [list(c)], "lambda": masses[k],
                     **_strip(poisson_gof(counts[:, 0, k], masses[k]))})
    for i in range(len(cells)):
        for j in range(i + 1, len(cells)):
            if set(cells[i]) & set(cells[j]):
                continue
            rows.append({"test": "independence", "cells": [list(cells[i]), list(cells[j])],
                         **_strip(independence_test(counts[:, 0, i], counts[:, 0, j], g_test=True))})
    if horizon > 0:
        for k, c in enumerate(cells):
            rows.append({"test": "stationarity", "cells": [list(c)], "times": [0, horizon],
                         **_strip(two_sample_test(counts[:, 0, k], counts[:, 1, k]))})
    level = bonferroni(alpha, len(rows))
    for row in rows:
        row["passed"] = row["pvalue"] >= level
    return {"alpha": alpha, "level": level, "n_seeds": n_seeds, "tests": rows,
            "passed": all(r["passed"] for r in rows)}


def _strip(d: dict) -> dict:
    return {k: v for k, v in d.items() if k != "table"}


def covariance_identity_check(sys: MarkovSystem, A, B, n_seeds: int = 10 ** 5, seed: int = 0,
                              n_se: float = 3.0) -> dict:
    """Monte Carlo ``E[(N(A) - mu(A))(N(B) - mu(B))]`` against ``mu(A & B)``.

    Counts on the states of ``A | B`` are drawn in one batch from a single
    seeded stream (rows are replicas); only time-0 counts are needed, so no
    particle bookkeeping is involved.
    """
    A = sorted({int(a) for a in A})
    B = sorted({int(b) for b in B})
    states = np.array(sorted(set(A) | set(B)), dtype=np.int64)
    q = sys.q(states)
    mu_a = float(np.sum(sys.q(A))) if A else 0.0
    mu_b = float(np.sum(sys.q(B))) if B else 0.0
    if not (math.isfinite(mu_a) and math.isfinite(mu_b)):
        raise ValueError("cells must have finite measure")
    ref = float(np.sum(sys.q(sorted(set(A) & set(B))))) if set(A) & set(B) else 0.0
    g = make_rng(seed, STREAM_CONFIG, 0, 1)
    N = g.poisson(q, size=(int(n_seeds), states.size))
    na = N[:, np.isin(states, A)].sum(1)
    nb = N[:, np.isin(states, B)].sum(1)
    prod = (na - mu_a) * (nb - mu_b)
    est = float(prod.mean())
    se = float(prod.std(ddof=1) / math.sqrt(prod.size)) if prod.size > 1 else math.inf
    z = (est - ref) / se if se > 0 else (0.0 if est == ref else math.inf)
    return {"estimate": est, "se": se, "reference": ref, "z": z, "n_seeds": int(n_seeds),
            "passed": abs(z) <= n_se}


def no_multiplicity_check(pieces: Sequence[tuple[float, float, float]] = ((0.0, 1.0, 1.0),),
                          atoms: Mapping[float, float] | None = None, n_seeds: int = 10 ** 4,
                          seed: int = 0) -> dict:
    """Count exact coincidences among sampled points of a Poisson process on the line.

    ``pieces`` are ``(start, end, rate)`` with constant density; ``atoms`` maps
    a position to its mass.  Points from the continuous part are uniform
    doubles, so exact ties should never occur; an atom of positive mass makes
    them likely.  A coincidence is two points of the same replica with equal
    coordinates.
    """
    g = make_rng(seed, STREAM_CONFIG, 0, 2)
    xs, ids = [], []
    for a, b, rate in pieces:
        if b < a or rate < 0:
            raise ValueError("pieces need start <= end and rate >= 0")
        n = g.poisson(rate * (b - a), size=n_seeds)
        xs.append(a + (b - a) * g.random(int(n.sum())))
        ids.append(np.repeat(np.arange(n_seeds), n))
    for pos, mass in (atoms or {}).items():
        n = g.poisson(mass, size=n_seeds)
        xs.append(np.full(int(n.sum()), float(pos)))
        ids.append(np.repeat(np.arange(n_seeds), n))
    x = np.concatenate(xs) if xs else np.zeros(0)
    rid = np.concatenate(ids) if ids else np.zeros(0, dtype=np.int64)
    order = np.lexsort((x, rid))
    x, rid = x[order], rid[order]
    ties = int(np.count_nonzero((x[1:] == x[:-1]) & (rid[1:] == rid[:-1])))
    return {"coincidences": ties, "n_points": int(x.size), "n_seeds": int(n_seeds), "passed": ties == 0}


def additivity_scaling_check(sys: RenewalChain, t: float, s: float, n_seeds: int = 10 ** 4,
                             seed: int = 0, cells=((1,), (2,)), alpha: float = ALPHA,
                             rel_tol: float = 1e-12) -> dict:
    """Additivity and scaling of the entropy in the intensity.

    (a) The formula value at intensity ``t q`` is ``t`` times the value at
    ``q``, and at ``(t + s) q`` it is ``t h + s h``.  (b) Window counts of a
    configuration at intensity ``(t + s) q`` have the same law as the sum of
    independent configurations at ``t q`` and ``s q`` (homogeneity chi-square
    per cell, Bonferroni over cells).
    """
    if t <= 0 or s < 0:
        raise ValueError("need t > 0 and s >= 0")
    h = krengel_entropy_markov(sys).value
    ht = krengel_entropy_markov(sys.scaled(t)).value
    hts = krengel_entropy_markov(sys.scaled(t + s)).value

    def rel(a: float, b: float) -> float:
        if math.isinf(a) or math.isinf(b):
            return 0.0 if a == b else math.inf
        return abs(a - b) / max(abs(b), 1e-300) if b != 0 else abs(a)

    scale_err = rel(ht, t * h)
    add_err = rel(hts, t * h + s * h)
    cells = _as_cells(cells)
    direct = replicate_counts(sys.scaled(t + s), cells, n_seeds, child_seed(seed, 0))[:, 0]
    summed = replicate_counts(sys.scaled(t), cells, n_seeds, child_seed(seed, 1))[:, 0]
    if s > 0:
        summed = summed + replicate_counts(sys.scaled(s), cells, n_seeds, child_seed(seed, 2))[:, 0]
    level = bonferroni(alpha, len(cells))
    tests = []
    for k, c in enumerate(cells):
        res = two_sample_test(direct[:, k], summed[:, k])
        tests.append({"cells": [list(c)], **res, "passed": res["pvalue"] >= level})
    # exact superposition of one pair of evolved configurations
    c1 = _config(sys.scaled(t), cells, 5, child_seed(seed, 3), 0)
    if s > 0:
        c2 = _config(sys.scaled(s), cells, 5, child_seed(seed, 4), 0)
    else:
        c2 = PointConfiguration(np.zeros(0, dtype=np.int64), np.zeros((0, 5)), c1.window, 5, c1.kind)
    exact_union = bool(np.array_equal(evolve(sys, c1.union(c2), 5, cells).counts,
                                      (evolve(sys, c1, 5, cells) + evolve(sys, c2, 5, cells)).counts))
    return {
        "t": t, "s": s, "h": h, "h_t": ht, "h_t_plus_s": hts,
        "scaling_rel_error": scale_err, "additivity_rel_error": add_err,
        "exact_passed": scale_err <= rel_tol and add_err <= rel_tol,
        "superposition_tests": tests, "level": level,
        "statistical_passed": all(x["passed"] for x in tests),
        "union_exact": exact_union,
        "passed": scale_err <= rel_tol and add_err <= rel_tol and exact_union and all(x["passed"] for x in tests),
    }
