"""Entropy-rate estimates for the count process of a renewal suspension.

The vector of window cell counts is a factor of the suspension, so its entropy
rate is a lower bound for ``h(T_*)``; with finite samples the block estimator
is also biased, and the result should be read as a lower-bound-biased
estimate, never as an upper bound.

When the invariant measure is finite the suspension is not ergodic (the total
number of particles never changes), so one long run only sees the rate for
its own particle number.  The estimate therefore pools many independent
replicas, each run for ``horizon`` steps, and feeds their concatenated symbol
sequences to the estimator.  Blocks that straddle two replicas are a fraction
of about ``block_length / horizon`` and are ignored.
"""
from __future__ import annotations

import math
import warnings
from typing import Sequence

import numpy as np

from ..entropy.estimators import COVERAGE_RATIO, lz_entropy_rate, plug_in_entropy_rate
from ..estimate import EntropyEstimate
from ..systems.markov import RenewalChain
from .particles import FAR_STATE, CountSeries, PointConfiguration, sample_initial_configuration

DEFAULT_CAP = 8


def renewal_count_series(sys: RenewalChain, config: PointConfiguration, steps: int,
                         cells: Sequence[Sequence[int]] | None = None) -> CountSeries:
    """Same output as :func:`evolve` for renewal chains, computed per particle.

    A particle landing on state ``L`` at time ``a`` sits on state ``j`` at time
    ``a + L - j`` and lands again at time ``a + L``; jump ``k`` uses the
    particle's ``k``-th uniform, as in :func:`evolve`.
    """
    if config.kind != "renewal":
        raise ValueError("renewal configuration required")
    if steps > config.horizon:
        raise ValueError(f"{steps} steps exceed the exact horizon {config.horizon}")
    lo, hi = config.window
    cell_list = [(s,) for s in range(lo, hi + 1)] if cells is None else \
        [tuple(sorted(int(a) for a in c)) for c in cells]
    label = np.full(hi + 1, -1, dtype=np.int64)
    for k, c in enumerate(cell_list):
        for a in c:
            if not lo <= a <= hi:
                raise ValueError(f"cell {c} is not inside the exact window {config.window}")
            label[a] = k
    land_state, land_time = [], []
    for p, s0 in enumerate(config.states.tolist()):
        if s0 - hi > steps:
            continue
        L = [float(s0)]
        a = [0.0]
        t = float(s0)
        used = 0
        while t <= steps:
            # draw jumps in batches until this particle has left the horizon
            need = min(max(int(steps - t) + 1, 1), config.marks.shape[1] - used)
            if need <= 0:
                break
            J = np.minimum(sys.f.inverse_cdf(config.marks[p, used:used + need]), float(FAR_STATE))
            times = t + np.concatenate([[0.0], np.cumsum(J)[:-1]])
            keep = times <= steps
            L.extend(J[keep].tolist())
            a.extend(times[keep].tolist())
            used += need
            t = float(times[-1] + J[-1]) if keep.all() else math.inf
        land_state.append(np.asarray(L))
        land_time.append(np.asarray(a))
    out = np.zeros((steps + 1, len(cell_list)), dtype=np.int64)
    if land_state:
        Ls = np.concatenate(land_state)
        As = np.concatenate(land_time)
        for j in range(lo, hi + 1):
            if label[j] < 0:
                continue
            at = As + Ls - j
            ok = (Ls >= j) & (at >= 0) & (at <= steps)
            out[:, label[j]] += np.bincount(at[ok].astype(np.int64), minlength=steps + 1)
    return CountSeries(out, cell_list)


def _symbols(counts: np.ndarray, cap: int) -> np.ndarray:
    capped = np.minimum(counts, cap)
    code = np.zeros(counts.shape[0], dtype=np.int64)
    for c in range(counts.shape[1]):
        code = code * (cap + 1) + capped[:, c]
    return code


def suspension_entropy_estimate(sys: RenewalChain, partition: Sequence[Sequence[int]] | None = None,
                                window: int | None = None, horizon: int = 2000, seed: int = 0,
                                estimator: str = "plug-in", cap: int = DEFAULT_CAP,
                                replicas: int = 100) -> EntropyEstimate:
    """Entropy rate of the capped vector count process on the window cells.

    Counts above ``cap`` are replaced by ``cap`` and the fraction of capped
    entries is reported.  If the observed symbol alphabet is too large for the
    sample (fewer than ``COVERAGE_RATIO`` observations per symbol), the cap
    is halved until it is not, and the result is flagged as coarsened.
    """
    if not isinstance(sys, RenewalChain):
        raise TypeError("suspension entropy estimates are implemented for renewal chains")
    if partition is None:
        if window is None:
            raise ValueError("give a partition or a window")
        partition = [(s,) for s in range(1, window + 1)]
    cells = [tuple(sorted(int(a) for a in c)) for c in partition]
    wmax = max(a for c in cells for a in c)
    window = wmax if window is None else max(int(window), wmax)
    if replicas < 1 or horizon < 1:
        raise ValueError("need at least one replica and a positive horizon")
    runs, particles = [], 0
    for r in range(replicas):
        cfg = sample_initial_configuration(sys, window, horizon, seed, replicate=r)
        particles += len(cfg)
        runs.append(renewal_count_series(sys, cfg, horizon, cells).counts)
    counts = np.vstack(runs)
    cap_hits = float(np.mean(counts > cap))
    coarsened = False
    while True:
        sym = _symbols(counts, cap)
        if np.unique(sym).size * COVERAGE_RATIO <= sym.size or cap == 1:
            break
        cap = max(cap // 2, 1)
        coarsened = True
    if coarsened:
        warnings.warn(f"count alphabet coarsened to cap {cap}", RuntimeWarning, stacklevel=2)
    if estimator == "plug-in":
        inner = plug_in_entropy_rate(sym)
    elif estimator == "lz":
        inner = lz_entropy_rate(sym)
    else:
        raise ValueError(f"unknown estimator {estimator!r}")
    meta = {
        "estimator": estimator,
        "cells": [list(c) for c in cells],
        "horizon": int(horizon),
        "replicas": int(replicas),
        "mean_particles": particles / replicas,
        "cap": int(cap),
        "cap_hit_fraction": cap_hits if not coarsened else float(np.mean(counts > cap)),
        "coarsened": coarsened,
        "bias": "lower",
        "inner": inner.meta,
    }
    return EntropyEstimate(inner.value, inner.lower, inner.upper, "suspension-sim", meta)
