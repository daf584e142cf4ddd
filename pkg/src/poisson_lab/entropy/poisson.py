"""Entropy of a Poisson random variable and sums of it over partition cells."""
from __future__ import annotations

import math
from typing import Iterable

import numpy as np
from scipy.special import gammaln

TAIL_TOL = 1e-14
# For lam <= SMALL_LAM a fixed 40-term series already has a tail far below TAIL_TOL
# (ratio bound 0.126, last term < 2e-18), so arrays of small masses are summed in bulk.
SMALL_LAM = 5.0
SMALL_TERMS = 40


def _ratio_bound(lam: float, K: int) -> float:
    """Upper bound on t_{k+1}/t_k for k >= K where t_k = e^-lam lam^k log(k!)/k!."""
    lf = gammaln(K + 1)
    return lam / (K + 1) * (1.0 + math.log(K + 1) / lf)


def series_terms(lam: float, tol: float = TAIL_TOL) -> int:
    """Smallest K > lam (K >= 2) whose geometric tail bound after term K is below ``tol``."""
    K = max(2, int(math.ceil(lam)) + 1)
    while True:
        rho = _ratio_bound(lam, K)
        if rho < 1:
            tK = math.exp(-lam + K * math.log(lam) - gammaln(K + 1)) * gammaln(K + 1)
            if tK * rho / (1 - rho) < tol:
                return K
        K += max(1, K // 8)


def _series_scalar(lam: float) -> float:
    K = series_terms(lam)
    k = np.arange(2, K + 1)
    lf = gammaln(k + 1)
    logt = -lam + k * math.log(lam) - lf
    # sum largest-first for accuracy
    return float(np.sum(np.sort(np.exp(logt) * lf)))


def poisson_entropy_function(lam):
    """``f(lam) = lam - lam log lam + e^-lam sum_{k>=2} lam^k log(k!)/k!``.

    Accepts a scalar or array; ``f(0) = 0``.  For ``lam <= 5`` the series is
    used, cut where a ratio bound on the remaining terms drops below 1e-14.
    Larger ``lam`` would lose digits to cancellation between ``-lam log lam``
    and the series, so ``-sum p_k log p_k`` is summed directly over a window of
    12 standard deviations (plus 40) around the mean.
    """
    arr = np.asarray(lam, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError("Poisson parameter must be nonnegative")
    if np.any(np.isinf(arr)):
        raise ValueError("Poisson parameter must be finite")
    flat = arr.reshape(-1)
    out = np.zeros_like(flat)
    pos = flat > 0
    x = flat[pos]
    val = x - x * np.log(x)
    small = x <= SMALL_LAM
    if small.any():
        xs = x[small]
        k = np.arange(2, SMALL_TERMS + 1)
        lf = gammaln(k + 1)
        logt = -xs[:, None] + k[None, :] * np.log(xs)[:, None] - lf[None, :]
        val[small] += (np.exp(logt) * lf[None, :]).sum(axis=1)
    out[pos] = val
    big = np.flatnonzero(pos)[~small]
    for i in big:
        out[i] = poisson_entropy_direct(float(flat[i]))
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def poisson_entropy_direct(lam: float) -> float:
    """``-sum_k p_k log p_k`` of the Poisson law summed term by term (independent check)."""
    if lam == 0:
        return 0.0
    spread = 12 * math.sqrt(lam) + 40
    k = np.arange(max(0, int(lam - spread)), int(lam + spread) + 1)
    return float(-np.sum(np.sort(_plogp(k, lam))))


def _log_pmf(k: np.ndarray, lam: float) -> np.ndarray:
    """Poisson log-pmf without the ``k log lam - lam`` vs ``log k!`` cancellation.

    For ``k >= 30`` it uses ``-(k log(k/lam) - k + lam) - log(2 pi k)/2 - s(k)``
    with the Stirling correction ``s``; its truncation error is below 1e-17.
    """
    k = np.asarray(k, dtype=float)
    out = -lam + k * math.log(lam) - gammaln(k + 1)
    big = k >= 30
    if big.any():
        kb = k[big]
        d = (kb - lam) / lam
        dev = kb * np.log1p(d) - (kb - lam)
        inv = 1.0 / kb
        inv2 = inv * inv
        corr = inv * (1 / 12 - inv2 * (1 / 360 - inv2 * (1 / 1260 - inv2 / 1680)))
        out[big] = -dev - 0.5 * np.log(2 * math.pi * kb) - corr
    return out


def _plogp(k: np.ndarray, lam: float) -> np.ndarray:
    logp = _log_pmf(k, lam)
    return np.exp(logp) * logp


def suspension_partition_entropy(masses: Iterable[float]) -> float:
    """``sum f(m)`` over the finite cells; at most one ``inf`` cell, contributing 0
    (its count is almost surely infinite)."""
    m = np.asarray(list(masses), dtype=float)
    if m.size == 0:
        return 0.0
    if np.any(np.isnan(m)) or np.any(m < 0):
        raise ValueError("cell masses must be nonnegative")
    n_inf = int(np.isinf(m).sum())
    if n_inf > 1:
        raise ValueError("at most one cell may have infinite mass")
    fin = m[np.isfinite(m)]
    return float(np.sum(np.sort(poisson_entropy_function(fin))))
