"""Goodness-of-fit and independence tests used by the suspension checks.

All tests pool sparse bins so that every expected count (or every marginal
bin) has enough mass for the chi-square approximation.  The threshold used is
the textbook "expected count at least 5".
"""
from __future__ import annotations

import numpy as np
from scipy import stats

MIN_EXPECTED = 5.0
ALPHA = 0.01


def bonferroni(alpha: float, n_tests: int) -> float:
    return alpha / max(int(n_tests), 1)


def poisson_gof(samples, lam: float) -> dict:
    """Pearson chi-square of integer samples against ``Poisson(lam)``.

    Bins ``0..K-1`` are kept while their expected count is at least
    ``MIN_EXPECTED``; everything from ``K`` on forms one upper bin.
    """
    x = np.asarray(samples, dtype=np.int64)
    n = x.size
    if lam == 0:
        bad = int(np.count_nonzero(x))
        return {"statistic": float(bad), "df": 0, "pvalue": 1.0 if bad == 0 else 0.0, "bins": 1}
    pmf = stats.poisson.pmf(np.arange(0, int(lam + 20 * np.sqrt(lam) + 20)), lam)
    K = 0
    while K < pmf.size and n * pmf[K] >= MIN_EXPECTED and n * (1 - pmf[: K + 1].sum()) >= MIN_EXPECTED:
        K += 1
    if K == 0:
        return {"statistic": 0.0, "df": 0, "pvalue": 1.0, "bins": 1}
    expected = np.append(n * pmf[:K], n * stats.poisson.sf(K - 1, lam))
    observed = np.append(np.bincount(np.minimum(x, K), minlength=K + 1)[:K], np.count_nonzero(x >= K))
    chi2, p = stats.chisquare(observed, expected * observed.sum() / expected.sum())
    return {"statistic": float(chi2), "df": K, "pvalue": float(p), "bins": K + 1}


def _pool_levels(x: np.ndarray, min_count: float) -> np.ndarray:
    """Map integer values to bins; the top values are merged until the upper
    bin holds at least ``min_count`` samples."""
    vals, cnt = np.unique(x, return_counts=True)
    top = vals.size
    tail = 0
    while top > 1 and tail < min_count:
        top -= 1
        tail += cnt[top]
    cut = vals[top] if top < vals.size else vals[-1] + 1
    capped = np.minimum(x, cut)
    return np.unique(capped, return_inverse=True)[1]


def independence_test(x, y, g_test: bool = False) -> dict:
    """Chi-square (or G) test of independence for two integer samples."""
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if x.size != y.size:
        raise ValueError("samples must have equal length")
    n = x.size
    bx = _pool_levels(x, max(MIN_EXPECTED, 0.05 * n))
    by = _pool_levels(y, max(MIN_EXPECTED, 0.05 * n))
    table = np.zeros((bx.max() + 1, by.max() + 1))
    np.add.at(table, (bx, by), 1)
    if min(table.shape) < 2:
        return {"statistic": 0.0, "df": 0, "pvalue": 1.0, "table": table.tolist()}
    res = stats.chi2_contingency(table, correction=False, lambda_="log-likelihood" if g_test else None)
    return {"statistic": float(res[0]), "df": int(res[2]), "pvalue": float(res[1]), "table": table.tolist()}


def two_sample_test(a, b) -> dict:
    """Chi-square homogeneity test: are two integer samples equally distributed?"""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    both = np.concatenate([a, b])
    levels = _pool_levels(both, max(MIN_EXPECTED * 2, 0.02 * both.size))
    la, lb = levels[: a.size], levels[a.size:]
    k = levels.max() + 1
    table = np.vstack([np.bincount(la, minlength=k), np.bincount(lb, minlength=k)]).astype(float)
    table = table[:, table.sum(0) > 0]
    if table.shape[1] < 2:
        return {"statistic": 0.0, "df": 0, "pvalue": 1.0}
    res = stats.chi2_contingency(table, correction=False)
    return {"statistic": float(res[0]), "df": int(res[2]), "pvalue": float(res[1])}


def pvalue_uniformity(pvalues) -> dict:
    """Kolmogorov-Smirnov test of a batch of p-values against Uniform(0, 1)."""
    p = np.asarray(pvalues, dtype=float)
    res = stats.kstest(p, "uniform")
    return {"statistic": float(res.statistic), "pvalue": float(res.pvalue), "n": int(p.size)}
