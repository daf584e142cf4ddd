"""``H(xi_past | T^-1 xi_past)`` for Markov shifts, from two-cylinder masses.

For a Markov measure this conditional entropy is
``sum_{a,b} mu([a b]) log(mu([a]) / mu([a b]))``.  The code here works from
cylinder masses directly and handles infinite rows with its own tail
quadrature, so it shares no summation code with the Krengel formula in
:mod:`poisson_lab.induced`.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from ..estimate import EntropyEstimate
from ..systems.markov import FiniteChain, MarkovSystem, RandomWalk, RenewalChain

DIRECT_TERMS = 1 << 21
CHUNK = 1 << 18
DEFAULT_CAP = 100.0


def _pair_information(m_a: float, m_ab: np.ndarray) -> np.ndarray:
    """``mu([ab]) log(mu([a]) / mu([ab]))`` with ``0 log(.) = 0``."""
    m_ab = np.asarray(m_ab, dtype=float)
    out = np.zeros_like(m_ab)
    pos = m_ab > 0
    out[pos] = m_ab[pos] * (math.log(m_a) - np.log(m_ab[pos]))
    return out


def _renewal_base_row(sys: RenewalChain) -> tuple[float, float, float, dict]:
    """Contribution of state 1: a direct sum of pair terms, plus a quadrature
    bracket for what lies beyond the last direct term."""
    f = sys.f
    m1 = float(sys.q([1])[0])
    end = f.support_end
    if math.isfinite(end):
        b = np.arange(1, int(end) + 1)
        s = math.fsum(_pair_information(m1, m1 * f.pmf(b)))
        return s, s, s, {"direct_terms": int(end)}
    if not f.tail.entropy_finite:
        return math.inf, 0.0, math.inf, {"direct_terms": 0, "tail": "infinite"}
    M = max(DIRECT_TERMS, f.prefix_len + 1)
    parts = []
    for lo in range(1, M + 1, CHUNK):
        b = np.arange(lo, min(lo + CHUNK, M + 1))
        mb = m1 * f.pmf(b)
        parts.append(math.fsum(_pair_information(m1, mb)))
        if mb[-1] == 0.0:
            # the tail has underflowed: nothing further is representable
            direct = math.fsum(parts)
            return direct, direct, direct, {"direct_terms": int(b[-1])}
    direct = math.fsum(parts)

    def g(x: float) -> float:
        p = float(f.tail.pmf(x))
        return 0.0 if p <= 0 else -p * math.log(p)

    # terms beyond M: integral test on [M, inf) and [M+1, inf) via x = a e^u
    def tail_integral(a: float) -> float:
        def integrand(u: float) -> float:
            if u > 700.0:
                return 0.0
            x = a * math.exp(u)
            return g(x) * x

        val, _ = integrate.quad(integrand, 0.0, math.inf, epsabs=0.0, epsrel=1e-12, limit=400)
        return val

    hi_t = tail_integral(float(M))
    lo_t = tail_integral(float(M + 1))
    # rows scale with m1: m1 * sum f log(1/f)
    return (direct + m1 * 0.5 * (lo_t + hi_t), direct + m1 * lo_t, direct + m1 * hi_t,
            {"direct_terms": M, "tail_bracket": [m1 * lo_t, m1 * hi_t]})


def parry_markov_step_entropy(sys: MarkovSystem, cap: float = DEFAULT_CAP,
                              max_states: int = 10 ** 6) -> EntropyEstimate:
    """Conditional entropy of the present given the strict past, summed over states.

    Finite chains and renewal chains give a value with a certified interval.
    For a walk every state contributes the same positive amount; the sum is
    reported as ``inf`` once it passes ``cap``.
    """
    if not sys.recurrent:
        raise ValueError("conditional past entropy is only computed for recurrent chains")
    if isinstance(sys, FiniteChain):
        mass = sys.q(sys.window)
        pair = mass[:, None] * sys.P
        total = math.fsum(_pair_information(1.0, pair[mass > 0].ravel())) \
            + math.fsum(float(np.sum(pair[i])) * math.log(mass[i]) for i in np.flatnonzero(mass > 0))
        return EntropyEstimate(total, total, total, "exact-formula", {"path": "two-cylinder"})
    if isinstance(sys, RenewalChain):
        v, lo, hi, meta = _renewal_base_row(sys)
        # every other state has one successor, so mu([a, a-1]) = mu([a]) and the term is 0
        meta["path"] = "two-cylinder"
        if not math.isfinite(v):
            return EntropyEstimate(math.inf, lo, math.inf, "exact-formula", meta)
        return EntropyEstimate(v, min(lo, v), max(hi, v), "exact-formula", meta)
    if isinstance(sys, RandomWalk):
        partial = 0.0
        count = 0
        lo, hi = int(sys.window[0]), int(sys.window[-1])
        centre = (lo + hi) // 2
        k = 0
        while count < max_states:
            for a in ((centre,) if k == 0 else (centre + k, centre - k)):
                m_a = float(sys.q([a])[0])
                partial += math.fsum(_pair_information(m_a, m_a * sys.step_probs))
                count += 1
            k += 1
            if partial > cap:
                meta = {"path": "two-cylinder", "states_visited": count, "partial_sum": partial, "cap": cap}
                return EntropyEstimate(math.inf, partial, math.inf, "exact-formula", meta)
            if partial == 0.0 and count >= len(sys.window):
                return EntropyEstimate(0.0, 0.0, 0.0, "exact-formula", {"path": "two-cylinder"})
        return EntropyEstimate(partial, partial, math.inf, "exact-formula",
                               {"path": "two-cylinder", "states_visited": count, "status": "inconclusive"})
    raise TypeError(f"no two-cylinder evaluation for {type(sys).__name__}")
