"""Return-time distributions on {1, 2, ...} with analytic tails.

A distribution is an explicit prefix ``f_1..f_N`` followed, optionally, by an
analytic tail family that defines ``f_n`` for every ``n > N``.  Tail families
expose closed-form tail masses, so sums over the unrepresented part are exact
or certified rather than truncated silently.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import integrate, special

TOTAL_MASS_TOL = 1e-12
# largest value returned by samplers; anything above is "beyond every cap"
SAMPLE_CEILING = 1e18


def _xlogx_neg(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = -p[pos] * np.log(p[pos])
    return out


class Tail:
    """Analytic tail ``f_n`` for ``n > start``.

    Subclasses define a smooth decreasing extension ``pmf(x)`` for real
    ``x >= start`` and its exact tail mass ``mass_beyond(n) = sum_{k>n} f_k``.
    """

    name = "tail"
    mean_finite = True
    entropy_finite = True

    def __init__(self, start: int, scale: float = 1.0):
        if scale < 0:
            raise ValueError("tail scale must be nonnegative")
        self.start = int(start)
        self.scale = float(scale)

    def params(self) -> dict:
        return {"scale": self.scale}

    def pmf(self, x):
        raise NotImplementedError

    def mass_beyond(self, n):
        raise NotImplementedError

    def mass_sum_from(self, n: int) -> float:
        """``sum_{j>=n} mass_beyond(j)``; infinite when the mean is."""
        return math.inf

    def quantile(self, u: np.ndarray) -> np.ndarray:
        """Smallest ``k > start`` with ``mass_beyond(k) < u``.

        ``u`` must lie in ``(0, mass_beyond(start)]``.
        """
        raise NotImplementedError

    def _fix_quantile(self, k: np.ndarray, u: np.ndarray) -> np.ndarray:
        # closed-form inverses are off by one at float boundaries
        k = np.clip(np.floor(k), self.start + 1, SAMPLE_CEILING)
        finite = k < SAMPLE_CEILING
        kf = k[finite]
        uf = u[finite]
        for _ in range(3):
            too_small = self.mass_beyond(kf) >= uf
            kf = np.where(too_small, kf + 1, kf)
            prev_ok = (kf - 1 > self.start) & (self.mass_beyond(kf - 1) < uf)
            kf = np.where(prev_ok, kf - 1, kf)
        k[finite] = kf
        return k

    # entropy of the tail ------------------------------------------------
    def _g(self, x):
        return _xlogx_neg(self.pmf(np.asarray(x, dtype=float)))

    def _decreasing_from(self, n: int) -> int:
        """First integer ``m >= n`` from which ``-f log f`` is decreasing.

        ``f`` is decreasing in every family, and ``-p log p`` increases on
        ``[0, 1/e]``, so it suffices that ``f(m) <= 1/e``.
        """
        m = max(n, self.start + 1)
        while self.pmf(float(m)) > math.exp(-1.0):
            m += 1
        return m

    def _integral(self, a: float) -> float:
        if not self.entropy_finite:
            return math.inf
        # x = a / t maps [a, inf) onto (0, 1]; the integrand then has at most
        # a logarithmic singularity at t = 0
        def integrand(t):
            if t <= 0.0:
                return 0.0
            x = a / t
            return float(self._g(x)) * x / t

        val, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=500)
        return val

    def entropy_beyond(self, n: int, direct: int = 1 << 17) -> tuple[float, float, float]:
        """``sum_{k>n} -f_k log f_k`` as ``(value, lower, upper)``.

        Terms up to ``n + direct`` are summed directly; the remainder uses the
        integral test for a decreasing summand, which certifies the interval,
        with a trapezoid correction for the point value.
        """
        n = max(int(n), self.start)
        m0 = self._decreasing_from(n)
        head = float(np.sum(self._g(np.arange(n + 1, m0 + 1, dtype=float)))) if m0 > n else 0.0
        if not self.entropy_finite:
            lower = head + self.divergent_lower_bound(m0)
            return math.inf, lower, math.inf
        m = m0 + int(direct)
        body = math.fsum(self._g(np.arange(m0 + 1, m + 1, dtype=float)))
        i_m = self._integral(float(m))
        i_m1 = self._integral(float(m + 1))
        g_m = float(self._g(float(m)))
        base = head + body
        return base + i_m - 0.5 * g_m, base + i_m1, base + i_m

    def divergent_lower_bound(self, n: int) -> float:
        return 0.0

    def describe(self) -> dict:
        return {"name": self.name, "start": self.start, **self.params()}


class PowerTail(Tail):
    """``f_n = c (n^-a - (n+1)^-a)``, tail mass ``c (n+1)^-a``.

    ``a = 1`` gives ``c / (n (n+1))``.  Mean is finite iff ``a > 1``.
    """

    name = "power"

    def __init__(self, start: int, scale: float = 1.0, exponent: float = 1.0):
        super().__init__(start, scale)
        if exponent <= 0:
            raise ValueError("power tail exponent must be positive")
        self.exponent = float(exponent)
        self.mean_finite = self.exponent > 1.0

    def params(self) -> dict:
        return {"scale": self.scale, "exponent": self.exponent}

    def pmf(self, x):
        x = np.asarray(x, dtype=float)
        a = self.exponent
        return self.scale * x ** (-a) * -np.expm1(-a * np.log1p(1.0 / x))

    def mass_beyond(self, n):
        return self.scale * (np.asarray(n, dtype=float) + 1.0) ** (-self.exponent)

    def mass_sum_from(self, n: int) -> float:
        if not self.mean_finite:
            return math.inf
        return self.scale * float(special.zeta(self.exponent, n + 1.0))

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            k = (self.scale / u) ** (1.0 / self.exponent)
        k = np.where(np.isfinite(k), k, SAMPLE_CEILING)
        return self._fix_quantile(k, u)


class HeavyLogTail(Tail):
    """``f_n = c (1/log(n+1) - 1/log(n+2))``, tail mass ``c / log(n+2)``.

    Summable, with infinite mean and infinite entropy: ``f_n`` behaves like
    ``c / (n log^2 n)`` so ``-f_n log f_n`` behaves like ``c / (n log n)``.
    """

    name = "heavylog"
    mean_finite = False
    entropy_finite = False

    def __init__(self, start: int, scale: float = math.log(2.0)):
        # the default scale gives total mass 1 when started at 0
        super().__init__(start, scale)

    def pmf(self, x):
        x = np.asarray(x, dtype=float)
        return self.scale * np.log1p(1.0 / (x + 1.0)) / (np.log(x + 1.0) * np.log(x + 2.0))

    def mass_beyond(self, n):
        return self.scale / np.log(np.asarray(n, dtype=float) + 2.0)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            expo = self.scale / u
            k = np.where(expo < math.log(SAMPLE_CEILING), np.exp(np.minimum(expo, 700.0)) - 2.0, SAMPLE_CEILING)
        return self._fix_quantile(k, u)

    def divergent_lower_bound(self, n: int) -> float:
        # f_k >= c / ((k+2) log^2(k+2)) and log(1/f_k) >= log(k+1) - log c, so
        # the tail dominates c * sum (log(k+2) - 1 - log c) / ((k+2) log^2(k+2)),
        # whose integral grows like c log log x without bound.
        return math.inf if self.scale > 0 else 0.0


class GeometricTail(Tail):
    """``f_n = c (1-r) r^(n-1)``, tail mass ``c r^n``."""

    name = "geometric"

    def __init__(self, start: int, scale: float = 1.0, ratio: float = 0.5):
        super().__init__(start, scale)
        if not 0 < ratio < 1:
            raise ValueError("geometric ratio must lie in (0, 1)")
        self.ratio = float(ratio)

    def params(self) -> dict:
        return {"scale": self.scale, "ratio": self.ratio}

    def pmf(self, x):
        x = np.asarray(x, dtype=float)
        return self.scale * (1.0 - self.ratio) * self.ratio ** (x - 1.0)

    def mass_beyond(self, n):
        return self.scale * self.ratio ** np.asarray(n, dtype=float)

    def mass_sum_from(self, n: int) -> float:
        return float(self.mass_beyond(n)) / (1.0 - self.ratio)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            k = np.log(u / self.scale) / math.log(self.ratio)
        k = np.where(np.isfinite(k), k, SAMPLE_CEILING)
        return self._fix_quantile(k, u)


TAIL_FAMILIES = {
    "power": PowerTail,
    "telescoping": PowerTail,
    "heavylog": HeavyLogTail,
    "geometric": GeometricTail,
}


def make_tail(name: str, start: int, **params) -> Tail:
    try:
        cls = TAIL_FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown tail family {name!r}; known: {sorted(TAIL_FAMILIES)}") from None
    if name == "telescoping":
        params = {"scale": params.get("scale", 1.0), "exponent": 1.0}
    return cls(start, **params)


def _as_fraction(x) -> Fraction | None:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x)
        except ValueError:
            return None
    return None


@dataclass(frozen=True)
class ReturnDistribution:
    """Law of the return time to the base state of a renewal chain.

    ``probs[n-1]`` is ``f_n`` for ``n <= len(probs)``; beyond that the
    optional ``tail`` takes over.  ``exact`` holds the prefix as fractions
    when it was given exactly.
    """

    probs: np.ndarray
    tail: Tail | None = None
    exact: tuple[Fraction, ...] | None = None
    warnings: tuple[str, ...] = field(default=())

    @classmethod
    def from_values(
        cls,
        values: Sequence,
        tail: str | Tail | None = None,
        tail_params: dict | None = None,
        total: float | None = None,
    ) -> "ReturnDistribution":
        fracs = [_as_fraction(v) for v in values]
        exact = tuple(fracs) if values and all(f is not None for f in fracs) else None
        probs = np.array([float(f) if f is not None else float(v) for f, v in zip(fracs, values)], dtype=float)
        if isinstance(tail, str):
            tail = make_tail(tail, len(probs), **(tail_params or {}))
        dist = cls(probs=probs, tail=tail, exact=exact)
        return dist._validated(total)

    @classmethod
    def from_tail(cls, name: str, prefix_len: int = 0, **params) -> "ReturnDistribution":
        """Materialize the first ``prefix_len`` values of a tail family started at 0."""
        full = make_tail(name, 0, **params)
        n = np.arange(1, prefix_len + 1, dtype=float)
        probs = np.asarray(full.pmf(n), dtype=float) if prefix_len else np.zeros(0)
        tail = make_tail(name, prefix_len, **params)
        return cls(probs=probs, tail=tail)._validated(None)

    def _validated(self, total: float | None) -> "ReturnDistribution":
        if np.any(self.probs < 0) or not np.all(np.isfinite(self.probs)):
            raise ValueError("return probabilities must be finite and nonnegative")
        mass = self.total_mass
        if total is not None and self.tail is not None and abs(mass - total) > TOTAL_MASS_TOL:
            raise ValueError(f"tail descriptor gives total mass {mass!r}, declared {total!r}")
        if mass > 1.0 + TOTAL_MASS_TOL:
            raise ValueError(f"return distribution has total mass {mass!r} > 1")
        if mass == 0:
            raise ValueError("return distribution has no mass")
        notes = list(self.warnings)
        if mass < 1.0 - TOTAL_MASS_TOL:
            msg = f"total mass {mass:.6g} < 1: transient chain"
            warnings.warn(msg, stacklevel=3)
            notes.append(msg)
        object.__setattr__(self, "warnings", tuple(notes))
        return self

    # basic quantities -------------------------------------------------------
    @property
    def prefix_len(self) -> int:
        return len(self.probs)

    @property
    def tail_mass(self) -> float:
        if self.tail is None:
            return 0.0
        return float(self.tail.mass_beyond(self.prefix_len))

    @property
    def total_mass(self) -> float:
        return math.fsum(self.probs) + self.tail_mass

    @property
    def support_end(self) -> float:
        """Largest ``n`` with ``f_n > 0`` (``inf`` with a nonzero tail)."""
        if self.tail is not None and self.tail_mass > 0:
            return math.inf
        nz = np.flatnonzero(self.probs)
        return int(nz[-1]) + 1 if nz.size else 0

    def pmf(self, n) -> np.ndarray:
        n = np.atleast_1d(np.asarray(n, dtype=np.int64))
        out = np.zeros(n.shape, dtype=float)
        inside = (n >= 1) & (n <= self.prefix_len)
        out[inside] = self.probs[n[inside] - 1]
        if self.tail is not None:
            beyond = n > self.prefix_len
            out[beyond] = self.tail.pmf(n[beyond].astype(float))
        return out

    def mass_beyond(self, n) -> np.ndarray:
        """``sum_{k>n} f_k`` for integer ``n >= 0`` (vectorized)."""
        n = np.atleast_1d(np.asarray(n, dtype=np.int64))
        suffix = np.concatenate([np.cumsum(self.probs[::-1])[::-1], [0.0]])
        out = np.empty(n.shape, dtype=float)
        inside = n < self.prefix_len
        out[inside] = suffix[n[inside]] + self.tail_mass
        if self.tail is not None:
            out[~inside] = self.tail.mass_beyond(n[~inside].astype(float))
        else:
            out[~inside] = 0.0
        return out

    def exact_tail_sums(self) -> tuple[Fraction, ...] | None:
        """``(q_1, ..., q_N)`` with ``q_n = sum_{k>=n} f_k`` in exact arithmetic."""
        if self.exact is None or self.tail is not None:
            return None
        out = []
        acc = Fraction(0)
        for f in reversed(self.exact):
            acc += f
            out.append(acc)
        return tuple(reversed(out))

    @property
    def mean_finite(self) -> bool:
        return self.tail is None or self.tail_mass == 0 or self.tail.mean_finite

    @property
    def mean(self) -> float:
        if not self.mean_finite:
            return math.inf
        n = np.arange(1, self.prefix_len + 1, dtype=float)
        head = math.fsum(n * self.probs)
        if self.tail is None or self.tail_mass == 0:
            return head
        # sum_{k>N} k f_k = N * m(N) + sum_{j>=N} m(j)
        N = self.prefix_len
        return head + N * self.tail_mass + self.tail.mass_sum_from(N)

    def entropy(self, direct: int = 1 << 17) -> tuple[float, float, float]:
        """Shannon entropy ``sum f_n log(1/f_n)`` as ``(value, lower, upper)``, nats."""
        head = math.fsum(_xlogx_neg(self.probs))
        if self.tail is None or self.tail_mass == 0:
            return head, head, head
        v, lo, hi = self.tail.entropy_beyond(self.prefix_len, direct=direct)
        return head + v, head + lo, head + hi

    def entropy_beyond(self, n: int, direct: int = 1 << 17) -> tuple[float, float, float]:
        """``sum_{k>n} f_k log(1/f_k)`` as ``(value, lower, upper)``."""
        n = max(int(n), 0)
        head = math.fsum(_xlogx_neg(self.probs[n:]))
        if self.tail is None or self.tail_mass == 0:
            return head, head, head
        v, lo, hi = self.tail.entropy_beyond(max(n, self.prefix_len), direct=direct)
        return head + v, head + lo, head + hi

    def describe(self) -> dict:
        return {
            "prefix": [str(f) for f in self.exact] if self.exact else self.probs.tolist(),
            "tail": self.tail.describe() if self.tail else None,
            "total_mass": self.total_mass,
        }

    # sampling ---------------------------------------------------------------
    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """IID draws conditioned on a finite return (float array, may hold
        values up to ``SAMPLE_CEILING`` for extreme tail draws)."""
        return self.inverse_cdf(rng.random(size))

    def inverse_cdf(self, v) -> np.ndarray:
        """Map uniforms ``v`` in ``[0, 1)`` to return times (conditioned on a
        finite return), as floats; see :meth:`sample`."""
        v = np.asarray(v, dtype=float)
        size = v.shape
        total = self.total_mass
        u = v * total
        head = np.cumsum(self.probs)
        out = np.empty(size, dtype=float)
        if self.tail is None or self.tail_mass == 0:
            # rounding can put u at the very top; land on the last supported value
            idx = np.minimum(np.searchsorted(head, u, side="right"), int(self.support_end) - 1)
            return (idx + 1).astype(float)
        in_head = u < (head[-1] if head.size else 0.0)
        out[in_head] = np.searchsorted(head, u[in_head], side="right") + 1
        if (~in_head).any():
            # residual uniform on (0, tail_mass]
            r = total - u[~in_head]
            r = np.clip(r, np.nextafter(0, 1), self.tail_mass)
            out[~in_head] = self.tail.quantile(r)
        return out


def classify_recurrence(f: ReturnDistribution) -> str:
    """``transient`` iff total mass < 1, else positive/null by the mean."""
    if f.total_mass < 1.0 - TOTAL_MASS_TOL:
        return "transient"
    return "positive-recurrent" if f.mean_finite else "null-recurrent"
