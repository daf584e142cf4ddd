"""Countable-state Markov shifts: renewal chains, random walks, finite chains.

A chain is stored as a finite explicit *window* of states plus the analytic
rule that generates it (the return law of a renewal chain, the step law of a
walk).  Everything downstream that sums over the whole state space reports the
part it could not see.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, reduce
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
from scipy import sparse

from .returns import SAMPLE_CEILING, ReturnDistribution, _xlogx_neg, classify_recurrence

ROW_SUM_TOL = 1e-12
STATIONARITY_TOL = 1e-10


@dataclass(frozen=True)
class Row:
    """Transition probabilities out of one state.

    ``tail`` covers the targets beyond ``targets`` (renewal base state only):
    it is a return distribution whose prefix length equals ``len(targets)``.
    """

    targets: np.ndarray
    probs: np.ndarray
    tail: ReturnDistribution | None = None

    @property
    def total(self) -> float:
        extra = self.tail.tail_mass if self.tail is not None else 0.0
        return math.fsum(self.probs) + extra

    def entropy(self) -> tuple[float, float, float]:
        if self.tail is not None:
            return self.tail.entropy()
        h = math.fsum(_xlogx_neg(self.probs))
        return h, h, h


@dataclass(frozen=True)
class Cylinder:
    word: tuple[int, ...]
    mass: float
    exact_mass: Fraction | None = None


class MarkovSystem:
    """Base class: a recurrent (or flagged) Markov shift with stationary ``q``.

    Subclasses implement :meth:`row`, :meth:`q` and the window description.
    ``q_scale`` multiplies the normalized stationary measure.
    """

    kind = "general-truncated"

    def __init__(self, window: Sequence[int], recurrence: str, q_scale: float = 1.0,
                 notes: Iterable[str] = ()):
        self.window = np.asarray(window, dtype=np.int64)
        self.recurrence = recurrence
        self.q_scale = float(q_scale)
        self.warnings = tuple(notes)
        if self.q_scale <= 0:
            raise ValueError("stationary scale must be positive")

    # --- interface -----------------------------------------------------------
    def row(self, a: int) -> Row:
        raise NotImplementedError

    def q(self, states) -> np.ndarray:
        raise NotImplementedError

    def in_domain(self, a: int) -> bool:
        raise NotImplementedError

    def transition(self, a: int, b: int) -> float:
        raise NotImplementedError

    def scaled(self, t: float) -> "MarkovSystem":
        raise NotImplementedError

    def beyond_window_entropy_rate(self) -> float | None:
        """Row entropy shared by every state outside the window, or None when
        nothing lies outside."""
        return None

    def outward_states(self) -> Iterator[int]:
        """All states of the domain, window first, then outward."""
        yield from (int(a) for a in self.window)

    def entry_distance(self, core: Iterable[int]) -> float:
        """Fewest steps in which mass outside the window can reach ``core``."""
        return math.inf

    def describe(self) -> dict:
        return {"kind": self.kind, "recurrence": self.recurrence, "window": [int(self.window[0]), int(self.window[-1])],
                "q_scale": self.q_scale, "warnings": list(self.warnings)}

    # --- derived -------------------------------------------------------------
    @property
    def recurrent(self) -> bool:
        return self.recurrence != "transient"

    @cached_property
    def index(self) -> dict[int, int]:
        return {int(a): i for i, a in enumerate(self.window)}

    @cached_property
    def window_kernel(self) -> tuple[sparse.csr_matrix, np.ndarray]:
        """Kernel restricted to the window, and the mass each row sends outside."""
        n = len(self.window)
        rows, cols, vals = [], [], []
        escape = np.zeros(n)
        for i, a in enumerate(self.window):
            r = self.row(int(a))
            targets, probs = r.targets, r.probs
            last = int(targets[-1]) if len(targets) else 0
            if r.tail is not None and int(self.window[-1]) > last:
                extra = np.arange(last + 1, int(self.window[-1]) + 1)
                targets = np.concatenate([targets, extra])
                probs = np.concatenate([probs, r.tail.pmf(extra)])
            for b, p in zip(targets, probs):
                j = self.index.get(int(b))
                if j is not None and p > 0:
                    rows.append(i)
                    cols.append(j)
                    vals.append(p)
            # defective mass of a transient row counts as escaping too
            escape[i] = max(0.0, 1.0 - math.fsum(p for b, p in zip(targets, probs) if int(b) in self.index))
        mat = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
        return mat, escape

    @cached_property
    def q_window(self) -> np.ndarray:
        return self.q(self.window)

    def row_sum_error(self) -> float:
        """Largest ``|sum_b p_ab - 1|`` over the window rows (defective rows of
        transient chains excluded)."""
        errs = [abs(self.row(int(a)).total - 1.0) for a in self.window]
        if self.recurrence == "transient":
            errs = [e for e in errs if e < 1e-6] or [0.0]
        return max(errs)

    def stationarity_residual(self) -> float:
        raise NotImplementedError

    def _check(self) -> None:
        err = self.row_sum_error()
        if err > ROW_SUM_TOL:
            raise ValueError(f"kernel rows do not sum to 1 (max error {err:.3g})")
        if self.recurrent:
            res = self.stationarity_residual()
            if res > STATIONARITY_TOL * max(1.0, self.q_scale):
                raise ValueError(f"q is not stationary on the window (residual {res:.3g})")

    def _warn(self, msg: str) -> None:
        warnings.warn(msg, stacklevel=3)
        self.warnings = self.warnings + (msg,)

    # --- sampling ------------------------------------------------------------
    def start_state(self, start, rng: np.random.Generator) -> int:
        if isinstance(start, (int, np.integer)):
            if not self.in_domain(int(start)) or self.q([int(start)])[0] <= 0:
                raise ValueError(f"start state {start} has zero stationary mass")
            return int(start)
        states = np.asarray(sorted(start), dtype=np.int64)
        w = self.q(states)
        if w.sum() <= 0:
            raise ValueError("start set has zero stationary mass")
        return int(rng.choice(states, p=w / w.sum()))

    def sample_path(self, start, length: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


# --------------------------------------------------------------------------
class RenewalChain(MarkovSystem):
    """States 1, 2, ...; from 1 jump to n with probability f_n, from n > 1 go to n-1."""

    kind = "renewal"

    def __init__(self, f: ReturnDistribution, window: int | None = None, q_scale: float = 1.0):
        if window is None:
            end = f.support_end
            window = int(end) if math.isfinite(end) else max(200, f.prefix_len)
        if window < 1:
            raise ValueError("renewal window must contain state 1")
        self.f = f
        super().__init__(np.arange(1, int(window) + 1), classify_recurrence(f), q_scale, f.warnings)
        self._check()

    def scaled(self, t: float) -> "RenewalChain":
        return RenewalChain(self.f, int(self.window[-1]), self.q_scale * t)

    def in_domain(self, a: int) -> bool:
        return a >= 1

    def q(self, states) -> np.ndarray:
        states = np.atleast_1d(np.asarray(states, dtype=np.int64))
        if np.any(states < 1):
            raise ValueError("renewal states are positive integers")
        return self.q_scale * self.f.mass_beyond(states - 1)

    def exact_q(self) -> tuple[Fraction, ...] | None:
        sums = self.f.exact_tail_sums()
        if sums is None or self.q_scale != 1.0:
            return None
        return sums

    def row(self, a: int) -> Row:
        if a < 1:
            raise ValueError(f"state {a} outside the renewal alphabet")
        if a == 1:
            n = self.f.prefix_len
            tail = self.f if self.f.tail is not None else None
            return Row(np.arange(1, n + 1, dtype=np.int64), self.f.probs.copy(), tail)
        return Row(np.array([a - 1], dtype=np.int64), np.array([1.0]))

    def transition(self, a: int, b: int) -> float:
        if a < 1 or b < 1:
            raise ValueError("renewal states are positive integers")
        if a == 1:
            return float(self.f.pmf(b)[0])
        return 1.0 if b == a - 1 else 0.0

    def exact_transition(self, a: int, b: int) -> Fraction | None:
        if a > 1:
            return Fraction(int(b == a - 1))
        if self.f.exact is None or self.f.tail is not None:
            return None
        return self.f.exact[b - 1] if b <= len(self.f.exact) else Fraction(0)

    def beyond_window_entropy_rate(self) -> float:
        return 0.0

    def outward_states(self) -> Iterator[int]:
        a = 1
        while True:
            yield a
            a += 1

    def entry_distance(self, core) -> float:
        return float(int(self.window[-1]) + 1 - max(core))

    def stationarity_residual(self) -> float:
        w = self.window
        q = self.q(w)
        inflow = self.q(w + 1) + self.q([1])[0] * self.f.pmf(w)
        return float(np.max(np.abs(inflow - q)))

    def describe(self) -> dict:
        return {**super().describe(), "return_distribution": self.f.describe()}

    def sample_path(self, start, length: int, rng: np.random.Generator) -> np.ndarray:
        if length < 1:
            raise ValueError("length must be at least 1")
        s0 = self.start_state(start, rng)
        defect = max(0.0, 1.0 - self.f.total_mass)
        segments = [float(s0)]
        covered = s0
        while covered < length:
            batch = max(16, min(length, 2 * (length - covered)))
            jumps = self.f.sample(rng, batch)
            if defect > 0:
                escaped = rng.random(batch) < defect
                jumps[escaped] = SAMPLE_CEILING
            segments.extend(jumps.tolist())
            covered += float(np.sum(np.minimum(jumps, length)))
        seg = np.asarray(segments, dtype=np.float64)
        lens = np.minimum(seg, length).astype(np.int64)
        ends = np.cumsum(lens)
        k = int(np.searchsorted(ends, length)) + 1
        seg, lens = seg[:k], lens[:k].copy()
        lens[-1] -= int(ends[k - 1] - length)
        offsets = np.concatenate([[0], np.cumsum(lens)[:-1]])
        starts = seg.astype(np.int64)
        return np.repeat(starts + offsets, lens) - np.arange(length, dtype=np.int64)


# --------------------------------------------------------------------------
class RandomWalk(MarkovSystem):
    """Walk on the integers with a finite step law; counting measure is stationary."""

    kind = "random-walk"

    def __init__(self, step: Mapping[int, float], window: tuple[int, int], q_scale: float = 1.0):
        step = {int(k): Fraction(v) if isinstance(v, str) else v for k, v in step.items()}
        step = {k: v for k, v in step.items() if float(v) > 0}
        if not step:
            raise ValueError("step distribution has empty support")
        probs = np.array([float(v) for v in step.values()])
        if abs(math.fsum(probs) - 1.0) > ROW_SUM_TOL:
            raise ValueError("step distribution must sum to 1")
        lo, hi = int(window[0]), int(window[1])
        if hi < lo:
            raise ValueError("empty window")
        self.steps = np.array(sorted(step), dtype=np.int64)
        self.step_probs = np.array([float(step[s]) for s in self.steps])
        self.step_exact = {s: Fraction(v) if isinstance(v, (int, Fraction, str)) else None for s, v in step.items()}
        mean = float(np.dot(self.steps, self.step_probs))
        recurrence = "null-recurrent" if abs(mean) < 1e-15 else "transient"
        super().__init__(np.arange(lo, hi + 1), recurrence, q_scale)
        period = reduce(math.gcd, (abs(int(s)) for s in self.steps), 0)
        if period != 1:
            self._warn(f"step support generates {period}Z: the walk is reducible" if period
                       else "zero step only: every state is absorbing")
        if recurrence == "transient":
            self._warn(f"step mean {mean:g} != 0: transient (dissipative) walk")
        self._check()

    def scaled(self, t: float) -> "RandomWalk":
        return RandomWalk(dict(zip(self.steps.tolist(), self.step_probs.tolist())),
                          (int(self.window[0]), int(self.window[-1])), self.q_scale * t)

    def in_domain(self, a: int) -> bool:
        return True

    def q(self, states) -> np.ndarray:
        return np.full(np.atleast_1d(states).shape, self.q_scale)

    def row(self, a: int) -> Row:
        return Row(a + self.steps, self.step_probs.copy())

    def transition(self, a: int, b: int) -> float:
        hit = np.flatnonzero(self.steps == b - a)
        return float(self.step_probs[hit[0]]) if hit.size else 0.0

    def exact_transition(self, a: int, b: int) -> Fraction | None:
        if b - a not in self.step_exact:
            return Fraction(0)
        return self.step_exact[b - a]

    def exact_q(self):
        return None

    def beyond_window_entropy_rate(self) -> float:
        return float(math.fsum(_xlogx_neg(self.step_probs)))

    def outward_states(self) -> Iterator[int]:
        centre = (int(self.window[0]) + int(self.window[-1])) // 2
        yield centre
        k = 1
        while True:
            yield centre + k
            yield centre - k
            k += 1

    def entry_distance(self, core) -> float:
        core = list(core)
        up = int(self.steps.max())
        down = -int(self.steps.min())
        lo, hi = int(self.window[0]), int(self.window[-1])
        d = math.inf
        if down > 0:
            d = min(d, math.ceil((hi + 1 - max(core)) / down))
        if up > 0:
            d = min(d, math.ceil((min(core) - (lo - 1)) / up))
        return float(d)

    def stationarity_residual(self) -> float:
        return abs(math.fsum(self.step_probs) - 1.0) * self.q_scale

    def describe(self) -> dict:
        return {**super().describe(), "step": dict(zip(map(str, self.steps.tolist()), self.step_probs.tolist()))}

    def sample_path(self, start, length: int, rng: np.random.Generator) -> np.ndarray:
        if length < 1:
            raise ValueError("length must be at least 1")
        s0 = self.start_state(start, rng)
        inc = rng.choice(self.steps, size=length - 1, p=self.step_probs)
        return np.concatenate([[s0], s0 + np.cumsum(inc)]).astype(np.int64)


# --------------------------------------------------------------------------
class FiniteChain(MarkovSystem):
    """Explicit finite stochastic matrix; ``q`` normalized to total mass 1
    unless given."""

    kind = "general-truncated"

    def __init__(self, matrix, states: Sequence[int] | None = None, q: Sequence[float] | None = None,
                 q_scale: float = 1.0):
        exact = None
        raw = [list(r) for r in matrix]
        if all(isinstance(x, (int, Fraction, str)) for r in raw for x in r):
            exact = [[Fraction(x) for x in r] for r in raw]
        P = np.array([[float(Fraction(x)) if isinstance(x, str) else float(x) for x in r] for r in raw])
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
            raise ValueError("transition matrix must be square and nonempty")
        if np.any(P < 0):
            raise ValueError("transition probabilities must be nonnegative")
        self.P = P
        self.P_exact = exact
        states = list(range(P.shape[0])) if states is None else [int(s) for s in states]
        notes = []
        n_classes = sparse.csgraph.connected_components(sparse.csr_matrix(P > 0), connection="strong")[0]
        if n_classes > 1:
            notes.append(f"kernel is reducible ({n_classes} communicating classes)")
        super().__init__(states, "positive-recurrent", q_scale, notes)
        for msg in notes:
            warnings.warn(msg, stacklevel=2)
        self._q_base = self._solve_stationary() if q is None else np.asarray(q, dtype=float)
        self._check()

    def _solve_stationary(self) -> np.ndarray:
        n = self.P.shape[0]
        A = np.vstack([self.P.T - np.eye(n), np.ones(n)])
        b = np.zeros(n + 1)
        b[-1] = 1.0
        q, *_ = np.linalg.lstsq(A, b, rcond=None)
        return np.clip(q, 0.0, None)

    def scaled(self, t: float) -> "FiniteChain":
        return FiniteChain(self.P_exact or self.P, self.window.tolist(), self._q_base, self.q_scale * t)

    def in_domain(self, a: int) -> bool:
        return int(a) in self.index

    def _pos(self, a: int) -> int:
        try:
            return self.index[int(a)]
        except KeyError:
            raise ValueError(f"state {a} outside the alphabet") from None

    def q(self, states) -> np.ndarray:
        idx = [self._pos(a) for a in np.atleast_1d(states)]
        return self.q_scale * self._q_base[idx]

    def row(self, a: int) -> Row:
        i = self._pos(a)
        nz = np.flatnonzero(self.P[i])
        return Row(self.window[nz], self.P[i, nz].copy())

    def transition(self, a: int, b: int) -> float:
        return float(self.P[self._pos(a), self._pos(b)])

    def exact_transition(self, a: int, b: int) -> Fraction | None:
        if self.P_exact is None:
            return None
        return self.P_exact[self._pos(a)][self._pos(b)]

    def exact_q(self):
        return None

    def stationarity_residual(self) -> float:
        q = self._q_base
        return float(np.max(np.abs(q @ self.P - q))) * self.q_scale

    def sample_path(self, start, length: int, rng: np.random.Generator) -> np.ndarray:
        if length < 1:
            raise ValueError("length must be at least 1")
        i = self._pos(self.start_state(start, rng))
        cum = np.cumsum(self.P, axis=1)
        u = rng.random(length - 1)
        out = np.empty(length, dtype=np.int64)
        out[0] = i
        for t in range(1, length):
            i = min(int(np.searchsorted(cum[i], u[t - 1], side="right")), len(self.window) - 1)
            out[t] = i
        return self.window[out]


# --------------------------------------------------------------------------
def build_renewal_chain(f: ReturnDistribution, window: int | None = None) -> RenewalChain:
    """Renewal shift of ``f`` with ``q_n = sum_{k>=n} f_k`` (so ``q_1 = 1``)."""
    return RenewalChain(f, window)


def build_random_walk(step: Mapping[int, float], window: tuple[int, int]) -> RandomWalk:
    return RandomWalk(step, window)


def build_finite_chain(matrix, states=None, q=None) -> FiniteChain:
    return FiniteChain(matrix, states, q)


def cylinder_measure(sys: MarkovSystem, word: Sequence[int]) -> Cylinder:
    """``mu([a_0 ... a_{n-1}]) = q_{a_0} prod p_{a_{i-1} a_i}``."""
    word = tuple(int(a) for a in word)
    if not word:
        raise ValueError("cylinder word must be nonempty")
    for a in word:
        if not sys.in_domain(a):
            raise ValueError(f"state {a} outside the alphabet")
    mass = float(sys.q([word[0]])[0])
    for a, b in zip(word, word[1:]):
        mass *= sys.transition(a, b)
    exact = None
    q_exact = sys.exact_q() if hasattr(sys, "exact_q") else None
    if isinstance(sys, RenewalChain) and q_exact is not None and word[0] <= len(q_exact):
        exact = q_exact[word[0] - 1]
    elif isinstance(sys, RenewalChain) and q_exact is not None:
        exact = Fraction(0)
    if exact is not None:
        for a, b in zip(word, word[1:]):
            t = sys.exact_transition(a, b)
            if t is None:
                exact = None
                break
            exact *= t
    return Cylinder(word, mass, exact)
