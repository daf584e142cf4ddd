"""First returns to a finite-measure set of states.

Return-time partitions are computed by taboo iteration on the window kernel;
Krengel entropy comes either from the row-entropy formula
``sum_a q_a sum_b p_ab log(1/p_ab)`` or from simulating the induced map and
multiplying an entropy-rate estimate by ``mu(A)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .entropy.estimators import lz_entropy_rate, plug_in_entropy_rate
from .estimate import EntropyEstimate
from .seeding import STREAM_INDUCED, rng as make_rng
from .systems.markov import MarkovSystem, RandomWalk, RenewalChain
from .systems.returns import SAMPLE_CEILING, ReturnDistribution, _xlogx_neg

DEFAULT_CAP = 100.0
STEP_CAP = 10 ** 8


@dataclass(frozen=True)
class ReturnPartition:
    """Masses ``mu(A ∩ {phi_A = n})`` for ``n = 1..len(cell_masses)``.

    ``exact_through`` is the largest ``n`` whose cell is computed exactly (mass
    that left the window cannot come back sooner).  ``truncation_bound`` is the
    mass not represented in ``cell_masses``.  For a renewal chain with
    ``A = {1}`` the analytic tail ``tail_law`` (scaled by ``tail_scale``)
    describes the cells beyond ``exact_through``.
    """

    core: tuple[int, ...]
    core_mass: float
    cell_masses: np.ndarray
    exact_through: int
    truncation_bound: float
    tail_law: ReturnDistribution | None = None
    tail_scale: float = 1.0
    warnings: tuple[str, ...] = field(default=())

    @property
    def horizon(self) -> int:
        return len(self.cell_masses)

    @property
    def represented_mass(self) -> float:
        return math.fsum(self.cell_masses)

    def cell(self, n: int) -> float:
        if 1 <= n <= self.exact_through:
            return float(self.cell_masses[n - 1])
        if self.tail_law is not None:
            return self.tail_scale * float(self.tail_law.pmf(n)[0])
        return float(self.cell_masses[n - 1]) if 1 <= n <= self.horizon else 0.0

    def entropy(self, unseen_cells: int | None = None, cap: float = DEFAULT_CAP) -> EntropyEstimate:
        """``H_mu(rho_A)`` with an interval; see :func:`quasi_finiteness`."""
        exact = self.cell_masses[: self.exact_through]
        head = math.fsum(_xlogx_neg(exact))
        meta = {"core": list(self.core), "core_mass": self.core_mass, "exact_through": self.exact_through,
                "truncation_bound": self.truncation_bound}
        if self.tail_law is not None:
            s = self.tail_scale
            v, lo, hi = self.tail_law.entropy_beyond(self.exact_through)
            m = float(self.tail_law.mass_beyond(self.exact_through)[0])
            shift = -s * math.log(s) * m if s > 0 else 0.0
            lower = head + s * lo + shift
            if not math.isfinite(v):
                # the tail is certified divergent; report the finite partial sum as lower end
                lower = head
                meta.update(status="divergent", certificate="analytic tail has infinite entropy")
                return EntropyEstimate(math.inf, lower, math.inf, "partition-sum", meta)
            value, upper = head + s * v + shift, head + s * hi + shift
            meta.update(status="finite" if upper <= cap else "divergent", certificate="analytic tail bound")
            if upper > cap:
                return EntropyEstimate(math.inf, lower, math.inf, "partition-sum", meta)
            return EntropyEstimate(value, lower, upper, "partition-sum", meta)
        # no analytic tail: the cells past exact_through are lower bounds only,
        # so the whole unresolved mass goes into the unseen-cell bound
        rest = max(self.core_mass - math.fsum(exact), 0.0)
        K = max(int(unseen_cells if unseen_cells is not None else self.horizon), 1)
        meta["unseen_cells"] = K
        meta["unresolved_mass"] = rest
        if head > cap:
            meta.update(status="divergent", certificate=f"partial sum {head:.6g} exceeds cap {cap:g}")
            return EntropyEstimate(math.inf, head, math.inf, "partition-sum", meta)
        if rest <= 1e-15 * max(self.core_mass, 1.0):
            meta["status"] = "finite"
            return EntropyEstimate(head, head, head, "partition-sum", meta)
        bound = -rest * math.log(rest / K)
        upper = head + bound
        if rest > self._tail_tol:
            meta["status"] = "inconclusive"
            return EntropyEstimate(head, head, math.inf, "partition-sum", meta)
        meta["status"] = "finite"
        return EntropyEstimate(head, head, upper, "partition-sum", meta)

    _tail_tol: float = 1e-9


def _core(sys: MarkovSystem, A: Iterable[int]) -> tuple[np.ndarray, tuple[int, ...]]:
    core = tuple(sorted({int(a) for a in A}))
    if not core:
        raise ValueError("core set is empty")
    missing = [a for a in core if a not in sys.index]
    if missing:
        raise ValueError(f"states {missing[:5]} are outside the represented window")
    return np.array([sys.index[a] for a in core], dtype=np.int64), core


def return_time_distribution(sys: MarkovSystem, A: Iterable[int], horizon: int = 1000,
                             tail_tol: float = 1e-9) -> ReturnPartition:
    """Taboo iteration: push ``q`` restricted to ``A`` through the kernel with
    ``A`` removed, collecting the mass that lands in ``A`` at each step."""
    idx, core = _core(sys, A)
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    K, escape = sys.window_kernel
    KT = K.T.tocsr()
    qw = sys.q_window
    core_mass = math.fsum(qw[idx])
    if core_mass <= 0:
        raise ValueError("core set has zero mass")
    if not math.isfinite(core_mass):
        raise ValueError("core set has infinite mass")
    in_core = np.zeros(len(sys.window), dtype=bool)
    in_core[idx] = True
    v = np.zeros(len(sys.window))
    v[idx] = qw[idx]
    cells = np.zeros(horizon)
    escaped = 0.0
    first_escape = None
    d_in = sys.entry_distance(core)
    for n in range(1, horizon + 1):
        out = float(v @ escape)
        if out > 0 and first_escape is None:
            first_escape = n
        escaped += out
        v = KT @ v
        cells[n - 1] = v[in_core].sum()
        v[in_core] = 0.0
        if not v.any() and first_escape is None:
            cells = cells[:n]
            break
    exact_through = len(cells)
    if first_escape is not None:
        # mass that leaves during step e needs at least d_in more steps to reach A
        reach = first_escape - 1 + d_in
        exact_through = int(min(exact_through, reach)) if math.isfinite(reach) else exact_through
    residual = max(core_mass - math.fsum(cells), 0.0)
    notes = []
    tail_law, tail_scale = None, 1.0
    if isinstance(sys, RenewalChain) and core == (1,) and sys.f.tail is not None:
        tail_law, tail_scale = sys.f, float(qw[idx[0]])
    elif residual > tail_tol:
        msg = f"unrepresented return mass {residual:.3g} exceeds tolerance {tail_tol:g} at horizon {horizon}"
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)
    rp = ReturnPartition(core, core_mass, cells, exact_through, residual, tail_law, tail_scale, tuple(notes))
    object.__setattr__(rp, "_tail_tol", tail_tol)
    return rp


def quasi_finiteness(sys: MarkovSystem, A: Iterable[int], horizon: int = 1000, tail_tol: float = 1e-9,
                     unseen_cells: int | None = None, cap: float = DEFAULT_CAP) -> EntropyEstimate:
    """``H_mu(rho_A)`` with an interval and a status in ``meta``.

    The lower end is the sum over exactly computed cells.  The upper end adds
    either the certified analytic tail (renewal chains, ``A = {1}``) or the
    worst case ``-m log(m / K)`` of the unresolved mass ``m`` spread over ``K``
    unseen cells (``K`` defaults to the horizon).  Status is ``finite``,
    ``divergent`` (infinite analytic tail or partial sum above ``cap``) or
    ``inconclusive`` (unresolved mass above ``tail_tol``).
    """
    rp = return_time_distribution(sys, A, horizon, tail_tol)
    return rp.entropy(unseen_cells, cap)


# ---------------------------------------------------------------------------
def krengel_entropy_markov(sys: MarkovSystem, cap: float = DEFAULT_CAP,
                           max_states: int = 10 ** 6) -> EntropyEstimate:
    """``sum_a q_a sum_b p_ab log(1/p_ab)`` over all states.

    States are visited in the system's outward order.  Window rows use their
    own entropies (renewal row 1 includes its certified analytic tail);
    states outside the window use the common row entropy.  The sum is reported
    as ``inf`` once the partial sum of these nonnegative terms exceeds ``cap``.
    """
    if not sys.recurrent:
        raise ValueError("Krengel formula needs a recurrent chain; this one is transient")
    rate = sys.beyond_window_entropy_rate()
    outside_zero = rate is None or rate == 0.0
    remaining = set(int(a) for a in sys.window)
    terms, lo_terms, hi_terms = [], [], []
    visited = 0
    for a in sys.outward_states():
        visited += 1
        qa = float(sys.q([a])[0])
        if a in remaining:
            remaining.discard(a)
            v, lo, hi = sys.row(a).entropy()
        else:
            v = lo = hi = float(rate or 0.0)
        if qa > 0:
            terms.append(qa * v)
            lo_terms.append(qa * lo)
            hi_terms.append(qa * hi)
        partial_lo = math.fsum(lo_terms)
        if partial_lo > cap:
            meta = {"states_visited": visited, "partial_sum": partial_lo, "cap": cap, "status": "divergent"}
            return EntropyEstimate(math.inf, partial_lo, math.inf, "exact-formula", meta)
        if not remaining and outside_zero:
            break
        if visited >= max_states:
            meta = {"states_visited": visited, "partial_sum": partial_lo, "cap": cap, "status": "inconclusive"}
            return EntropyEstimate(partial_lo, partial_lo, math.inf, "exact-formula", meta)
    value, lower, upper = math.fsum(terms), math.fsum(lo_terms), math.fsum(hi_terms)
    meta = {"states_visited": visited, "status": "finite" if math.isfinite(value) else "divergent"}
    if not math.isfinite(value):
        return EntropyEstimate(math.inf, lower, math.inf, "exact-formula", meta)
    return EntropyEstimate(value, min(lower, value), max(upper, value), "exact-formula", meta)


# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class InducedRun:
    """Successive return times along one orbit of the induced map."""

    times: np.ndarray
    retries: int
    step_cap: int
    seed: int

    def __len__(self) -> int:
        return len(self.times)


def _renewal_returns(sys: RenewalChain, core: tuple[int, ...], n_returns: int, seed: int,
                     step_cap: int) -> tuple[np.ndarray, int]:
    gen = make_rng(seed, STREAM_INDUCED, 0)
    retries = 0

    def fresh_jumps(size: int) -> np.ndarray:
        nonlocal retries
        out = sys.f.sample(gen, size)
        bad = out > step_cap
        while bad.any():
            retries += int(bad.sum())
            sub = make_rng(seed, STREAM_INDUCED, 1, retries)
            out[bad] = sys.f.sample(sub, int(bad.sum()))
            bad = out > step_cap
        return out.astype(np.int64)

    if core == (1,):
        return fresh_jumps(n_returns), retries
    A = np.array(core, dtype=np.int64)
    x = sys.start_state(set(core), gen)
    times = np.empty(n_returns, dtype=np.int64)
    buf = fresh_jumps(4096)
    pos = 0
    for i in range(n_returns):
        k = int(np.searchsorted(A, x)) - 1
        if k >= 0:
            times[i] = x - int(A[k])
            x = int(A[k])
            continue
        t = x - 1
        while True:
            if pos == len(buf):
                buf, pos = fresh_jumps(4096), 0
            n = int(buf[pos])
            pos += 1
            k = int(np.searchsorted(A, n, side="right")) - 1
            if k >= 0:
                t += 1 + n - int(A[k])
                x = int(A[k])
                break
            t += n
        times[i] = t
    return times, retries


def _generic_returns(sys: MarkovSystem, core: tuple[int, ...], n_returns: int, seed: int,
                     step_cap: int) -> tuple[np.ndarray, int]:
    gen = make_rng(seed, STREAM_INDUCED, 0)
    A = np.array(core, dtype=np.int64)
    x = sys.start_state(set(core), gen)
    times = np.empty(n_returns, dtype=np.int64)
    retries = 0
    for i in range(n_returns):
        g = gen
        while True:
            t, x_new = _excursion(sys, x, A, g, step_cap)
            if t is not None:
                break
            retries += 1
            g = make_rng(seed, STREAM_INDUCED, 1, retries)
        times[i] = t
        x = x_new
    return times, retries


def _excursion(sys: MarkovSystem, x: int, A: np.ndarray, g: np.random.Generator, step_cap: int):
    elapsed = 0
    chunk = 64
    while elapsed < step_cap:
        L = int(min(chunk, step_cap - elapsed)) + 1
        path = sys.sample_path(int(x), L, g) if not isinstance(sys, RandomWalk) else \
            _walk_path(sys, int(x), L, g)
        hit = np.flatnonzero(np.isin(path[1:], A))
        if hit.size:
            return elapsed + int(hit[0]) + 1, int(path[hit[0] + 1])
        elapsed += L - 1
        x = int(path[-1])
        chunk *= 2
    return None, x


def _walk_path(sys: RandomWalk, x: int, L: int, g: np.random.Generator) -> np.ndarray:
    # walks have uniform q, so any start state is allowed
    inc = g.choice(sys.steps, size=L - 1, p=sys.step_probs)
    return np.concatenate([[x], x + np.cumsum(inc)]).astype(np.int64)


def induced_map_simulate(sys: MarkovSystem, A: Iterable[int], n_returns: int, seed: int,
                         step_cap: int = STEP_CAP) -> InducedRun:
    """Return times of successive visits to ``A``, starting from a ``q``-random point of ``A``.

    An excursion longer than ``step_cap`` steps is redrawn from a fresh
    substream and counted in ``retries``.
    """
    if n_returns < 1:
        raise ValueError("need at least one return")
    core = tuple(sorted({int(a) for a in A}))
    if not core or not all(sys.in_domain(a) for a in core):
        raise ValueError("core set must be a nonempty set of states")
    if not sys.recurrent:
        raise ValueError("induced map of a transient chain is not defined almost everywhere")
    if isinstance(sys, RenewalChain):
        times, retries = _renewal_returns(sys, core, n_returns, seed, step_cap)
    else:
        times, retries = _generic_returns(sys, core, n_returns, seed, step_cap)
    return InducedRun(times, retries, int(step_cap), int(seed))


def krengel_entropy_abramov(sys: MarkovSystem, A: Iterable[int], n_returns: int = 10 ** 6,
                            estimator: str = "plug-in", seed: int = 0,
                            step_cap: int = STEP_CAP) -> EntropyEstimate:
    """``mu(A)`` times the entropy rate of the simulated return-time sequence."""
    core = tuple(sorted({int(a) for a in A}))
    mu_A = math.fsum(sys.q(np.array(core)))
    if not math.isfinite(mu_A) or mu_A <= 0:
        raise ValueError("core set must have finite positive mass")
    run = induced_map_simulate(sys, core, n_returns, seed, step_cap)
    if estimator == "plug-in":
        est = plug_in_entropy_rate(run.times, tuple(range(1, min(10, len(run.times) // 50) + 1)))
    elif estimator == "lz":
        est = lz_entropy_rate(run.times)
    else:
        raise ValueError(f"unknown estimator {estimator!r}")
    meta = {"core": list(core), "core_mass": mu_A, "n_returns": n_returns, "retries": run.retries,
            "step_cap": run.step_cap, "seed": seed, "estimator": estimator, "rate": est.to_dict()}
    return EntropyEstimate(mu_A * est.value, mu_A * est.lower, mu_A * est.upper, "abramov-sim", meta)
