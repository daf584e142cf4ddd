"""Cylinder sums ``(1/n) sum_{a in alpha_0^{n-1}} f(mu(a))`` for local partitions.

A local partition has finitely many finite-measure cells inside a core ``A``
plus the complement of ``A``.  A cylinder of depth ``n`` is a word of cell
labels; the word made only of complement labels has infinite mass and adds
nothing.  Every other word has a first position ``j`` that lands in ``A``; its
mass is

    E_j restricted to the first cell, pushed forward one label at a time,

where ``E_j(b) = mu(x_0..x_{j-1} outside A, x_j = b)`` comes from the first
entry decomposition ``E_j = q - sum_{i<=j} G_i`` (``G_i`` is the taboo
propagation of ``q`` restricted to ``A``).

Words are enumerated level by level.  Nodes that share a normalized state
vector are grouped under one key and carry an array of masses, so a singleton
cell collapses every branch that enters it onto a single vector.  Mass that
leaves the window goes to a sink that only emits complement labels; this is
exact while the depth stays below the system's entry distance to ``A``.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np
from scipy import sparse

from ..systems.markov import MarkovSystem
from .poisson import poisson_entropy_function

NODE_BUDGET = 50_000_000


@dataclass(frozen=True)
class LocalPartition:
    """Finite-measure cells (sets of states) covering a core; the complement is implicit."""

    cells: tuple[frozenset, ...]

    @classmethod
    def from_cells(cls, cells: Iterable[Iterable[int]]) -> "LocalPartition":
        out = []
        seen: set[int] = set()
        for c in cells:
            c = frozenset(int(a) for a in c)
            if not c:
                raise ValueError("cells must be nonempty")
            if seen & c:
                raise ValueError(f"cells overlap at states {sorted(seen & c)[:5]}")
            seen |= c
            out.append(c)
        if not out:
            raise ValueError("a local partition needs at least one finite cell")
        return cls(tuple(out))

    @classmethod
    def singletons(cls, states: Iterable[int]) -> "LocalPartition":
        return cls.from_cells([[a] for a in states])

    @property
    def core(self) -> frozenset:
        return frozenset().union(*self.cells)

    @property
    def n_labels(self) -> int:
        """Number of labels including the complement."""
        return len(self.cells) + 1

    def cell_masses(self, sys: MarkovSystem) -> np.ndarray:
        return np.array([math.fsum(sys.q(sorted(c))) for c in self.cells])

    def check(self, sys: MarkovSystem) -> float:
        """Core mass; raises if a cell leaves the window or the core has infinite mass."""
        for c in self.cells:
            missing = [a for a in c if a not in sys.index]
            if missing:
                raise ValueError(f"states {sorted(missing)[:5]} are outside the represented window")
        masses = self.cell_masses(sys)
        core = math.fsum(sys.q(sorted(self.core)))
        if not math.isfinite(core):
            raise ValueError("core has infinite mass")
        if abs(math.fsum(masses) - core) > 1e-12 * max(1.0, core):
            raise ValueError("cell masses do not add up to the core mass")
        return core


@dataclass
class RefinedPartitionTable:
    """Masses of the represented cylinders of ``alpha_0^{n-1}`` at one depth.

    ``pruned_mass`` is the mass of subtrees cut off; their contribution to
    ``sum f`` lies in ``[pruned_lower, pruned_upper]``.
    """

    depth: int
    masses: np.ndarray
    pruned_mass: float = 0.0
    pruned_lower: float = 0.0
    pruned_upper: float = 0.0

    @property
    def represented_mass(self) -> float:
        return math.fsum(self.masses)

    def cylinder_sum(self) -> tuple[float, float, float]:
        """``sum f(mu(a))`` as ``(value, lower, upper)``; the value uses the lower bound."""
        kept = math.fsum(np.sort(poisson_entropy_function(self.masses))) if self.masses.size else 0.0
        lo = kept + self.pruned_lower
        return lo, lo, kept + self.pruned_upper


def pruning_band(mass: np.ndarray, depth_gap: int, n_labels: int) -> tuple[float, float]:
    """Bounds on ``sum f`` over the depth-``n`` descendants of pruned nodes.

    A node of mass ``m`` pruned ``depth_gap`` levels above has descendants of
    total mass ``m`` spread over at most ``K = n_labels ** depth_gap`` cells.
    Since ``f`` is concave with ``f(0) = 0`` it is subadditive, so the sum is
    at least ``f(m)``, and by Jensen at most ``K f(m / K)``.
    """
    m = np.asarray(mass, dtype=float)
    if m.size == 0:
        return 0.0, 0.0
    lower = math.fsum(poisson_entropy_function(m))
    logK = depth_gap * math.log(n_labels)
    if logK == 0:
        return lower, lower
    # K f(m/K) = m - m log(m/K) + K e^{-m/K} sum_{k>=2} (m/K)^k log(k!)/k!.  With
    # m/K <= 1 the series is at most (m/K)^2 sum_{k>=2} log(k!)/k! < (m/K)^2, so the
    # last part is below m^2/K.
    if np.any(m > 1.0):
        raise ValueError("pruned masses must be at most 1")
    upper = math.fsum(m - m * (np.log(m) - logK) + m * m * math.exp(-logK))
    return lower, max(upper, lower)


@dataclass(frozen=True)
class CurvePoint:
    n: int
    value: float
    lower: float
    upper: float
    cylinders: int
    pruned_mass: float


@dataclass
class CylinderCurve:
    points: list[CurvePoint]
    truncated: bool = False
    reason: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    @property
    def last(self) -> CurvePoint:
        return self.points[-1]

    @property
    def h_hat(self) -> float:
        """Liminf proxy: the minimum over the second half of the computed depths."""
        vals = self.values
        if vals.size == 0:
            return math.nan
        return float(np.min(vals[vals.size // 2:]))

    def summary(self) -> dict:
        return {"h_hat_liminf": self.h_hat, "last_value": self.last.value, "last_depth": self.last.n,
                "truncated": self.truncated, "reason": self.reason, **self.meta}

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "value", "lower", "upper"])
        for p in self.points:
            w.writerow([p.n, repr(p.value), repr(p.lower), repr(p.upper)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


# ---------------------------------------------------------------------------
class _Kernel:
    """Window kernel plus a sink state that absorbs mass leaving the window."""

    def __init__(self, sys: MarkovSystem, alpha: LocalPartition):
        K, escape = sys.window_kernel
        n = K.shape[0]
        K = sparse.vstack([sparse.hstack([K, sparse.csr_matrix(escape.reshape(-1, 1))]),
                           sparse.csr_matrix(([1.0], ([0], [n])), shape=(1, n + 1))]).tocsr()
        self.KT = K.T.tocsr()
        self.size = n + 1
        self.labels = np.full(n + 1, len(alpha.cells), dtype=np.int64)
        for c, cell in enumerate(alpha.cells):
            for a in cell:
                self.labels[sys.index[a]] = c
        self.masks = [self.labels == c for c in range(len(alpha.cells) + 1)]
        self.singleton = {}
        for c, cell in enumerate(alpha.cells):
            if len(cell) == 1:
                self.singleton[c] = sys.index[next(iter(cell))]

    def step(self, u: np.ndarray) -> np.ndarray:
        return self.KT @ u


def _first_entry(sys: MarkovSystem, kern: _Kernel, core_mask: np.ndarray, depth: int) -> list[np.ndarray]:
    """``E_j`` restricted to the core, for ``j = 0..depth-1``."""
    q = np.zeros(kern.size)
    q[:-1] = sys.q_window
    w = np.where(core_mask, q, 0.0)
    acc = np.zeros(kern.size)
    out = [np.where(core_mask, q, 0.0)]
    for _ in range(1, depth):
        w = kern.step(w)
        acc += np.where(core_mask, w, 0.0)
        w = np.where(core_mask, 0.0, w)
        out.append(np.where(core_mask, np.clip(q - acc, 0.0, None), 0.0))
    return out


def _iter_levels(sys: MarkovSystem, alpha: LocalPartition, n_max: int, prune_tol: float,
                 node_budget: int) -> Iterator[tuple[RefinedPartitionTable, int]]:
    alpha.check(sys)
    kern = _Kernel(sys, alpha)
    r = len(alpha.cells)
    core_mask = kern.labels < r
    entries = _first_entry(sys, kern, core_mask, n_max)
    # key -> (normalized vector, masses); keys are ("d", state index) or ("v", id)
    nodes: dict = {}
    pruned: list[tuple[int, np.ndarray]] = []
    next_id = [0]

    def add(bucket: dict, key, vec, masses):
        if key in bucket:
            bucket[key][1].append(masses)
        else:
            bucket[key] = (vec, [masses])

    def new_key():
        next_id[0] += 1
        return ("v", next_id[0])

    for n in range(1, n_max + 1):
        nxt: dict = {}
        # extend existing nodes (words of length n-1 with a core label) by one label
        if n > 1:
            for key, (vec, mass_list) in nodes.items():
                masses = np.concatenate(mass_list)
                u = kern.step(vec)
                for c in range(r + 1):
                    part = np.where(kern.masks[c], u, 0.0)
                    p = float(part.sum())
                    if p <= 0:
                        continue
                    child = masses * p
                    if c in kern.singleton:
                        idx = kern.singleton[c]
                        add(nxt, ("d", idx), None, child)
                    else:
                        add(nxt, new_key(), part / p, child)
        # words whose first core label sits at position n-1
        E = entries[n - 1]
        for c in range(r):
            part = np.where(kern.masks[c], E, 0.0)
            p = float(part.sum())
            if p <= 0:
                continue
            if c in kern.singleton:
                add(nxt, ("d", kern.singleton[c]), None, np.array([p]))
            else:
                add(nxt, new_key(), part / p, np.array([p]))
        # materialize, prune, count
        nodes = {}
        kept_masses = []
        total = 0
        for key, (vec, mass_list) in nxt.items():
            masses = np.concatenate(mass_list)
            if prune_tol > 0:
                small = masses < prune_tol
                if small.any():
                    pruned.append((n, masses[small]))
                    masses = masses[~small]
            masses = masses[masses > 0]
            if masses.size == 0:
                continue
            if key[0] == "d":
                vec = np.zeros(kern.size)
                vec[key[1]] = 1.0
            nodes[key] = (vec, [masses])
            kept_masses.append(masses)
            total += masses.size
        if total > node_budget:
            raise _BudgetExceeded(n, total)
        lower = upper = 0.0
        pm = 0.0
        for depth_p, ms in pruned:
            lo, hi = pruning_band(ms, n - depth_p, r + 1)
            lower += lo
            upper += hi
            pm += math.fsum(ms)
        table = RefinedPartitionTable(n, np.concatenate(kept_masses) if kept_masses else np.zeros(0),
                                      pm, lower, upper)
        yield table, len(nodes)


class _BudgetExceeded(Exception):
    def __init__(self, depth: int, count: int):
        super().__init__(f"depth {depth} needs {count} cylinders")
        self.depth = depth
        self.count = count


def refined_tables(sys: MarkovSystem, alpha: LocalPartition, n_max: int,
                   prune_tol: float = 0.0, node_budget: int = NODE_BUDGET) -> list[RefinedPartitionTable]:
    """Cylinder mass tables for depths ``1..n_max`` (``prune_tol = 0`` keeps everything)."""
    return [t for t, _ in _iter_levels(sys, alpha, n_max, prune_tol, node_budget)]


def cylinder_entropy_curve(sys: MarkovSystem, alpha: LocalPartition, n_max: int,
                           prune_tol: float = 1e-14, node_budget: int = NODE_BUDGET) -> CylinderCurve:
    """``(n, (1/n) sum_{a in alpha_0^{n-1}} f(mu(a)))`` for ``n = 1..n_max`` with error bands.

    Subtrees whose mass drops below ``prune_tol`` are cut; their share of each
    later level is bracketed by :func:`pruning_band`.  If a level would hold
    more than ``node_budget`` cylinders the curve stops at the last completed
    depth and says so.
    """
    if not 0 <= prune_tol <= 1:
        raise ValueError("prune_tol must lie in [0, 1]")
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    d_in = sys.entry_distance(alpha.core)
    meta = {"entry_distance": d_in, "prune_tol": prune_tol, "labels": alpha.n_labels,
            "sink_exact": bool(n_max <= d_in)}
    if n_max > d_in:
        msg = (f"depth {n_max} exceeds the entry distance {d_in:g} into the core: mass leaving "
               f"the window is treated as never returning")
        warnings.warn(msg, stacklevel=2)
        meta["warning"] = msg
    points = []
    truncated, reason = False, ""
    try:
        for table, keys in _iter_levels(sys, alpha, n_max, prune_tol, node_budget):
            v, lo, hi = table.cylinder_sum()
            n = table.depth
            points.append(CurvePoint(n, v / n, lo / n, hi / n, int(table.masses.size), table.pruned_mass))
            meta["keys_last_level"] = keys
    except _BudgetExceeded as exc:
        truncated, reason = True, f"node budget {node_budget} exceeded at depth {exc.depth} ({exc.count} cylinders)"
    if not points:
        raise ValueError(reason or "no depth completed")
    return CylinderCurve(points, truncated, reason, meta)


def brute_force_cylinder_masses(sys: MarkovSystem, alpha: LocalPartition, n: int) -> np.ndarray:
    """All depth-``n`` cylinder masses by summing over every window path.

    Only valid when every state is in the window (finite chains, finite
    support renewal chains).  The all-complement word is dropped.
    """
    states = sys.window
    s = len(states)
    K, escape = sys.window_kernel
    if np.any(escape > 1e-15):
        raise ValueError("brute force needs a closed window")
    P = K.toarray()
    r = len(alpha.cells)
    lab = np.full(s, r, dtype=np.int64)
    for c, cell in enumerate(alpha.cells):
        for a in cell:
            lab[sys.index[a]] = c
    # masses of state words, then aggregate by label word (base r+1 code)
    mass = sys.q_window.copy()
    code = lab.copy()
    for _ in range(n - 1):
        mass = (mass.reshape(-1, s)[:, :, None] * P[None, :, :]).reshape(-1)
        code = (code.reshape(-1, 1) * (r + 1) + lab[None, :]).reshape(-1)
    all_comp = sum(r * (r + 1) ** i for i in range(n))
    uniq, inv = np.unique(code, return_inverse=True)
    tot = np.bincount(inv, weights=mass)
    out = tot[(uniq != all_comp) & (tot > 0)]
    return np.sort(out)
