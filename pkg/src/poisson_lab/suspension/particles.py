"""Exact finite particle systems for Poisson suspensions.

A Poisson configuration of a renewal shift is sampled as independent
``Poisson(q_s)`` counts on the states ``1 .. window_max + halo``.  Above state
1 particles descend deterministically, so a particle that starts above
``window_max + horizon`` cannot reach the window within ``horizon`` steps and
the window counts are exact over that horizon.  For a walk with bounded steps
the halo is ``horizon * max|step|`` on both sides.

Each particle carries its own row of uniforms that drive its future moves.
Particles never interact, so evolving a union of configurations gives exactly
the sum of the separate count series.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..seeding import STREAM_CONFIG, rng as make_rng
from ..systems.markov import MarkovSystem, RandomWalk, RenewalChain

# stand-in for "beyond every horizon" when a jump lands absurdly far
FAR_STATE = 1 << 62


@dataclass(frozen=True)
class PointConfiguration:
    """Particles (``states``) with per-particle move uniforms (``marks``).

    ``window`` is the state range whose counts are exact for ``horizon`` steps.
    """

    states: np.ndarray
    marks: np.ndarray
    window: tuple[int, int]
    horizon: int
    kind: str

    def __len__(self) -> int:
        return int(self.states.size)

    def counts(self, cells: Sequence[Sequence[int]] | None = None) -> np.ndarray:
        return _cell_counts(self.states, _cells(self, cells))

    def union(self, other: "PointConfiguration") -> "PointConfiguration":
        if self.kind != other.kind or self.window != other.window:
            raise ValueError("configurations must share kind and window")
        J = max(self.marks.shape[1], other.marks.shape[1])
        pad = lambda m: np.pad(m, ((0, 0), (0, J - m.shape[1])))  # noqa: E731
        return PointConfiguration(np.concatenate([self.states, other.states]),
                                  np.vstack([pad(self.marks), pad(other.marks)]),
                                  self.window, min(self.horizon, other.horizon), self.kind)

    def to_json(self) -> str:
        """JSON array of ``[state, countdown]`` pairs (countdown = steps until
        the particle next jumps; ``-1`` for walks, which move every step)."""
        if self.kind == "renewal":
            pairs = [[int(s), int(s) - 1] for s in self.states]
        else:
            pairs = [[int(s), -1] for s in self.states]
        return json.dumps({"window": list(self.window), "horizon": self.horizon, "kind": self.kind,
                           "particles": pairs})


@dataclass
class CountSeries:
    """Counts ``N_t(cell)`` for ``t = 0..T``; the infinite cell is never stored."""

    counts: np.ndarray  # shape (T+1, n_cells)
    cells: list[tuple[int, ...]]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.counts.shape[0])

    def __add__(self, other: "CountSeries") -> "CountSeries":
        if self.cells != other.cells or self.counts.shape != other.counts.shape:
            raise ValueError("count series must share cells and length")
        return CountSeries(self.counts + other.counts, self.cells)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "cell", "count"])
        names = ["-".join(map(str, c)) if len(c) > 1 else str(c[0]) for c in self.cells]
        for t in range(self.counts.shape[0]):
            for c, name in enumerate(names):
                w.writerow([t, name, int(self.counts[t, c])])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _cells(config: PointConfiguration, cells) -> list[tuple[int, ...]]:
    lo, hi = config.window
    if cells is None:
        return [(s,) for s in range(lo, hi + 1)]
    out = [tuple(sorted(int(a) for a in c)) for c in cells]
    for c in out:
        if not c or c[0] < lo or c[-1] > hi:
            raise ValueError(f"cell {c} is not inside the exact window {config.window}")
    flat = [a for c in out for a in c]
    if len(flat) != len(set(flat)):
        raise ValueError("cells overlap")
    return out


def _cell_counts(states: np.ndarray, cells: list[tuple[int, ...]]) -> np.ndarray:
    out = np.zeros(len(cells), dtype=np.int64)
    if states.size == 0:
        return out
    for k, c in enumerate(cells):
        out[k] = int(np.isin(states, c).sum())
    return out


def required_halo(sys: MarkovSystem, horizon: int) -> int:
    if isinstance(sys, RenewalChain):
        return int(horizon)
    if isinstance(sys, RandomWalk):
        return int(horizon) * int(np.max(np.abs(sys.steps)))
    raise TypeError("suspensions are simulated for renewal chains and random walks")


def sample_initial_configuration(sys: MarkovSystem, window_max: int, horizon: int, seed: int,
                                 halo: int | None = None, window_min: int | None = None,
                                 replicate: int = 0) -> PointConfiguration:
    """Independent ``Poisson(q_s)`` counts on the window plus its halo.

    Renewal chains use the window ``[1, window_max]``; walks use
    ``[window_min, window_max]`` (``window_min`` defaults to ``-window_max``).
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    need = required_halo(sys, horizon)
    halo = need if halo is None else int(halo)
    if halo < need:
        raise ValueError(f"halo {halo} is too small for horizon {horizon}: need at least {need}")
    g = make_rng(seed, STREAM_CONFIG, replicate)
    if isinstance(sys, RenewalChain):
        if window_max < 1:
            raise ValueError("renewal window must contain state 1")
        window = (1, int(window_max))
        support = np.arange(1, window_max + halo + 1)
        kind = "renewal"
    else:
        lo = -int(window_max) if window_min is None else int(window_min)
        if lo > window_max:
            raise ValueError("empty window")
        window = (lo, int(window_max))
        support = np.arange(lo - halo, window_max + halo + 1)
        kind = "walk"
    lam = sys.q(support)
    n = g.poisson(lam)
    states = np.repeat(support, n).astype(np.int64)
    marks = g.random((states.size, max(int(horizon), 1)))
    return PointConfiguration(states, marks, window, int(horizon), kind)


def evolve(sys: MarkovSystem, config: PointConfiguration, steps: int,
           cells: Sequence[Sequence[int]] | None = None) -> CountSeries:
    """Move every particle ``steps`` times and record the window cell counts."""
    if steps > config.horizon:
        raise ValueError(f"{steps} steps exceed the exact horizon {config.horizon}")
    cell_list = _cells(config, cells)
    lo, hi = config.window
    lookup = np.full(hi - lo + 2, len(cell_list), dtype=np.int64)
    for k, c in enumerate(cell_list):
        for a in c:
            lookup[a - lo] = k

    def record(s: np.ndarray) -> np.ndarray:
        inside = (s >= lo) & (s <= hi)
        lab = lookup[s[inside] - lo]
        return np.bincount(lab, minlength=len(cell_list) + 1)[: len(cell_list)]

    s = config.states.copy()
    out = np.zeros((steps + 1, len(cell_list)), dtype=np.int64)
    out[0] = record(s)
    if config.kind == "renewal":
        f = sys.f
        used = np.zeros(s.size, dtype=np.int64)
        for t in range(1, steps + 1):
            at1 = np.flatnonzero(s == 1)
            s[s > 1] -= 1
            if at1.size:
                jump = f.inverse_cdf(config.marks[at1, used[at1]])
                s[at1] = np.where(jump < FAR_STATE, jump, FAR_STATE).astype(np.int64)
                used[at1] += 1
            out[t] = record(s)
    else:
        cum = np.cumsum(sys.step_probs)
        for t in range(1, steps + 1):
            k = np.minimum(np.searchsorted(cum, config.marks[:, t - 1], side="right"), len(cum) - 1)
            s = s + sys.steps[k]
            out[t] = record(s)
    return CountSeries(out, cell_list)
